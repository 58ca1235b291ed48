"""
CLI command implementations. Each returns a Result; exit-code mapping lives in main.
"""
from __future__ import annotations
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Dict, Optional
import logging

import numpy as np
import pandas as pd

from src.analysis.regime import Regime, RegimeLabel, classify_regime, regime_to_json, transitions
from src.app.config import RunConfig
from src.app.heatmap import render_heatmap
from src.config.settings import get_settings
from src.core.event_bus import SWEEP_ROW, get_event_bus
from src.core.types import ConfigError, PolaritonError, PreconditionError, Result
from src.core.utils import atomic_write_json, atomic_write_text
from src.eval.metrics import MetricsCollector
from src.fitting.fitter import fit
from src.fitting.problem import load_problem, save_result
from src.materials.dielectric import LorentzParams
from src.polariton.critical import CriticalLengthParams, critical_length, nominal_rabi
from src.polariton.hamiltonian import Topology, eigenbranches
from src.polariton.modes import (
    empty_mode_energy,
    ladder_model,
    layer_phase_offset,
    nearest_symmetric_length,
    select_modes,
)
from src.tmm.dispersion import dispersion_map, spectrum_at, write_map
from src.tmm.stack import LayerStack, Polarization

logger = logging.getLogger(__name__)

SWEEP_COLUMNS = ["L_nm", "L_eval_nm", "regime", "gap_meV", "dips_ev", "error"]


def resolve_output_dir(cfg_dir: Optional[str], flag_dir: Optional[str] = None) -> Path:
    """--output-dir flag, then POLARITON_OUTPUT_DIR, then the config's output.dir, then cwd."""
    for candidate in (flag_dir, get_settings().output_dir, cfg_dir):
        if candidate:
            return Path(candidate)
    return Path(".")


# ---------------- simulate ----------------

def _write_model_branches(cfg: RunConfig, stack: LayerStack, momenta: np.ndarray, out_dir: Path,
                          name: str) -> Dict[str, str]:
    """Entangled and decoupled eigenbranches of the spacer's mode ladder, one CSV each."""
    layer_name = cfg.sweep.layer if cfg.sweep else "spacer"
    try:
        film = cfg.film()
        layer = stack.layer_index(layer_name)
    except PreconditionError as e:
        logger.info("no model branches for %s: %s", name, e)
        return {}
    delta = layer_phase_offset(stack, layer, film.n0, film.Ex)
    ladder = select_modes(stack.layers[layer].thickness, film.n0, film.Ex, phase_offset=delta)
    if not ladder.orders:
        logger.info("no cavity orders within 1 eV of Ex for %s", name)
        return {}
    g = nominal_rabi(film.f, film.n0) / 2
    paths = {}
    for topology in Topology:
        branches = eigenbranches(ladder_model(ladder, film.Ex, g, topology), momenta)
        paths[topology.value] = str(branches.write_csv(out_dir / f"{name}_{topology.value}.csv"))
    return paths


def cmd_simulate(cfg: RunConfig, out_dir: Path, name: Optional[str] = None, heatmap: bool = True,
                 workers: int = 1, metrics: Optional[MetricsCollector] = None) -> Result:
    metrics = metrics or MetricsCollector()
    name = name or cfg.output.name
    metrics.on_start("simulate", name)

    stack = cfg.build_stack()
    m = dispersion_map(stack, cfg.grid.energies(), cfg.grid.momenta(), cfg.polarization, workers=workers)
    csv_path = out_dir / f"{name}.csv"
    write_map(m, csv_path, metadata={"name": name, "grid": cfg.grid.model_dump()})
    png_path = None
    if heatmap:
        png_path = render_heatmap(m, out_dir / f"{name}.png", title=f"{name} ({m.metadata['polarization']})")
    branches = _write_model_branches(cfg, stack, m.momenta, out_dir, name)

    rec = metrics.on_end("simulate", name, True, points=int(m.values.size), defects=len(m.defects))
    out = {
        "csv": str(csv_path),
        "sidecar": str(csv_path.with_suffix(".json")),
        "heatmap": str(png_path) if png_path else None,
        "branches": branches,
        "shape": list(m.shape),
        "defects": len(m.defects),
    }
    display = (f"map {m.shape[0]}x{m.shape[1]} -> {csv_path} "
               f"({len(m.defects)} defects, {rec.latency_sec:.2f} s)")
    return Result.ok(output=out, display_output=display, metrics={"latency_sec": rec.latency_sec})


# ---------------- critlen ----------------

def cmd_critlen(n0: float, gamma_mev: float, f_ev2: float) -> Result:
    """Raises NoSolutionError / SolverError; main maps them to exit code 3."""
    p = CriticalLengthParams(n0=n0, gamma=gamma_mev * 1e-3, f=f_ev2)
    sol = critical_length(p)
    out = {
        "L_c_nm": sol.L_c_nm,
        "residual_nm": sol.residual_nm,
        "n0": n0,
        "gamma_eV": p.gamma,
        "f_eV2": f_ev2,
        "nominal_rabi_meV": nominal_rabi(f_ev2, n0) * 1e3,
    }
    return Result.ok(output=out, display_output=f"L_c = {sol.L_c_nm:.3f} nm (residual {sol.residual_nm:.3e} nm)")


# ---------------- sweep ----------------

def _sweep_spectrum(stack: LayerStack, layer: int, L: float, energies: np.ndarray, pol: Polarization,
                    Ex: float, window: float, max_gap: Optional[float], broad_fwhm: Optional[float],
                    min_prominence: Optional[float]) -> Result:
    try:
        s = spectrum_at(stack.with_thickness(layer, L), energies, 0.0, pol)
        label = classify_regime(s, Ex, window=window, min_prominence=min_prominence,
                                max_gap=max_gap, broad_fwhm=broad_fwhm)
    except PolaritonError as e:
        return Result.fail(str(e))
    return Result.ok(
        output={"label": label, "spectrum": s.values},
        display_output=f"L={L:g} nm: {label.regime.value}",
    )


def _row_record(L: float, L_eval: float, res: Result) -> Dict[str, Any]:
    rec = {"L_nm": L, "L_eval_nm": L_eval, "regime": "", "gap_meV": None, "dips_ev": "",
           "error": res.error or ""}
    if res.success:
        label: RegimeLabel = res.output["label"]
        rec.update(regime=label.regime.value, gap_meV=label.gap_mev,
                   dips_ev=";".join(f"{c:.6f}" for c in label.centers))
    return rec


def _json_record(L: float, L_eval: float, res: Result) -> Dict[str, Any]:
    if not res.success:
        return {"L_nm": L, "L_eval_nm": L_eval, "regime": None, "error": res.error}
    return regime_to_json(res.output["label"], L_nm=L, L_eval_nm=L_eval)


def cmd_sweep(cfg: RunConfig, out_dir: Path, workers: int = 1,
              metrics: Optional[MetricsCollector] = None) -> Result:
    if cfg.sweep is None:
        raise ConfigError("config has no [sweep] section")
    sw = cfg.sweep
    metrics = metrics or MetricsCollector()
    bus = get_event_bus()

    stack = cfg.build_stack()
    layer = stack.layer_index(sw.layer)
    film: Optional[LorentzParams] = None
    try:
        film = cfg.film()
    except PreconditionError:
        if sw.Ex is None:
            raise
        if sw.detuning == "symmetric":
            raise ConfigError(f"detuning = 'symmetric' needs a Lorentz film in layer {sw.layer!r}; "
                              "use detuning = 'fixed'") from None
    Ex = sw.Ex if sw.Ex is not None else film.Ex
    max_gap = None if film is None else sw.max_gap_fraction * nominal_rabi(film.f, film.n0)
    broad_fwhm = None if film is None or sw.broad_fwhm_factor is None else sw.broad_fwhm_factor * film.gamma
    energies = cfg.grid.energies()
    pol = Polarization.parse(cfg.polarization)
    lengths = [float(L) for L in sw.lengths()]

    phase_offset: Optional[float] = None
    windows: Dict[float, float] = {}
    if sw.detuning == "symmetric":
        phase_offset = layer_phase_offset(stack, layer, film.n0, Ex)
        evaluated = []
        for L in lengths:
            order, L_sym = nearest_symmetric_length(L, Ex, film.n0, phase_offset)
            L_eval = round(L_sym, 1)
            # the bracketing bare modes sit half a mode spacing from Ex
            spacing = (empty_mode_energy(order + 1, L_eval, film.n0, 0.0, phase_offset)
                       - empty_mode_energy(order, L_eval, film.n0, 0.0, phase_offset))
            windows[L_eval] = min(sw.window, 0.5 * spacing)
            evaluated.append(L_eval)
        logger.info("symmetric detuning: phase offset %.4f rad, %d distinct lengths",
                    phase_offset, len(windows))
    else:
        evaluated = list(lengths)

    def run(L_eval: float) -> Result:
        label = f"L={L_eval:g}"
        metrics.on_start("sweep", label)
        res = _sweep_spectrum(stack, layer, L_eval, energies, pol, Ex, windows.get(L_eval, sw.window),
                              max_gap, broad_fwhm, cfg.min_prominence)
        metrics.on_end("sweep", label, res.success, error=res.error or "")
        if not res.success:
            logger.warning("sweep row %s failed: %s", label, res.error)
        return res

    unique = sorted(set(evaluated))
    if workers > 1 and len(unique) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = dict(zip(unique, pool.map(run, unique)))
    else:
        results = {L_eval: run(L_eval) for L_eval in unique}

    rows = [(L, L_eval, results[L_eval]) for L, L_eval in zip(lengths, evaluated)]
    records = [_row_record(*row) for row in rows]
    for rec in records:
        bus.publish(SWEEP_ROW, rec)

    table = pd.DataFrame(records, columns=SWEEP_COLUMNS)
    sweep_csv = atomic_write_text(out_dir / "sweep.csv", table.to_csv(index=False))
    sweep_json = atomic_write_json(out_dir / "sweep.json", {
        "detuning": sw.detuning,
        "Ex_eV": Ex,
        "phase_offset_rad": phase_offset,
        "max_gap_meV": None if max_gap is None else max_gap * 1e3,
        "broad_fwhm_meV": None if broad_fwhm is None else broad_fwhm * 1e3,
        "rows": [_json_record(*row) for row in rows],
    })

    spectra = pd.DataFrame({"energy_ev": energies})
    for L_eval in unique:
        if results[L_eval].success:
            spectra[f"L_{L_eval:g}"] = results[L_eval].output["spectrum"]
    spectra_csv = atomic_write_text(out_dir / "spectra.csv", spectra.to_csv(index=False))
    metrics_csv = atomic_write_text(out_dir / "sweep_metrics.csv", metrics.to_csv())

    decided = [(L, res.output["label"]) for L, _, res in rows if res.success]
    flips = transitions([L for L, _ in decided], [lab for _, lab in decided])
    counts = {reg.value: sum(1 for _, lab in decided if lab.regime is reg) for reg in Regime}
    failed = sum(1 for _, _, res in rows if not res.success)

    display = [f"{len(rows)} lengths -> {sweep_csv}", "  " + ", ".join(f"{k}: {v}" for k, v in counts.items())]
    if failed:
        display.append(f"  failed rows: {failed}")
    for L0, L1, a, b in flips:
        display.append(f"  {a.value} -> {b.value} between {L0:g} and {L1:g} nm")
    out = {
        "sweep_csv": str(sweep_csv),
        "sweep_json": str(sweep_json),
        "spectra_csv": str(spectra_csv),
        "metrics_csv": str(metrics_csv),
        "rows": table.to_dict(orient="records"),
        "transitions": [{"last_before_nm": L0, "first_after_nm": L1, "from": a.value, "to": b.value}
                        for L0, L1, a, b in flips],
        "max_gap_meV": None if max_gap is None else max_gap * 1e3,
        "broad_fwhm_meV": None if broad_fwhm is None else broad_fwhm * 1e3,
    }
    return Result.ok(output=out, display_output="\n".join(display), metrics=metrics.summary())


# ---------------- fit ----------------

def cmd_fit(problem_path: Path, out_path: Path, workers: int = 1,
            metrics: Optional[MetricsCollector] = None) -> Result:
    """FitResult JSON at out_path; Result.success mirrors convergence."""
    problem = load_problem(problem_path, workers=workers)
    result = fit(problem, metrics=metrics)
    save_result(result, out_path)
    values = ", ".join(f"{k}={v:.6g}" for k, v in result.values.items()) or "(no free parameters)"
    display = (f"{values}; objective {result.objective:.3e} "
               f"({'converged' if result.converged else result.message}) -> {out_path}")
    out = result.to_json()
    out["result_path"] = str(out_path)
    if result.converged:
        return Result.ok(output=out, display_output=display)
    return Result.fail(f"fit did not converge: {result.message}", output=out, display_output=display)
