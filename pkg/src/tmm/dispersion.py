from __future__ import annotations
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Union
import json
import logging

import numpy as np
import pandas as pd

from src.core.event_bus import MAP_DEFECT, get_event_bus
from src.core.types import PolaritonError, PreconditionError
from src.core.utils import atomic_write_json, atomic_write_text
from src.tmm.solver import power_grid
from src.tmm.stack import LayerStack, Polarization

logger = logging.getLogger(__name__)

# value written for points that could not be evaluated: 1-R at the grazing boundary (R = 1)
CLAMP_VALUE = 0.0

INDEX_LABEL = "energy_ev"


def _grid(values, name: str) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(values, dtype=float))
    if arr.ndim != 1 or arr.size == 0:
        raise PreconditionError(f"{name} grid must be a nonempty 1-D sequence")
    if not np.all(np.isfinite(arr)):
        raise PreconditionError(f"{name} grid contains non-finite values")
    if arr.size > 1 and np.any(np.diff(arr) <= 0):
        raise PreconditionError(f"{name} grid must be strictly ascending")
    return arr


@dataclass
class DispersionMap:
    """values[i, j] is the quantity at energies[i] (eV) and momenta[j] (um^-1)."""
    energies: np.ndarray
    momenta: np.ndarray
    values: np.ndarray
    quantity_label: str = "1-R"
    defects: List[Dict[str, Any]] = field(default_factory=list)
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.energies = _grid(self.energies, "energy")
        self.momenta = _grid(self.momenta, "momentum")
        self.values = np.atleast_2d(np.asarray(self.values, dtype=float))
        if self.values.shape != (self.energies.size, self.momenta.size):
            raise PreconditionError(
                f"map values have shape {self.values.shape}, expected "
                f"({self.energies.size}, {self.momenta.size})"
            )
        if not np.all(np.isfinite(self.values)):
            raise PreconditionError("map values must be finite")

    @property
    def shape(self):
        return self.values.shape

    def column(self, j: int) -> np.ndarray:
        return self.values[:, j]

    def to_frame(self) -> pd.DataFrame:
        df = pd.DataFrame(self.values, index=self.energies, columns=self.momenta)
        df.index.name = INDEX_LABEL
        return df


def _evaluate_rows(stack: LayerStack, E: np.ndarray, kx: np.ndarray, pol: Polarization):
    """1-R for a block of energy rows; returns (values, defects)."""
    defects: List[Dict[str, Any]] = []
    try:
        R, _, _, ok = power_grid(stack, E[:, None], kx[None, :], pol)
    except PolaritonError as e:
        # material failure is per energy, so the whole block is unusable
        for e_i in E:
            for k_j in kx:
                defects.append({"E": float(e_i), "kx": float(k_j), "reason": str(e)})
        return np.full((E.size, kx.size), CLAMP_VALUE), defects

    vals = np.where(ok, 1.0 - np.asarray(R, dtype=float), CLAMP_VALUE)
    for i, j in zip(*np.nonzero(~ok)):
        reason = "evanescent incidence" if np.isfinite(R[i, j]) else "non-finite amplitudes"
        defects.append({"E": float(E[i]), "kx": float(kx[j]), "reason": reason})
    # rounding can push 1-R a hair outside [0, 1]
    return np.clip(vals, 0.0, 1.0), defects


def dispersion_map(stack: LayerStack,
                   energies,
                   momenta,
                   pol: Union[str, Polarization] = Polarization.TE,
                   workers: int = 1,
                   chunk_rows: int = 64) -> DispersionMap:
    """
    1-R over energies x momenta. Failed or evanescent points are clamped to
    CLAMP_VALUE and listed in `defects`; the result does not depend on `workers`.
    """
    E = _grid(energies, "energy")
    kx = _grid(momenta, "momentum")
    pol = Polarization.parse(pol)

    starts = list(range(0, E.size, max(1, int(chunk_rows))))
    blocks = [E[s:s + chunk_rows] for s in starts]
    if workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda b: _evaluate_rows(stack, b, kx, pol), blocks))
    else:
        parts = [_evaluate_rows(stack, b, kx, pol) for b in blocks]

    values = np.vstack([p[0] for p in parts])
    defects = [d for p in parts for d in p[1]]
    if defects:
        logger.warning("dispersion map: %d of %d points clamped", len(defects), values.size)
        get_event_bus().publish(MAP_DEFECT, {"count": len(defects), "first": defects[0]})

    return DispersionMap(
        energies=E,
        momenta=kx,
        values=values,
        quantity_label="1-R",
        defects=defects,
        metadata={"polarization": pol.value, "stack": stack.describe()},
    )


def spectrum_at(stack: LayerStack, energies, kx: float = 0.0,
                pol: Union[str, Polarization] = Polarization.TE):
    """1-R spectrum at a fixed in-plane momentum."""
    from src.analysis.spectrum import Spectrum

    m = dispersion_map(stack, energies, [kx], pol)
    return Spectrum(energies=m.energies, values=m.column(0), quantity_label=m.quantity_label,
                    provenance="simulated", kx=float(kx))


# ---------------- IO ----------------

def sidecar_path_for(csv_path: Union[str, Path]) -> Path:
    return Path(csv_path).with_suffix(".json")


def write_map(m: DispersionMap,
              csv_path: Union[str, Path],
              sidecar_path: Optional[Union[str, Path]] = None,
              metadata: Optional[Dict[str, Any]] = None) -> Path:
    """
    CSV matrix (first row momenta, first column energies) plus a JSON sidecar.
    Floats are written in shortest round-trip form so read_map reproduces the map exactly.
    """
    csv_path = Path(csv_path)
    sidecar = Path(sidecar_path) if sidecar_path else sidecar_path_for(csv_path)
    atomic_write_text(csv_path, m.to_frame().to_csv())

    meta = dict(m.metadata)
    meta.update(metadata or {})
    meta.update({
        "quantity_label": m.quantity_label,
        "shape": list(m.shape),
        "defects": m.defects,
    })
    atomic_write_json(sidecar, meta)
    logger.info("wrote map %s (%dx%d) and %s", csv_path, m.shape[0], m.shape[1], sidecar.name)
    return csv_path


def read_map(csv_path: Union[str, Path], sidecar_path: Optional[Union[str, Path]] = None) -> DispersionMap:
    p = Path(csv_path)
    try:
        df = pd.read_csv(p, index_col=0, float_precision="round_trip")
    except FileNotFoundError:
        raise PreconditionError(f"{p}: map CSV not found") from None
    except Exception as e:
        raise PreconditionError(f"{p}: unreadable map CSV: {e}") from e

    try:
        momenta = np.array([float(c) for c in df.columns], dtype=float)
        energies = pd.to_numeric(pd.Series(df.index), errors="raise").to_numpy(dtype=float)
        values = df.apply(pd.to_numeric, errors="raise").to_numpy(dtype=float)
    except (ValueError, TypeError) as e:
        raise PreconditionError(f"{p}: non-numeric entry in map CSV: {e}") from e

    meta: Dict[str, Any] = {}
    sidecar = Path(sidecar_path) if sidecar_path else sidecar_path_for(p)
    if sidecar.exists():
        try:
            meta = json.loads(sidecar.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise PreconditionError(f"{sidecar}:{e.lineno}: invalid JSON sidecar: {e.msg}") from e

    try:
        return DispersionMap(
            energies=energies,
            momenta=momenta,
            values=values,
            quantity_label=str(meta.pop("quantity_label", "1-R")),
            defects=list(meta.pop("defects", []) or []),
            metadata=meta,
        )
    except PreconditionError as e:
        raise PreconditionError(f"{p}: {e}") from e
