"""
Bounded derivative-free fit of cavity parameters to a target dispersion map.

Free parameters are rescaled to the unit box using their bounds and minimised with
Nelder-Mead; candidates are clipped to the box before every simulation. When L is
free, the first start takes L from a coarse scan over its bounds (the objective has
one basin per longitudinal order). The initial simplex is fixed (5% of each range
from the start point, stepping inward at an upper bound), so identical problems
give identical results. A run that ends on a bound is not reported as converged.
"""
from __future__ import annotations
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple
import logging
import math

import numpy as np
from scipy import optimize
from scipy.stats import qmc

from src.core.event_bus import FIT_ITERATION, get_event_bus
from src.core.types import EvaluationError, FitError
from src.eval.metrics import MetricsCollector
from src.fitting.problem import (
    CavityParams,
    FitProblem,
    FitResult,
    check_bounds,
    model_map,
)
from src.tmm.dispersion import DispersionMap

logger = logging.getLogger(__name__)

SIMPLEX_STEP = 0.05
# absolute floor for the function tolerance when the start objective is ~0
FATOL_FLOOR = 1e-14
# unit-box distance below which a coordinate counts as sitting on its bound
BOUND_TOL = 1e-6


def objective(params: CavityParams,
              target: DispersionMap,
              weights: Optional[np.ndarray] = None,
              polarization="TE") -> float:
    """Weighted sum of squared residuals between the model map and the target."""
    model = model_map(params, target.energies, target.momenta, polarization)
    if model.defects:
        d = model.defects[0]
        raise EvaluationError(f"simulation failed ({d['reason']})", d["E"], d["kx"])
    resid = model.values - target.values
    w = np.ones(target.shape) if weights is None else weights
    return float(np.sum(w * resid * resid))


@dataclass
class _Run:
    index: int
    x: np.ndarray           # unit-box coordinates of the best point
    fun: float
    start_fun: float
    iterations: int
    evaluations: int
    converged: bool
    message: str


class _Scaled:
    """Objective over the unit box for one problem."""

    def __init__(self, problem: FitProblem):
        self.problem = problem
        self.lo = np.array([p.lo for p in problem.free], dtype=float)
        self.hi = np.array([p.hi for p in problem.free], dtype=float)
        self.weights = problem.effective_weights()

    def to_params(self, u: np.ndarray) -> CavityParams:
        x = self.lo + np.clip(u, 0.0, 1.0) * (self.hi - self.lo)
        return self.problem.fixed.with_values(dict(zip(self.problem.free_names, x)))

    def __call__(self, u: np.ndarray) -> float:
        return objective(self.to_params(u), self.problem.target, self.weights, self.problem.polarization)

    def unit(self, values: np.ndarray) -> np.ndarray:
        return (np.asarray(values, dtype=float) - self.lo) / (self.hi - self.lo)


def initial_simplex(u0: np.ndarray, step: float = SIMPLEX_STEP) -> np.ndarray:
    n = u0.size
    sim = np.tile(u0, (n + 1, 1))
    for i in range(n):
        v = u0[i] + step
        sim[i + 1, i] = v if v <= 1.0 else u0[i] - step
    return sim


def _run_simplex(f: _Scaled, u0: np.ndarray, index: int, maxiter: int, fatol_rel: float,
                 xatol: float, on_eval: Optional[Callable[[int, int, float, float], None]] = None) -> _Run:
    best = {"u": u0.copy(), "f": math.inf, "n": 0}

    def tracked(u):
        val = f(u)
        best["n"] += 1
        if val < best["f"]:
            best["u"], best["f"] = np.clip(u, 0.0, 1.0).copy(), val
        if on_eval is not None:
            on_eval(index, best["n"], val, best["f"])
        return val

    f0 = tracked(u0)
    if not math.isfinite(f0):
        raise FitError(f"objective is not finite at the starting point (start {index})")

    res = optimize.minimize(
        tracked, u0, method="Nelder-Mead",
        bounds=[(0.0, 1.0)] * u0.size,
        options={
            "maxiter": maxiter,
            "initial_simplex": initial_simplex(u0),
            "xatol": xatol,
            "fatol": max(fatol_rel * f0, FATOL_FLOOR),
        },
    )
    # best-so-far, never worse than the start
    x, fun = best["u"], best["f"]
    if math.isfinite(res.fun) and res.fun < fun:
        x, fun = np.clip(res.x, 0.0, 1.0), float(res.fun)
    message = str(res.message)
    pinned = at_bounds(f, x)
    if pinned:
        message += "; stopped at a bound of " + ", ".join(pinned)
        logger.warning("start %d ended on a bound (%s), objective %.6g", index, ", ".join(pinned), fun)
    return _Run(index=index, x=x, fun=fun, start_fun=f0, iterations=int(res.nit), evaluations=best["n"],
                converged=bool(res.success) and not pinned, message=message)


def at_bounds(f: _Scaled, u: np.ndarray) -> List[str]:
    """Free parameters whose value sits on (or within BOUND_TOL of) a bound."""
    return [name for name, v in zip(f.problem.free_names, u) if v <= BOUND_TOL or v >= 1.0 - BOUND_TOL]


def scan_length(f: _Scaled, u0: np.ndarray, step_nm: float, workers: int = 1) -> Tuple[np.ndarray, float, float, int]:
    """
    Replace L in u0 by the best value on a uniform grid over its bounds, the other
    coordinates held fixed. Returns (start, objective there, objective at u0, evaluations).
    Grid points whose simulation fails are skipped.
    """
    i = f.problem.free_names.index("L")
    n = max(2, int(math.ceil((f.hi[i] - f.lo[i]) / step_nm)) + 1)
    grid = []
    for v in np.linspace(0.0, 1.0, n):
        u = u0.copy()
        u[i] = v
        grid.append(u)

    def safe(u: np.ndarray) -> float:
        try:
            return f(u)
        except EvaluationError as e:
            logger.debug("length scan skips L=%.2f nm: %s", f.lo[i] + u[i] * (f.hi[i] - f.lo[i]), e)
            return math.inf

    f0 = f(u0)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(safe, grid))
    else:
        values = [safe(u) for u in grid]
    k = int(np.argmin(values))
    if not values[k] < f0:
        return u0, f0, f0, n + 1
    logger.info("length scan: L %.2f -> %.2f nm (objective %.6g -> %.6g)",
                f.lo[i] + u0[i] * (f.hi[i] - f.lo[i]), f.lo[i] + grid[k][i] * (f.hi[i] - f.lo[i]), f0, values[k])
    return grid[k], float(values[k]), f0, n + 1


def _starts(u0: np.ndarray, n_extra: int, seed: int) -> List[np.ndarray]:
    points = [u0]
    if n_extra > 0:
        points += list(qmc.LatinHypercube(d=u0.size, seed=seed).random(n_extra))
    return points


def fit(problem: FitProblem, metrics: Optional[MetricsCollector] = None) -> FitResult:
    check_bounds(problem)
    start = problem.initial_params()
    bus = get_event_bus()

    if not problem.free:
        val = objective(start, problem.target, problem.effective_weights(), problem.polarization)
        if not math.isfinite(val):
            raise FitError("objective is not finite at the starting point")
        return FitResult(values={}, params=start.as_dict(), objective=val, initial_objective=val,
                         iterations=0, evaluations=1, converged=True, message="no free parameters")

    f = _Scaled(problem)
    u0 = f.unit([p.initial for p in problem.free])
    initial_objective: Optional[float] = None
    scan_evals = 0
    scanned_L: Optional[float] = None
    if problem.scan_step is not None and "L" in problem.free_names:
        u0, _, initial_objective, scan_evals = scan_length(f, u0, problem.scan_step, problem.workers)
        if not math.isfinite(initial_objective):
            raise FitError("objective is not finite at the starting point")
        scanned_L = f.to_params(u0).L

    def on_eval(index: int, n: int, val: float, best: float) -> None:
        bus.publish(FIT_ITERATION, {"start": index, "evaluation": n, "objective": val, "best": best})

    def one(item) -> _Run:
        index, u = item
        label = f"start-{index}"
        if metrics is not None:
            metrics.on_start("fit", label)
        try:
            run = _run_simplex(f, np.asarray(u, dtype=float), index, problem.maxiter,
                               problem.fatol_rel, problem.xatol, on_eval)
        except Exception as e:
            if metrics is not None:
                metrics.on_end("fit", label, False, error=str(e))
            raise
        if metrics is not None:
            metrics.on_end("fit", label, True, objective=run.fun, iterations=run.iterations)
        logger.info("start %d: objective %.6g after %d iterations (converged=%s)",
                    index, run.fun, run.iterations, run.converged)
        return run

    points = list(enumerate(_starts(u0, problem.multistart, problem.seed)))
    if len(points) > 1 and problem.workers > 1:
        with ThreadPoolExecutor(max_workers=problem.workers) as pool:
            runs = list(pool.map(one, points))
    else:
        runs = [one(pt) for pt in points]

    # runs[0] starts at the user's initial point or at a scan point no worse than it
    if initial_objective is None:
        initial_objective = runs[0].start_fun
    chosen = min(runs, key=lambda r: (r.fun, r.index))
    params = f.to_params(chosen.x)
    values = {name: getattr(params, name) for name in problem.free_names}
    return FitResult(
        values=values,
        params=params.as_dict(),
        objective=chosen.fun,
        initial_objective=initial_objective,
        iterations=sum(r.iterations for r in runs),
        evaluations=scan_evals + sum(r.evaluations for r in runs),
        converged=chosen.converged,
        message=chosen.message,
        starts=len(runs),
        scanned_L=scanned_L,
    )
