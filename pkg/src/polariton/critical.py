"""
Critical cavity length separating entangled and decoupled multimode coupling.

L_c solves  L = hc*n0*gamma / (pi * (1 - 2*beta(L)) * (f - (n0*gamma)^2))
with        beta(L) = 1 / (exp(2*pi*f*L / (hc*n0*gamma)) - 1).

Rewritten as the root of
    g(L) = L*pi*(1 - 2*beta(L))*(f - (n0*gamma)^2) - hc*n0*gamma,
which is increasing in L, and bracketed on [1 nm, 1e5 nm].
"""
from __future__ import annotations
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Tuple
import logging
import math
import time

import numpy as np
from scipy import optimize

from src.core.types import NoSolutionError, PreconditionError, SolverError
from src.core.units import C_NM_PER_S, HBAR_EV_S, HC_EV_NM

logger = logging.getLogger(__name__)

BRACKET_NM: Tuple[float, float] = (1.0, 1.0e5)
# exp overflows past ~709; beta is below 1e-300 there anyway
_EXP_CUTOFF = 700.0


@dataclass(frozen=True)
class CriticalLengthParams:
    n0: float = 1.5
    gamma: float = 0.034   # eV
    f: float = 0.037       # eV^2

    def __post_init__(self):
        if self.n0 < 1:
            raise PreconditionError(f"n0 must be >= 1, got {self.n0}")
        if not self.gamma > 0:
            raise PreconditionError(f"gamma must be > 0, got {self.gamma}")
        if self.f < 0:
            raise PreconditionError(f"f must be >= 0, got {self.f}")

    @property
    def damping_floor(self) -> float:
        """(n0*gamma)^2: f must exceed this for a critical length to exist."""
        return (self.n0 * self.gamma) ** 2


class CriticalLength(NamedTuple):
    L_c_nm: float
    residual_nm: float


def beta(L: float, p: CriticalLengthParams) -> float:
    x = 2.0 * math.pi * p.f * L / (HC_EV_NM * p.n0 * p.gamma)
    if x > _EXP_CUTOFF:
        return 0.0
    return 1.0 / math.expm1(x)


def implicit_rhs(L: float, p: CriticalLengthParams) -> float:
    return HC_EV_NM * p.n0 * p.gamma / (math.pi * (1.0 - 2.0 * beta(L, p)) * (p.f - p.damping_floor))


def asymptotic_length(p: CriticalLengthParams) -> float:
    """The beta -> 0 form hc*n0*gamma / (pi*(f - (n0*gamma)^2))."""
    return HC_EV_NM * p.n0 * p.gamma / (math.pi * (p.f - p.damping_floor))


def _g(L: float, p: CriticalLengthParams) -> float:
    return L * math.pi * (1.0 - 2.0 * beta(L, p)) * (p.f - p.damping_floor) - HC_EV_NM * p.n0 * p.gamma


def critical_length(p: CriticalLengthParams, bracket: Tuple[float, float] = BRACKET_NM) -> CriticalLength:
    if p.f <= p.damping_floor:
        raise NoSolutionError(
            f"no critical length: f={p.f:.6g} eV^2 does not exceed (n0*gamma)^2={p.damping_floor:.6g} eV^2"
        )
    lo, hi = bracket
    g_lo, g_hi = _g(lo, p), _g(hi, p)
    if g_lo * g_hi > 0:
        raise SolverError(
            f"critical length outside bracket [{lo:g}, {hi:g}] nm",
            diagnostics={"bracket_nm": [lo, hi], "g_lo": g_lo, "g_hi": g_hi,
                         "f": p.f, "n0": p.n0, "gamma": p.gamma},
        )
    t0 = time.perf_counter()
    L_c, info = optimize.brentq(_g, lo, hi, args=(p,), xtol=1e-12, rtol=4 * np.finfo(float).eps,
                                maxiter=200, full_output=True)
    if not info.converged:
        raise SolverError("brentq did not converge", diagnostics={"flag": info.flag,
                                                                   "iterations": info.iterations})
    residual = abs(L_c - implicit_rhs(L_c, p))
    logger.debug("L_c=%.6f nm after %d iterations (%.1f us)", L_c, info.iterations,
                 (time.perf_counter() - t0) * 1e6)
    return CriticalLength(L_c_nm=float(L_c), residual_nm=float(residual))


def nominal_rabi(f: float, n0: float) -> float:
    """hbar*Omega_R ~ sqrt(f)/n0 (eV)."""
    if f < 0:
        raise PreconditionError(f"f must be >= 0, got {f}")
    if n0 < 1:
        raise PreconditionError(f"n0 must be >= 1, got {n0}")
    return math.sqrt(f) / n0


class CoherenceTimes(NamedTuple):
    transit_s: float      # one pass through the spacer, L*n0/c
    lifetime_s: float     # exciton dephasing time hbar/gamma
    ratio: float


def coherence_ratio(L: float, n0: float, gamma: float) -> CoherenceTimes:
    """Photon transit time across the cavity against the exciton lifetime."""
    if not L > 0 or not gamma > 0:
        raise PreconditionError("L and gamma must be > 0")
    transit = L * n0 / C_NM_PER_S
    lifetime = HBAR_EV_S / gamma
    return CoherenceTimes(transit, lifetime, transit / lifetime)


def critical_length_curve(n0: float, gamma: float, f_values: Iterable[float]) -> np.ndarray:
    """L_c for each f; NaN where no critical length exists inside the bracket."""
    out = []
    for f in f_values:
        try:
            out.append(critical_length(CriticalLengthParams(n0=n0, gamma=gamma, f=float(f))).L_c_nm)
        except (NoSolutionError, SolverError) as e:
            logger.info("f=%.4g: %s", f, e)
            out.append(float("nan"))
    return np.asarray(out, dtype=float)
