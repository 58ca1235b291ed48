"""
Planar multilayer response by a reflection-coefficient recursion.

The stack is folded from the exit side towards the incidence side:

    G_j = (r_{j,j+1} + G_{j+1} P) / (1 + r_{j,j+1} G_{j+1} P),   P = exp(2 i kz_{j+1} d_{j+1})

with kz on the Im kz >= 0 branch, so |P| <= 1 and nothing grows inside thick
absorbing layers (a plain 2x2 transfer product overflows there). Amplitudes are
for the tangential electric field in both polarizations; interface admittances
are Y = kz (TE) and Y = eps / kz (TM), which makes TE and TM coincide at kx = 0.

All internal wavevectors are in nm^-1; kx enters in um^-1 and is converted once.
"""
from __future__ import annotations
import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from src.core.types import EvaluationError, PreconditionError
from src.core.units import per_um_to_per_nm, vacuum_wavenumber
from src.tmm.stack import LayerStack, PlaneWaveContext, Polarization

logger = logging.getLogger(__name__)

# power bookkeeping tolerance for reporting A >= -tol
POWER_TOL = 1e-10


def _kz(n, k0, kx_nm):
    kz = np.sqrt((n * k0) ** 2 - kx_nm ** 2 + 0j)
    # principal root already has Re >= 0; fold onto Im >= 0 (covers the -0j case)
    return np.where(kz.imag < 0, -kz, kz)


def kz_in_layer(ctx: PlaneWaveContext, n: complex) -> complex:
    """Normal wavevector component in a medium of index n, nm^-1."""
    k0 = vacuum_wavenumber(ctx.E)
    return complex(_kz(np.asarray(n, dtype=complex), k0, per_um_to_per_nm(ctx.kx)))


def _interface(kz_i, kz_j, eps_i, eps_j, pol: Polarization):
    if pol is Polarization.TE:
        num_i, num_j = kz_i, kz_j
    else:
        # eps/kz admittances multiplied through by kz_i kz_j
        num_i, num_j = eps_i * kz_j, eps_j * kz_i
    den = num_i + num_j
    r = (num_i - num_j) / den
    t = 2.0 * num_i / den
    return r, t


@dataclass
class _Response:
    r: np.ndarray
    t: np.ndarray
    kz_inc: np.ndarray
    kz_exit: np.ndarray
    eps_inc: np.ndarray
    eps_exit: np.ndarray
    pol: Polarization


def _response(stack: LayerStack, E, kx_um, pol: Polarization) -> _Response:
    """Vectorised core; E and kx_um broadcast against each other."""
    E = np.asarray(E, dtype=float)
    kx_nm = per_um_to_per_nm(np.asarray(kx_um, dtype=float))
    k0 = vacuum_wavenumber(E)

    media = [stack.incidence] + [l.material for l in stack.layers] + [stack.exit]
    thick = [0.0] + [l.thickness for l in stack.layers] + [0.0]
    eps = [np.asarray(m.permittivity(E), dtype=complex) for m in media]
    # index from the material itself (tabulated models interpolate n, not eps)
    kz = [_kz(np.asarray(m.index(E), dtype=complex), k0, kx_nm) for m in media]

    last = len(media) - 1
    with np.errstate(all="ignore"):
        G, tau = _interface(kz[last - 1], kz[last], eps[last - 1], eps[last], pol)
        for j in range(last - 2, -1, -1):
            r_jk, t_jk = _interface(kz[j], kz[j + 1], eps[j], eps[j + 1], pol)
            half = np.exp(1j * kz[j + 1] * thick[j + 1])
            P = half * half
            den = 1.0 + r_jk * G * P
            G = (r_jk + G * P) / den
            tau = t_jk * tau * half / den
    return _Response(r=G, t=tau, kz_inc=kz[0], kz_exit=kz[last],
                     eps_inc=eps[0], eps_exit=eps[last], pol=pol)


def _flux_ratio(resp: _Response):
    """Re(Y_exit)/Re(Y_inc); zero where the exit wave carries no flux."""
    with np.errstate(all="ignore"):
        if resp.pol is Polarization.TE:
            y_exit, y_inc = resp.kz_exit, resp.kz_inc
        else:
            y_exit = resp.eps_exit / resp.kz_exit
            y_inc = resp.eps_inc / resp.kz_inc
        ratio = np.real(y_exit) / np.real(y_inc)
    return np.where(np.isfinite(ratio) & (resp.kz_exit != 0), ratio, 0.0)


def _propagating(stack: LayerStack, E, kx_um) -> np.ndarray:
    n_inc = np.real(np.asarray(stack.incidence.index(np.asarray(E, dtype=float)), dtype=complex))
    k_cut = per_um_to_per_nm(np.abs(np.asarray(kx_um, dtype=float)))
    return k_cut < n_inc * vacuum_wavenumber(np.asarray(E, dtype=float))


def stack_amplitudes(stack: LayerStack, ctx: PlaneWaveContext) -> Tuple[complex, complex]:
    """Field reflection / transmission amplitudes seen from the incidence side."""
    resp = _response(stack, ctx.E, ctx.kx, ctx.polarization)
    r, t = complex(resp.r), complex(resp.t)
    if not (np.isfinite(r) and np.isfinite(t)):
        raise EvaluationError("non-finite amplitudes in layer recursion", ctx.E, ctx.kx)
    return r, t


def power_grid(stack: LayerStack, E, kx_um, pol) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """
    R, T, A on a broadcast grid plus a boolean `ok` mask (propagating incidence
    and finite amplitudes). Entries where ok is False are undefined.
    """
    pol = Polarization.parse(pol)
    resp = _response(stack, E, kx_um, pol)
    with np.errstate(all="ignore"):
        R = np.abs(resp.r) ** 2
        T = np.abs(resp.t) ** 2 * _flux_ratio(resp)
        A = 1.0 - R - T
    ok = _propagating(stack, E, kx_um) & np.isfinite(R) & np.isfinite(T)
    return R, T, A, ok


def power_coefficients(stack: LayerStack, ctx: PlaneWaveContext) -> Tuple[float, float, float]:
    """(R, T, A) with A = 1 - R - T; requires a propagating incident wave."""
    if not bool(_propagating(stack, ctx.E, ctx.kx)):
        raise PreconditionError(
            f"evanescent incidence: kx={ctx.kx:.6g} um^-1 exceeds n_inc*E/(hbar c) at E={ctx.E:.6g} eV"
        )
    R, T, A, ok = power_grid(stack, ctx.E, ctx.kx, ctx.polarization)
    if not bool(ok):
        raise EvaluationError("non-finite power coefficients", ctx.E, ctx.kx)
    R, T, A = float(R), float(T), float(A)
    if A < -POWER_TOL:
        logger.warning("negative absorptance %.3e at E=%.4f kx=%.4f (active medium?)", A, ctx.E, ctx.kx)
    return R, T, A
