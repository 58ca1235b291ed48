"""
Longitudinal mode ladder of a planar cavity.

The labelling formula E_m(kx) = (hbar c / n0) * sqrt(((m pi - delta) / L)^2 + kx^2)
uses a reflection-phase deficit delta per mirror; delta = 0 is the ideal-mirror
form. Metal mirrors shift every order by the same delta, which is why the bare
formula misplaces the modes of a silver cavity by roughly 0.15 eV.
"""
from __future__ import annotations
from dataclasses import dataclass
from typing import Callable, Optional, Tuple
import logging
import math

import numpy as np

from src.core.types import PreconditionError
from src.core.units import HBAR_C_EV_NM, per_um_to_per_nm
from src.materials.dielectric import Constant, DielectricModel, silver_default
from src.tmm.solver import stack_amplitudes
from src.tmm.stack import Layer, LayerStack, PlaneWaveContext

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ModeLadder:
    L: float                         # nm
    n0: float
    orders: Tuple[int, ...]
    phase_offset: float = 0.0        # rad

    def __post_init__(self):
        object.__setattr__(self, "orders", tuple(int(m) for m in self.orders))
        if not self.L > 0:
            raise PreconditionError(f"cavity length must be > 0 nm, got {self.L}")
        if self.n0 < 1:
            raise PreconditionError(f"n0 must be >= 1, got {self.n0}")
        if any(m < 1 for m in self.orders):
            raise PreconditionError("mode orders must be positive integers")
        if any(b <= a for a, b in zip(self.orders, self.orders[1:])):
            raise PreconditionError("mode orders must be strictly increasing")

    def energies(self, kx=0.0) -> np.ndarray:
        """Mode energies (eV) at kx (um^-1), one per order."""
        return np.array([empty_mode_energy(m, self.L, self.n0, kx, self.phase_offset)
                         for m in self.orders], dtype=float)


def empty_mode_energy(m: int, L: float, n0: float, kx=0.0, phase_offset: float = 0.0):
    """Energy (eV) of longitudinal order m at in-plane momentum kx (um^-1)."""
    if m < 1:
        raise PreconditionError(f"mode order must be >= 1, got {m}")
    if not L > 0:
        raise PreconditionError(f"cavity length must be > 0 nm, got {L}")
    q = (m * math.pi - phase_offset) / L
    if q <= 0:
        raise PreconditionError(f"phase offset {phase_offset} leaves no standing wave for m={m}")
    k = per_um_to_per_nm(np.asarray(kx, dtype=float))
    E = (HBAR_C_EV_NM / n0) * np.sqrt(q * q + k * k)
    return float(E) if np.ndim(E) == 0 else E


def _phase_deficit(stack: LayerStack, E: float) -> float:
    r, _ = stack_amplitudes(stack, PlaneWaveContext(E=E, kx=0.0))
    return float((np.angle(r) + math.pi) % (2 * math.pi))


def mirror_phase_offset(mirror: Optional[DielectricModel] = None,
                        thickness_nm: float = 35.0,
                        spacer_index: float = 1.5,
                        backing: float = 1.0,
                        E: float = 2.1) -> float:
    """
    Reflection-phase deficit (rad) of a metal film seen from the spacer side:
    delta = (arg r + pi) mod 2 pi, zero for an ideal r = -1 mirror.
    """
    mirror = mirror if mirror is not None else silver_default()
    stack = LayerStack(
        incidence=Constant(spacer_index),
        layers=(Layer(thickness_nm, mirror, name="mirror"),),
        exit=Constant(backing),
    )
    delta = _phase_deficit(stack, E)
    logger.debug("mirror phase offset %.4f rad at %.3f eV", delta, E)
    return delta


def layer_phase_offset(stack: LayerStack, index: int, n0: float, E: float) -> float:
    """
    Mean phase deficit (rad) of the two half-stacks bounding layer `index`, each
    seen from a medium of index n0 and backed by its own semi-infinite medium.
    """
    if not 0 <= index < len(stack.layers):
        raise PreconditionError(f"layer index {index} outside a {len(stack.layers)}-layer stack")
    inside = Constant(n0)
    below = LayerStack(incidence=inside, layers=tuple(reversed(stack.layers[:index])), exit=stack.incidence)
    above = LayerStack(incidence=inside, layers=stack.layers[index + 1:], exit=stack.exit)
    return 0.5 * (_phase_deficit(below, E) + _phase_deficit(above, E))


def symmetric_length(m: int, Ex: float, n0: float, phase_offset: float = 0.0) -> float:
    """Cavity length (nm) placing Ex midway between orders m and m+1 at kx = 0."""
    if m < 1:
        raise PreconditionError(f"mode order must be >= 1, got {m}")
    if not Ex > 0:
        raise PreconditionError("Ex must be > 0")
    return HBAR_C_EV_NM * ((m + 0.5) * math.pi - phase_offset) / (n0 * Ex)


def nearest_symmetric_length(L: float, Ex: float, n0: float, phase_offset: float = 0.0) -> Tuple[int, float]:
    """(m, length) of the symmetric-detuning cavity closest to L."""
    if not L > 0:
        raise PreconditionError(f"cavity length must be > 0 nm, got {L}")
    if not Ex > 0:
        raise PreconditionError("Ex must be > 0")
    x = L * n0 * Ex / HBAR_C_EV_NM + phase_offset
    m = max(1, int(round(x / math.pi - 0.5)))
    return m, symmetric_length(m, Ex, n0, phase_offset)


def select_modes(L: float, n0: float, Ex: float, window: float = 1.0,
                 phase_offset: float = 0.0) -> ModeLadder:
    """All orders whose kx = 0 energy lies within +/- window (eV) of Ex."""
    if not window > 0:
        raise PreconditionError("mode window must be > 0 eV")
    m_max = int(math.ceil(((Ex + window) * n0 * L / HBAR_C_EV_NM + phase_offset) / math.pi)) + 1
    orders = [m for m in range(1, m_max + 1)
              if abs(empty_mode_energy(m, L, n0, 0.0, phase_offset) - Ex) <= window]
    return ModeLadder(L=L, n0=n0, orders=tuple(orders), phase_offset=phase_offset)


def ladder_model(ladder: ModeLadder, Ex: float, g: float, topology) -> Callable[[float], "CoupledModel"]:
    """kx -> CoupledModel for the ladder's orders, for use with eigenbranches."""
    from src.polariton.hamiltonian import CoupledModel, Topology

    topology = Topology.parse(topology)
    if not ladder.orders:
        raise PreconditionError("mode ladder is empty; widen the selection window")

    def at(kx: float) -> CoupledModel:
        return CoupledModel(
            mode_energies=tuple(ladder.energies(kx)),
            Ex=Ex,
            g=g,
            topology=topology,
            orders=ladder.orders,
        )

    return at
