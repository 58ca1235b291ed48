from __future__ import annotations
from typing import Callable, List, NamedTuple, Optional
import logging

import numpy as np

from src.analysis.spectrum import DipSet, column_spectrum, find_dips
from src.core.types import NoAnticrossingError, PreconditionError
from src.polariton.hamiltonian import PolaritonBranches

logger = logging.getLogger(__name__)


class Splitting(NamedTuple):
    rabi: float     # eV
    kx: float       # um^-1


def measure_splitting(m,
                      bare_mode: Callable[[float], float],
                      Ex: float,
                      search_window: float = 0.25,
                      min_prominence: Optional[float] = None,
                      max_detuning: Optional[float] = None) -> Splitting:
    """
    Minimum separation, over kx, of the two dips bracketing Ex inside
    Ex +/- search_window. `m` is a DispersionMap.

    Only columns where the bare mode lies within max_detuning of Ex (default half
    the search window) are used, and there the pair must bracket the bare mode as
    well as Ex. A minimum on the first or last of those columns raises
    NoAnticrossingError.
    """
    if max_detuning is None:
        max_detuning = 0.5 * search_window
    bare = np.array([bare_mode(float(k)) for k in m.momenta])
    detuning = bare - Ex
    if not (detuning.min() <= 0 <= detuning.max()):
        raise PreconditionError(
            f"bare mode does not cross Ex={Ex:g} eV within kx [{m.momenta[0]:g}, {m.momenta[-1]:g}]"
        )

    seps: List[Splitting] = []
    for j in np.flatnonzero(np.abs(detuning) <= max_detuning):
        dips = find_dips(column_spectrum(m, j), min_prominence=min_prominence,
                         window=(Ex - search_window, Ex + search_window))
        pair = dips.straddling(Ex)
        if pair is None or not (pair[0].center < bare[j] < pair[1].center):
            continue
        seps.append(Splitting(rabi=float(pair[1].center - pair[0].center), kx=float(m.momenta[j])))
    if not seps:
        raise NoAnticrossingError(f"no pair of dips brackets Ex={Ex:g} eV near the bare-mode crossing")
    i = min(range(len(seps)), key=lambda n: seps[n].rabi)
    if i == 0 or i == len(seps) - 1:
        raise NoAnticrossingError(
            f"dip separation has no minimum inside kx [{seps[0].kx:g}, {seps[-1].kx:g}] um^-1 "
            f"(smallest {seps[i].rabi * 1e3:.1f} meV at the edge, kx={seps[i].kx:g})"
        )
    best = seps[i]
    logger.info("splitting %.1f meV at kx=%.2f um^-1", best.rabi * 1e3, best.kx)
    return best


def trace_branches(m,
                   seeds: DipSet,
                   max_jump: float = 0.05,
                   min_prominence: Optional[float] = None) -> PolaritonBranches:
    """
    Greedy nearest-dip continuation from the seeds at momenta[0]. A branch ends at
    the first kx with no free dip within max_jump of its last energy.
    """
    if len(seeds) == 0:
        raise PreconditionError("trace_branches needs at least one seed dip")

    n_k, n_b = m.momenta.size, len(seeds)
    traces = np.full((n_k, n_b), np.nan)
    traces[0] = seeds.centers
    alive = [True] * n_b
    labels = [f"B{b + 1}" for b in range(n_b)]
    terminated: dict = {}

    for j in range(1, n_k):
        centers = find_dips(column_spectrum(m, j), min_prominence=min_prominence).centers
        candidates = []
        for b in range(n_b):
            if not alive[b]:
                continue
            for d, c in enumerate(centers):
                dist = abs(c - traces[j - 1, b])
                if dist <= max_jump:
                    candidates.append((dist, b, d))
        candidates.sort()
        taken_b, taken_d = set(), set()
        for dist, b, d in candidates:
            if b in taken_b or d in taken_d:
                continue
            traces[j, b] = centers[d]
            taken_b.add(b)
            taken_d.add(d)
        for b in range(n_b):
            if alive[b] and b not in taken_b:
                alive[b] = False
                terminated[labels[b]] = float(m.momenta[j - 1])
                logger.debug("branch %s ends at kx=%.3f", labels[b], m.momenta[j - 1])

    return PolaritonBranches(kx=m.momenta.copy(), energies=traces, labels=labels,
                             terminated_at=terminated)
