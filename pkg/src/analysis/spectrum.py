"""
Spectra and dip extraction.

A reflectance dip is a minimum of R, which shows up as a maximum of a 1-R
(or absorbance / emission) spectrum. `Spectrum.quantity_label` decides the
polarity, so the same `find_dips` serves simulated 1-R cuts and ingested R data.
"""
from __future__ import annotations
from dataclasses import dataclass, field
from typing import Any, Dict, Iterator, List, Optional, Tuple
import logging

import numpy as np
from scipy.signal import find_peaks, peak_widths

from src.config.settings import get_settings
from src.core.types import PreconditionError

logger = logging.getLogger(__name__)

# quantities whose features are maxima
_MAXIMA_LABELS = {"1-r", "a", "absorbance", "absorptance", "emission", "counts", "pl"}
# quantities bounded to [0, 1]; prominence is a fraction of 1 for these
_UNIT_SCALE_LABELS = {"r", "1-r", "t", "a"}


@dataclass
class Spectrum:
    energies: np.ndarray
    values: np.ndarray
    quantity_label: str = "1-R"
    provenance: str = "simulated"     # simulated | ingested
    kx: Optional[float] = None

    def __post_init__(self):
        self.energies = np.asarray(self.energies, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.energies.ndim != 1 or self.energies.shape != self.values.shape:
            raise PreconditionError("spectrum energies and values must be 1-D of equal length")
        if self.energies.size == 0:
            raise PreconditionError("spectrum is empty")
        if np.any(np.diff(self.energies) <= 0):
            raise PreconditionError("spectrum energies must be strictly ascending")
        if not np.all(np.isfinite(self.values)):
            raise PreconditionError("spectrum values must be finite")
        if self.provenance not in ("simulated", "ingested"):
            raise PreconditionError(f"unknown provenance {self.provenance!r}")

    @property
    def features_are_maxima(self) -> bool:
        return self.quantity_label.strip().lower() in _MAXIMA_LABELS

    @property
    def full_scale(self) -> float:
        if self.quantity_label.strip().lower() in _UNIT_SCALE_LABELS:
            return 1.0
        return float(np.ptp(self.values))

    @property
    def resolution(self) -> float:
        """Median grid step (eV)."""
        if self.energies.size < 2:
            return 0.0
        return float(np.median(np.diff(self.energies)))

    def spans(self, lo: float, hi: float) -> bool:
        return self.energies[0] <= lo and self.energies[-1] >= hi


def column_spectrum(m, j: int) -> Spectrum:
    """Spectrum along energy at momentum index j of a DispersionMap."""
    return Spectrum(energies=m.energies, values=m.values[:, j], quantity_label=m.quantity_label,
                    provenance=m.metadata.get("provenance", "simulated"), kx=float(m.momenta[j]))


@dataclass(frozen=True)
class Dip:
    center: float        # eV, sub-grid
    depth: float         # quantity value at the refined centre
    prominence: float    # in quantity units
    fwhm: float          # eV
    index: int           # nearest grid index


@dataclass(frozen=True)
class DipSet:
    dips: Tuple[Dip, ...] = field(default_factory=tuple)

    def __len__(self) -> int:
        return len(self.dips)

    def __iter__(self) -> Iterator[Dip]:
        return iter(self.dips)

    def __getitem__(self, i: int) -> Dip:
        return self.dips[i]

    @property
    def centers(self) -> np.ndarray:
        return np.array([d.center for d in self.dips], dtype=float)

    def within(self, lo: float, hi: float) -> "DipSet":
        return DipSet(tuple(d for d in self.dips if lo <= d.center <= hi))

    def straddling(self, E: float) -> Optional[Tuple[Dip, Dip]]:
        """Closest dip below E and closest dip above E, if both exist."""
        below = [d for d in self.dips if d.center < E]
        above = [d for d in self.dips if d.center > E]
        if not below or not above:
            return None
        return below[-1], above[0]


def parabola_vertex(x, y) -> Tuple[float, float]:
    """
    Vertex of the parabola through three points on a possibly non-uniform grid,
    computed in coordinates centred on the middle point.
    """
    x0, x1, x2 = (float(v) for v in x)
    y0, y1, y2 = (float(v) for v in y)
    d0, d2 = x0 - x1, x2 - x1
    u0, u2 = y0 - y1, y2 - y1
    det = d0 * d2 * (d0 - d2)
    a = (u0 * d2 - u2 * d0) / det
    b = (u2 * d0 * d0 - u0 * d2 * d2) / det
    if a == 0:
        return x1, y1
    return x1 - b / (2 * a), y1 - b * b / (4 * a)


def find_dips(s: Spectrum,
              min_prominence: Optional[float] = None,
              window: Optional[Tuple[float, float]] = None) -> DipSet:
    """
    Dips with prominence >= min_prominence * full scale, optionally restricted to
    an energy window. Centres are refined through the neighbouring grid points.
    """
    if min_prominence is None:
        min_prominence = get_settings().min_prominence
    lo, hi = window if window is not None else (s.energies[0], s.energies[-1])
    if lo > hi:
        lo, hi = hi, lo
    if not np.any((s.energies >= lo) & (s.energies <= hi)):
        raise PreconditionError(f"window [{lo:.4g}, {hi:.4g}] eV contains no grid points")

    sign = 1.0 if s.features_are_maxima else -1.0
    y = sign * s.values
    scale = s.full_scale
    if scale <= 0:
        return DipSet()
    threshold = max(min_prominence * scale, np.finfo(float).tiny)

    peaks, props = find_peaks(y, prominence=threshold)
    if peaks.size == 0:
        return DipSet()
    widths, _, left_ips, right_ips = peak_widths(
        y, peaks, rel_height=0.5,
        prominence_data=(props["prominences"], props["left_bases"], props["right_bases"]),
    )
    grid_idx = np.arange(s.energies.size)
    e_left = np.interp(left_ips, grid_idx, s.energies)
    e_right = np.interp(right_ips, grid_idx, s.energies)

    dips: List[Dip] = []
    for k, i in enumerate(peaks):
        center, peak_y = float(s.energies[i]), float(y[i])
        if 0 < i < s.energies.size - 1:
            xv, yv = parabola_vertex(s.energies[i - 1:i + 2], y[i - 1:i + 2])
            if s.energies[i - 1] <= xv <= s.energies[i + 1]:
                center, peak_y = xv, yv
        if not (lo <= center <= hi):
            continue
        dips.append(Dip(
            center=center,
            depth=sign * peak_y,
            prominence=float(props["prominences"][k]),
            fwhm=float(e_right[k] - e_left[k]),
            index=int(i),
        ))
    dips.sort(key=lambda d: d.center)
    return DipSet(tuple(dips))


def shoulder_pair(s: Spectrum, dip: Dip, E: float, min_relative: float = 0.1) -> Optional[Tuple[float, float]]:
    """
    Components of an unresolved doublet: the maxima of -d2y/dE2 closest to E on
    either side, searched within one FWHM of the dip centre. Lobes weaker than
    min_relative of the strongest one are ignored. None when E is not straddled.
    """
    sign = 1.0 if s.features_are_maxima else -1.0
    E_grid = s.energies
    if E_grid.size < 5:
        return None
    curvature = -np.gradient(np.gradient(sign * s.values, E_grid), E_grid)
    near = (E_grid >= dip.center - dip.fwhm) & (E_grid <= dip.center + dip.fwhm)
    if not np.any(near) or curvature[near].max() <= 0:
        return None
    lobes, _ = find_peaks(curvature, height=0.0, prominence=min_relative * curvature[near].max())
    centers = [float(E_grid[i]) for i in lobes if near[i]]
    below = [c for c in centers if c < E]
    above = [c for c in centers if c > E]
    if not below or not above:
        return None
    return below[-1], above[0]


def dipset_to_json(ds: DipSet, kx: Optional[float] = None) -> Dict[str, Any]:
    rec: Dict[str, Any] = {
        "count": len(ds),
        "dips": [
            {"center_ev": d.center, "depth": d.depth, "prominence": d.prominence, "fwhm_ev": d.fwhm}
            for d in ds
        ],
    }
    if kx is not None:
        rec["kx_per_um"] = kx
    return rec
