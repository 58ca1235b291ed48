from __future__ import annotations
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple
import logging

from src.analysis.spectrum import DipSet, Spectrum, dipset_to_json, find_dips, shoulder_pair
from src.core.types import PreconditionError

logger = logging.getLogger(__name__)


class Regime(str, Enum):
    COUPLED = "Coupled"
    DECOUPLED = "Decoupled"
    INDETERMINATE = "Indeterminate"


@dataclass(frozen=True)
class RegimeLabel:
    regime: Regime
    n_dips: int = 0
    gap: Optional[float] = None                 # eV, Decoupled only
    centers: Tuple[float, ...] = field(default_factory=tuple)
    unresolved: bool = False                    # gap read from a broadened single dip
    dips: DipSet = field(default_factory=DipSet)

    @property
    def gap_mev(self) -> Optional[float]:
        return None if self.gap is None else self.gap * 1e3


def classify_regime(s: Spectrum,
                    Ex: float,
                    window: float = 0.15,
                    min_prominence: Optional[float] = None,
                    max_gap: Optional[float] = None,
                    broad_fwhm: Optional[float] = None) -> RegimeLabel:
    """
    Dip count within Ex +/- window of a kx = 0 spectrum:
      one dip                                   -> Coupled (single mid-polariton)
      one dip at least broad_fwhm wide whose
      curvature lobes straddle Ex               -> Decoupled, unresolved pair
      closest dips below and above Ex, with
      2 grid steps <= gap (<= max_gap if given) -> Decoupled, gap reported
      anything else                             -> Indeterminate
    """
    if not s.spans(Ex - window, Ex + window):
        raise PreconditionError(
            f"spectrum [{s.energies[0]:.4g}, {s.energies[-1]:.4g}] eV does not span "
            f"Ex +/- {window:g} eV"
        )
    dips = find_dips(s, min_prominence=min_prominence, window=(Ex - window, Ex + window))
    centers = tuple(float(c) for c in dips.centers)
    floor = 2 * s.resolution

    if len(dips) == 1:
        dip = dips[0]
        if broad_fwhm is not None and dip.fwhm >= broad_fwhm:
            lobes = shoulder_pair(s, dip, Ex)
            split = None if lobes is None else lobes[1] - lobes[0]
            if split is not None and split >= floor and (max_gap is None or split <= max_gap):
                return RegimeLabel(Regime.DECOUPLED, n_dips=1, gap=split, centers=centers,
                                   unresolved=True, dips=dips)
            logger.debug("broad dip at %.4f eV (FWHM %.4f eV) has no doublet across Ex", dip.center, dip.fwhm)
        return RegimeLabel(Regime.COUPLED, n_dips=1, centers=centers, dips=dips)

    pair = dips.straddling(Ex)
    if pair is not None:
        gap = pair[1].center - pair[0].center
        if gap >= floor and (max_gap is None or gap <= max_gap):
            return RegimeLabel(Regime.DECOUPLED, n_dips=len(dips), gap=gap, centers=centers, dips=dips)
        logger.debug("straddling pair rejected: gap %.4f eV (max %s)", gap, max_gap)
    return RegimeLabel(Regime.INDETERMINATE, n_dips=len(dips), centers=centers, dips=dips)


def transitions(lengths: Sequence[float], labels: Sequence[RegimeLabel]) -> List[Tuple[float, float, Regime, Regime]]:
    """
    Regime changes along a thickness sweep, ignoring Indeterminate rows:
    (last L of the old regime, first L of the new one, old, new).
    """
    decided = [(L, lab.regime) for L, lab in zip(lengths, labels) if lab.regime is not Regime.INDETERMINATE]
    out = []
    for (L0, r0), (L1, r1) in zip(decided, decided[1:]):
        if r1 is not r0:
            out.append((float(L0), float(L1), r0, r1))
    return out


def regime_to_json(label: RegimeLabel, **extra: Any) -> Dict[str, Any]:
    rec = {
        "regime": label.regime.value,
        "n_dips": label.n_dips,
        "gap_meV": label.gap_mev,
        "unresolved": label.unresolved,
        "dip_centers_ev": list(label.centers),
        "dips": dipset_to_json(label.dips)["dips"],
    }
    rec.update(extra)
    return rec
