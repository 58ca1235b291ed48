"""
Spectral analysis: dip extraction, regime labels, splitting and branch tracing.
"""

from .spectrum import Dip, DipSet, Spectrum, column_spectrum, dipset_to_json, find_dips, shoulder_pair
from .regime import Regime, RegimeLabel, classify_regime, regime_to_json, transitions
from .branches import Splitting, measure_splitting, trace_branches

__all__ = [
    "Dip", "DipSet", "Spectrum", "column_spectrum", "dipset_to_json", "find_dips", "shoulder_pair",
    "Regime", "RegimeLabel", "classify_regime", "regime_to_json", "transitions",
    "Splitting", "measure_splitting", "trace_branches",
]
