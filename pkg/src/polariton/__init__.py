"""
Mode ladder, multimode Hamiltonians and the critical-length relation.
"""

from .modes import (
    ModeLadder,
    empty_mode_energy,
    ladder_model,
    layer_phase_offset,
    mirror_phase_offset,
    nearest_symmetric_length,
    select_modes,
    symmetric_length,
)
from .hamiltonian import (
    CoupledModel,
    HopfieldWeights,
    PolaritonBranches,
    Topology,
    build_hamiltonian,
    eigenbranches,
    hopfield_weights,
)
from .critical import (
    CriticalLength,
    CriticalLengthParams,
    coherence_ratio,
    critical_length,
    critical_length_curve,
    nominal_rabi,
)

__all__ = [
    "ModeLadder", "empty_mode_energy", "ladder_model", "layer_phase_offset", "mirror_phase_offset",
    "nearest_symmetric_length", "select_modes", "symmetric_length", "CoupledModel", "HopfieldWeights",
    "PolaritonBranches", "Topology", "build_hamiltonian", "eigenbranches", "hopfield_weights", "CriticalLength",
    "CriticalLengthParams", "coherence_ratio", "critical_length", "critical_length_curve",
    "nominal_rabi",
]
