"""
Planar multilayer optics.

- stack:      Layer, LayerStack, PlaneWaveContext, Polarization, silver_cavity
- solver:     kz_in_layer, stack_amplitudes, power_coefficients, power_grid
- dispersion: DispersionMap, dispersion_map, spectrum_at, write_map, read_map
"""

from .stack import Layer, LayerStack, PlaneWaveContext, Polarization, silver_cavity, reversed_stack
from .solver import kz_in_layer, power_coefficients, power_grid, stack_amplitudes
from .dispersion import DispersionMap, dispersion_map, read_map, spectrum_at, write_map

__all__ = [
    "Layer", "LayerStack", "PlaneWaveContext", "Polarization", "silver_cavity", "reversed_stack",
    "kz_in_layer", "power_coefficients", "power_grid", "stack_amplitudes",
    "DispersionMap", "dispersion_map", "read_map", "spectrum_at", "write_map",
]
