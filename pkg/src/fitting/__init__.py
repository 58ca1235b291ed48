"""
Parameter recovery from dispersion maps.
"""

from .problem import (
    CavityParams,
    FitProblem,
    FitResult,
    FreeParam,
    cavity_stack,
    load_problem,
    model_map,
    save_result,
)
from .fitter import fit, objective

__all__ = [
    "CavityParams", "FitProblem", "FitResult", "FreeParam", "cavity_stack", "load_problem",
    "model_map", "save_result", "fit", "objective",
]
