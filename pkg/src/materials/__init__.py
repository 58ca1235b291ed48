"""
Dielectric models for planar-cavity constituents.

- Constant, Lorentz, Drude, Tabulated: DielectricModel variants
- lorentz_permittivity / drude_permittivity / refractive_index / tabulated_index
- silver_default(), tdbc_film(): defaults used across the package
"""

from .dielectric import (
    Constant,
    DielectricModel,
    Drude,
    DrudeParams,
    Lorentz,
    LorentzParams,
    Tabulated,
    TabulatedOptics,
    drude_permittivity,
    from_spec,
    lorentz_permittivity,
    tdbc_film,
    refractive_index,
    silver_default,
    tabulated_index,
)
from .tabulated import load_tabulated_csv

__all__ = [
    "Constant", "DielectricModel", "Drude", "DrudeParams", "Lorentz", "LorentzParams",
    "Tabulated", "TabulatedOptics", "drude_permittivity", "from_spec", "lorentz_permittivity",
    "tdbc_film", "refractive_index", "silver_default", "tabulated_index", "load_tabulated_csv",
]
