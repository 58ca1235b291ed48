"""
Complex permittivity models for stack constituents.

All evaluation functions accept a scalar energy (eV) or a numpy array of
energies and return a complex scalar / array of the same shape. The sign
convention is exp(-i w t): passive media have Im eps >= 0 and Im n >= 0.

Default film: a TDBC J-aggregate layer modelled as one Lorentz oscillator with
n0 = 1.5, f = 0.037 eV^2 (3.7e4 meV^2), gamma = 0.034 eV (FWHM), Ex = 2.1 eV.
With these values L_c is about 700 nm and sqrt(f)/n0 about 128 meV.
"""
from __future__ import annotations
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Mapping, Tuple, Union

import numpy as np

from src.core.types import MaterialRangeError, PreconditionError

Energy = Union[float, np.ndarray]


def _energies(E: Energy) -> np.ndarray:
    arr = np.asarray(E, dtype=float)
    if not np.all(arr > 0):
        raise PreconditionError("photon energy must be strictly positive")
    return arr


def _scalar_or_array(value: np.ndarray, like: Energy):
    if np.ndim(like) == 0:
        return complex(value)
    return value


# ---------------- parameter sets ----------------

@dataclass(frozen=True)
class LorentzParams:
    n0: float = 1.5
    f: float = 0.037      # eV^2
    Ex: float = 2.1       # eV
    gamma: float = 0.034  # eV, FWHM

    def __post_init__(self):
        if self.n0 < 1:
            raise PreconditionError(f"n0 must be >= 1, got {self.n0}")
        if self.f < 0:
            raise PreconditionError(f"oscillator strength f must be >= 0, got {self.f}")
        if self.Ex <= 0:
            raise PreconditionError(f"Ex must be > 0, got {self.Ex}")
        if self.gamma <= 0:
            raise PreconditionError(f"gamma must be > 0, got {self.gamma}")


@dataclass(frozen=True)
class DrudeParams:
    eps_inf: float = 5.0
    Ep: float = 9.0      # plasma energy, eV
    Gamma: float = 0.07  # damping, eV

    def __post_init__(self):
        if self.eps_inf < 1:
            raise PreconditionError(f"eps_inf must be >= 1, got {self.eps_inf}")
        if self.Ep <= 0:
            raise PreconditionError(f"Ep must be > 0, got {self.Ep}")
        if self.Gamma < 0:
            raise PreconditionError(f"Gamma must be >= 0, got {self.Gamma}")


@dataclass(frozen=True)
class TabulatedOptics:
    """(energy eV, n, k) rows, energies strictly increasing, k >= 0."""
    rows: Tuple[Tuple[float, float, float], ...]

    def __post_init__(self):
        if len(self.rows) < 2:
            raise PreconditionError("tabulated optics need at least two rows")
        e = np.array([r[0] for r in self.rows], dtype=float)
        k = np.array([r[2] for r in self.rows], dtype=float)
        bad = np.nonzero(np.diff(e) <= 0)[0]
        if bad.size:
            raise PreconditionError(f"energies not strictly increasing at row {int(bad[0]) + 1}")
        neg = np.nonzero(k < 0)[0]
        if neg.size:
            raise PreconditionError(f"negative k at row {int(neg[0])}")

    @property
    def energies(self) -> np.ndarray:
        return np.array([r[0] for r in self.rows], dtype=float)

    @property
    def n(self) -> np.ndarray:
        return np.array([r[1] for r in self.rows], dtype=float)

    @property
    def k(self) -> np.ndarray:
        return np.array([r[2] for r in self.rows], dtype=float)

    @property
    def energy_range(self) -> Tuple[float, float]:
        return self.rows[0][0], self.rows[-1][0]


# ---------------- operations ----------------

def lorentz_permittivity(E: Energy, p: LorentzParams):
    """eps(E) = n0^2 + f / (Ex^2 - E^2 - i gamma E)."""
    e = _energies(E)
    eps = p.n0 ** 2 + p.f / (p.Ex ** 2 - e ** 2 - 1j * p.gamma * e)
    return _scalar_or_array(eps, E)


def drude_permittivity(E: Energy, p: DrudeParams):
    """eps(E) = eps_inf - Ep^2 / (E^2 + i Gamma E)."""
    e = _energies(E)
    eps = p.eps_inf - p.Ep ** 2 / (e ** 2 + 1j * p.Gamma * e)
    return _scalar_or_array(eps, E)


def refractive_index(eps):
    """Principal square root, folded onto the Im n >= 0 branch."""
    arr = np.sqrt(np.asarray(eps, dtype=complex))
    arr = np.where(arr.imag < 0, -arr, arr)
    if np.ndim(eps) == 0:
        return complex(arr)
    return arr


def tabulated_index(E: Energy, t: TabulatedOptics):
    """Piecewise-linear interpolation of n and k separately."""
    e = _energies(E)
    lo, hi = t.energy_range
    if np.any(e < lo) or np.any(e > hi):
        outside = e[(e < lo) | (e > hi)]
        raise MaterialRangeError(float(np.ravel(outside)[0]), lo, hi)
    grid = t.energies
    n = np.interp(e, grid, t.n) + 1j * np.interp(e, grid, t.k)
    return _scalar_or_array(n, E)


# ---------------- model variants ----------------

class DielectricModel(ABC):
    """A material's optical response; exactly one concrete variant per instance."""
    kind: str = ""

    @abstractmethod
    def permittivity(self, E: Energy):
        ...

    def index(self, E: Energy):
        return refractive_index(self.permittivity(E))

    @abstractmethod
    def describe(self) -> dict:
        ...

    def is_lossless(self) -> bool:
        return False


@dataclass(frozen=True)
class Constant(DielectricModel):
    n: float = 1.0
    kind = "constant"

    def __post_init__(self):
        if self.n < 1:
            raise PreconditionError(f"constant index must be >= 1, got {self.n}")

    def permittivity(self, E: Energy):
        e = _energies(E)
        return _scalar_or_array(np.full(e.shape, self.n ** 2, dtype=complex), E)

    def index(self, E: Energy):
        e = _energies(E)
        return _scalar_or_array(np.full(e.shape, self.n, dtype=complex), E)

    def describe(self) -> dict:
        return {"kind": self.kind, "n": self.n}

    def is_lossless(self) -> bool:
        return True


@dataclass(frozen=True)
class Lorentz(DielectricModel):
    params: LorentzParams = LorentzParams()
    kind = "lorentz"

    def permittivity(self, E: Energy):
        return lorentz_permittivity(E, self.params)

    def describe(self) -> dict:
        p = self.params
        return {"kind": self.kind, "n0": p.n0, "f": p.f, "Ex": p.Ex, "gamma": p.gamma}


@dataclass(frozen=True)
class Drude(DielectricModel):
    params: DrudeParams = DrudeParams()
    kind = "drude"

    def permittivity(self, E: Energy):
        return drude_permittivity(E, self.params)

    def describe(self) -> dict:
        p = self.params
        return {"kind": self.kind, "eps_inf": p.eps_inf, "Ep": p.Ep, "Gamma": p.Gamma}


@dataclass(frozen=True)
class Tabulated(DielectricModel):
    table: TabulatedOptics
    source: str = ""
    kind = "tabulated"

    def index(self, E: Energy):
        return tabulated_index(E, self.table)

    def permittivity(self, E: Energy):
        n = np.asarray(self.index(E))
        return _scalar_or_array(n ** 2, E)

    def describe(self) -> dict:
        lo, hi = self.table.energy_range
        return {"kind": self.kind, "source": self.source, "rows": len(self.table.rows),
                "range_ev": [lo, hi]}

    def is_lossless(self) -> bool:
        return bool(np.all(self.table.k == 0))


# ---------------- defaults / factory ----------------

def silver_default() -> Drude:
    return Drude(DrudeParams(eps_inf=5.0, Ep=9.0, Gamma=0.07))


def tdbc_film(n0: float = 1.5, f: float = 0.037, gamma: float = 0.034, Ex: float = 2.1) -> Lorentz:
    return Lorentz(LorentzParams(n0=n0, f=f, Ex=Ex, gamma=gamma))


def from_spec(spec: Mapping[str, Any]) -> DielectricModel:
    """
    Build a model from a plain mapping, e.g.
      {"kind": "lorentz", "n0": 1.5, "f": 0.037, "Ex": 2.1, "gamma": 0.034}
      {"kind": "tabulated", "csv": "ag.csv"}
    """
    kind = str(spec.get("kind", "")).lower()
    if kind == "constant":
        return Constant(float(spec.get("n", 1.0)))
    if kind == "lorentz":
        d = LorentzParams()
        return Lorentz(LorentzParams(
            n0=float(spec.get("n0", d.n0)),
            f=float(spec.get("f", d.f)),
            Ex=float(spec.get("Ex", d.Ex)),
            gamma=float(spec.get("gamma", d.gamma)),
        ))
    if kind == "drude":
        d = DrudeParams()
        return Drude(DrudeParams(
            eps_inf=float(spec.get("eps_inf", d.eps_inf)),
            Ep=float(spec.get("Ep", d.Ep)),
            Gamma=float(spec.get("Gamma", d.Gamma)),
        ))
    if kind == "tabulated":
        from src.materials.tabulated import load_tabulated_csv
        path = spec.get("csv")
        if not path:
            raise PreconditionError("tabulated material needs a 'csv' path")
        return Tabulated(load_tabulated_csv(path), source=str(path))
    raise PreconditionError(f"unknown material kind: {spec.get('kind')!r}")
