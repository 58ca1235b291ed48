"""
Fit problems for the glass / Ag / film / Ag / air cavity.

Problem files are JSON, e.g.

    {
      "target": "l628.csv",
      "polarization": "TE",
      "fixed": {"mirror_nm": 35.0},
      "free": {
        "L":     {"initial": 600.0, "lo": 450.0, "hi": 800.0},
        "f":     {"initial": 0.030, "lo": 0.010, "hi": 0.060}
      },
      "exciton_weighting": false,
      "multistart": 0,
      "scan_step": 5.0
    }

`target` is resolved relative to the JSON file. When L is free, the start value of L is
first replaced by the best point of a grid over its bounds (spacing `scan_step` nm,
null to disable), the other free parameters held at their initial values.
"""
from __future__ import annotations
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union
import json
import logging

import numpy as np
import pydantic as pd

from src.core.types import FitError, PreconditionError
from src.core.utils import atomic_write_json
from src.materials.dielectric import Drude, DrudeParams, tdbc_film
from src.tmm.dispersion import DispersionMap, dispersion_map, read_map
from src.tmm.stack import LayerStack, Polarization, silver_cavity

logger = logging.getLogger(__name__)

# weight applied near the exciton when exciton_weighting is on
EXCITON_WEIGHT = 3.0
EXCITON_HALF_WIDTH = 0.3   # eV
# grid spacing (nm) of the cavity-length scan that seeds the simplex
L_SCAN_STEP = 5.0


@dataclass(frozen=True)
class CavityParams:
    L: float = 628.0            # nm
    f: float = 0.037            # eV^2
    gamma: float = 0.034        # eV
    n0: float = 1.5
    Ex: float = 2.1             # eV
    mirror_nm: float = 35.0
    eps_inf: float = 5.0
    Ep: float = 9.0             # eV
    Gamma: float = 0.07         # eV
    n_substrate: float = 1.5
    n_exit: float = 1.0

    @classmethod
    def names(cls) -> Tuple[str, ...]:
        return tuple(f.name for f in fields(cls))

    def with_values(self, values: Dict[str, float]) -> "CavityParams":
        unknown = set(values) - set(self.names())
        if unknown:
            raise PreconditionError(f"unknown cavity parameter(s): {', '.join(sorted(unknown))}")
        return replace(self, **{k: float(v) for k, v in values.items()})

    def as_dict(self) -> Dict[str, float]:
        return asdict(self)


def cavity_stack(p: CavityParams) -> LayerStack:
    silver = Drude(DrudeParams(eps_inf=p.eps_inf, Ep=p.Ep, Gamma=p.Gamma))
    film = tdbc_film(n0=p.n0, f=p.f, gamma=p.gamma, Ex=p.Ex)
    return silver_cavity(p.L, film=film, mirror_nm=p.mirror_nm, silver=silver,
                         n_substrate=p.n_substrate, n_exit=p.n_exit)


def model_map(p: CavityParams, energies, momenta, pol: Union[str, Polarization] = "TE",
              workers: int = 1) -> DispersionMap:
    """1-R map of the cavity described by p."""
    m = dispersion_map(cavity_stack(p), energies, momenta, pol, workers=workers)
    m.metadata["params"] = p.as_dict()
    return m


@dataclass(frozen=True)
class FreeParam:
    name: str
    initial: float
    lo: float
    hi: float

    def __post_init__(self):
        if self.name not in CavityParams.names():
            raise PreconditionError(f"unknown free parameter {self.name!r}")
        if not self.lo < self.hi:
            raise PreconditionError(f"{self.name}: bounds must satisfy lo < hi, got [{self.lo}, {self.hi}]")

    @property
    def in_bounds(self) -> bool:
        return self.lo <= self.initial <= self.hi


@dataclass
class FitProblem:
    target: DispersionMap
    free: Tuple[FreeParam, ...] = field(default_factory=tuple)
    fixed: CavityParams = field(default_factory=CavityParams)
    weights: Optional[np.ndarray] = None
    polarization: Polarization = Polarization.TE
    exciton_weighting: bool = False
    multistart: int = 0
    seed: int = 0
    maxiter: int = 500
    fatol_rel: float = 1e-10
    xatol: float = 1e-8
    scan_step: Optional[float] = L_SCAN_STEP
    workers: int = 1

    def __post_init__(self):
        self.free = tuple(self.free)
        self.polarization = Polarization.parse(self.polarization)
        names = [p.name for p in self.free]
        if len(set(names)) != len(names):
            raise PreconditionError("free parameters must be unique")
        if self.weights is not None:
            self.weights = np.asarray(self.weights, dtype=float)
            if self.weights.shape != self.target.shape:
                raise PreconditionError(
                    f"weights shape {self.weights.shape} differs from target {self.target.shape}"
                )
            if np.any(self.weights < 0) or not np.all(np.isfinite(self.weights)):
                raise PreconditionError("weights must be finite and >= 0")
        if self.scan_step is not None and not self.scan_step > 0:
            raise PreconditionError(f"scan_step must be > 0 nm, got {self.scan_step}")

    @property
    def free_names(self) -> List[str]:
        return [p.name for p in self.free]

    def initial_params(self) -> CavityParams:
        return self.fixed.with_values({p.name: p.initial for p in self.free})

    def effective_weights(self) -> np.ndarray:
        if self.weights is not None:
            return self.weights
        w = np.ones(self.target.shape)
        if self.exciton_weighting:
            Ex = self.initial_params().Ex
            near = np.abs(self.target.energies - Ex) <= EXCITON_HALF_WIDTH
            w[near, :] = EXCITON_WEIGHT
        return w


@dataclass
class FitResult:
    values: Dict[str, float]
    params: Dict[str, float]
    objective: float
    initial_objective: float
    iterations: int
    evaluations: int
    converged: bool
    message: str = ""
    starts: int = 1
    scanned_L: Optional[float] = None      # L chosen by the length scan, if it ran

    def to_json(self) -> Dict[str, Any]:
        return asdict(self)


# ---------------- problem files ----------------

class _BoundSpec(pd.BaseModel):
    model_config = pd.ConfigDict(extra="forbid")

    initial: float
    lo: float
    hi: float


class _ProblemFile(pd.BaseModel):
    model_config = pd.ConfigDict(extra="forbid")

    target: str
    polarization: str = "TE"
    fixed: Dict[str, float] = pd.Field(default_factory=dict)
    free: Dict[str, _BoundSpec] = pd.Field(default_factory=dict)
    weights: Optional[str] = pd.Field(default=None, description="CSV of per-point weights, same grid as target")
    exciton_weighting: bool = False
    multistart: int = pd.Field(default=0, ge=0)
    seed: int = 0
    maxiter: int = pd.Field(default=500, gt=0)
    scan_step: Optional[float] = pd.Field(default=L_SCAN_STEP, gt=0)


def load_problem(path: Union[str, Path], workers: int = 1) -> FitProblem:
    p = Path(path)
    try:
        raw = json.loads(p.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise PreconditionError(f"{p}: problem file not found") from None
    except json.JSONDecodeError as e:
        raise PreconditionError(f"{p}:{e.lineno}: invalid JSON: {e.msg}") from e
    try:
        spec = _ProblemFile.model_validate(raw)
    except pd.ValidationError as e:
        first = e.errors()[0]
        loc = ".".join(str(x) for x in first["loc"])
        raise PreconditionError(f"{p}: {loc}: {first['msg']}") from e

    target = read_map(p.parent / spec.target)
    weights = None
    if spec.weights:
        weights = read_map(p.parent / spec.weights).values
    free = tuple(FreeParam(name, b.initial, b.lo, b.hi) for name, b in spec.free.items())
    problem = FitProblem(
        target=target,
        free=free,
        fixed=CavityParams().with_values(spec.fixed),
        weights=weights,
        polarization=spec.polarization,
        exciton_weighting=spec.exciton_weighting,
        multistart=spec.multistart,
        seed=spec.seed,
        maxiter=spec.maxiter,
        scan_step=spec.scan_step,
        workers=workers,
    )
    logger.info("loaded fit problem %s: free=%s, target %dx%d", p.name, problem.free_names, *target.shape)
    return problem


def save_result(result: FitResult, path: Union[str, Path]) -> Path:
    return atomic_write_json(path, result.to_json())


def check_bounds(problem: FitProblem) -> None:
    bad = [p for p in problem.free if not p.in_bounds]
    if bad:
        desc = ", ".join(f"{p.name}={p.initial:g} not in [{p.lo:g}, {p.hi:g}]" for p in bad)
        raise FitError(f"initial point outside bounds: {desc}")
