"""
Run configuration: one TOML file per CLI run, validated with pydantic.

    name = "l628"
    polarization = "TE"

    [cavity]                  # glass / Ag / film / Ag / air shortcut
    L = 628.0

    [grid]
    e_min = 1.6
    e_max = 2.6
    n_e = 401
    kx_max = 12.0
    n_kx = 121

    [sweep]
    L_min = 400.0
    L_max = 1600.0
    step = 10.0

An explicit [stack] with [[stack.layers]] replaces [cavity]. Validation errors are
reported as `<file>:<line>: <key>: <message>`.
"""
from __future__ import annotations
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Sequence, Tuple, Union
import logging
import re

import numpy as np
import pydantic as pd

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from src.core.types import ConfigError, PreconditionError
from src.fitting.problem import CavityParams, cavity_stack
from src.materials.dielectric import DielectricModel, Lorentz, LorentzParams, from_spec
from src.tmm.stack import Layer, LayerStack

logger = logging.getLogger(__name__)


class _Strict(pd.BaseModel):
    model_config = pd.ConfigDict(extra="forbid")


class MaterialSpec(_Strict):
    kind: Literal["constant", "lorentz", "drude", "tabulated"]
    n: Optional[float] = pd.Field(default=None, ge=1)
    n0: Optional[float] = pd.Field(default=None, ge=1)
    f: Optional[float] = pd.Field(default=None, ge=0)
    Ex: Optional[float] = pd.Field(default=None, gt=0)
    gamma: Optional[float] = pd.Field(default=None, gt=0)
    eps_inf: Optional[float] = pd.Field(default=None, ge=1)
    Ep: Optional[float] = pd.Field(default=None, gt=0)
    Gamma: Optional[float] = pd.Field(default=None, ge=0)
    csv: Optional[str] = None

    @pd.field_validator("csv")
    @classmethod
    def _csv_exists(cls, v: Optional[str], info: pd.ValidationInfo) -> Optional[str]:
        if v is None:
            return v
        base = Path((info.context or {}).get("base_dir", "."))
        p = Path(v) if Path(v).is_absolute() else base / v
        if not p.is_file():
            raise ValueError(f"optical-constants file not found: {p}")
        return str(p)

    @pd.model_validator(mode="after")
    def _tabulated_needs_csv(self) -> "MaterialSpec":
        if self.kind == "tabulated" and not self.csv:
            raise ValueError("tabulated material needs a 'csv' path")
        return self

    def build(self) -> DielectricModel:
        return from_spec(self.model_dump(exclude_none=True))


class LayerSpec(_Strict):
    name: str = ""
    thickness_nm: float = pd.Field(gt=0)
    material: MaterialSpec


class StackSpec(_Strict):
    incidence: MaterialSpec = MaterialSpec(kind="constant", n=1.5)
    layers: List[LayerSpec] = pd.Field(default_factory=list)
    exit: MaterialSpec = MaterialSpec(kind="constant", n=1.0)

    def build(self) -> LayerStack:
        return LayerStack(
            incidence=self.incidence.build(),
            layers=tuple(Layer(l.thickness_nm, l.material.build(), name=l.name) for l in self.layers),
            exit=self.exit.build(),
        )


class CavitySpec(_Strict):
    L: float = pd.Field(default=628.0, gt=0)
    f: float = pd.Field(default=0.037, ge=0)
    gamma: float = pd.Field(default=0.034, gt=0)
    n0: float = pd.Field(default=1.5, ge=1)
    Ex: float = pd.Field(default=2.1, gt=0)
    mirror_nm: float = pd.Field(default=35.0, gt=0)
    eps_inf: float = pd.Field(default=5.0, ge=1)
    Ep: float = pd.Field(default=9.0, gt=0)
    Gamma: float = pd.Field(default=0.07, ge=0)
    n_substrate: float = pd.Field(default=1.5, ge=1)
    n_exit: float = pd.Field(default=1.0, ge=1)

    def params(self) -> CavityParams:
        return CavityParams(**self.model_dump())


class GridSpec(_Strict):
    e_min: float = pd.Field(default=1.6, gt=0)
    e_max: float = pd.Field(default=2.6, gt=0)
    n_e: int = pd.Field(default=401, ge=1)
    kx_min: float = pd.Field(default=0.0, ge=0)
    kx_max: float = pd.Field(default=12.0, ge=0)
    n_kx: int = pd.Field(default=121, ge=1)

    @pd.model_validator(mode="after")
    def _ordered(self) -> "GridSpec":
        if self.e_max < self.e_min or (self.n_e > 1 and self.e_max == self.e_min):
            raise ValueError("e_max must exceed e_min")
        if self.kx_max < self.kx_min or (self.n_kx > 1 and self.kx_max == self.kx_min):
            raise ValueError("kx_max must exceed kx_min")
        return self

    def energies(self) -> np.ndarray:
        return np.linspace(self.e_min, self.e_max, self.n_e)

    def momenta(self) -> np.ndarray:
        return np.linspace(self.kx_min, self.kx_max, self.n_kx)


class OutputSpec(_Strict):
    dir: Optional[str] = None
    name: str = "map"
    heatmap: bool = True


class SweepSpec(_Strict):
    L_min: float = pd.Field(gt=0)
    L_max: float = pd.Field(gt=0)
    step: float = pd.Field(gt=0)
    layer: str = "spacer"
    window: float = pd.Field(default=0.15, gt=0)
    Ex: Optional[float] = pd.Field(default=None, gt=0)
    max_gap_fraction: float = pd.Field(default=0.75, gt=0)
    # symmetric: each L is replaced by the nearest length that centres Ex between two orders
    detuning: Literal["symmetric", "fixed"] = "symmetric"
    broad_fwhm_factor: Optional[float] = pd.Field(default=1.55, gt=0)

    def lengths(self) -> np.ndarray:
        """L_min, L_min + step, ... up to L_max inclusive; empty when L_max <= L_min."""
        if self.L_max <= self.L_min:
            return np.empty(0)
        n = int(np.floor((self.L_max - self.L_min) / self.step + 1e-9)) + 1
        return self.L_min + self.step * np.arange(n)


class RunConfig(_Strict):
    name: str = "run"
    polarization: Literal["TE", "TM"] = "TE"
    workers: Optional[int] = pd.Field(default=None, ge=1)
    min_prominence: Optional[float] = pd.Field(default=None, gt=0, lt=1)
    cavity: Optional[CavitySpec] = None
    stack: Optional[StackSpec] = None
    grid: GridSpec = GridSpec()
    output: OutputSpec = OutputSpec()
    sweep: Optional[SweepSpec] = None

    @pd.field_validator("polarization", mode="before")
    @classmethod
    def _upper(cls, v: Any) -> Any:
        return v.upper() if isinstance(v, str) else v

    @pd.model_validator(mode="after")
    def _one_structure(self) -> "RunConfig":
        if self.cavity is not None and self.stack is not None:
            raise ValueError("give either [cavity] or [stack], not both")
        return self

    def build_stack(self) -> LayerStack:
        if self.stack is not None:
            return self.stack.build()
        return cavity_stack((self.cavity or CavitySpec()).params())

    def film(self) -> LorentzParams:
        """Lorentz parameters of the swept spacer, for regime classification."""
        if self.stack is None:
            c = self.cavity or CavitySpec()
            return LorentzParams(n0=c.n0, f=c.f, Ex=c.Ex, gamma=c.gamma)
        layer_name = self.sweep.layer if self.sweep else "spacer"
        for l in self.stack.layers:
            if l.name == layer_name:
                model = l.material.build()
                if isinstance(model, Lorentz):
                    return model.params
        raise PreconditionError(f"layer {layer_name!r} is not a Lorentz film; set sweep.Ex explicitly")


# ---------------- TOML parsing ----------------

_ARRAY_TABLE = re.compile(r"^\s*\[\[\s*([^\]]+?)\s*\]\]")
_TABLE = re.compile(r"^\s*\[\s*([^\]]+?)\s*\]")
_KEY = re.compile(r"^\s*([A-Za-z0-9_\-\.\"' ]+?)\s*=")


def _split_key(key: str) -> Tuple[str, ...]:
    return tuple(part.strip().strip("\"'") for part in key.split("."))


def line_index(text: str) -> Dict[Tuple[Any, ...], int]:
    """Map key paths (as pydantic reports them) to 1-based line numbers."""
    index: Dict[Tuple[Any, ...], int] = {}
    counts: Dict[Tuple[str, ...], int] = {}
    current: Tuple[Any, ...] = ()
    for lineno, line in enumerate(text.splitlines(), start=1):
        m = _ARRAY_TABLE.match(line)
        if m:
            path = _split_key(m.group(1))
            i = counts.get(path, 0)
            counts[path] = i + 1
            index.setdefault(path, lineno)
            current = path + (i,)
            index[current] = lineno
            continue
        m = _TABLE.match(line)
        if m:
            current = _split_key(m.group(1))
            index[current] = lineno
            continue
        m = _KEY.match(line)
        if m:
            index[current + _split_key(m.group(1))] = lineno
    return index


def _line_for(loc: Sequence[Any], index: Dict[Tuple[Any, ...], int]) -> Optional[int]:
    loc = tuple(loc)
    for n in range(len(loc), 0, -1):
        if loc[:n] in index:
            return index[loc[:n]]
    return None


def _parse_value(raw: str) -> Any:
    try:
        return tomllib.loads(f"v = {raw}")["v"]
    except tomllib.TOMLDecodeError:
        return raw


def apply_overrides(data: Dict[str, Any], overrides: Sequence[str]) -> Dict[str, Any]:
    """`section.key=value` pairs; values are parsed as TOML literals, else kept as strings."""
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, raw = item.split("=", 1)
        path = _split_key(key.strip())
        node = data
        for part in path[:-1]:
            child = node.setdefault(part, {})
            if not isinstance(child, dict):
                raise ConfigError(f"override {key!r}: {part!r} is not a table")
            node = child
        node[path[-1]] = _parse_value(raw.strip())
    return data


def load_config(path: Union[str, Path], overrides: Sequence[str] = ()) -> RunConfig:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ConfigError("config file not found", path=str(p)) from None
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        line = getattr(e, "lineno", None)
        if line is None:
            m = re.search(r"line (\d+)", str(e))
            line = int(m.group(1)) if m else None
        raise ConfigError(f"invalid TOML: {e}", path=str(p), line=line) from e

    data = apply_overrides(data, overrides)
    try:
        cfg = RunConfig.model_validate(data, context={"base_dir": str(p.parent)})
    except pd.ValidationError as e:
        index = line_index(text)
        first = e.errors()[0]
        key = ".".join(str(x) for x in first["loc"]) or "<root>"
        raise ConfigError(f"{key}: {first['msg']}", path=str(p), line=_line_for(first["loc"], index)) from e
    logger.debug("loaded config %s (%s)", p, cfg.name)
    return cfg
