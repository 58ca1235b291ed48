from __future__ import annotations
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Dict, Optional, Tuple
import math

from src.core.types import PreconditionError
from src.materials.dielectric import Constant, DielectricModel, tdbc_film, silver_default


class Polarization(str, Enum):
    TE = "TE"
    TM = "TM"

    @classmethod
    def parse(cls, value: Any) -> "Polarization":
        if isinstance(value, Polarization):
            return value
        try:
            return cls(str(value).strip().upper())
        except ValueError:
            raise PreconditionError(f"polarization must be TE or TM, got {value!r}") from None


@dataclass(frozen=True)
class Layer:
    """
    A homogeneous slab. Zero thickness is accepted as a degenerate layer
    (it must leave the stack response unchanged); run configs require > 0.
    """
    thickness: float  # nm
    material: DielectricModel
    name: str = ""

    def __post_init__(self):
        if not math.isfinite(self.thickness) or self.thickness < 0:
            raise PreconditionError(f"layer thickness must be finite and >= 0 nm, got {self.thickness}")

    def describe(self) -> Dict[str, Any]:
        return {"name": self.name, "thickness_nm": self.thickness, "material": self.material.describe()}


@dataclass(frozen=True)
class LayerStack:
    """Semi-infinite incidence medium, ordered layers, semi-infinite exit medium."""
    incidence: DielectricModel
    layers: Tuple[Layer, ...] = field(default_factory=tuple)
    exit: DielectricModel = field(default_factory=lambda: Constant(1.0))

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))

    def reversed(self) -> "LayerStack":
        return LayerStack(incidence=self.exit, layers=tuple(reversed(self.layers)), exit=self.incidence)

    def layer_index(self, name: str) -> int:
        for i, layer in enumerate(self.layers):
            if layer.name == name:
                return i
        raise PreconditionError(f"no layer named {name!r} in stack")

    def with_thickness(self, index: int, thickness: float) -> "LayerStack":
        layers = list(self.layers)
        layers[index] = replace(layers[index], thickness=thickness)
        return replace(self, layers=tuple(layers))

    def is_lossless(self) -> bool:
        media = [self.incidence, self.exit] + [l.material for l in self.layers]
        return all(m.is_lossless() for m in media)

    def describe(self) -> Dict[str, Any]:
        return {
            "incidence": self.incidence.describe(),
            "layers": [l.describe() for l in self.layers],
            "exit": self.exit.describe(),
        }


def reversed_stack(stack: LayerStack) -> LayerStack:
    return stack.reversed()


@dataclass(frozen=True)
class PlaneWaveContext:
    E: float                      # eV
    kx: float = 0.0               # um^-1; only kx^2 enters
    polarization: Polarization = Polarization.TE

    def __post_init__(self):
        if not (self.E > 0):
            raise PreconditionError(f"photon energy must be > 0 eV, got {self.E}")
        if not math.isfinite(self.kx):
            raise PreconditionError("kx must be finite")
        object.__setattr__(self, "polarization", Polarization.parse(self.polarization))


def silver_cavity(L_nm: float,
                  film: Optional[DielectricModel] = None,
                  mirror_nm: float = 35.0,
                  silver: Optional[DielectricModel] = None,
                  n_substrate: float = 1.5,
                  n_exit: float = 1.0) -> LayerStack:
    """glass / Ag / film (L) / Ag / air, light entering from the glass side."""
    film = film if film is not None else tdbc_film()
    silver = silver if silver is not None else silver_default()
    return LayerStack(
        incidence=Constant(n_substrate),
        layers=(
            Layer(mirror_nm, silver, name="bottom_mirror"),
            Layer(L_nm, film, name="spacer"),
            Layer(mirror_nm, silver, name="top_mirror"),
        ),
        exit=Constant(n_exit),
    )
