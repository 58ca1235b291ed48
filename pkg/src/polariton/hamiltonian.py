"""
Multimode cavity-exciton Hamiltonians.

Entangled: one collective exciton couples to every mode, an (N+1)x(N+1) arrowhead
matrix; modes talk to each other only through the exciton.
Decoupled: each mode owns its exciton, N independent 2x2 blocks [[E_m, g], [g, Ex]]
arranged block-diagonally (2N x 2N).

Both forms are reconstructions from the qualitative description of the two
regimes; coupling g = hbar*Omega_R / 2 is the same for every mode.
"""
from __future__ import annotations
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union
import logging

import numpy as np
import pandas as pd
from scipy import linalg

from src.core.types import PreconditionError
from src.core.utils import atomic_write_text

logger = logging.getLogger(__name__)


class Topology(str, Enum):
    ENTANGLED = "entangled"
    DECOUPLED = "decoupled"

    @classmethod
    def parse(cls, value: Any) -> "Topology":
        if isinstance(value, Topology):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise PreconditionError(f"topology must be entangled or decoupled, got {value!r}") from None


@dataclass(frozen=True)
class CoupledModel:
    mode_energies: Tuple[float, ...]     # eV, one per mode
    Ex: float                            # eV
    g: float                             # eV
    topology: Topology = Topology.ENTANGLED
    orders: Optional[Tuple[int, ...]] = None

    def __post_init__(self):
        object.__setattr__(self, "mode_energies", tuple(float(e) for e in self.mode_energies))
        object.__setattr__(self, "topology", Topology.parse(self.topology))
        if not self.mode_energies:
            raise PreconditionError("coupled model needs at least one cavity mode")
        if self.g < 0:
            raise PreconditionError(f"coupling g must be >= 0, got {self.g}")
        if self.orders is None:
            object.__setattr__(self, "orders", tuple(range(1, len(self.mode_energies) + 1)))
        else:
            object.__setattr__(self, "orders", tuple(int(m) for m in self.orders))
            if len(self.orders) != len(self.mode_energies):
                raise PreconditionError("orders and mode_energies differ in length")

    @property
    def n_modes(self) -> int:
        return len(self.mode_energies)

    @property
    def dimension(self) -> int:
        n = self.n_modes
        return n + 1 if self.topology is Topology.ENTANGLED else 2 * n


def build_hamiltonian(model: CoupledModel) -> np.ndarray:
    E = np.asarray(model.mode_energies, dtype=float)
    n = E.size
    if model.topology is Topology.ENTANGLED:
        H = np.zeros((n + 1, n + 1))
        H[np.arange(n), np.arange(n)] = E
        H[n, n] = model.Ex
        H[:n, n] = model.g
        H[n, :n] = model.g
        return H
    blocks = [np.array([[e, model.g], [model.g, model.Ex]]) for e in E]
    return linalg.block_diag(*blocks)


def _component_names(model: CoupledModel) -> List[str]:
    if model.topology is Topology.ENTANGLED:
        return [f"mode_{m}" for m in model.orders] + ["exciton"]
    names: List[str] = []
    for m in model.orders:
        names += [f"mode_{m}", f"exciton_{m}"]
    return names


def entangled_labels(orders: Sequence[int], mode_energies: Sequence[float], Ex: float) -> List[str]:
    """
    Labels for the N+1 sorted eigenvalues. Interlacing puts exactly one eigenvalue
    between consecutive bare modes; the one bracketed by the modes just below and
    just above Ex is the mid polariton.
    """
    pairs = sorted(zip(mode_energies, orders))
    ms = [m for _, m in pairs]
    below = sum(1 for e, _ in pairs if e < Ex)
    n = len(ms)
    if below == 0:
        return [f"LP_{ms[0]}"] + [f"UP_{m}" for m in ms]
    if below == n:
        return [f"LP_{m}" for m in ms] + [f"UP_{ms[-1]}"]
    lower = [f"LP_{m}" for m in ms[:below]]
    upper = [f"UP_{m}" for m in ms[below:]]
    return lower + [f"MP_{ms[below - 1]}-{ms[below]}"] + upper


def decoupled_labels(model: CoupledModel) -> List[str]:
    """
    LP_m / UP_m per block, ordered by the sorted eigenvalues of the model.

    eigenbranches calls this at the first kx only and keeps the labels by sorted
    position, so once UP_m crosses LP_{m+1} further along kx a label no longer
    names the block its branch came from.
    """
    tagged: List[Tuple[float, str]] = []
    for e, m in zip(model.mode_energies, model.orders):
        lo, hi = linalg.eigvalsh(np.array([[e, model.g], [model.g, model.Ex]]))
        tagged += [(lo, f"LP_{m}"), (hi, f"UP_{m}")]
    return [label for _, label in sorted(tagged, key=lambda t: t[0])]


@dataclass
class PolaritonBranches:
    """
    energies[i, b] is branch b at kx[i]. Traced branches use NaN past their
    last kx, recorded in `terminated_at`.
    """
    kx: np.ndarray
    energies: np.ndarray
    labels: List[str]
    terminated_at: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        self.kx = np.asarray(self.kx, dtype=float)
        self.energies = np.asarray(self.energies, dtype=float).reshape(self.kx.size, -1)
        if self.energies.shape[1] != len(self.labels):
            raise PreconditionError("one label per branch required")

    def branch(self, label: str) -> np.ndarray:
        return self.energies[:, self.labels.index(label)]

    def to_frame(self) -> pd.DataFrame:
        df = pd.DataFrame(self.energies, columns=list(self.labels))
        df.insert(0, "kx", self.kx)
        return df

    def write_csv(self, path: Union[str, Path]) -> Path:
        return atomic_write_text(path, self.to_frame().to_csv(index=False))


def eigenbranches(model_at_kx: Callable[[float], CoupledModel], kx_grid) -> PolaritonBranches:
    kx = np.atleast_1d(np.asarray(kx_grid, dtype=float))
    if kx.size == 0:
        raise PreconditionError("kx grid must be nonempty")

    models = [model_at_kx(float(k)) for k in kx]
    first = models[0]
    if first.topology is Topology.ENTANGLED:
        labels = entangled_labels(first.orders, first.mode_energies, first.Ex)
    else:
        # labels follow the ordering at the first kx and stay attached by position
        labels = decoupled_labels(first)

    rows = []
    for m in models:
        if m.dimension != first.dimension:
            raise PreconditionError("model dimension changes along the kx grid")
        rows.append(linalg.eigvalsh(build_hamiltonian(m)))
    return PolaritonBranches(kx=kx, energies=np.vstack(rows), labels=labels)


@dataclass(frozen=True)
class HopfieldWeights:
    energies: np.ndarray        # sorted eigenvalues
    weights: np.ndarray         # weights[i, c]: |<component c|state i>|^2
    components: List[str]

    def of(self, component: str) -> np.ndarray:
        return self.weights[:, self.components.index(component)]


def hopfield_weights(model: CoupledModel) -> HopfieldWeights:
    """Photon/exciton content of each eigenstate; every row sums to 1."""
    vals, vecs = linalg.eigh(build_hamiltonian(model))
    return HopfieldWeights(energies=vals, weights=np.abs(vecs.T) ** 2,
                           components=_component_names(model))
