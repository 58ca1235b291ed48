from __future__ import annotations
from pathlib import Path
from typing import Optional, Union
import io
import logging

from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

from src.core.utils import atomic_write_bytes
from src.tmm.dispersion import DispersionMap

logger = logging.getLogger(__name__)


def render_heatmap(m: DispersionMap, path: Union[str, Path], title: Optional[str] = None,
                   cmap: str = "viridis", dpi: int = 150) -> Path:
    """PNG of the map: kx across, energy upward, linear colour scale over [0, 1]."""
    fig = Figure(figsize=(6.0, 5.0))
    FigureCanvasAgg(fig)
    ax = fig.add_subplot(1, 1, 1)

    # a single-sample axis still needs a nonzero extent
    kx0, kx1 = float(m.momenta[0]), float(m.momenta[-1])
    e0, e1 = float(m.energies[0]), float(m.energies[-1])
    if kx1 == kx0:
        kx0, kx1 = kx0 - 0.5, kx1 + 0.5
    if e1 == e0:
        e0, e1 = e0 - 0.005, e1 + 0.005

    im = ax.imshow(m.values, origin="lower", aspect="auto", extent=(kx0, kx1, e0, e1),
                   vmin=0.0, vmax=1.0, cmap=cmap, interpolation="nearest")
    ax.set_xlabel(r"$k_x$ ($\mu$m$^{-1}$)")
    ax.set_ylabel("Energy (eV)")
    if title:
        ax.set_title(title)
    fig.colorbar(im, ax=ax, label=m.quantity_label)
    fig.tight_layout()

    buf = io.BytesIO()
    fig.savefig(buf, format="png", dpi=dpi)
    out = atomic_write_bytes(path, buf.getvalue())
    logger.info("wrote heatmap %s", out)
    return out
