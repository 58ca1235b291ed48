from __future__ import annotations
import logging
from pathlib import Path
from typing import Union

import numpy as np
import pandas as pd

from src.core.types import PreconditionError
from src.materials.dielectric import TabulatedOptics

logger = logging.getLogger(__name__)

REQUIRED_COLUMNS = ("energy_ev", "n", "k")


def load_tabulated_csv(path: Union[str, Path]) -> TabulatedOptics:
    """Read `energy_ev,n,k` rows (ascending energy) into TabulatedOptics."""
    p = Path(path)
    try:
        df = pd.read_csv(p, comment="#", skipinitialspace=True)
    except FileNotFoundError:
        raise
    except Exception as e:
        raise PreconditionError(f"{p}: unreadable optical-constants CSV: {e}") from e

    df.columns = [str(c).strip().lower() for c in df.columns]
    missing = [c for c in REQUIRED_COLUMNS if c not in df.columns]
    if missing:
        raise PreconditionError(f"{p}: missing column(s) {', '.join(missing)}; "
                                f"expected header {','.join(REQUIRED_COLUMNS)}")
    data = df[list(REQUIRED_COLUMNS)].apply(pd.to_numeric, errors="coerce")
    bad = data.isna().any(axis=1) | ~np.isfinite(data.to_numpy()).all(axis=1)
    if bad.any():
        # +2: header line and 1-based numbering
        raise PreconditionError(f"{p}: non-numeric value on line {int(np.argmax(bad.to_numpy())) + 2}")
    rows = tuple((float(e), float(n), float(k)) for e, n, k in data.itertuples(index=False))
    try:
        table = TabulatedOptics(rows)
    except PreconditionError as e:
        raise PreconditionError(f"{p}: {e}") from e
    logger.debug("loaded %d optical-constant rows from %s", len(rows), p)
    return table
