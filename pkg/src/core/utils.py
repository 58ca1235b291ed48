# core/utils.py
from __future__ import annotations
from pathlib import Path
from typing import Any, Union
import json
import math
import os
import tempfile

import numpy as np

PathLike = Union[str, "os.PathLike[str]"]

DISPLAY_MAX = 4000  # keep console summaries short


def _to_jsonable(obj: Any) -> Any:
    """numpy scalars/arrays and complex numbers -> plain JSON types."""
    if isinstance(obj, dict):
        return {str(k): _to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _to_jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


def dumps_json(data: Any) -> str:
    return json.dumps(_to_jsonable(data), indent=2, ensure_ascii=False)


def atomic_write_bytes(path: PathLike, payload: bytes) -> Path:
    """
    Write to a temp file in the destination directory, then os.replace() it over
    the target, so readers never observe a half-written file.
    """
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{target.name}.", suffix=".tmp", dir=str(target.parent))
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return target


def atomic_write_text(path: PathLike, text: str) -> Path:
    return atomic_write_bytes(path, text.encode("utf-8"))


def atomic_write_json(path: PathLike, data: Any) -> Path:
    return atomic_write_text(path, dumps_json(data) + "\n")


def truncate_for_display(text: str, max_len: int = DISPLAY_MAX) -> str:
    if not isinstance(text, str):
        text = str(text)
    if len(text) <= max_len:
        return text
    return text[: max_len - 1] + "…"
