"""Deterministic CSV/JSON emission and run manifests."""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .model_core import format_complex

__all__ = ["RunManifest", "write_curve", "write_grid", "write_json", "to_jsonable"]

FMT = "%.17g"


def to_jsonable(obj: Any) -> Any:
    """Recursively convert numpy, complex and non-finite values for JSON."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return format_complex(complex(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, Path):
        return str(obj)
    if obj is None or isinstance(obj, str):
        return obj
    if hasattr(obj, "_asdict"):
        return to_jsonable(obj._asdict())
    if hasattr(obj, "__dataclass_fields__"):
        return to_jsonable({k: getattr(obj, k) for k in obj.__dataclass_fields__})
    return str(obj)


def write_json(path: str | os.PathLike, payload: dict) -> Path:
    path = Path(path)
    text = json.dumps(to_jsonable(payload), indent=2, sort_keys=True)
    path.write_text(text + "\n", encoding="utf-8")
    return path


def write_curve(path: str | os.PathLike, header: str, *columns) -> Path:
    """Columns as CSV with a one-line header and ``%.17g`` values."""
    path = Path(path)
    data = np.column_stack([np.asarray(c, dtype=float) for c in columns])
    np.savetxt(path, data, fmt=FMT, delimiter=",", header=header, comments="")
    return path


def write_grid(path: str | os.PathLike, grid, header: str = "q,p,w") -> Path:
    """Long format, ``q`` outer and ``p`` inner."""
    q, p = np.meshgrid(grid.q_axis, grid.p_axis, indexing="ij")
    return write_curve(path, header, q.ravel(), p.ravel(), np.asarray(grid.values).ravel())


@dataclass
class RunManifest:
    """Provenance record for one CLI run.

    ``assumed`` entries are written as top-level ``assumed.<name>`` keys.
    """

    command: str
    config: str
    outputs: list[str] = field(default_factory=list)
    duration_s: float = 0.0
    diagnostics: dict = field(default_factory=dict)
    assumed: dict = field(default_factory=dict)
    flags: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        out = {
            "command": self.command,
            "config": self.config.splitlines(),
            "outputs": list(self.outputs),
            "duration_s": self.duration_s,
            "diagnostics": self.diagnostics,
            "flags": self.flags,
        }
        for k, v in self.assumed.items():
            out[f"assumed.{k}"] = v
        return out

    def write(self, path: str | os.PathLike, data: dict | None = None) -> Path:
        payload = self.as_dict()
        if data is not None:
            payload["data"] = data
        return write_json(path, payload)
