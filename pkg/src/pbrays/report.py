"""Report files: canonical JSON (sorted keys) plus CSV tables."""
from __future__ import annotations

import csv
import json
import math
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import __version__

TIMESTAMP_KEY = "created"


def _clean(obj):
    """Recursively convert numpy values to plain Python; non-finite floats become None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else None
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def envelope(kind: str, body: dict, status: int) -> dict:
    return {"kind": kind, "status": status, "version": __version__,
            TIMESTAMP_KEY: datetime.now(timezone.utc).isoformat(timespec="seconds"),
            "report": body}


def dumps(doc: dict) -> str:
    return json.dumps(_clean(doc), sort_keys=True, indent=2) + "\n"


def write_json(path, doc: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(doc))
    return path


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    return path


def strip_timestamp(doc: dict) -> dict:
    """Copy of a report without its timestamp, for comparisons."""
    return {k: v for k, v in doc.items() if k != TIMESTAMP_KEY}
