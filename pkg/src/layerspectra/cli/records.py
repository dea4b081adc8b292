"""Run records: JSON-safe blobs, digests and atomic file writes."""
from __future__ import annotations

import contextlib
import hashlib
import json
import math
import os
import tempfile

import numpy as np

from .config import canonical_json

RECORD_SCHEMA = 1


def json_safe(obj):
    """Plain-JSON copy of ``obj``: numpy scalars unwrapped, NaN -> None, inf -> "inf"."""
    if isinstance(obj, dict):
        return {str(k): json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [json_safe(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [json_safe(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    return obj


def digest(record):
    """Hash of the numeric content of a record; wall-clock fields are excluded."""
    core = {k: record.get(k) for k in ("schema_version", "command", "input_hash", "config", "results", "verdict")}
    return hashlib.sha256(canonical_json(core).encode()).hexdigest()


@contextlib.contextmanager
def atomic_path(path):
    """Yield a temporary sibling of ``path``; it replaces ``path`` only on success."""
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix="." + os.path.basename(path) + ".", dir=d)
    os.close(fd)
    try:
        yield tmp
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def write_text(path, text):
    with atomic_path(path) as tmp:
        with open(tmp, "w", newline="") as fh:
            fh.write(text)


def write_json(path, obj):
    write_text(path, json.dumps(json_safe(obj), indent=2, sort_keys=True) + "\n")


def read_record(run_dir):
    """The run.json in ``run_dir`` if present and intact, else None."""
    path = os.path.join(run_dir, "run.json")
    try:
        with open(path) as fh:
            rec = json.load(fh)
    except (OSError, json.JSONDecodeError):
        return None
    if rec.get("digest") != digest(rec):
        return None
    return rec
