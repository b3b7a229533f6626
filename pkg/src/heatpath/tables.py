"""Versioned CSV/JSON tables and run manifests.

CSV files start with ``# key=value`` metadata lines, the first of which is
always ``# schema_version=N``; numbers are written in their shortest
round-trip form (``repr``) so reading a table back is lossless.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import platform
from pathlib import Path

import numpy as np
import scipy

from .errors import ConfigError

SCHEMA_VERSION = 1
SUPPORTED_SCHEMAS = {1}
MANIFEST_VERSION = 1


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _plain(v):
    """JSON-safe copy with numpy scalars and arrays turned into Python objects."""
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, np.ndarray):
        return [_plain(x) for x in v.tolist()]
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.floating):
        return float(v)
    return v


def dumps(obj) -> str:
    return json.dumps(_plain(obj), indent=2, sort_keys=True) + "\n"


def write_table(path, columns, rows, meta=None, fmt_="csv") -> Path:
    """Write ``rows`` under ``columns`` as ``path.csv`` or ``path.json``."""
    path = Path(path)
    meta = dict(meta or {})
    if fmt_ == "json":
        out = path.with_suffix(".json")
        doc = {"schema_version": SCHEMA_VERSION, "meta": meta, "columns": list(columns),
               "rows": [[_plain(v) for v in r] for r in rows]}
        out.write_text(dumps(doc))
        return out
    if fmt_ != "csv":
        raise ConfigError(f"unknown format {fmt_!r}")
    out = path.with_suffix(".csv")
    buf = io.StringIO()
    buf.write(f"# schema_version={SCHEMA_VERSION}\n")
    for k in sorted(meta):
        buf.write(f"# {k}={fmt(meta[k])}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    out.write_text(buf.getvalue())
    return out


def _number(s: str):
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        return {"true": True, "false": False}.get(s, s)


def read_table(path):
    """``(meta, columns, rows)`` from a file written by :func:`write_table`.

    Raises ConfigError for a missing or unsupported ``schema_version``.
    """
    path = Path(path)
    text = path.read_text()
    if path.suffix == ".json":
        doc = json.loads(text)
        version = doc.get("schema_version")
        if version not in SUPPORTED_SCHEMAS:
            raise ConfigError(f"{path}: unsupported schema_version {version!r}")
        return doc.get("meta", {}), doc["columns"], doc["rows"]
    meta = {}
    lines = text.splitlines()
    i = 0
    while i < len(lines) and lines[i].startswith("#"):
        key, _, value = lines[i][1:].strip().partition("=")
        meta[key] = _number(value)
        i += 1
    version = meta.get("schema_version")
    if version not in SUPPORTED_SCHEMAS:
        raise ConfigError(f"{path}: unsupported schema_version {version!r}")
    reader = csv.reader(lines[i:])
    columns = next(reader)
    rows = [[_number(v) for v in r] for r in reader]
    return meta, columns, rows


def sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def versions() -> dict:
    from . import __version__

    return {
        "heatpath": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "python": platform.python_version(),
    }


def write_manifest(out_dir, command, config, outputs, timestamps=None) -> Path:
    """Manifest with the resolved config, library versions and output digests.

    ``timestamps`` are only recorded when given, since wall-clock times would
    break byte-identical reruns.
    """
    out_dir = Path(out_dir)
    doc = {
        "manifest_version": MANIFEST_VERSION,
        "command": command,
        "config": config,
        "versions": versions(),
        "outputs": {os.path.relpath(p, out_dir): sha256(p) for p in sorted(map(str, outputs))},
    }
    if timestamps:
        doc["timestamps"] = timestamps
    path = out_dir / f"manifest_{command}.json"
    path.write_text(dumps(doc))
    return path
