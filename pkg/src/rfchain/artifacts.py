"""Deterministic artifact writers and run manifests."""

from __future__ import annotations

import csv
import hashlib
import json
import os
import time
from pathlib import Path

from . import __version__


def write_json(obj, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n")


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def fmt(x) -> str:
    """Shortest round-tripping text for a number."""
    if isinstance(x, (int,)) and not isinstance(x, bool):
        return str(x)
    return repr(float(x))


def write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) if not isinstance(v, str) else v for v in row])


def digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def manifest(command: str, params: dict, inputs=(), seed=None) -> dict:
    """Run record. The timestamp honours SOURCE_DATE_EPOCH; outputs never embed it."""
    epoch = int(os.environ.get("SOURCE_DATE_EPOCH", time.time()))
    return {
        "command": command,
        "params": params,
        "inputs": {str(p): digest(p) for p in inputs if p and Path(p).is_file()},
        "seed": seed,
        "version": __version__,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(epoch)),
    }


def manifest_path(out) -> Path:
    out = Path(out)
    if out.suffix:
        return out.with_name(out.name + ".manifest.json")
    return out / "manifest.json"
