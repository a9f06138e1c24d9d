"""Reproducible CSV output: every file carries the config hash and seed list."""

from __future__ import annotations

import csv
import hashlib
import json
import os

import numpy as np

OUTPUT_ENV = "POSTCON_OUTPUT_DIR"


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in sorted(obj.items())}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def config_hash(config):
    """SHA-256 (first 16 hex digits) of the canonical JSON form of a config mapping."""
    text = json.dumps(_plain(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def output_dir(explicit=None):
    """Explicit directory, else ``$POSTCON_OUTPUT_DIR``, else ``./postcon_out``."""
    path = explicit or os.environ.get(OUTPUT_ENV) or "postcon_out"
    os.makedirs(path, exist_ok=True)
    return path


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    return str(v)


def write_csv(path, columns, rows, config, seeds=()):
    """Write rows under ``#`` header lines holding the command config, its hash and seeds."""
    with open(path, "w", newline="") as fh:
        fh.write(f"# config_hash={config_hash(config)}\n")
        fh.write(f"# seeds={','.join(str(s) for s in seeds)}\n")
        fh.write(f"# config={json.dumps(_plain(config), sort_keys=True)}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_cell(v) for v in row])
    return path


def read_csv(path):
    """Return ``(meta, columns, rows)`` where ``meta`` holds the ``#`` header entries."""
    meta, lines = {}, []
    with open(path) as fh:
        for line in fh:
            if line.startswith("# "):
                key, _, val = line[2:].rstrip("\n").partition("=")
                meta[key] = val
            else:
                lines.append(line)
    reader = csv.reader(lines)
    columns = next(reader)
    return meta, columns, [row for row in reader]
