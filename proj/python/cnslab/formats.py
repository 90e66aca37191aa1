"""Readers for the files the harness writes. numpy only, no compiled code."""

import csv
import json
import struct
from pathlib import Path

import numpy as np

CNSF_MAGIC = b"CNSF"
CNSF_VERSION = 1


def load_cnsf(path):
    """Snapshot as an (ny, nx) array, row j holding y = j/n."""
    data = Path(path).read_bytes()
    if len(data) < 16 or data[:4] != CNSF_MAGIC:
        raise ValueError(f"{path}: not a CNSF file")
    version, nx, ny = struct.unpack_from("<III", data, 4)
    if version != CNSF_VERSION:
        raise ValueError(f"{path}: unsupported CNSF version {version}")
    if len(data) != 16 + 8 * nx * ny:
        raise ValueError(f"{path}: expected {nx * ny} values")
    return np.frombuffer(data, dtype="<f8", offset=16).reshape(ny, nx).copy()


def load_diagnostics(path):
    """diagnostics.csv as a dict of column name -> float array."""
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader)
        rows = [[float(x) for x in row] for row in reader]
    values = np.array(rows, dtype=float).reshape(len(rows), len(header))
    return {name: values[:, k] for k, name in enumerate(header)}


def load_manifest(path):
    with open(path) as f:
        return json.load(f)


def load_polylines(path):
    """Vacuum boundary CSV (polyline,x,y) as a list of (m, 2) arrays."""
    lines = {}
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        for row in reader:
            lines.setdefault(int(row["polyline"]), []).append((float(row["x"]), float(row["y"])))
    return [np.array(lines[k]) for k in sorted(lines)]
