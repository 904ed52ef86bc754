"""File formats: edge-list CSV, sample matrices (CSV or binary), JSON outputs."""
from __future__ import annotations

import csv
import json
import struct
from pathlib import Path

import numpy as np

from .graph import WeightedGraph, canonical_edge


def read_edge_csv(path):
    """Rows ``u,v[,weight]`` with an optional header; weight defaults to 1."""
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.reader(fh):
            row = [x.strip() for x in row]
            if not row or not any(row) or row[0].startswith("#"):
                continue
            if row[0].lower() == "u":
                continue
            u, v = int(row[0]), int(row[1])
            w = float(row[2]) if len(row) > 2 and row[2] != "" else 1.0
            out.append((u, v, w))
    return out


def read_weighted_graph(path, d: int | None = None) -> WeightedGraph:
    rows = read_edge_csv(path)
    if d is None:
        d = 1 + max((max(u, v) for u, v, _ in rows), default=0)
    return WeightedGraph.from_edges(d, rows)


def write_weighted_graph(path, W: WeightedGraph) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["u", "v", "weight"])
        iu, ju = np.triu_indices(W.d, 1)
        for u, v in zip(iu, ju):
            x = W.weights[u, v]
            if x != 0:
                w.writerow([int(u), int(v), repr(float(x))])


def write_edges(path, edges) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["u", "v", "weight"])
        for u, v in sorted(canonical_edge(*e) for e in edges):
            w.writerow([u, v, 1])


def read_samples(path, fmt: str = "auto") -> np.ndarray:
    """Load an ``n x d`` sample matrix.

    ``csv``: one row per observation, no header. ``bin``: little-endian
    int32 ``n`` and ``d`` followed by ``n * d`` float64 values, row-major.
    ``auto`` picks ``bin`` for ``.bin``/``.dat`` suffixes.
    """
    path = Path(path)
    if fmt == "auto":
        fmt = "bin" if path.suffix.lower() in (".bin", ".dat") else "csv"
    if fmt == "bin":
        raw = path.read_bytes()
        if len(raw) < 8:
            raise ValueError("binary sample file shorter than its header")
        n, d = struct.unpack("<ii", raw[:8])
        if n < 0 or d < 0 or len(raw) != 8 + 8 * n * d:
            raise ValueError(f"binary sample file size does not match header ({n} x {d})")
        return np.frombuffer(raw, dtype="<f8", offset=8).reshape(n, d).astype(np.float64)
    if fmt != "csv":
        raise ValueError(f"unknown sample format {fmt!r}")
    X = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
    return X


def write_samples(path, X, fmt: str = "auto") -> None:
    path = Path(path)
    X = np.asarray(X, dtype=np.float64)
    if fmt == "auto":
        fmt = "bin" if path.suffix.lower() in (".bin", ".dat") else "csv"
    if fmt == "bin":
        n, d = X.shape
        path.write_bytes(struct.pack("<ii", n, d) + X.astype("<f8").tobytes())
    else:
        np.savetxt(path, X, delimiter=",", fmt="%.17g")


def write_json(path, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")
