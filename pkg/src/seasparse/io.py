"""Plain-text file formats for matrices, vectors, problems and traces.

Indices are 1-based in every file.
"""
import csv
import json
import math
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch
from .model import GeneratorSpec, Problem, SparseVector

__all__ = [
    "write_matrix", "read_matrix", "write_vector", "read_vector",
    "write_sparse", "read_sparse", "save_problem", "load_problem",
    "write_trace", "read_trace_supports", "to_jsonable",
]


def _fmt(v):
    return repr(float(v))


def write_matrix(path, A):
    A = np.asarray(A, dtype=float)
    with open(path, "w") as fh:
        fh.write(f"{A.shape[0]},{A.shape[1]}\n")
        for row in A:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def read_matrix(path):
    with open(path) as fh:
        m, n = (int(t) for t in fh.readline().split(","))
        A = np.loadtxt(fh, delimiter=",", ndmin=2) if m else np.zeros((0, n))
    if A.shape != (m, n):
        raise DimensionMismatch(f"{path}: header says {m}x{n}, found {A.shape}")
    return A


def write_vector(path, v):
    with open(path, "w") as fh:
        for x in np.asarray(v, dtype=float):
            fh.write(_fmt(x) + "\n")


def read_vector(path):
    return np.loadtxt(path, ndmin=1, dtype=float)


def write_sparse(path, x):
    with open(path, "w") as fh:
        fh.write(f"{x.n},{len(x.support)}\n")
        for i, v in zip(x.support, x.values):
            fh.write(f"{i + 1},{_fmt(v)}\n")


def read_sparse(path):
    with open(path) as fh:
        n, k = (int(t) for t in fh.readline().split(","))
        rows = [line.split(",") for line in fh if line.strip()]
    if len(rows) != k:
        raise DimensionMismatch(f"{path}: header says {k} entries, found {len(rows)}")
    pairs = sorted((int(i) - 1, float(v)) for i, v in rows)
    return SparseVector(n, tuple(i for i, _ in pairs), np.array([v for _, v in pairs]))


def to_jsonable(v):
    """Recursively convert numpy values, tuples and infinities for JSON."""
    if isinstance(v, dict):
        return {str(a): to_jsonable(b) for a, b in v.items()}
    if isinstance(v, (list, tuple)):
        return [to_jsonable(b) for b in v]
    if isinstance(v, np.ndarray):
        return to_jsonable(v.tolist())
    if isinstance(v, np.generic):
        v = v.item()
    if isinstance(v, float) and math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


def _spec_dict(spec):
    if spec is None:
        return None
    d = dict(spec.__dict__)
    d["amplitude_range"] = list(d["amplitude_range"])
    return d


def save_problem(directory, problem):
    """Write a problem bundle: A.csv, y.csv, meta.json (+ x_star.csv, e.csv)."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    write_matrix(d / "A.csv", problem.A)
    write_vector(d / "y.csv", problem.y)
    spec = problem.meta.get("spec")
    meta = {
        "k": problem.k,
        "seed": spec.seed if spec is not None else None,
        "spec": _spec_dict(spec),
        "noise_mode": problem.meta.get("noise_mode", "after_A"),
    }
    if problem.x_star is not None:
        write_sparse(d / "x_star.csv", problem.x_star)
        meta["x_star"] = "x_star.csv"
    if problem.e is not None:
        write_vector(d / "e.csv", problem.e)
        meta["e"] = "e.csv"
    if problem.scaling is not None:
        write_vector(d / "scaling.csv", problem.scaling)
        meta["scaling"] = "scaling.csv"
    with open(d / "meta.json", "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_problem(directory, k=None):
    """Read a bundle written by :func:`save_problem`; `k` overrides meta.json."""
    d = Path(directory)
    meta = {}
    if (d / "meta.json").exists():
        with open(d / "meta.json") as fh:
            meta = json.load(fh)
    A = read_matrix(d / "A.csv")
    y = read_vector(d / "y.csv")
    kk = k if k is not None else meta.get("k")
    if kk is None:
        raise ValueError("sparsity k missing: pass it explicitly or add it to meta.json")
    x_star = read_sparse(d / meta["x_star"]) if meta.get("x_star") else None
    e = read_vector(d / meta["e"]) if meta.get("e") else None
    scaling = read_vector(d / meta["scaling"]) if meta.get("scaling") else None
    extra = {"noise_mode": meta.get("noise_mode", "after_A")}
    if meta.get("spec"):
        s = dict(meta["spec"])
        s["amplitude_range"] = tuple(s["amplitude_range"])
        extra["spec"] = GeneratorSpec(**s)
    return Problem(A, y, int(kk), x_star=x_star, e=e, scaling=scaling, meta=extra)


def write_trace(path, trace):
    """CSV ``t,loss,new_support_flag,support`` (support as ``;``-joined 1-based indices)."""
    seen = set()
    losses = trace.per_iteration_loss
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "loss", "new_support_flag", "support"])
        for t, S in enumerate(trace.support_sequence):
            new = S not in seen
            seen.add(S)
            loss = losses[t] if t < len(losses) else ""
            w.writerow([t, _fmt(loss) if loss != "" else "", int(new),
                        ";".join(str(i + 1) for i in S)])


def read_trace_supports(path):
    """Support sequence (0-based tuples) from a trace CSV."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [tuple(int(i) - 1 for i in r["support"].split(";") if i) for r in rows]
