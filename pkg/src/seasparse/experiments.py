"""Phase-transition and deconvolution sweeps.

A sweep is described by an :class:`ExperimentConfig`. Every (cell, run) pair
draws one problem from a seed derived from ``base_seed`` and the cell
coordinates, and every configured algorithm is run on that same problem, so
comparisons between algorithms are paired. Results do not depend on the
degree of parallelism.
"""
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from typing import Optional

import numpy as np

from .errors import ConfigError
from .linalg import gaussian_convolution_matrix
from .metrics import (dist_supp, dist_supp_kprime, dist_supp_largest,
                      exact_support_match, rel_l2_loss, wasserstein1_spikes)
from .model import GeneratorSpec, Problem, build_problem, derive_seed
from .solvers import SOLVER_IDS, SolverConfig, default_step, run_solver

__all__ = [
    "ExperimentConfig", "ResultGrid", "CSV_COLUMNS", "run_phase_transition",
    "run_deconvolution", "run_experiment", "emit_csv", "resolve_threads",
    "preset", "DESK_INVOCATION_CAP",
]

CSV_COLUMNS = (
    "kind", "m", "n", "k", "k_prime", "noise_fraction", "noise_mode", "algorithm",
    "run", "seed", "success", "dist_supp", "rel_l2_loss", "wasserstein",
    "supports_explored", "supports_after_init", "t_best", "loss_best", "runtime_ms",
)
DESK_INVOCATION_CAP = 100_000
KINDS = ("phase_transition", "deconvolution", "single_solve", "verify_theory")


@dataclass
class ExperimentConfig:
    kind: str = "phase_transition"
    n: int = 60
    m_grid: Optional[list] = None
    k_grid: Optional[list] = None
    runs_per_cell: int = 20
    noise_fraction: float = 0.01
    noise_mode: str = "after_A"
    amplitude_range: tuple = (1.0, 2.0)
    sigma: float = 3.0
    algorithms: list = field(default_factory=lambda: ["sea", "sea-omp", "sea-els",
                                                      "omp", "ompr", "els", "iht", "htp"])
    max_iter: object = "256k"
    k_prime_ratio: Optional[float] = None
    eta_multipliers: Optional[list] = None
    base_seed: int = 0
    parallelism: Optional[int] = None
    scale: str = "desk"
    timing: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown kind {self.kind!r}")
        if self.scale not in ("desk", "paper"):
            raise ConfigError(f"unknown scale {self.scale!r}")
        if self.runs_per_cell < 1:
            raise ConfigError("runs_per_cell must be >= 1")
        if self.noise_mode not in ("after_A", "before_A"):
            raise ConfigError(f"unknown noise_mode {self.noise_mode!r}")
        if self.noise_fraction < 0:
            raise ConfigError("noise_fraction must be >= 0")
        self.amplitude_range = tuple(float(v) for v in self.amplitude_range)
        if len(self.amplitude_range) != 2 or not 0 < self.amplitude_range[0] <= self.amplitude_range[1]:
            raise ConfigError("amplitude_range must be (lo, hi) with 0 < lo <= hi")
        if not self.algorithms:
            raise ConfigError("algorithms must not be empty")
        for a in self.algorithms:
            if a not in SOLVER_IDS:
                raise ConfigError(f"unknown algorithm {a!r}")
        if self.max_iter != "256k" and not (isinstance(self.max_iter, int) and self.max_iter >= 1):
            raise ConfigError("max_iter must be '256k' or a positive integer")
        for name in ("m_grid", "k_grid"):
            g = getattr(self, name)
            if g is not None and (not g or any(int(v) < 1 for v in g)):
                raise ConfigError(f"{name} must be a non-empty list of positive integers")
        if self.k_prime_ratio is not None and self.k_prime_ratio <= 0:
            raise ConfigError("k_prime_ratio must be positive")
        if self.eta_multipliers is not None and (
                not self.eta_multipliers or any(v <= 0 for v in self.eta_multipliers)):
            raise ConfigError("eta_multipliers must be positive")

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def to_dict(self):
        d = asdict(self)
        d["amplitude_range"] = list(self.amplitude_range)
        return d

    def iterations(self, k):
        return 256 * k if self.max_iter == "256k" else int(self.max_iter)

    def resolved_m_grid(self):
        if self.m_grid is not None:
            return [int(m) for m in self.m_grid]
        points = 18 if self.scale == "paper" else 6
        grid = [max(1, round(self.n * z)) for z in np.linspace(0.05, 1.0, points)]
        return sorted(set(grid))

    def resolved_k_grid(self, m):
        if self.k_grid is not None:
            return [int(k) for k in self.k_grid if k <= min(m, self.n)]
        top = max(1, int(0.5 * m))
        step = 1 if self.scale == "paper" else 2
        return list(range(1, top + 1, step))


def preset(kind, scale="desk", **overrides):
    """Default configurations for the two studies at desk or paper scale."""
    if kind == "phase_transition":
        base = dict(kind=kind, scale=scale, noise_fraction=0.01, max_iter="256k")
        if scale == "paper":
            base.update(n=500, runs_per_cell=1000)
        else:
            base.update(n=40, runs_per_cell=10,
                        algorithms=["sea", "sea-els", "omp", "els", "htp"])
    elif kind == "deconvolution":
        base = dict(kind=kind, scale=scale, noise_fraction=0.0, max_iter=1000,
                    sigma=3.0, m_grid=None,
                    algorithms=["sea", "sea-omp", "sea-els", "omp", "ompr", "els",
                                "iht", "htp", "niht"])
        if scale == "paper":
            base.update(n=500, runs_per_cell=200, k_grid=list(range(1, 21)),
                        noise_fraction=0.1)
        else:
            base.update(n=128, runs_per_cell=10, k_grid=[2, 4, 6, 8])
    else:
        raise ConfigError(f"no preset for kind {kind!r}")
    base.update(overrides)
    return ExperimentConfig.from_dict(base)


def resolve_threads(config=None, override=None):
    """Worker count: explicit override, then config, then SEA_THREADS, then 1."""
    for v in (override, config.parallelism if config else None, os.environ.get("SEA_THREADS")):
        if v not in (None, ""):
            try:
                n = int(v)
            except ValueError:
                raise ConfigError(f"invalid thread count {v!r}") from None
            if n < 1:
                raise ConfigError("thread count must be >= 1")
            return n
    return 1


@dataclass
class ResultGrid:
    """Per-run rows plus per-cell aggregates.

    Cells are keyed ``(m, k, algorithm)``; ``thresholds`` maps
    ``(m, algorithm)`` to the largest k whose success rate is at least 0.95
    (0 when none is).
    """
    kind: str
    rows: list = field(default_factory=list)
    cells: dict = field(default_factory=dict)
    thresholds: dict = field(default_factory=dict)
    config: Optional[dict] = None

    @classmethod
    def from_rows(cls, kind, rows, config=None):
        grid = cls(kind, rows=list(rows), config=config)
        grid._aggregate()
        return grid

    def _aggregate(self):
        groups = {}
        for r in self.rows:
            groups.setdefault((r["m"], r["k"], r["algorithm"]), []).append(r)
        self.cells = {}
        for key in sorted(groups, key=lambda t: (t[0], t[1], t[2])):
            rs = groups[key]
            cell = {
                "runs": len(rs),
                "success_rate": float(np.mean([r["success"] for r in rs])),
                "mean_dist_supp": float(np.mean([r["dist_supp"] for r in rs])),
                "mean_rel_loss": float(np.mean([r["rel_l2_loss"] for r in rs])),
                "mean_wasserstein": float(np.mean([r["wasserstein"] for r in rs])),
                "mean_supports_explored": float(np.mean([r["supports_explored"] for r in rs])),
                "mean_supports_after_init": float(np.mean([r["supports_after_init"] for r in rs])),
            }
            if "dist_supp_largest" in rs[0]:
                cell["mean_dist_supp_largest"] = float(np.mean([r["dist_supp_largest"] for r in rs]))
            self.cells[key] = cell
        self.thresholds = {}
        for (m, k, algo), cell in self.cells.items():
            key = (m, algo)
            best = self.thresholds.get(key, 0)
            if cell["success_rate"] >= 0.95 and k > best:
                best = k
            self.thresholds[key] = best

    @property
    def algorithms(self):
        seen = []
        for r in self.rows:
            if r["algorithm"] not in seen:
                seen.append(r["algorithm"])
        return seen

    def cell(self, algorithm, k, m=None):
        for (mm, kk, a), c in self.cells.items():
            if a == algorithm and kk == k and (m is None or mm == m):
                return c
        raise KeyError((m, k, algorithm))


def _row(kind, problem, k_true, k_prime, cfg, algo, run, seed, res, ms):
    xs = problem.x_star
    x = res.x_best
    S_star = xs.support
    if k_prime != k_true:
        ds = dist_supp_kprime(x, S_star, k_prime)
    else:
        ds = dist_supp(x, S_star, k_true)
    try:
        w = wasserstein1_spikes(x, xs)
    except ValueError:
        w = math.nan
    row = {
        "kind": kind, "m": problem.m, "n": problem.n, "k": k_true, "k_prime": k_prime,
        "noise_fraction": cfg.noise_fraction, "noise_mode": cfg.noise_mode,
        "algorithm": algo, "run": run, "seed": seed,
        "success": int(exact_support_match(x, S_star)),
        "dist_supp": ds,
        "rel_l2_loss": rel_l2_loss(problem.A, x, problem.y),
        "wasserstein": w,
        "supports_explored": res.supports_explored,
        "supports_after_init": res.supports_after_init,
        "t_best": res.t_best, "loss_best": res.loss_best,
        "runtime_ms": ms if cfg.timing else None,
    }
    if k_prime != k_true:
        row["dist_supp_largest"] = dist_supp_largest(x, xs, k_true, k_prime)
    return row


def _algorithm_variants(cfg):
    """(label, solver id, eta multiplier) triples; multipliers apply to IHT/HTP only."""
    out = []
    for a in cfg.algorithms:
        if cfg.eta_multipliers and a in ("iht", "htp"):
            for mult in cfg.eta_multipliers:
                out.append((a if mult == 1 else f"{a}[eta*{mult:g}]", a, mult))
        else:
            out.append((a, a, 1.0))
    return out


def _run_cell(task):
    """Build one problem and run every algorithm on it; returns the rows."""
    cfg, m, k, run, A_shared = task
    seed = derive_seed(cfg.base_seed, m, k, run)
    spec = GeneratorSpec(
        n=cfg.n, m=m, k=k, noise_radius_fraction=cfg.noise_fraction,
        amplitude_range=cfg.amplitude_range, noise_mode=cfg.noise_mode,
        matrix_kind="convolution" if cfg.kind == "deconvolution" else "gaussian",
        sigma=cfg.sigma, seed=seed)
    problem = build_problem(spec, A=A_shared)
    k_prime = k if cfg.k_prime_ratio is None else max(1, min(cfg.n, round(cfg.k_prime_ratio * k)))
    solve_problem = problem
    if k_prime != k:
        solve_problem = Problem(problem.A, problem.y, k_prime, x_star=problem.x_star,
                                e=problem.e, scaling=problem.scaling, meta=problem.meta)
    eta = default_step(problem.A)
    solve_problem.meta["eta"] = eta
    rows = []
    for label, algo, mult in _algorithm_variants(cfg):
        sc = SolverConfig(eta=eta * mult, max_iter=cfg.iterations(k_prime), seed=seed)
        t0 = time.perf_counter()
        res = run_solver(algo, solve_problem, sc)
        ms = (time.perf_counter() - t0) * 1e3
        rows.append(_row(cfg.kind, problem, k, k_prime, cfg, label, run, seed, res, ms))
    return rows


def _check_budget(cfg, n_tasks):
    calls = n_tasks * len(_algorithm_variants(cfg))
    if cfg.scale == "desk" and calls > DESK_INVOCATION_CAP:
        raise ConfigError(f"desk scale allows {DESK_INVOCATION_CAP} solver calls, config needs {calls}")


def _execute(cfg, tasks, threads):
    _check_budget(cfg, len(tasks))
    if threads > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(_run_cell, tasks, chunksize=max(1, len(tasks) // (4 * threads))))
    else:
        chunks = [_run_cell(t) for t in tasks]
    rows = [r for chunk in chunks for r in chunk]
    rows.sort(key=lambda r: (r["m"], r["k"], r["run"]))
    return ResultGrid.from_rows(cfg.kind, rows, cfg.to_dict())


def run_phase_transition(config, threads=None):
    """Success rate of exact support recovery over an (m, k) grid of Gaussian problems."""
    if config.kind != "phase_transition":
        raise ConfigError("run_phase_transition needs kind='phase_transition'")
    threads = resolve_threads(config, threads)
    tasks = [(config, m, k, run, None)
             for m in config.resolved_m_grid()
             for k in config.resolved_k_grid(m)
             for run in range(config.runs_per_cell)]
    return _execute(config, tasks, threads)


def run_deconvolution(config, threads=None):
    """Spike deconvolution sweep over k on one fixed Gaussian convolution matrix."""
    if config.kind != "deconvolution":
        raise ConfigError("run_deconvolution needs kind='deconvolution'")
    threads = resolve_threads(config, threads)
    A = gaussian_convolution_matrix(config.n, config.sigma)
    ks = config.k_grid or list(range(1, 21))
    tasks = [(config, config.n, int(k), run, A)
             for k in ks for run in range(config.runs_per_cell)]
    return _execute(config, tasks, threads)


def run_experiment(config, threads=None):
    if config.kind == "phase_transition":
        return run_phase_transition(config, threads)
    if config.kind == "deconvolution":
        return run_deconvolution(config, threads)
    raise ConfigError(f"kind {config.kind!r} is not a sweep")


def _csv_value(v):
    if v is None:
        return ""
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        return repr(v)
    return str(v)


def emit_csv(grid, path):
    """Write the per-run rows with the fixed column set."""
    with open(path, "w") as fh:
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for r in grid.rows:
            fh.write(",".join(_csv_value(r.get(c)) for c in CSV_COLUMNS) + "\n")


def emit_summary(grid, path):
    """Cell aggregates and thresholds as JSON (keys flattened to strings)."""
    out = {
        "kind": grid.kind,
        "cells": [{"m": m, "k": k, "algorithm": a, **c} for (m, k, a), c in grid.cells.items()],
        "thresholds": [{"m": m, "algorithm": a, "k": k} for (m, a), k in sorted(grid.thresholds.items())],
    }
    with open(path, "w") as fh:
        json.dump(out, fh, indent=2, sort_keys=True)
        fh.write("\n")
