"""Sparse support recovery solvers.

Every solver takes a :class:`~seasparse.model.Problem` and a
:class:`SolverConfig` and returns a :class:`SolverResult`, so runs of different
algorithms on the same problem can be compared directly. All of them keep the
best iterate seen so far (smallest loss, earliest iteration on ties).
"""
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import MissingGroundTruth, NumericalError
from .linalg import lipschitz_constant
from .losses import LossModel, restricted_minimize
from .model import SparseVector, largest_k

__all__ = [
    "SolverConfig", "SolverResult", "Trace",
    "default_step", "sea", "sea_efficient", "oracle_sea", "iht", "niht", "htp",
    "omp", "ompr", "els", "random_search", "warm_start", "run_solver", "SOLVER_IDS",
]


@dataclass(frozen=True)
class SolverConfig:
    eta: Optional[float] = None
    max_iter: int = 1000
    init: Optional[np.ndarray] = None
    seed: int = 0
    record_trace: bool = False

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.eta is not None and not (math.isfinite(self.eta) and self.eta > 0):
            raise ValueError("eta must be finite and positive")


@dataclass
class Trace:
    per_iteration_loss: list = field(default_factory=list)
    per_new_support: list = field(default_factory=list)
    support_sequence: list = field(default_factory=list)
    # X^t per iteration, only kept when SolverConfig.record_trace is set
    explore_sequence: Optional[list] = None


@dataclass
class SolverResult:
    x_best: SparseVector
    t_best: int
    loss_best: float
    iterations_run: int
    supports_explored: int
    trace: Trace
    x_final: Optional[SparseVector] = None
    supports_after_init: Optional[int] = None
    ls_solves: int = 0
    explored: frozenset = field(default=frozenset(), repr=False)
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.supports_after_init is None:
            self.supports_after_init = self.supports_explored


def default_step(A, factor=1.8):
    """``factor / L`` with L the squared spectral norm of A."""
    L = lipschitz_constant(A)
    if L <= 0.0:
        raise NumericalError("A is zero; no step size can be derived")
    return factor / L


class _Recorder:
    def __init__(self, n, keep_explore):
        self.n = n
        self.best_loss = math.inf
        self.best_t = -1
        self.best_S = None
        self.best_x = None
        self.trace = Trace(explore_sequence=[] if keep_explore else None)
        self.seen = set()
        self.last_S = None
        self.last_x = None

    def step(self, t, S, xS, loss, X=None):
        tr = self.trace
        tr.per_iteration_loss.append(loss)
        tr.support_sequence.append(S)
        if S not in self.seen:
            self.seen.add(S)
            tr.per_new_support.append((t, S, loss))
        if loss < self.best_loss:
            self.best_loss, self.best_t, self.best_S, self.best_x = loss, t, S, xS
        if tr.explore_sequence is not None and X is not None:
            tr.explore_sequence.append(np.array(X, copy=True))
        self.last_S, self.last_x = S, xS

    def result(self, iterations, ls_solves, explored_count=None, **info):
        seen = frozenset(self.seen)
        return SolverResult(
            x_best=SparseVector(self.n, self.best_S, self.best_x),
            t_best=self.best_t,
            loss_best=self.best_loss,
            iterations_run=iterations,
            supports_explored=len(seen) if explored_count is None else explored_count,
            trace=self.trace,
            x_final=SparseVector(self.n, self.last_S, self.last_x),
            ls_solves=ls_solves,
            explored=seen,
            info=info,
        )


def _setup(problem, config, loss):
    config = config or SolverConfig()
    model = loss if loss is not None else LossModel.least_squares(problem.A, problem.y)
    eta = config.eta
    if eta is None:
        eta = problem.meta.get("eta")
        if eta is None:
            eta = default_step(problem.A)
            problem.meta["eta"] = eta
    if config.init is None:
        X = np.zeros(problem.n)
    else:
        X = np.array(config.init, dtype=float, copy=True)
        if X.shape != (problem.n,):
            raise ValueError(f"init has shape {X.shape}, expected ({problem.n},)")
    return config, model, eta, X


def _dense(n, S, xS):
    x = np.zeros(n)
    x[list(S)] = xS
    return x


def sea(problem, config=None, loss=None):
    """Support Exploration Algorithm, plain form.

    At each iteration the support is read off the exploration variable X
    (``largest_k``), the loss is minimized on that support, and X takes a
    gradient step computed at the sparse iterate (straight-through update).
    Runs ``config.max_iter`` iterations and returns the best iterate.
    """
    config, model, eta, X = _setup(problem, config, loss)
    k, n = problem.k, problem.n
    rec = _Recorder(n, config.record_trace)
    flags = 0
    for t in range(config.max_iter):
        S = largest_k(X, k)
        xS, ok = restricted_minimize(model, S)
        flags += not ok
        rec.step(t, S, xS, model.value_on(S, xS), X)
        X = X - eta * model.gradient_on(S, xS)
    return rec.result(config.max_iter, ls_solves=config.max_iter, eta=eta,
                      inner_failures=flags, X_final=X)


def sea_efficient(problem, config=None, loss=None):
    """SEA with the per-support minimization and gradient memoized.

    Produces the same support sequence and result as :func:`sea` while solving
    each distinct support only once.
    """
    config, model, eta, X = _setup(problem, config, loss)
    k, n = problem.k, problem.n
    rec = _Recorder(n, config.record_trace)
    memo = {}
    flags = 0
    for t in range(config.max_iter):
        S = largest_k(X, k)
        hit = memo.get(S)
        if hit is None:
            xS, ok = restricted_minimize(model, S)
            flags += not ok
            hit = (xS, model.value_on(S, xS), eta * model.gradient_on(S, xS))
            memo[S] = hit
        xS, value, g = hit
        rec.step(t, S, xS, value, X)
        X = X - g
    return rec.result(config.max_iter, ls_solves=len(memo), eta=eta,
                      inner_failures=flags, X_final=X)


def oracle_sea(problem, config=None):
    """SEA driven by the oracle update that pushes missed true indices.

    ``u_i = -eta * x*_i`` on the true support indices missing from the current
    support, zero elsewhere; stops as soon as ``u`` vanishes and returns the
    least-squares fit on that final support.
    """
    if not problem.has_truth:
        raise MissingGroundTruth("oracle_sea needs the true signal")
    config, model, eta, X = _setup(problem, config, None)
    k, n = problem.k, problem.n
    xs = problem.x_star.to_dense()
    true_S = set(problem.x_star.support)
    rec = _Recorder(n, config.record_trace)
    t = 0
    halted = False
    while t < config.max_iter:
        S = largest_k(X, k)
        rec.trace.support_sequence.append(S)
        if rec.trace.explore_sequence is not None:
            rec.trace.explore_sequence.append(X.copy())
        missed = sorted(true_S - set(S))
        t += 1
        if not missed:
            halted = True
            break
        u = np.zeros(n)
        u[missed] = -eta * xs[missed]
        X = X - u
    S = rec.trace.support_sequence[-1]
    xS, _ = restricted_minimize(model, S)
    value = model.value_on(S, xS)
    rec.trace.per_iteration_loss.append(value)
    rec.trace.per_new_support.append((t - 1, S, value))
    rec.seen = set(rec.trace.support_sequence)
    rec.best_loss, rec.best_t, rec.best_S, rec.best_x = value, t - 1, S, xS
    rec.last_S, rec.last_x = S, xS
    return rec.result(t, ls_solves=1, eta=eta, halted=halted, X_final=X)


def iht(problem, config=None, loss=None):
    """Iterative hard thresholding with a fixed step."""
    config, model, eta, X = _setup(problem, config, loss)
    k, n = problem.k, problem.n
    rec = _Recorder(n, config.record_trace)
    for t in range(config.max_iter):
        S = largest_k(X, k)
        xS = X[list(S)]
        rec.step(t, S, xS, model.value_on(S, xS), X)
        X = _dense(n, S, xS) - eta * model.gradient_on(S, xS)
    return rec.result(config.max_iter, ls_solves=0, eta=eta)


def niht(problem, config=None):
    """Normalized IHT: step ``||g_S||^2 / ||A g_S||^2`` with a halving safeguard.

    When the thresholded step changes the support, the step is halved while it
    exceeds ``0.99 ||x - x_new||^2 / ||A (x - x_new)||^2``.
    """
    config, model, eta0, X = _setup(problem, config, None)
    A, y, k, n = problem.A, problem.y, problem.k, problem.n
    rec = _Recorder(n, config.record_trace)
    S = largest_k(X, k)
    x = _dense(n, S, X[list(S)])
    eta_prev = eta0
    steps, initial_steps, degenerate = [], [], 0
    for t in range(config.max_iter):
        r = y - A @ x
        rec.step(t, S, x[list(S)], 0.5 * float(r @ r), X if t == 0 else x)
        g = A.T @ r
        gS = np.zeros(n)
        gS[list(S)] = g[list(S)]
        den = float(np.sum((A @ gS) ** 2))
        if den <= 1e-300:
            degenerate += 1
            step = eta_prev
        else:
            step = float(gS @ gS) / den
        initial_steps.append(step)
        for _ in range(64):
            Xn = x + step * g
            Sn = largest_k(Xn, k)
            xn = _dense(n, Sn, Xn[list(Sn)])
            if Sn == S:
                break
            d = x - xn
            Ad = A @ d
            dd = float(d @ d)
            if dd == 0.0 or step <= 0.99 * dd / float(Ad @ Ad):
                break
            step *= 0.5
        steps.append(step)
        eta_prev = step
        x, S = xn, Sn
    return rec.result(config.max_iter, ls_solves=0, steps=steps,
                      initial_steps=initial_steps, degenerate_steps=degenerate)


def htp(problem, config=None, loss=None):
    """Hard thresholding pursuit; stops when the support repeats."""
    config, model, eta, X = _setup(problem, config, loss)
    k, n = problem.k, problem.n
    rec = _Recorder(n, config.record_trace)
    prev = None
    t = 0
    while t < config.max_iter:
        S = largest_k(X, k)
        if S == prev:
            break
        xS, _ = restricted_minimize(model, S)
        rec.step(t, S, xS, model.value_on(S, xS), X)
        X = _dense(n, S, xS) - eta * model.gradient_on(S, xS)
        prev = S
        t += 1
    return rec.result(t, ls_solves=t, eta=eta, converged=t < config.max_iter)


def _argmax_outside(g, S):
    """Index of the largest |g_i| with i not in S; ties go to the higher index."""
    a = np.abs(g)
    a[list(S)] = -1.0
    return len(a) - 1 - int(np.argmax(a[::-1]))


def omp(problem, config=None, loss=None):
    """Orthogonal matching pursuit: k greedy additions with refitting."""
    config, model, _, _ = _setup(problem, replace(config or SolverConfig(), eta=1.0), loss)
    k, n = problem.k, problem.n
    rec = _Recorder(n, config.record_trace)
    S = ()
    xS = np.zeros(0)
    for t in range(k):
        g = model.gradient_on(S, xS) if S else model.gradient_on((0,), np.zeros(1))
        S = tuple(sorted(S + (_argmax_outside(g, S),)))
        xS, _ = restricted_minimize(model, S)
        rec.trace.per_iteration_loss.append(model.value_on(S, xS))
        rec.trace.support_sequence.append(S)
        rec.trace.per_new_support.append((t, S, rec.trace.per_iteration_loss[-1]))
    value = rec.trace.per_iteration_loss[-1]
    rec.seen = {S}
    rec.best_loss, rec.best_t, rec.best_S, rec.best_x = value, k - 1, S, xS
    rec.last_S, rec.last_x = S, xS
    return rec.result(k, ls_solves=k, explored_count=k)


def _start_support(problem, config, loss):
    """Starting k-support for local-search methods: given init, else OMP's output."""
    if config.init is not None:
        return largest_k(config.init, problem.k), None
    first = omp(problem, SolverConfig(max_iter=1), loss)
    return first.x_best.support, first


def _swap_candidate(model, S, j, k):
    """Grow S by j, drop the weakest coefficient, refit on the k survivors."""
    S1 = tuple(sorted(S + (j,)))
    x1, _ = restricted_minimize(model, S1)
    keep = largest_k(x1, k)
    S2 = tuple(S1[i] for i in keep)
    x2, _ = restricted_minimize(model, S2)
    return S2, x2, model.value_on(S2, x2)


def _local_search(problem, config, loss, exhaustive):
    config = config or SolverConfig()
    config, model, _, _ = _setup(problem, replace(config, eta=1.0), loss)
    k, n = problem.k, problem.n
    S, inner = _start_support(problem, config, loss)
    xS, _ = restricted_minimize(model, S)
    value = model.value_on(S, xS)
    rec = _Recorder(n, config.record_trace)
    rec.step(0, S, xS, value)
    explored = 1
    solves = 1
    accepted = 0
    while accepted < config.max_iter:
        outside = [j for j in range(n) if j not in set(S)]
        if exhaustive:
            cands = outside
        else:
            g = model.gradient_on(S, xS)
            cands = [_argmax_outside(g, S)]
        best = None
        for j in cands:
            cand = _swap_candidate(model, S, j, k)
            solves += 2
            if best is None or cand[2] < best[2] or (cand[2] == best[2] and j > best[3]):
                best = cand + (j,)
        explored += len(cands)
        rec.seen.update(b for b in [best[0]])
        if best[2] < value:
            accepted += 1
            S, xS, value = best[0], best[1], best[2]
            rec.step(accepted, S, xS, value)
        else:
            break
    total = explored + (inner.supports_explored if inner is not None else 0)
    res = rec.result(accepted + 1, ls_solves=solves, explored_count=total,
                     accepted=accepted)
    res.supports_after_init = explored
    return res


def ompr(problem, config=None, loss=None):
    """OMP with replacement (single swap per iteration, full refit).

    Starts from ``config.init`` when given, otherwise from OMP's output; accepts
    a swap only when it strictly lowers the loss.
    """
    return _local_search(problem, config, loss, exhaustive=False)


def els(problem, config=None, loss=None):
    """Exhaustive local search over all n - k single swaps per iteration."""
    return _local_search(problem, config, loss, exhaustive=True)


def random_search(problem, config=None, loss=None):
    """Best of ``config.max_iter`` uniformly random k-supports."""
    config, model, _, _ = _setup(problem, replace(config or SolverConfig(), eta=1.0), loss)
    k, n = problem.k, problem.n
    rng = np.random.default_rng(config.seed)
    rec = _Recorder(n, False)
    for t in range(config.max_iter):
        S = tuple(sorted(rng.choice(n, size=k, replace=False).tolist()))
        xS, _ = restricted_minimize(model, S)
        rec.step(t, S, xS, model.value_on(S, xS))
    return rec.result(config.max_iter, ls_solves=config.max_iter)


_INNER = {"omp": omp, "els": els, "ompr": ompr}
_OUTER = {"sea": sea_efficient, "sea_naive": sea, "htp": htp, "iht": iht, "niht": niht}


def warm_start(inner, outer, problem, inner_config=None, outer_config=None, loss=None):
    """Run `inner`, then start `outer` from its output (X0 = inner estimate).

    ``supports_explored`` counts both stages; ``supports_after_init`` only the
    supports the outer stage visited that the inner stage had not.
    """
    first = _INNER[inner](problem, inner_config, loss)
    cfg = replace(outer_config or SolverConfig(), init=first.x_best.to_dense())
    if outer == "niht":
        second = niht(problem, cfg)
    else:
        second = _OUTER[outer](problem, cfg, loss)
    new = second.explored - first.explored
    second.supports_after_init = len(new)
    second.supports_explored = first.supports_explored + len(new)
    second.info["inner_loss"] = first.loss_best
    second.info["inner_support"] = first.x_best.support
    return second


def _warm(inner, outer):
    def run(problem, config=None, loss=None):
        return warm_start(inner, outer, problem, None, config, loss)
    run.__name__ = f"{outer}_{inner}"
    return run


def _no_loss(fn):
    def run(problem, config=None, loss=None):
        if loss is not None and loss.kind != "least_squares":
            raise ValueError(f"{fn.__name__} only supports the least-squares loss")
        return fn(problem, config)
    run.__name__ = fn.__name__
    return run


SOLVERS = {
    "sea": sea_efficient,
    "sea-naive": sea,
    "sea-omp": _warm("omp", "sea"),
    "sea-els": _warm("els", "sea"),
    "oracle-sea": _no_loss(oracle_sea),
    "iht": iht,
    "iht-omp": _warm("omp", "iht"),
    "iht-els": _warm("els", "iht"),
    "niht": _no_loss(niht),
    "htp": htp,
    "htp-omp": _warm("omp", "htp"),
    "htp-els": _warm("els", "htp"),
    "omp": omp,
    "ompr": ompr,
    "els": els,
    "random": random_search,
}
SOLVER_IDS = tuple(SOLVERS)


def run_solver(algo, problem, config=None, loss=None):
    """Dispatch on a solver id (see ``SOLVER_IDS``)."""
    try:
        fn = SOLVERS[algo]
    except KeyError:
        raise ValueError(f"unknown solver {algo!r}; choose from {', '.join(SOLVER_IDS)}")
    return fn(problem, config, loss)
