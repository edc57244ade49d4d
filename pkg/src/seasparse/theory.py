"""Numerical certification of the SEA recovery guarantees.

Everything here works on small instances: restricted isometry constants are
computed by exhaustive enumeration, and the conditions and iteration bounds are
evaluated with those exact constants so they can be compared with what the
solvers actually do.

Where the RIP constants enter, the gradient noise of SEA obeys

    ||b^t||_inf / eta <= alpha * ||x*|| + gamma * ||e||

with ``alpha = d_{2k+1} (1 + d_{2k} / (1 - d_k))`` and
``gamma = 1 + d_{2k+1} sqrt(1 + d_k) / (1 - d_k)``. Derivation: write
``S = S^t``, ``x = x^t``, ``w = x*`` restricted to ``S* \\ S`` (the missed
part, so ``u^t = -eta w``) and ``y = A x* + e``. The least-squares optimality
on S gives ``A_S^T A_S (x - x*)_S = A_S^T (A w + e)``, hence

    ||(x - x*)_S|| <= d_{2k}/(1 - d_k) ||w|| + sqrt(1 + d_k)/(1 - d_k) ||e||.

For i outside S, ``x_i = 0`` and the diagonal term cancels the oracle part:
``b_i / eta = sum_{j != i} A_i^T A_j (x* - x)_j + A_i^T e``. The vector
``x* - x`` lives on ``S ∪ S*`` and, together with i, spans at most 2k+1
columns, so the near-orthogonality of disjoint supports gives

    |b_i| / eta <= d_{2k+1} (||(x - x*)_S|| + ||w||) + ||e||.

On S, ``b_i = 0``. Combining both and bounding ``||w|| <= ||x*||`` gives the
constants above (the coefficient of ||e|| is ``1 + d_{2k+1} sqrt(1+d_k)/(1-d_k)``).
With all ``d <= 1/2`` they fall in ``d_{2k+1} <= alpha <= 3 d_{2k+1}`` and
``1 + d_{2k+1} <= gamma <= sqrt(6) (1 + d_{2k+1})``.
"""
import itertools
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .errors import DegenerateRIP, MissingGroundTruth, TooLarge
from .losses import LossModel, restricted_minimize
from .model import SparseVector

__all__ = [
    "rip_constant", "rip_constants", "alpha_gamma", "check_hrip", "check_hsrip",
    "check_rc", "check_rc_prime", "iteration_bounds", "t_max_prime",
    "check_min_condition", "check_gradient_noise", "counting_and_closed_form",
    "certify_recovery", "TheoryReport", "theory_report", "ENUMERATION_CAP",
]

ENUMERATION_CAP = 2_000_000
_BATCH = 20_000


def _xstar_values(x_star):
    if isinstance(x_star, SparseVector):
        v = x_star.values
    else:
        v = np.asarray(x_star, dtype=float)
    v = np.abs(v[v != 0])
    if v.size == 0:
        raise ValueError("x* must have at least one nonzero entry")
    return v


def rip_constant(A, l, cap=ENUMERATION_CAP):
    """Exact restricted isometry constant of order `l` by enumeration.

    ``max over |S| = l of max(lambda_max(G_S) - 1, 1 - lambda_min(G_S))`` with
    ``G_S`` the Gram submatrix. Raises TooLarge past `cap` supports.
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[1]
    if not 1 <= l <= n:
        raise ValueError(f"need 1 <= l <= n, got l={l}, n={n}")
    count = math.comb(n, l)
    if count > cap:
        raise TooLarge(f"C({n},{l}) = {count} supports exceeds the cap {cap}")
    G = A.T @ A
    worst = 0.0
    combos = itertools.combinations(range(n), l)
    while True:
        block = np.array(list(itertools.islice(combos, _BATCH)), dtype=int)
        if block.size == 0:
            break
        sub = G[block[:, :, None], block[:, None, :]]
        ev = np.linalg.eigvalsh(sub)
        worst = max(worst, float(np.max(ev[:, -1] - 1.0)), float(np.max(1.0 - ev[:, 0])))
    return worst


def rip_constants(A, orders, cap=ENUMERATION_CAP):
    """``{l: delta_l}``; orders beyond the cap (or beyond n) map to None."""
    out = {}
    for l in sorted(set(orders)):
        try:
            out[l] = rip_constant(A, l, cap)
        except (TooLarge, ValueError):
            out[l] = None
    return out


def alpha_gamma(delta_k, delta_2k, delta_2k1):
    """Gradient-noise constants (alpha, gamma); see the module docstring."""
    if delta_k >= 1.0:
        raise DegenerateRIP(f"delta_k = {delta_k} >= 1")
    alpha = delta_2k1 * (1.0 + delta_2k / (1.0 - delta_k))
    gamma = 1.0 + delta_2k1 * math.sqrt(1.0 + delta_k) / (1.0 - delta_k)
    return alpha, gamma


def check_hrip(x_star, e_norm, alpha, gamma, k):
    """RIP recovery condition: ``gamma ||e|| < min|x*_i| / (2k) - alpha ||x*||``."""
    v = _xstar_values(x_star)
    return bool(gamma * e_norm < v.min() / (2 * k) - alpha * np.linalg.norm(v))


def check_hsrip(x_star, alpha, k):
    """Simplified condition; returns ``(tau, tau < 1)`` with ``tau = 2k alpha ||x*|| / min|x*_i|``."""
    v = _xstar_values(x_star)
    tau = 2 * k * alpha * float(np.linalg.norm(v)) / float(v.min())
    return tau, bool(tau < 1.0)


def check_rc(eps_max, eta, x_star, k):
    """``eps_max < eta min|x*_i| / (2k)``."""
    return bool(eps_max < eta * _xstar_values(x_star).min() / (2 * k))


def check_rc_prime(eps_max, eta, x_star):
    """Sharper condition ``eps_max < 1 / (2 sum_i 1/(eta |x*_i|))``."""
    s = float(np.sum(1.0 / (eta * _xstar_values(x_star))))
    return bool(eps_max < 1.0 / (2.0 * s))


def _ratio(num, den):
    return num / den if den > 0 else math.inf


def iteration_bounds(k, x0_inf_norm, eta, min_xstar, eps_max=0.0, alpha=0.0,
                     gamma=0.0, xstar_norm=0.0, e_norm=0.0, tau=0.0):
    """The four iteration bounds, +inf wherever a denominator is <= 0.

    T_oracle: oracle update; T_max: under the recovery condition on eps_max;
    T_RIP: under the RIP condition; T_SRIP: under the simplified one.
    """
    m = min_xstar
    return {
        "T_oracle": k * (1.0 + 2.0 * x0_inf_norm / (eta * m)),
        "T_max": _ratio(2 * k * x0_inf_norm + (k + 1) * eta * m, eta * m - 2 * k * eps_max),
        "T_RIP": _ratio(2 * k * x0_inf_norm / eta + (k + 1) * m,
                        m - 2 * k * (alpha * xstar_norm + gamma * e_norm)),
        "T_SRIP": _ratio(k + 1, 1.0 - tau),
    }


def t_max_prime(X0, x_star, eta, eps_max):
    """Sharper bound with per-entry thresholds; +inf when the condition fails.

    Each true index i contributes ``(max_{j not in S*} |X0_j| + |X0_i|) / (eta |x*_i|)``.
    """
    X0 = np.asarray(X0, dtype=float)
    S = list(x_star.support)
    vals = np.abs(x_star.values)
    keep = vals > 0
    S, vals = [s for s, kp in zip(S, keep) if kp], vals[keep]
    off = np.delete(np.abs(X0), S)
    top_off = float(off.max()) if off.size else 0.0
    num = float(np.sum((top_off + np.abs(X0[S])) / (eta * vals))) + len(S) + 1
    return _ratio(num, 1.0 - 2.0 * eps_max * float(np.sum(1.0 / (eta * vals))))


def check_min_condition(x_star, e_norm, delta_2k):
    """``min|x*_i| > 2 ||e|| / sqrt(1 - delta_2k)``."""
    if delta_2k >= 1.0:
        return False
    return bool(_xstar_values(x_star).min() > 2.0 * e_norm / math.sqrt(1.0 - delta_2k))


def _truth(problem):
    if not problem.has_truth:
        raise MissingGroundTruth("this check needs the true signal")
    return problem.x_star.to_dense(), set(problem.x_star.support)


def _oracle_step(xs, true_S, S, eta):
    u = np.zeros(xs.shape[0])
    missed = sorted(true_S - set(S))
    u[missed] = -eta * xs[missed]
    return u


def _noise_sequence(problem, supports, eta, loss=None):
    """Yield ``(S, u, b)`` along a support sequence (x^t recomputed per support)."""
    model = loss or LossModel.least_squares(problem.A, problem.y)
    xs, true_S = _truth(problem)
    cache = {}
    for S in supports:
        if S not in cache:
            xS, _ = restricted_minimize(model, S)
            cache[S] = eta * model.gradient_on(S, xS)
        u = _oracle_step(xs, true_S, S, eta)
        yield S, u, u - cache[S]


def check_gradient_noise(problem, trace, eta, alpha=None, gamma=None):
    """Gradient noise ``b^t = u^t - eta grad F(x^t)`` along a trace.

    Returns ``(eps_max, report)``. The report holds the per-iteration
    ``||b^t||_inf``, the largest ``|b_i^t|`` on S^t (should vanish) relative to
    ``eta ||A^T y||_inf``, and, given alpha and gamma, whether
    ``||b^t||_inf / eta <= alpha ||x*|| + gamma ||e||`` at every t.
    """
    per_t, on_support = [], 0.0
    for S, _, b in _noise_sequence(problem, trace.support_sequence, eta):
        per_t.append(float(np.max(np.abs(b))))
        on_support = max(on_support, float(np.max(np.abs(b[list(S)]))))
    scale = eta * float(np.max(np.abs(problem.A.T @ problem.y))) or 1.0
    report = {
        "per_t": per_t,
        "annihilation_rel": on_support / scale,
    }
    eps_max = max(per_t) if per_t else 0.0
    if alpha is not None and gamma is not None:
        e = problem.noise
        e_norm = float(np.linalg.norm(e)) if e is not None else 0.0
        cap = alpha * float(np.linalg.norm(problem.x_star.values)) + gamma * e_norm
        ok = [v / eta <= cap * (1 + 1e-12) + 1e-12 for v in per_t]
        report["bound"] = cap
        report["bound_holds"] = all(ok)
        report["bound_violations"] = ok.count(False)
    return eps_max, report


def counting_and_closed_form(problem, trace, eta, X0=None, oracle=False):
    """Check ``X^t = X0 + eta c^t * x* + B^t`` along a trace with recorded X^t.

    ``c^t_i`` counts the iterations before t where the true index i was missed,
    ``B^t`` accumulates the gradient noise (identically zero for a trace of
    the oracle update, pass ``oracle=True``). Also checks that the counts sum
    to at least t up to the first iteration whose support contains S*.
    """
    xs, true_S = _truth(problem)
    explore = trace.explore_sequence
    if explore is None:
        raise ValueError("trace has no X^t sequence; run the solver with record_trace=True")
    n = problem.n
    X0 = np.zeros(n) if X0 is None else np.asarray(X0, dtype=float)
    c = np.zeros(n)
    B = np.zeros(n)
    worst = 0.0
    lower_ok = True
    t_s = None
    idx = sorted(true_S)
    for t, (S, u, b) in enumerate(_noise_sequence(problem, trace.support_sequence, eta)):
        X = X0 + eta * c * xs + B
        worst = max(worst, float(np.max(np.abs(explore[t] - X))) / (1.0 + float(np.max(np.abs(explore[t])))))
        if t_s is None:
            if c[idx].sum() < t:
                lower_ok = False
            if true_S <= set(S):
                t_s = t
        c[sorted(true_S - set(S))] += 1
        if not oracle:
            B += b
    return {
        "max_rel_error": worst,
        "closed_form_holds": worst <= 1e-8,
        "counting_lower_bound_holds": lower_ok,
        "t_s": t_s,
        "counts": c,
    }


def certify_recovery(problem, result, eta, deltas, X0=None):
    """Evaluate the RIP recovery theorem on one SEA run.

    `deltas` maps orders k, 2k, 2k+1 to exact RIP constants. Returns a dict
    with ``qualifies`` (RIP and min-amplitude conditions hold) and the three
    conclusions: S* visited within T_RIP, S* inside the best support, and the
    error bound ``||x_best - x*|| <= 2 ||e|| / sqrt(1 - delta_k)``.
    """
    k = problem.k
    dk, d2k, d2k1 = deltas[k], deltas[2 * k], deltas[2 * k + 1]
    xs_sv = problem.x_star
    v = np.abs(xs_sv.values)
    e = problem.noise
    e_norm = float(np.linalg.norm(e)) if e is not None else 0.0
    X0 = np.zeros(problem.n) if X0 is None else np.asarray(X0, dtype=float)
    out = {"qualifies": False}
    if dk >= 1.0:
        return out
    alpha, gamma = alpha_gamma(dk, d2k, d2k1)
    hrip = check_hrip(xs_sv, e_norm, alpha, gamma, k)
    minc = check_min_condition(xs_sv, e_norm, d2k)
    bounds = iteration_bounds(k, float(np.max(np.abs(X0))), eta, float(v.min()),
                              alpha=alpha, gamma=gamma,
                              xstar_norm=float(np.linalg.norm(v)), e_norm=e_norm)
    true_S = set(xs_sv.support)
    first = next((t for t, S in enumerate(result.trace.support_sequence)
                  if true_S <= set(S)), None)
    err = float(np.linalg.norm(result.x_best.to_dense() - xs_sv.to_dense()))
    out.update(
        qualifies=hrip and minc,
        hrip=hrip,
        min_condition=minc,
        T_RIP=bounds["T_RIP"],
        first_visit=first,
        visited_within_bound=first is not None and first <= bounds["T_RIP"],
        superset_at_best=true_S <= set(result.x_best.support),
        error=err,
        error_bound=2.0 * e_norm / math.sqrt(1.0 - dk),
    )
    out["error_bound_holds"] = err <= out["error_bound"] * (1 + 1e-9) + 1e-12
    return out


@dataclass
class TheoryReport:
    delta: dict
    alpha_k: Optional[float]
    gamma_k: Optional[float]
    hrip_holds: Optional[bool]
    hsrip_holds: Optional[bool]
    hr_holds: bool
    min_cond_holds: Optional[bool]
    tau: Optional[float]
    bounds: dict
    eps_max: float
    extra: dict = field(default_factory=dict)

    def to_json(self):
        """Plain dict ready for ``json.dump``; infinities become ``"inf"``."""
        def enc(v):
            if isinstance(v, float) and math.isinf(v):
                return "inf" if v > 0 else "-inf"
            if isinstance(v, dict):
                return {str(a): enc(b) for a, b in v.items()}
            if isinstance(v, (list, tuple)):
                return [enc(b) for b in v]
            if isinstance(v, np.generic):
                return enc(v.item())
            if isinstance(v, np.ndarray):
                return enc(v.tolist())
            return v
        return enc(asdict(self))


def theory_report(problem, trace, eta, X0=None, cap=ENUMERATION_CAP):
    """Everything checkable for one (problem, trace) pair in a TheoryReport.

    RIP constants of orders k, 2k, 2k+1 are computed when enumeration fits
    under `cap`; conditions that need them are left as None otherwise.
    """
    k = problem.k
    xs = problem.x_star
    if xs is None:
        raise MissingGroundTruth("theory report needs the true signal")
    v = np.abs(xs.values[xs.values != 0])
    e = problem.noise
    e_norm = float(np.linalg.norm(e)) if e is not None else 0.0
    X0 = np.zeros(problem.n) if X0 is None else np.asarray(X0, dtype=float)
    deltas = rip_constants(problem.A, [k, 2 * k, 2 * k + 1], cap)
    alpha = gamma = tau = hrip = hsrip = minc = None
    if None not in deltas.values() and deltas[k] < 1.0:
        alpha, gamma = alpha_gamma(deltas[k], deltas[2 * k], deltas[2 * k + 1])
        hrip = check_hrip(xs, e_norm, alpha, gamma, k)
        tau, hsrip = check_hsrip(xs, alpha, k)
    if deltas.get(2 * k) is not None:
        minc = check_min_condition(xs, e_norm, deltas[2 * k])
    eps_max, noise = check_gradient_noise(problem, trace, eta, alpha, gamma)
    bounds = iteration_bounds(
        k, float(np.max(np.abs(X0))), eta, float(v.min()), eps_max,
        alpha or 0.0, gamma or 0.0, float(np.linalg.norm(v)), e_norm, tau or 0.0)
    if alpha is None:
        bounds["T_RIP"] = bounds["T_SRIP"] = None
    bounds["T_max_prime"] = t_max_prime(X0, xs, eta, eps_max)
    extra = {
        "annihilation_rel": noise["annihilation_rel"],
        "rc_prime_holds": check_rc_prime(eps_max, eta, xs),
        "noise_bound_holds": noise.get("bound_holds"),
    }
    if trace.explore_sequence is not None:
        cf = counting_and_closed_form(problem, trace, eta, X0)
        extra.update(closed_form_max_rel_error=cf["max_rel_error"],
                     counting_lower_bound_holds=cf["counting_lower_bound_holds"],
                     t_s=cf["t_s"])
    return TheoryReport(
        delta=deltas, alpha_k=alpha, gamma_k=gamma, hrip_holds=hrip,
        hsrip_holds=hsrip, hr_holds=check_rc(eps_max, eta, xs, k),
        min_cond_holds=minc, tau=tau, bounds=bounds, eps_max=eps_max, extra=extra,
    )
