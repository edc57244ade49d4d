"""Dense linear algebra used by the solvers.

Matrices are plain ``numpy.ndarray`` objects of shape ``(m, n)``; supports are
sequences of 0-based column indices.
"""
import numpy as np

from .errors import DimensionMismatch, EmptySupport, NoConvergence, ZeroColumn

__all__ = [
    "normalize_columns",
    "spectral_norm_sq",
    "lipschitz_constant",
    "conjugate_gradient",
    "restricted_least_squares",
    "gaussian_matrix",
    "gaussian_convolution_matrix",
    "coherence",
    "random_orthonormal",
]

_POWER_SEED = 20240101


def _as_matrix(A):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
        raise DimensionMismatch(f"expected a non-empty 2-d matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    return A


def normalize_columns(A):
    """Scale every column of `A` to unit l2 norm.

    Returns ``(A_norm, scales)`` with ``A == A_norm * scales`` (column-wise).
    """
    A = _as_matrix(A)
    scales = np.linalg.norm(A, axis=0)
    bad = np.flatnonzero(scales < 1e-300)
    if bad.size:
        raise ZeroColumn(int(bad[0]))
    return A / scales, scales


def spectral_norm_sq(A, tol=1e-10, max_iter=1000):
    """Largest eigenvalue of ``A.T @ A`` by power iteration.

    The start vector is drawn from a fixed seed so the result is reproducible.
    Raises NoConvergence when the Rayleigh quotient still moves by more than
    `tol` (relative) after `max_iter` iterations.
    """
    A = _as_matrix(A)
    v = np.random.default_rng(_POWER_SEED).standard_normal(A.shape[1])
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        w = A.T @ (A @ v)
        new = float(v @ w)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            raise NoConvergence("power iteration hit the null space of A")
        v = w / nw
        if abs(new - lam) <= tol * abs(new):
            return new
        lam = new
    raise NoConvergence(f"power iteration did not reach tol={tol} in {max_iter} steps")


def lipschitz_constant(A, convention="sigma_sq"):
    """Lipschitz constant of the least-squares gradient used to set step sizes.

    ``convention="sigma_sq"`` (default) gives sigma_max(A)**2;
    ``convention="sigma"`` gives sigma_max(A). Computed with a dense SVD so it is
    exact even when the top singular values are clustered (circulant operators).
    """
    s = float(np.linalg.norm(_as_matrix(A), 2))
    if convention == "sigma_sq":
        return s * s
    if convention == "sigma":
        return s
    raise ValueError(f"unknown convention {convention!r}")


def conjugate_gradient(G, b, tol=1e-10, max_iter=None):
    """Solve the symmetric positive semi-definite system ``G x = b`` by CG.

    Stops once ``||G x - b|| <= tol * ||b||`` or after `max_iter` steps,
    returning the current iterate either way. The cheap recursive residual
    drives the iteration; the stopping test is confirmed on the true residual.
    """
    b = np.asarray(b, dtype=float)
    d = b.shape[0]
    if max_iter is None:
        max_iter = 4 * d
    x = np.zeros(d)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return x
    thresh = (tol * bnorm) ** 2
    r = b.copy()
    p = r.copy()
    rr = r @ r
    for _ in range(max_iter):
        Gp = G @ p
        pGp = p @ Gp
        if pGp <= 0.0:
            break
        a = rr / pGp
        x += a * p
        r -= a * Gp
        rr_new = r @ r
        if rr_new <= thresh:
            r = b - G @ x
            rr_new = r @ r
            if rr_new <= thresh:
                break
        p = r + (rr_new / rr) * p
        rr = rr_new
    return x


def restricted_least_squares(A, S, y, tol=1e-10, max_iter=None, gram=None, aty=None):
    """Least-squares coefficients of `y` on the columns ``A[:, S]``.

    Solves ``A_S^T A_S x_S = A_S^T y`` with conjugate gradient (default budget
    ``4 * |S|`` steps). `gram` and `aty` may carry precomputed ``A.T @ A`` and
    ``A.T @ y``. On singular systems the iterate after the budget is returned.
    """
    S = np.asarray(S, dtype=int)
    if S.size == 0:
        raise EmptySupport("support must contain at least one index")
    y = np.asarray(y, dtype=float)
    if y.shape != (A.shape[0],):
        raise DimensionMismatch(f"y has shape {y.shape}, expected ({A.shape[0]},)")
    if S.min() < 0 or S.max() >= A.shape[1]:
        raise DimensionMismatch("support index out of range")
    if gram is not None:
        G = gram[np.ix_(S, S)]
        b = aty[S]
    else:
        AS = A[:, S]
        G = AS.T @ AS
        b = AS.T @ y
    if max_iter is None:
        max_iter = 4 * S.size
    return conjugate_gradient(G, b, tol=tol, max_iter=max_iter)


def gaussian_matrix(m, n, seed):
    """i.i.d. standard normal ``m x n`` matrix."""
    return np.random.default_rng(seed).standard_normal((m, n))


def gaussian_convolution_matrix(n, sigma):
    """Column-normalized circulant matrix of a sampled Gaussian kernel.

    Column ``j`` is ``exp(-d**2 / (2 sigma**2))`` with ``d`` the circular distance
    to ``j``.
    """
    if n < 3 or sigma <= 0:
        raise ValueError("need n >= 3 and sigma > 0")
    idx = np.arange(n)
    d = np.abs(idx[:, None] - idx[None, :])
    d = np.minimum(d, n - d)
    K = np.exp(-(d.astype(float) ** 2) / (2.0 * sigma ** 2))
    return normalize_columns(K)[0]


def coherence(A):
    """Largest absolute inner product between two distinct columns."""
    A = _as_matrix(A)
    if A.shape[1] < 2:
        return 0.0
    G = np.abs(A.T @ A)
    np.fill_diagonal(G, 0.0)
    return float(G.max())


def random_orthonormal(m, n, seed):
    """``m x n`` matrix with orthonormal columns (QR of a Gaussian matrix)."""
    if m < n:
        raise ValueError("need m >= n for orthonormal columns")
    Q, R = np.linalg.qr(gaussian_matrix(m, n, seed))
    # sign fix makes the factorization unique
    return Q * np.where(np.diag(R) < 0, -1.0, 1.0)
