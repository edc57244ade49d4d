"""Evaluation metrics for recovered sparse vectors.

`x` arguments may be dense arrays or :class:`SparseVector`; supports are read
with the 1e-12 numerical-zero threshold.
"""
import numpy as np

from .errors import ZeroMass, ZeroObservation
from .model import SparseVector, largest_k, support_of

__all__ = [
    "dist_supp", "dist_supp_kprime", "dist_supp_largest", "rel_l2_loss",
    "wasserstein1_spikes", "exact_support_match", "ZERO_TOL",
]

ZERO_TOL = 1e-12


def _dense(x):
    if isinstance(x, SparseVector):
        return x.to_dense()
    return np.asarray(x, dtype=float)


def _supp(x):
    return set(support_of(_dense(x), ZERO_TOL))


def dist_supp(x, S_star, k):
    """Fraction of the k budget not matched by true indices: ``(k - |S* & supp x|) / k``."""
    if len(S_star) > k:
        raise ValueError("|S*| must not exceed k")
    return (k - len(_supp(x) & set(S_star))) / k


def dist_supp_kprime(x, S_star, k_prime):
    """Support distance normalized by the sparsity ``k_prime`` given to the solver.

    An underestimate (``k_prime < |S*|``) can still reach 0.
    """
    if k_prime < 1:
        raise ValueError("k_prime must be >= 1")
    return (k_prime - len(_supp(x) & set(S_star))) / k_prime


def dist_supp_largest(x, x_star, k, k_prime):
    """Support distance between the K = min(k, k') largest entries of both vectors."""
    xd, sd = _dense(x), _dense(x_star)
    if xd.shape != sd.shape:
        raise ValueError("x and x_star live in different dimensions")
    K = min(k, k_prime)
    common = set(largest_k(xd, K)) & set(largest_k(sd, K))
    return (K - len(common)) / K


def rel_l2_loss(A, x, y):
    """``||A x - y|| / ||y||``."""
    y = np.asarray(y, dtype=float)
    ny = np.linalg.norm(y)
    if ny == 0.0:
        raise ZeroObservation("relative loss undefined for y = 0")
    return float(np.linalg.norm(A @ _dense(x) - y) / ny)


def wasserstein1_spikes(x, x_star):
    """Earth mover's distance between the normalized magnitude profiles.

    Each vector becomes the distribution ``|x| / ||x||_1`` on the index line
    with ground cost ``|i - j|``; in 1-d the optimal cost is the l1 distance
    between cumulative sums.
    """
    p, q = np.abs(_dense(x)), np.abs(_dense(x_star))
    sp, sq = p.sum(), q.sum()
    if sp == 0.0 or sq == 0.0:
        raise ZeroMass("both vectors need nonzero l1 mass")
    return float(np.abs(np.cumsum(p / sp - q / sq))[:-1].sum())


def exact_support_match(x, S_star):
    return _supp(x) == set(S_star)
