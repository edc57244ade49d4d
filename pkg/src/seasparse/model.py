"""Problem instances, supports and the random generators used in experiments."""
import hashlib
import struct
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import linalg

__all__ = [
    "SparseVector",
    "Problem",
    "GeneratorSpec",
    "as_support",
    "largest_k",
    "support_of",
    "derive_seed",
    "generate_sparse_signal",
    "sphere_noise",
    "build_problem",
]


def as_support(indices):
    """Canonical support key: sorted tuple of distinct 0-based indices."""
    return tuple(sorted({int(i) for i in indices}))


def largest_k(v, k):
    """Indices of the `k` largest ``|v_i|``, ties going to the higher index.

    Returned as a sorted tuple, so ``largest_k(np.zeros(n), k)`` is
    ``(n - k, ..., n - 1)``.
    """
    v = np.asarray(v)
    n = v.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    # ascending by (|v_i|, i): the last k entries win
    order = np.lexsort((np.arange(n), np.abs(v)))
    return tuple(sorted(order[n - k:].tolist()))


def support_of(x, tol=1e-12):
    """Indices where ``|x_i| > tol``."""
    return tuple(np.flatnonzero(np.abs(np.asarray(x)) > tol).tolist())


@dataclass(frozen=True)
class SparseVector:
    n: int
    support: tuple
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).reshape(-1)
        support = tuple(int(i) for i in self.support)
        if len(support) != values.size:
            raise ValueError("support and values differ in length")
        if list(support) != sorted(set(support)):
            raise ValueError("support must be strictly increasing")
        if support and (support[0] < 0 or support[-1] >= self.n):
            raise ValueError("support index out of range")
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_dense(cls, x, tol=0.0):
        x = np.asarray(x, dtype=float)
        S = support_of(x, tol) if tol > 0 else tuple(np.flatnonzero(x).tolist())
        return cls(x.shape[0], S, x[list(S)])

    @classmethod
    def on_support(cls, n, S, values):
        """Vector with `values` on the (already sorted) support `S`."""
        return cls(n, tuple(S), values)

    def to_dense(self):
        x = np.zeros(self.n)
        x[list(self.support)] = self.values
        return x

    @property
    def nnz(self):
        return int(np.count_nonzero(self.values))

    def __eq__(self, other):
        if not isinstance(other, SparseVector):
            return NotImplemented
        return (self.n == other.n and self.support == other.support
                and np.array_equal(self.values, other.values))

    __hash__ = None


@dataclass
class Problem:
    """Sparse linear inverse problem ``y = A x* + e`` with budget `k`."""
    A: np.ndarray
    y: np.ndarray
    k: int
    x_star: Optional[SparseVector] = None
    e: Optional[np.ndarray] = None
    scaling: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.A = np.asarray(self.A, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        m, n = self.A.shape
        if self.y.shape != (m,):
            raise ValueError(f"y has shape {self.y.shape}, expected ({m},)")
        if not 1 <= self.k <= n:
            raise ValueError(f"need 1 <= k <= n, got k={self.k}")

    @property
    def m(self):
        return self.A.shape[0]

    @property
    def n(self):
        return self.A.shape[1]

    @property
    def has_truth(self):
        return self.x_star is not None

    @property
    def true_support(self):
        return self.x_star.support if self.x_star is not None else None

    @property
    def noise(self):
        """Noise as seen in observation space (``y - A x*``)."""
        if self.e is None:
            return None
        if self.e.shape[0] == self.m and self.meta.get("noise_mode", "after_A") == "after_A":
            return self.e
        return self.A @ self.e


@dataclass(frozen=True)
class GeneratorSpec:
    n: int
    m: int
    k: int
    noise_radius_fraction: float = 0.0
    amplitude_range: tuple = (1.0, 2.0)
    noise_mode: str = "after_A"
    matrix_kind: str = "gaussian"
    sigma: float = 3.0
    seed: int = 0

    def __post_init__(self):
        lo, hi = self.amplitude_range
        if not 0 < lo <= hi:
            raise ValueError("amplitude range needs 0 < lo <= hi")
        if self.noise_radius_fraction < 0:
            raise ValueError("noise fraction must be >= 0")
        if self.noise_mode not in ("after_A", "before_A"):
            raise ValueError(f"unknown noise mode {self.noise_mode!r}")
        if self.matrix_kind not in ("gaussian", "convolution", "orthonormal"):
            raise ValueError(f"unknown matrix kind {self.matrix_kind!r}")
        if self.matrix_kind == "convolution":
            if self.m != self.n:
                raise ValueError("convolution matrices are square (m == n)")
            if self.k > self.n:
                raise ValueError("k must not exceed n")
        elif self.k > min(self.m, self.n):
            raise ValueError("k must not exceed min(m, n)")


def derive_seed(*parts):
    """64-bit seed mixed from integers and string tags.

    Independent streams for (A, x*, e, run, ...) come from distinct tags, so
    adding a consumer never shifts another one's stream.
    """
    h = hashlib.blake2b(digest_size=8)
    for p in parts:
        if isinstance(p, str):
            h.update(b"s" + p.encode())
        else:
            h.update(b"i" + struct.pack("<Q", int(p) % (1 << 64)))
    return int.from_bytes(h.digest(), "little")


def generate_sparse_signal(n, k, amplitude_range=(1.0, 2.0), seed=0):
    """k-sparse vector, values uniform on [-hi, -lo] U [lo, hi]."""
    lo, hi = amplitude_range
    if not 1 <= k <= n:
        raise ValueError("need 1 <= k <= n")
    rng = np.random.default_rng(seed)
    S = np.sort(rng.choice(n, size=k, replace=False))
    mags = rng.uniform(lo, hi, size=k)
    signs = np.where(rng.integers(0, 2, size=k) == 1, 1.0, -1.0)
    return SparseVector(n, tuple(S.tolist()), signs * mags)


def sphere_noise(dim, radius, seed):
    """Uniform draw on the sphere of the given radius in R^dim."""
    if radius < 0:
        raise ValueError("radius must be >= 0")
    if radius == 0:
        return np.zeros(dim)
    g = np.random.default_rng(seed).standard_normal(dim)
    return g * (radius / np.linalg.norm(g))


def _matrix(spec):
    if spec.matrix_kind == "gaussian":
        return linalg.gaussian_matrix(spec.m, spec.n, derive_seed(spec.seed, "A"))
    if spec.matrix_kind == "orthonormal":
        return linalg.random_orthonormal(spec.m, spec.n, derive_seed(spec.seed, "A"))
    return linalg.gaussian_convolution_matrix(spec.n, spec.sigma)


def build_problem(spec, A=None):
    """Draw a full problem instance from `spec`.

    `A` may be passed to reuse a fixed (already generated) operator, as in the
    deconvolution sweeps; it is still column-normalized here.
    """
    A_norm, scales = linalg.normalize_columns(_matrix(spec) if A is None else A)
    x_star = generate_sparse_signal(spec.n, spec.k, spec.amplitude_range,
                                    derive_seed(spec.seed, "x"))
    xd = x_star.to_dense()
    Ax = A_norm @ xd
    if spec.noise_mode == "after_A":
        e = sphere_noise(spec.m, spec.noise_radius_fraction * np.linalg.norm(Ax),
                         derive_seed(spec.seed, "e"))
        y = Ax + e
    else:
        e = sphere_noise(spec.n, spec.noise_radius_fraction * np.linalg.norm(xd),
                         derive_seed(spec.seed, "e"))
        y = A_norm @ (xd + e)
    return Problem(A_norm, y, spec.k, x_star=x_star, e=e, scaling=scales,
                   meta={"spec": spec, "noise_mode": spec.noise_mode})
