"""Smooth data-fit losses: least squares and logistic regression."""
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, EmptySupport
from .linalg import restricted_least_squares

__all__ = ["LossModel", "loss_value", "loss_gradient", "restricted_minimize",
           "log_sigmoid", "sigmoid"]

PARAM_CAP = 1e3


def sigmoid(z):
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def log_sigmoid(z):
    """``log(sigmoid(z))`` without overflow."""
    z = np.asarray(z, dtype=float)
    return np.minimum(z, 0.0) - np.log1p(np.exp(-np.abs(z)))


@dataclass
class LossModel:
    kind: str
    A: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        self.A = np.asarray(self.A, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        if self.kind not in ("least_squares", "logistic"):
            raise ValueError(f"unknown loss kind {self.kind!r}")
        if self.y.shape != (self.A.shape[0],):
            raise DimensionMismatch("y length does not match A")
        if self.kind == "logistic" and not np.all((self.y == 0) | (self.y == 1)):
            raise ValueError("logistic loss needs labels in {0, 1}")

    @classmethod
    def least_squares(cls, A, y):
        return cls("least_squares", A, y)

    @classmethod
    def logistic(cls, A, y):
        return cls("logistic", A, y)

    def value(self, x):
        return loss_value(self, x)

    def gradient(self, x):
        return loss_gradient(self, x)

    def value_on(self, S, xS):
        """Loss of the vector equal to `xS` on `S` and zero elsewhere."""
        z = self.A[:, list(S)] @ xS
        if self.kind == "least_squares":
            r = z - self.y
            return 0.5 * float(r @ r)
        return float(np.sum(-self.y * log_sigmoid(z) - (1.0 - self.y) * log_sigmoid(-z)))

    def gradient_on(self, S, xS):
        z = self.A[:, list(S)] @ xS
        if self.kind == "least_squares":
            return self.A.T @ (z - self.y)
        return self.A.T @ (sigmoid(z) - self.y)


def _check_x(model, x):
    x = np.asarray(x, dtype=float)
    if x.shape != (model.A.shape[1],):
        raise DimensionMismatch(f"x has shape {x.shape}, expected ({model.A.shape[1]},)")
    return x


def loss_value(model, x):
    """``0.5 ||Ax - y||^2`` or the summed logistic negative log-likelihood."""
    z = model.A @ _check_x(model, x)
    if model.kind == "least_squares":
        r = z - model.y
        return 0.5 * float(r @ r)
    y = model.y
    return float(np.sum(-y * log_sigmoid(z) - (1.0 - y) * log_sigmoid(-z)))


def loss_gradient(model, x):
    z = model.A @ _check_x(model, x)
    if model.kind == "least_squares":
        return model.A.T @ (z - model.y)
    return model.A.T @ (sigmoid(z) - model.y)


def _logistic_newton(AS, y, tol, max_iter, cap):
    d = AS.shape[1]
    x = np.zeros(d)

    def f(w):
        z = AS @ w
        return float(np.sum(-y * log_sigmoid(z) - (1.0 - y) * log_sigmoid(-z)))

    fx = f(x)
    for _ in range(max_iter):
        p = sigmoid(AS @ x)
        g = AS.T @ (p - y)
        H = AS.T @ (AS * (p * (1.0 - p))[:, None])
        H[np.diag_indices(d)] += 1e-12 * max(1.0, np.trace(H) / d)
        try:
            step = np.linalg.solve(H, g)
        except np.linalg.LinAlgError:
            step = g
        # a small gradient alone is not enough: on separable data the gradient
        # decays while the Newton step stays of order one
        if np.linalg.norm(g) <= tol and np.max(np.abs(step)) <= 1e-6 * (1.0 + np.max(np.abs(x))):
            return x, True
        t = 1.0
        while t > 1e-12:
            cand = x - t * step
            fc = f(cand)
            if fc < fx:
                break
            t *= 0.5
        else:
            return x, bool(np.linalg.norm(g) <= tol)
        if np.max(np.abs(cand)) > cap:
            # no finite minimizer in reach (separable data): stop on the cap
            return cand * (cap / np.max(np.abs(cand))), False
        x, fx = cand, fc
    return x, False


def restricted_minimize(model, S, tol=None, max_iter=None):
    """Minimize the loss over vectors supported on `S`.

    Returns ``(x_S, ok)``. For least squares this is exactly
    ``restricted_least_squares`` (``ok`` is always True). For the logistic loss
    a damped Newton method runs until the gradient norm drops below `tol`
    (default 1e-8); ``ok`` is False when it stopped on the iteration budget
    or on the ``|x_S|_inf <= 1e3`` safeguard.
    """
    S = list(S)
    if not S:
        raise EmptySupport("support must contain at least one index")
    if model.kind == "least_squares":
        kw = {}
        if tol is not None:
            kw["tol"] = tol
        if max_iter is not None:
            kw["max_iter"] = max_iter
        return restricted_least_squares(model.A, S, model.y, **kw), True
    return _logistic_newton(model.A[:, S], model.y, 1e-8 if tol is None else tol,
                            100 if max_iter is None else max_iter, PARAM_CAP)
