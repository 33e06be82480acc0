"""Proximal mappings, Moreau envelopes and the prox-linear subproblem.

Shipped outer functions
-----------------------
``L1Norm``        weighted l1 norm (convex)
``AbsValue``      scalar absolute value (convex, ``L1Norm`` with ``dim=1``)
``MaxCoordinate`` largest coordinate (convex, unbounded below)
``CappedAbs``     ``sum_j min(|y_j|, theta)`` (non-convex)

Non-unique prox sets are resolved deterministically: smallest norm first,
then lexicographic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import (
    ConvexOuter,
    OuterFunction,
    ProxResult,
    SolverError,
    as_vec,
)

TOL_SUB = 1e-10


def _prox_objective(h, mu, v, u):
    return float(h.value(v)) + float(np.dot(v - u, v - u)) / (2.0 * mu)


class L1Norm(ConvexOuter):
    dual_kind = kernels.BOX

    def __init__(self, dim, weight=1.0):
        if weight < 0:
            raise ValueError("weight must be non-negative")
        super().__init__(dim, weight * math.sqrt(dim), 0.0, np.zeros(dim), name="l1")
        self.weight = float(weight)
        self.dual_weight = self.weight

    def value(self, y):
        return self.weight * np.sum(np.abs(y), axis=-1)

    def prox(self, mu, u):
        u = as_vec(u, self.dim, "u")
        v = kernels.soft_threshold(u, mu * self.weight)
        return ProxResult(v, _prox_objective(self, mu, v, u))

    def subgradient_contains(self, v, s, atol=1e-9):
        v, s = np.asarray(v, float), np.asarray(s, float)
        w = self.weight
        on_kink = v == 0.0
        ok_kink = np.abs(s) <= w + atol
        ok_smooth = np.abs(s - w * np.sign(v)) <= atol
        return bool(np.all(np.where(on_kink, ok_kink, ok_smooth)))


class AbsValue(L1Norm):
    def __init__(self, weight=1.0):
        super().__init__(1, weight)
        self.name = "abs"


class MaxCoordinate(ConvexOuter):
    dual_kind = kernels.SIMPLEX

    def __init__(self, dim):
        super().__init__(dim, 1.0, -np.inf, None, name="max")
        self.dual_weight = 1.0

    def value(self, y):
        return np.max(y, axis=-1)

    def prox(self, mu, u):
        # Moreau decomposition: the conjugate is the simplex indicator
        u = as_vec(u, self.dim, "u")
        v = u - kernels.project_simplex(u, mu)
        return ProxResult(v, _prox_objective(self, mu, v, u))

    def subgradient_contains(self, v, s, atol=1e-9):
        v, s = np.asarray(v, float), np.asarray(s, float)
        active = v >= np.max(v) - atol
        return bool(
            np.all(s >= -atol)
            and abs(np.sum(s) - 1.0) <= atol
            and np.all(np.abs(s[~active]) <= atol)
        )


class CappedAbs(OuterFunction):
    """``h(y) = sum_j min(|y_j|, theta)``; non-convex, 1-Lipschitz per coordinate."""

    def __init__(self, dim, theta=1.0):
        if not theta > 0:
            raise ValueError("theta must be positive")
        super().__init__(dim, math.sqrt(dim), 0.0, np.zeros(dim), name="capped-abs")
        self.theta = float(theta)

    def value(self, y):
        return np.sum(np.minimum(np.abs(y), self.theta), axis=-1)

    def prox(self, mu, u):
        u = as_vec(u, self.dim, "u")
        v, tie = kernels.capped_abs_prox(u, self.theta, mu)
        return ProxResult(v, _prox_objective(self, mu, v, u), bool(tie))

    def subgradient_intervals(self, v):
        """Per-coordinate ``(lo, hi)`` hulls of the limiting subdifferential."""
        v = np.asarray(v, float)
        lo = np.zeros_like(v)
        hi = np.zeros_like(v)
        inner = (np.abs(v) < self.theta) & (v != 0.0)
        lo[inner] = hi[inner] = np.sign(v[inner])
        lo[v == 0.0], hi[v == 0.0] = -1.0, 1.0
        edge = np.abs(v) == self.theta
        lo[edge] = np.minimum(0.0, np.sign(v[edge]))
        hi[edge] = np.maximum(0.0, np.sign(v[edge]))
        return lo, hi

    def subgradient_contains(self, v, s, atol=1e-9):
        v, s = np.asarray(v, float), np.asarray(s, float)
        lo, hi = self.subgradient_intervals(v)
        ok = (s >= lo - atol) & (s <= hi + atol)
        # at |v| = theta the limiting set is {0, sign v}, not the whole hull
        edge = np.abs(v) == self.theta
        ok_edge = (np.abs(s) <= atol) | (np.abs(s - np.sign(v)) <= atol)
        return bool(np.all(np.where(edge, ok_edge, ok)))


# ---------------------------------------------------------------------------
# envelope operations


def prox(h: OuterFunction, mu, u) -> ProxResult:
    if not mu > 0:
        raise ValueError("mu must be positive")
    return h.prox(mu, as_vec(u, h.dim, "u"))


def moreau_value(h: OuterFunction, mu, u) -> float:
    """``min_v h(v) + ||v - u||^2 / (2 mu)``."""
    return prox(h, mu, u).objective


def dc_decomposition_G(h: OuterFunction, mu, u) -> float:
    """The subtracted convex part ``G`` in ``h_mu(u) = ||u||^2/(2 mu) - G(u)``."""
    u = as_vec(u, h.dim, "u")
    return float(np.dot(u, u)) / (2.0 * mu) - moreau_value(h, mu, u)


def capped_abs_prox(theta, mu, u) -> float:
    """Scalar prox of ``min(|t|, theta)`` by three-candidate comparison."""
    v, _ = kernels.capped_abs_prox(np.array([float(u)]), float(theta), float(mu))
    return float(v[0])


# ---------------------------------------------------------------------------
# prox of a convex outer composed with an affine map


def affine_prox(
    h: ConvexOuter,
    mu,
    A,
    b,
    u,
    method="auto",
    tol_sub=TOL_SUB,
    tol_x=1e-13,
    max_iter=200_000,
    lam0=None,
):
    """Minimize ``h(A x + b) + ||x - u||^2 / (2 mu)`` over ``x``.

    Closed forms are used when ``A`` has a single row or ``A A' = alpha I``:
    ``x = u + A'(prox_{mu alpha h}(A u + b) - (A u + b)) / alpha``. Otherwise
    (or with ``method="dual"``) the dual problem over ``dom h*`` is solved by
    accelerated projected gradient until the duality gap is at most
    ``tol_sub`` and the primal point moves less than ``tol_x``.

    Returns ``(x, info)`` with ``info`` keys ``exact``, ``method``, ``gap``,
    ``iterations``.
    """
    A = np.atleast_2d(np.asarray(A, float))
    b = np.asarray(b, float).reshape(A.shape[0])
    u = np.asarray(u, float)
    m = A.shape[0]
    c = A @ u + b
    M = A @ A.T
    if method == "auto":
        alpha = float(np.trace(M)) / m
        if alpha == 0.0:
            return u.copy(), dict(exact=True, method="closed", gap=0.0, iterations=0)
        if m == 1 or np.max(np.abs(M - alpha * np.eye(m))) <= 1e-12 * alpha:
            p = h.prox(mu * alpha, c).point
            x = u + A.T @ (p - c) / alpha
            return x, dict(exact=True, method="closed", gap=0.0, iterations=0)
    elif method != "dual":
        raise ValueError(f"unknown method {method!r}")

    lam0 = np.zeros(m) if lam0 is None else np.asarray(lam0, float)
    if h.dual_kind is not None:
        lam, it, gap, ok = kernels.dual_qp(
            M, c, h.dual_kind, h.dual_weight, float(mu), lam0, tol_sub, tol_x, max_iter
        )
    else:
        lam, it, gap, ok = _dual_generic(h, M, c, float(mu), lam0, tol_sub, tol_x, max_iter)
    if not ok:
        raise SolverError(
            f"prox-linear fallback did not converge in {max_iter} iterations (gap={gap:.3g})"
        )
    x = u - mu * (A.T @ lam)
    return x, dict(exact=False, method="dual", gap=float(gap), iterations=int(it))


def _dual_generic(h, M, c, t, lam0, tol_gap, tol_x, max_iter):
    """Same iteration as :func:`kernels.dual_qp`, with ``prox_{s h*}`` obtained
    from ``h.prox`` through the Moreau identity."""
    lip = t * np.linalg.eigvalsh(M)[-1] * 1.01 + 1e-300
    s = 1.0 / lip

    def step(y):
        z = y + s * (c - t * (M @ y))
        p = h.prox(1.0 / s, z / s).point
        lam = z - s * p
        # lam is a subgradient of h at p, so h*(lam) = lam'p - h(p)
        return lam, float(lam @ p - h.value(p))

    lam, hstar = step(lam0)
    y = lam.copy()
    mom = 1.0
    gap = np.inf
    for it in range(1, max_iter + 1):
        lam_new, hstar = step(y)
        d = lam_new - lam
        r = c - t * (M @ lam_new)
        gap = float(h.value(r)) - float(lam_new @ r) + hstar
        dx = t * math.sqrt(max(float(d @ (M @ d)), 0.0))
        if gap <= tol_gap and dx <= tol_x:
            return lam_new, it, gap, True
        mom_new = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * mom * mom))
        if float((y - lam_new) @ d) > 0.0:
            mom_new = 1.0
            y = lam_new.copy()
        else:
            y = lam_new + ((mom - 1.0) / mom_new) * d
        lam, mom = lam_new, mom_new
    return lam, max_iter, gap, False


@dataclass(frozen=True)
class ProxLinearSubproblem:
    """``min_x h(A x + b) + <linear, x - anchor> + ||x - anchor||^2 / (2 step)``."""

    outer: ConvexOuter
    A: np.ndarray
    b: np.ndarray
    linear: np.ndarray
    anchor: np.ndarray
    step: float

    @property
    def center(self):
        # completing the square folds the linear term into the prox center
        return self.anchor - self.step * self.linear

    def objective(self, x):
        x = np.asarray(x, float)
        dx = x - self.anchor
        return (
            self.outer.value(x @ self.A.T + self.b)
            + dx @ self.linear
            + np.sum(dx * dx, axis=-1) / (2.0 * self.step)
        )


def solve_prox_linear(sub: ProxLinearSubproblem, method="auto", full_output=False, **kw):
    """Unique minimizer of a prox-linear subproblem.

    With ``full_output=True`` returns ``(x, info)`` where ``info["exact"]`` is
    False when the iterative dual fallback produced the point.
    """
    if not sub.step > 0:
        raise ValueError("step must be positive")
    x, info = affine_prox(sub.outer, sub.step, sub.A, sub.b, sub.center, method=method, **kw)
    return (x, info) if full_output else x
