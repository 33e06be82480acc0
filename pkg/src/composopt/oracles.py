"""Brute-force reference computations used to check the solvers.

Nothing here calls the solvers under test, with one documented exception:
:func:`high_precision_prox_point` delegates to the inner-loop iteration of
:mod:`composopt.pagm` (itself checked against :func:`grid_minimize` in 1-D).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import OuterFunction, as_vec


@dataclass(frozen=True)
class GridSpec:
    """Box grid with successive zoom-ins around the incumbent.

    Each refinement keeps the resolution and shrinks the box to two grid
    steps either side of the current best point, so the spacing shrinks by a
    factor ``(resolution - 1) / 4`` per round.
    """

    lower: tuple
    upper: tuple
    resolution: int = 1201
    refine_rounds: int = 3

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, float))
        hi = np.atleast_1d(np.asarray(self.upper, float))
        object.__setattr__(self, "lower", tuple(lo))
        object.__setattr__(self, "upper", tuple(hi))
        if lo.shape != hi.shape:
            raise ValueError("lower and upper must have the same length")
        if self.resolution < 3:
            raise ValueError("resolution must be at least 3")
        if not np.all(hi > lo):
            raise ValueError("upper must exceed lower componentwise")
        if self.refine_rounds < 1:
            raise ValueError("refine_rounds must be at least 1")

    @property
    def dim(self):
        return len(self.lower)

    @classmethod
    def default(cls, dim, radius=6.0):
        if dim == 1:
            return cls((-radius,), (radius,), 1201, 3)
        return cls((-radius,) * dim, (radius,) * dim, 241, 6)

    def accuracy(self):
        """Final grid spacing per coordinate (the incumbent is within half of it).

        This assumes exact objective values. See :meth:`float_resolution` for
        the floating-point floor.
        """
        width = np.asarray(self.upper) - np.asarray(self.lower)
        h = width / (self.resolution - 1)
        return h * (4.0 / (self.resolution - 1)) ** (self.refine_rounds - 1)

    @staticmethod
    def float_resolution(value, growth):
        """Distance below which an argmin is not resolvable in double precision.

        If the objective grows like ``growth * r**2`` away from its minimizer
        and its minimum is ``value``, points within
        ``sqrt(eps * max(1, |value|) / growth)`` differ by less than one
        rounding unit. Near flat minimizers this floor exceeds :meth:`accuracy`.
        """
        eps = np.finfo(float).eps
        return float(np.sqrt(eps * max(1.0, abs(float(value))) / growth))


def _evaluate(objective, pts, vectorized):
    if vectorized:
        vals = np.asarray(objective(pts), float).reshape(-1)
    else:
        vals = np.array([float(objective(p)) for p in pts])
    # NaN never wins
    return np.where(np.isnan(vals), np.inf, vals)


def grid_minimize(objective, grid: GridSpec, vectorized=True):
    """Best grid point of ``objective`` on a 1-D or 2-D box.

    ``objective`` receives an ``(n, dim)`` array when ``vectorized`` and
    returns ``n`` values. Exact ties resolve to the lexicographically
    smallest point. Returns ``(point, value)``.

    The zoom assumes the incumbent lies within two grid steps of the true
    minimizer. That holds for smooth objectives and for kinks along grid
    axes or diagonals; a kink at another angle can stall the zoom near (not
    at) the minimizer, so such objectives should be gridded in coordinates
    that align the kink.
    """
    dim = grid.dim
    if dim > 2:
        raise ValueError("grid oracles are limited to dimension <= 2")
    lo0 = np.asarray(grid.lower)
    hi0 = np.asarray(grid.upper)
    lo, hi = lo0.copy(), hi0.copy()
    best = None
    best_val = np.inf
    n = grid.resolution
    for _ in range(grid.refine_rounds):
        axes = [np.linspace(lo[i], hi[i], n) for i in range(dim)]
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, dim)
        vals = _evaluate(objective, pts, vectorized)
        k = int(np.argmin(vals))
        if vals[k] <= best_val:
            best, best_val = pts[k].copy(), float(vals[k])
        step = (hi - lo) / (n - 1)
        lo = np.maximum(best - 2.0 * step, lo0)
        hi = np.minimum(best + 2.0 * step, hi0)
    return best, best_val


def grid_prox(h: OuterFunction, mu, u, grid: GridSpec | None = None):
    """Grid minimizer of ``h(v) + ||v - u||^2 / (2 mu)`` (dimension <= 2)."""
    u = as_vec(u, h.dim, "u")
    grid = grid or GridSpec.default(h.dim)
    return grid_minimize(lambda V: h.value(V) + np.sum((V - u) ** 2, axis=1) / (2 * mu), grid)


def grid_maximize_G(h: OuterFunction, mu, u, grid: GridSpec | None = None) -> float:
    """Grid maximum of ``y'u/mu - ||y||^2/(2 mu) - h(y)``."""
    u = as_vec(u, h.dim, "u")
    grid = grid or GridSpec.default(h.dim)

    def neg(Y):
        return -(Y @ u / mu - np.sum(Y * Y, axis=1) / (2 * mu) - h.value(Y))

    _, val = grid_minimize(neg, grid)
    return -val


def finite_difference_gradient(fn, z, step=1e-5):
    """Central differences, one coordinate at a time."""
    if not step > 0:
        raise ValueError("step must be positive")
    z = np.asarray(z, float)
    grad = np.empty_like(z)
    for j in range(z.shape[0]):
        e = np.zeros_like(z)
        e[j] = step
        grad[j] = (fn(z + e) - fn(z - e)) / (2.0 * step)
    return grad


def finite_difference_jacobian(fn, x, step=1e-6):
    x = np.asarray(x, float)
    cols = []
    for j in range(x.shape[0]):
        e = np.zeros_like(x)
        e[j] = step
        cols.append((np.asarray(fn(x + e)) - np.asarray(fn(x - e))) / (2.0 * step))
    return np.stack(cols, axis=-1)


def high_precision_prox_point(fi, z, mu, **kw):
    """``argmin_x h(g(x)) + ||x - z||^2 / (2 mu)`` to tolerance ``1e-12``.

    ``fi`` is a ``(SmoothMap, ConvexOuter)`` pair.
    """
    from .pagm import proximal_point_exact

    kw.setdefault("tol", 1e-12)
    return proximal_point_exact(fi, z, mu, **kw)
