"""Hot numeric kernels (numba-compiled when available, numpy otherwise).

Everything here works on float64 arrays and plain scalars only, so the same
source runs under both backends. See :mod:`composopt._jit` for the switch.
"""
import numpy as np

from ._jit import kernel

BOX = 0
SIMPLEX = 1


@kernel
def soft_threshold(u, thr):
    return np.sign(u) * np.maximum(np.abs(u) - thr, 0.0)


@kernel
def capped_abs_prox(u, theta, mu):
    """Coordinatewise minimizer of ``min(|t|, theta) + (t - u)**2 / (2 mu)``.

    Returns ``(v, tie)``; ``tie`` is True when some coordinate had two
    candidates with equal cost (the smaller ``|t|`` is kept).
    """
    s = np.where(u >= 0.0, 1.0, -1.0)
    au = np.abs(u)
    # inner branch |t| <= theta: soft-threshold, clipped into the band
    t_in = s * np.minimum(np.maximum(au - mu, 0.0), theta)
    c_in = np.abs(t_in) + (t_in - u) ** 2 / (2.0 * mu)
    # outer branch |t| >= theta: the point itself or the band edge
    t_out = np.where(au >= theta, u, s * theta)
    c_out = theta + (t_out - u) ** 2 / (2.0 * mu)
    v = np.where(c_out < c_in, t_out, t_in)
    tie = np.any((c_out == c_in) & (np.abs(t_out) != np.abs(t_in)))
    return v, tie


@kernel
def project_simplex(y, radius):
    """Euclidean projection onto ``{x >= 0, sum(x) = radius}``."""
    n = y.shape[0]
    srt = np.sort(y)[::-1]
    css = np.cumsum(srt)
    idx = np.arange(1, n + 1)
    cand = (css - radius) / idx
    k = np.nonzero(srt - cand > 0.0)[0][-1]
    return np.maximum(y - cand[k], 0.0)


@kernel
def _project_dual(y, kind, weight):
    if kind == BOX:
        return np.minimum(np.maximum(y, -weight), weight)
    return project_simplex(y, weight)


@kernel
def _support(r, kind, weight):
    if kind == BOX:
        return weight * np.sum(np.abs(r))
    return weight * np.max(r)


@kernel
def dual_qp(M, c, kind, weight, t, lam0, tol_gap, tol_x, max_iter):
    """Accelerated projected gradient on the dual of a prox-linear subproblem.

    Minimizes ``(t/2) lam' M lam - c' lam`` over the dual set of a support
    function outer (``BOX``: weighted l1, ``SIMPLEX``: weighted max). With
    ``M = A A'`` and ``c = A w + b`` the primal point is ``w - t A' lam`` and
    ``A x + b = c - t M lam``; the duality gap is ``h(r) - lam' r``.

    Returns ``(lam, iterations, gap, converged)``.
    """
    lip = t * np.linalg.eigvalsh(M)[-1] * 1.01 + 1e-300
    lam = _project_dual(lam0.copy(), kind, weight)
    y = lam.copy()
    mom = 1.0
    gap = np.inf
    for it in range(1, max_iter + 1):
        ry = c - t * np.dot(M, y)
        lam_new = _project_dual(y + ry / lip, kind, weight)
        d = lam_new - lam
        r = c - t * np.dot(M, lam_new)
        gap = _support(r, kind, weight) - np.dot(lam_new, r)
        dx = t * np.sqrt(max(np.dot(d, np.dot(M, d)), 0.0))
        if gap <= tol_gap and dx <= tol_x:
            return lam_new, it, gap, True
        mom_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * mom * mom))
        if np.dot(y - lam_new, d) > 0.0:
            # gradient-based restart
            mom_new = 1.0
            y = lam_new.copy()
        else:
            y = lam_new + ((mom - 1.0) / mom_new) * d
        lam = lam_new
        mom = mom_new
    return lam, max_iter, gap, False


@kernel
def sqdist_rows(X, u):
    """Squared distances from each row of ``X`` to ``u``."""
    D = X - u
    return np.sum(D * D, axis=1)
