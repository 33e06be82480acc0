"""Independent reference solver for small prox-linear subproblems (tests only).

The dual ``min (t/2) lam'M lam - c'lam`` over the box (l1) or simplex (max)
is solved exactly by enumerating active sets and checking KKT conditions,
so it shares no code with the library's closed forms or dual iteration.
"""
import itertools

import numpy as np

from composopt.proxlib import L1Norm, MaxCoordinate

KKT_TOL = 1e-9


def _lstsq(K, rhs):
    sol = np.linalg.lstsq(K, rhs, rcond=None)[0]
    if np.max(np.abs(K @ sol - rhs), initial=0.0) > 1e-9 * max(1.0, np.max(np.abs(rhs), initial=0.0)):
        return None
    return sol


def _box_dual(M, c, t, w):
    m = len(c)
    for pattern in itertools.product((-1, 0, 1), repeat=m):
        pat = np.array(pattern)
        lam = w * pat.astype(float)
        free = pat == 0
        if free.any():
            rhs = c[free] - t * M[np.ix_(free, ~free)] @ lam[~free]
            sol = _lstsq(t * M[np.ix_(free, free)], rhs)
            if sol is None:
                continue
            lam[free] = sol
        if np.any(np.abs(lam) > w + KKT_TOL):
            continue
        grad = t * M @ lam - c
        if np.all(grad[pat == 1] <= KKT_TOL) and np.all(grad[pat == -1] >= -KKT_TOL):
            return lam
    raise RuntimeError("no KKT point found")


def _simplex_dual(M, c, t):
    m = len(c)
    for size in range(1, m + 1):
        for S in itertools.combinations(range(m), size):
            S = list(S)
            k = len(S)
            K = np.zeros((k + 1, k + 1))
            K[:k, :k] = t * M[np.ix_(S, S)]
            K[:k, k] = 1.0
            K[k, :k] = 1.0
            sol = _lstsq(K, np.concatenate([c[S], [1.0]]))
            if sol is None:
                continue
            lam = np.zeros(m)
            lam[S] = sol[:k]
            nu = sol[k]
            if np.any(lam < -KKT_TOL):
                continue
            slack = t * M @ lam - c + nu
            if np.all(slack >= -KKT_TOL):
                return lam
    raise RuntimeError("no KKT point found")


def prox_linear_reference(sub):
    A, b, w, t = sub.A, sub.b, sub.center, sub.step
    M = A @ A.T
    c = A @ w + b
    h = sub.outer
    if isinstance(h, MaxCoordinate):
        lam = _simplex_dual(M, c, t)
    elif isinstance(h, L1Norm):
        lam = _box_dual(M, c, t, h.weight)
    else:
        raise TypeError(type(h))
    return w - t * A.T @ lam
