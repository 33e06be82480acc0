"""Single-loop prox-linear approximate gradient method for DC compositions.

For ``f = h2(g2) - h1(g1)`` the Moreau envelopes of the two weakly convex
parts give a smooth surrogate ``f_mu`` with gradient
``(x1*(z) - x2*(z)) / mu``. Each iteration replaces the two proximal points
by one prox-linear step from the previous estimates, then takes a gradient
step on ``z``.
"""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import (
    DCProblem,
    PagmParams,
    ParameterError,
    SolverError,
    TrajectoryError,
    as_vec,
)
from .proxlib import ProxLinearSubproblem, solve_prox_linear
from .scgm import sample_index

log = logging.getLogger(__name__)

VERIFY_MAX_DIM = 10


@dataclass(frozen=True)
class PagmState:
    k: int
    z: np.ndarray
    x1: np.ndarray
    x2: np.ndarray
    # (x1^{k+1} - x2^{k+1}) / mu; None on the final state
    approx_grad: Optional[np.ndarray] = None
    sub_exact: bool = True
    time_s: float = 0.0


@dataclass(frozen=True)
class EnvelopePair:
    f1_mu: float
    f2_mu: float
    x1_star: np.ndarray
    x2_star: np.ndarray
    mu: float

    @property
    def f_mu(self):
        return self.f2_mu - self.f1_mu

    @property
    def grad(self):
        return (self.x1_star - self.x2_star) / self.mu


@dataclass
class PagmOracle:
    """Exact-proximal-point quantities along a trajectory (verify mode).

    Lists are indexed by iteration ``k``; index 0 refers to the virtual
    predecessor ``z^0 = z^1 + gamma (x1^1 - x2^1) / mu``.
    """

    z0: np.ndarray
    x1_star: list
    x2_star: list
    f_mu: list
    delta: list  # delta_k, k = 0..K
    Delta: list  # Delta_k, k = 0..K+1
    dist1: list  # (||x1^{k+1}-x1*(z^k)||^2, ||x1^k-x1*(z^k)||^2), k = 1..K
    dist2: list


@dataclass
class PagmTrace:
    problem: DCProblem
    states: list
    params: PagmParams
    tau: int
    rng_seed: int
    sub_gap: list = field(default_factory=list)
    oracle: Optional[PagmOracle] = None

    @property
    def K(self):
        return len(self.states) - 1

    @property
    def output(self):
        """``x1^{tau+1}``."""
        return self.states[self.tau].x1

    @property
    def verified(self):
        return self.oracle is not None


def _rho_of(gi, hi):
    return hi.lipschitz * gi.beta


def pagm_inner_step(gi, hi, xi, z, mu, t, full_output=False, **kw):
    """One prox-linear step towards ``argmin_x h(g(x)) + ||x - z||^2/(2 mu)``."""
    A = np.asarray(gi.jacobian(xi), float).reshape(gi.dim_out, gi.dim_in)
    gxi = np.asarray(gi.value(xi), float).reshape(gi.dim_out)
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(gxi))):
        raise TrajectoryError("non-finite inner map value or Jacobian")
    sub = ProxLinearSubproblem(
        outer=hi,
        A=A,
        b=gxi - A @ xi,
        linear=(xi - z) / mu,
        anchor=xi,
        step=t,
    )
    return solve_prox_linear(sub, full_output=full_output, **kw)


def proximal_point_exact(fi, z, mu, t=None, rho=None, x0=None, tol=1e-10, max_iter=20_000, full_output=False):
    """``x*(z) = argmin_x h(g(x)) + ||x - z||^2 / (2 mu)`` by repeated inner steps.

    With ``z`` frozen the inner step contracts squared distances to ``x*(z)``
    by ``1 - t c`` (``c = 1/mu - rho``), so a step of length ``s`` certifies a
    distance of at most ``q s / (1 - q)`` with ``q = sqrt(1 - t c)``. Iteration
    stops once that bound is below ``tol``.
    """
    gi, hi = fi
    z = as_vec(z, gi.dim_in, "z")
    rho = _rho_of(gi, hi) if rho is None else rho
    if not 1.0 / mu > rho:
        raise ParameterError(f"violated 1/mu > rho: 1/mu={1.0 / mu:.6g}, rho={rho:.6g}")
    if t is None:
        t = 1.0 / (1.0 / mu + rho)
    c = 1.0 / mu - rho
    q = math.sqrt(max(1.0 - t * c, 0.0))
    factor = q / (1.0 - q) if q < 1.0 else math.inf
    x = z.copy() if x0 is None else as_vec(x0, gi.dim_in, "x0").copy()
    for it in range(1, max_iter + 1):
        x_new = pagm_inner_step(gi, hi, x, z, mu, t)
        step = float(np.linalg.norm(x_new - x))
        x = x_new
        if factor * step <= tol or step == 0.0:
            log.debug("proximal point converged in %d inner steps", it)
            return (x, it) if full_output else x
    raise SolverError(f"proximal point not within tol={tol} after {max_iter} inner steps")


def evaluate_envelopes(problem: DCProblem, z, mu, x0=None, **kw) -> EnvelopePair:
    x0 = (None, None) if x0 is None else x0
    pts, vals = [], []
    for i in (1, 2):
        g, h = problem.component(i)
        xs = proximal_point_exact((g, h), z, mu, x0=x0[i - 1], **kw)
        pts.append(xs)
        vals.append(float(h.value(g.value(xs))) + float(np.dot(xs - z, xs - z)) / (2 * mu))
    return EnvelopePair(vals[0], vals[1], pts[0], pts[1], mu)


def surrogate_value(problem: DCProblem, z, mu, **kw):
    return evaluate_envelopes(problem, z, mu, **kw).f_mu


def initial_gaps(problem: DCProblem, params: PagmParams, x1, x2, z):
    """``(delta_0, Delta_0)`` at the virtual predecessor of the first iterate."""
    z0 = z + params.gamma * (x1 - x2) / params.mu
    env = evaluate_envelopes(problem, z0, params.mu, tol=1e-12)
    d0 = float(np.sum((x1 - env.x1_star) ** 2) + np.sum((x2 - env.x2_star) ** 2))
    D0 = float(np.sum((env.x1_star - env.x2_star) ** 2))
    return d0, D0


def run_pagm(
    problem: DCProblem,
    params: PagmParams,
    x1_init=None,
    x2_init=None,
    z_init=None,
    seed=0,
    verify=False,
) -> PagmTrace:
    """``params.K`` iterations of (two prox-linear steps, one ``z`` step).

    Initial points default to the origin. The designated output is
    ``x1^{tau+1}`` with ``tau`` uniform on ``1..K``. With ``verify`` the exact
    proximal points at every ``z^k`` are computed as well (small instances).
    """
    d = problem.dim
    zero = np.zeros(d)
    x1 = as_vec(zero if x1_init is None else x1_init, d, "x1_init")
    x2 = as_vec(zero if x2_init is None else x2_init, d, "x2_init")
    z = as_vec(zero if z_init is None else z_init, d, "z_init")
    mu, t, gamma = params.mu, params.t, params.gamma
    if verify and max(d, problem.g1.dim_out, problem.g2.dim_out) > VERIFY_MAX_DIM:
        raise ValueError(f"verify mode is limited to dimensions <= {VERIFY_MAX_DIM}")

    x1_start, x2_start, z_start = x1, x2, z
    states, gaps = [], []
    t0 = time.perf_counter()
    for k in range(1, params.K + 1):
        try:
            x1n, i1 = pagm_inner_step(problem.g1, problem.h1, x1, z, mu, t, full_output=True)
            x2n, i2 = pagm_inner_step(problem.g2, problem.h2, x2, z, mu, t, full_output=True)
        except TrajectoryError as exc:
            raise TrajectoryError(str(exc), step=k) from None
        approx = (x1n - x2n) / mu
        states.append(
            PagmState(k, z, x1, x2, approx, i1["exact"] and i2["exact"], time.perf_counter() - t0)
        )
        gaps.append(max(i1["gap"], i2["gap"]))
        z = z - gamma * approx
        x1, x2 = x1n, x2n
        if not (np.all(np.isfinite(z)) and np.all(np.isfinite(x1)) and np.all(np.isfinite(x2))):
            raise TrajectoryError("non-finite iterate", step=k)
    states.append(PagmState(params.K + 1, z, x1, x2, None, True, time.perf_counter() - t0))

    trace = PagmTrace(
        problem=problem,
        states=states,
        params=params,
        tau=sample_index(seed, params.K),
        rng_seed=int(seed),
        sub_gap=gaps,
    )
    if verify:
        trace.oracle = compute_oracle(problem, params, states, x1_start, x2_start, z_start)
    return trace


def compute_oracle(problem, params, states, x1_start, x2_start, z_start) -> PagmOracle:
    mu = params.mu
    K = len(states) - 1
    z0 = z_start + params.gamma * (x1_start - x2_start) / mu
    zs = [z0] + [s.z for s in states]
    xs1, xs2, fmu = [], [], []
    warm = None
    for zk in zs:
        env = evaluate_envelopes(problem, zk, mu, x0=warm, tol=1e-12)
        warm = (env.x1_star, env.x2_star)
        xs1.append(env.x1_star)
        xs2.append(env.x2_star)
        fmu.append(env.f_mu)

    def sq(a):
        return float(np.dot(a, a))

    # states[k-1] holds iterate k; x_i^{k+1} is states[k]
    delta = [sq(states[0].x1 - xs1[0]) + sq(states[0].x2 - xs2[0])]
    dist1, dist2 = [], []
    for k in range(1, K + 1):
        cur, nxt = states[k - 1], states[k]
        dist1.append((sq(nxt.x1 - xs1[k]), sq(cur.x1 - xs1[k])))
        dist2.append((sq(nxt.x2 - xs2[k]), sq(cur.x2 - xs2[k])))
        delta.append(dist1[-1][0] + dist2[-1][0])
    Delta = [sq(a - b) for a, b in zip(xs1, xs2)]
    return PagmOracle(z0, xs1, xs2, fmu, delta, Delta, dist1, dist2)
