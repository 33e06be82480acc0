"""Smoothing compositional gradient method.

Each iteration takes a prox point ``v`` of ``h`` at ``g(x)``, forms the
envelope gradient ``J(x)'(g(x) - v) / mu`` and moves by ``1/gamma`` times it,
which is the exact minimizer of the quadratic model. After ``K`` steps one
iterate is drawn uniformly from ``1..K``.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .core import (
    CompositionalProblem,
    ScgmParams,
    TrajectoryError,
    as_vec,
    slack,
)


@dataclass(frozen=True)
class ScgmState:
    k: int
    x: np.ndarray
    gx: np.ndarray
    v: np.ndarray
    grad_surrogate: np.ndarray
    envelope: float
    objective: float

    @property
    def radius(self):
        return float(np.linalg.norm(self.gx - self.v))

    @property
    def residual(self):
        return float(np.linalg.norm(self.grad_surrogate))


@dataclass
class ScgmTrace:
    states: list
    params: ScgmParams
    tau: int
    rng_seed: int
    gamma: float
    times: list = field(default_factory=list)

    @property
    def K(self):
        return len(self.states) - 1

    @property
    def output(self):
        return self.states[self.tau - 1]

    @property
    def best(self):
        """Iterate among ``1..K`` with the smallest certificate residual."""
        return min(self.states[:-1], key=lambda s: s.residual)


def sample_index(seed, K):
    """Uniform draw from ``1..K`` using a Philox stream keyed by ``seed``."""
    rng = np.random.Generator(np.random.Philox(key=int(seed)))
    return 1 + int(rng.integers(K))


def evaluate_state(problem: CompositionalProblem, mu, x, k=0) -> ScgmState:
    g, h = problem.g, problem.h
    gx = np.asarray(g.value(x), float).reshape(g.dim_out)
    if not np.all(np.isfinite(gx)):
        raise TrajectoryError("non-finite inner map value", step=k)
    res = h.prox(mu, gx)
    v = res.point
    grad = g.jacobian(x).T @ (gx - v) / mu
    if not (np.all(np.isfinite(grad)) and np.isfinite(res.objective)):
        raise TrajectoryError("non-finite prox point or surrogate gradient", step=k)
    return ScgmState(
        k=k,
        x=x,
        gx=gx,
        v=v,
        grad_surrogate=grad,
        # envelope from the prox point already in hand, no second prox call
        envelope=res.objective,
        objective=float(h.value(gx)),
    )


def scgm_step(problem: CompositionalProblem, params: ScgmParams, x, gamma=None, k=0):
    """One update ``x+ = x - J(x)'(g(x) - v) / (mu gamma)``.

    Returns ``(x_next, state_at_x)``.
    """
    gamma = params.gamma if gamma is None else gamma
    x = as_vec(x, problem.dim)
    state = evaluate_state(problem, params.mu, x, k)
    x_next = x - state.grad_surrogate / gamma
    if not np.all(np.isfinite(x_next)):
        raise TrajectoryError("non-finite iterate", step=k)
    return x_next, state


def run_scgm(
    problem: CompositionalProblem,
    params: ScgmParams,
    x1,
    seed=0,
    gamma=None,
    strict=None,
) -> ScgmTrace:
    """Run exactly ``params.K`` iterations and record ``K + 1`` states.

    ``gamma`` overrides the step coefficient (negative controls). With
    ``strict`` (default: no override) the run aborts as soon as the envelope
    fails the sufficient-decrease inequality
    ``h_mu(g(x_{k+1})) <= h_mu(g(x_k)) - C/(2 mu) ||x_{k+1} - x_k||^2``.
    ``h(g(x_k)) <= H_max`` is always enforced since the prox-point bound
    depends on it.
    """
    gamma_used = params.gamma if gamma is None else float(gamma)
    strict = gamma is None if strict is None else strict
    x = as_vec(x1, problem.dim, "x1")
    mu, C = params.mu, params.C
    states, times = [], []
    t0 = time.perf_counter()
    for k in range(1, params.K + 2):
        st = evaluate_state(problem, mu, x, k)
        if st.objective > params.H_max + slack(params.H_max):
            raise TrajectoryError(
                f"h(g(x))={st.objective:.6g} exceeds H_max={params.H_max:.6g}; "
                "the prox-point bound C_v is no longer valid",
                step=k,
            )
        if states:
            prev = states[-1]
            dx = st.x - prev.x
            bound = prev.envelope - C / (2 * mu) * float(dx @ dx)
            if prev.envelope < st.envelope - slack(prev.envelope):
                if strict:
                    raise TrajectoryError("envelope increased", step=k - 1)
            if strict and st.envelope > bound + slack(prev.envelope, bound):
                raise TrajectoryError(
                    f"descent inequality violated: {st.envelope:.17g} > {bound:.17g}",
                    step=k - 1,
                )
        states.append(st)
        times.append(time.perf_counter() - t0)
        if k == params.K + 1:
            break
        x = st.x - st.grad_surrogate / gamma_used
        if not np.all(np.isfinite(x)):
            raise TrajectoryError("non-finite iterate", step=k)
    return ScgmTrace(
        states=states,
        params=params,
        tau=sample_index(seed, params.K),
        rng_seed=int(seed),
        gamma=gamma_used,
        times=times,
    )
