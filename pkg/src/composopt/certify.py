"""Stationarity certificates and trace audits.

Audits re-check, on realized traces, the exact inequalities that the
convergence arguments chain together. Every check allows only floating-point
slack (``1e-8`` relative plus ``1e-12`` absolute, see :func:`core.slack`).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import oracles
from .core import (
    CompositionalProblem,
    DCProblem,
    ScgmParams,
    SmoothMap,
    as_vec,
    slack,
)
from .pagm import PagmTrace, evaluate_envelopes, proximal_point_exact
from .scgm import ScgmTrace


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    # min over instances of (allowed - observed); negative means violated
    worst_margin: float
    worst_index: int = -1
    detail: str = ""


@dataclass
class AuditReport:
    checks: list = field(default_factory=list)

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def __getitem__(self, name):
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def __contains__(self, name):
        return any(c.name == name for c in self.checks)

    def add(self, name, lhs, rhs, detail=""):
        """Record ``lhs[i] <= rhs[i]`` for every ``i`` (with slack)."""
        lhs = np.atleast_1d(np.asarray(lhs, float))
        rhs = np.atleast_1d(np.asarray(rhs, float))
        if lhs.size == 0:
            self.checks.append(Check(name, True, np.inf, -1, detail or "vacuous"))
            return
        tol = np.array([slack(a, b) for a, b in zip(lhs, rhs)])
        margin = rhs - lhs
        i = int(np.argmin(margin + tol))
        ok = bool(np.all(margin + tol >= 0))
        self.checks.append(Check(name, ok, float(margin[i]), i, detail))

    def as_dict(self):
        return {
            "passed": self.passed,
            "checks": [
                dict(name=c.name, passed=c.passed, worst_margin=c.worst_margin,
                     worst_index=c.worst_index, detail=c.detail)
                for c in self.checks
            ],
        }

    def lines(self):
        return [
            f"{'PASS' if c.passed else 'FAIL'}  {c.name:<22} worst margin {c.worst_margin:.3e}"
            + (f"  ({c.detail})" if c.detail else "")
            for c in self.checks
        ]


# ---------------------------------------------------------------------------
# certificates


@dataclass(frozen=True)
class ScgmCertificate:
    x: np.ndarray
    v: np.ndarray
    radius: float
    residual: float
    subgradient_witness: np.ndarray

    def valid(self, delta, epsilon):
        return self.radius <= delta and self.residual <= epsilon


def scgm_certificate(problem: CompositionalProblem, params: ScgmParams, x, v, n_competitors=100, seed=0):
    """Witness for chain-rule ``(delta, epsilon)``-stationarity at ``x``.

    ``v`` must be a prox point of ``h`` at ``g(x)``; it is checked against the
    competitor ``g(x)`` itself and ``n_competitors`` random points.
    """
    g, h, mu = problem.g, problem.h, params.mu
    x = as_vec(x, problem.dim)
    v = as_vec(v, h.dim, "v")
    u = np.asarray(g.value(x), float).reshape(h.dim)
    obj = float(h.value(v)) + float(np.dot(v - u, v - u)) / (2 * mu)
    rng = np.random.default_rng(seed)
    scale = max(1.0, float(np.linalg.norm(u)))
    W = np.vstack([u, u + scale * rng.standard_normal((n_competitors, h.dim))])
    comp = h.value(W) + np.sum((W - u) ** 2, axis=1) / (2 * mu)
    if np.any(obj > comp + np.array([slack(obj, cv) for cv in comp])):
        raise ValueError("v is not a prox point of h at g(x): a competitor does better")
    J = g.jacobian(x)
    return ScgmCertificate(
        x=x,
        v=v,
        radius=float(np.linalg.norm(u - v)),
        residual=float(np.linalg.norm(J.T @ (u - v) / mu)),
        subgradient_witness=(u - v) / mu,
    )


@dataclass(frozen=True)
class DcCertificate:
    x: np.ndarray
    x_prime: np.ndarray
    x_dprime: np.ndarray
    xi1: np.ndarray
    xi2: np.ndarray
    z: np.ndarray

    @property
    def gaps(self):
        return (
            float(np.linalg.norm(self.xi1 - self.xi2)),
            float(np.linalg.norm(self.x - self.x_prime)),
            float(np.linalg.norm(self.x - self.x_dprime)),
        )

    def valid(self, epsilon):
        return max(self.gaps) <= epsilon


def dc_certificate(problem: DCProblem, params, trace: PagmTrace, tau=None) -> DcCertificate:
    """Witness tuple for near criticality of ``x1^{tau+1}``.

    Uses the oracle proximal points at ``z^tau`` from a verify-mode trace;
    for traces run without oracles they are computed here at ``z^tau`` only.
    """
    tau = trace.tau if tau is None else tau
    mu = params.mu
    z = trace.states[tau - 1].z
    if trace.oracle is not None:
        xs1, xs2 = trace.oracle.x1_star[tau], trace.oracle.x2_star[tau]
    else:
        env = evaluate_envelopes(problem, z, mu, tol=1e-12)
        xs1, xs2 = env.x1_star, env.x2_star
    return DcCertificate(
        x=trace.states[tau].x1,
        x_prime=xs1,
        x_dprime=xs2,
        xi1=(z - xs1) / mu,
        xi2=(z - xs2) / mu,
        z=z,
    )


# ---------------------------------------------------------------------------
# audits


def audit_trace_scgm(trace: ScgmTrace) -> AuditReport:
    """Check the per-step decrease, the averaged residual bound, the radius
    bound and the prox-point norm bound on a completed trace.

    The decrease is checked in two forms with the theorem constants from
    ``trace.params`` (not the step actually used):
    ``descent``: ``env_{k+1} <= env_k - C/(2 mu) ||x_{k+1} - x_k||^2`` and
    ``descent_residual``: ``residual_k^2 <= 4 gamma (env_k - env_{k+1})``.
    """
    p = trace.params
    st = trace.states
    K = len(st) - 1
    env = np.array([s.envelope for s in st])
    res2 = np.array([s.residual**2 for s in st[:K]])
    steps = np.array([float(np.sum((st[k + 1].x - st[k].x) ** 2)) for k in range(K)])
    rep = AuditReport()
    rep.add("descent", env[1:], env[:-1] - p.C / (2 * p.mu) * steps)
    rep.add("descent_residual", res2, 4 * p.gamma * (env[:-1] - env[1:]))
    rep.add("telescoped", res2.mean(), 4 * p.Delta * p.gamma / K, detail=f"K={K}")
    rep.add("radius", [s.radius for s in st], np.full(len(st), 2 * p.mu * p.L_h))
    rep.add("prox_norm", [float(np.linalg.norm(s.v)) for s in st], np.full(len(st), p.C_v))
    return rep


def audit_scgm_rows(rows, meta) -> AuditReport:
    """The same audit from serialized trace rows plus the parameter sidecar."""
    if "params" in meta:
        meta = {**meta["params"], **{k: v for k, v in meta.items() if k != "params"}}
    K = len(rows) - 1
    C, mu, gamma = meta["C"], meta["mu"], meta["gamma"]
    env = np.array([r["envelope"] for r in rows])
    res2 = np.array([r["residual"] ** 2 for r in rows[:K]])
    steps = np.array([r["step_norm"] ** 2 for r in rows[:K]])
    rep = AuditReport()
    rep.add("descent", env[1:], env[:-1] - C / (2 * mu) * steps)
    rep.add("descent_residual", res2, 4 * gamma * (env[:-1] - env[1:]))
    rep.add("telescoped", res2.mean(), 4 * meta["Delta"] * gamma / K, detail=f"K={K}")
    rep.add("radius", [r["radius"] for r in rows], np.full(K + 1, 2 * mu * meta["L_h"]))
    if "v_norm_max" in meta:
        rep.add("prox_norm", meta["v_norm_max"], meta["C_v"])
    return rep


def pagm_telescoped_rhs(trace: PagmTrace):
    p, o = trace.params, trace.oracle
    K = trace.K
    return (
        147.0 * o.delta[0] / p.theta**2
        + 7.0 * o.Delta[0]
        + 49.0 * o.Delta[K]
        + 32.0 * p.mu**2 * (o.f_mu[1] - o.f_mu[K + 1]) / p.gamma
    ) / K


def audit_trace_pagm(trace: PagmTrace, C1=None, C=None, n_samples=200, seed=0) -> AuditReport:
    """Verify-mode audit: per-step contraction of both inner sequences, the
    averaged ``Delta_k + delta_k`` bound, ``Delta_K <= 8 mu C1`` (with its
    premise), and sampled linearization / proximal-Lipschitz inequalities."""
    if trace.oracle is None:
        raise ValueError("audit_trace_pagm needs a verify-mode trace")
    p, o, prob = trace.params, trace.oracle, trace.problem
    K = trace.K
    rep = AuditReport()
    q = p.contraction
    for i, dist in ((1, o.dist1), (2, o.dist2)):
        after = np.array([a for a, _ in dist])
        before = np.array([b for _, b in dist])
        # absolute slack 1e-8 on squared distances
        rep.add(f"contraction_{i}", after, q * before + 1e-8 - 1e-12)
    avg = float(np.mean([o.Delta[k] + o.delta[k] for k in range(1, K + 1)]))
    rep.add("telescoped", avg, pagm_telescoped_rhs(trace), detail=f"K={K}")
    if C1 is not None:
        zK = trace.states[K - 1].z
        prem = [
            float(h.value(g.value(zK))) - h.lower_bound
            for g, h in (prob.component(1), prob.component(2))
        ]
        rep.add("C1_premise", prem, [C1, C1])
        rep.add("Delta_K", o.Delta[K], 8 * p.mu * C1)
    if C is not None:
        rep.add("C_premise", o.f_mu[1] - o.f_mu[K + 1], C)
    lin, lip = sampled_model_checks(prob, p.mu, n_samples, seed)
    rep.checks.extend([lin, lip])
    return rep


def sampled_model_checks(problem: DCProblem, mu, n_samples=200, seed=0, radius=3.0):
    """Two-sided linearization error and proximal-point Lipschitz bound on
    random pairs."""
    rng = np.random.default_rng(seed)
    rho, d = problem.rho, problem.dim
    lhs, rhs = [], []
    for _ in range(n_samples):
        z, y = rng.uniform(-radius, radius, (2, d))
        for i in (1, 2):
            g, h = problem.component(i)
            model = h.value(g.value(y) + g.jacobian(y) @ (z - y))
            lhs.append(abs(float(h.value(g.value(z))) - float(model)))
            rhs.append(rho / 2 * float(np.sum((z - y) ** 2)))
    rep = AuditReport()
    rep.add("linearization", lhs, rhs)
    lhs2, rhs2 = [], []
    n_pairs = max(1, n_samples // 10)
    for _ in range(n_pairs):
        z = rng.uniform(-radius, radius, d)
        zp = z + rng.normal(scale=0.5, size=d)
        for i in (1, 2):
            fi = problem.component(i)
            a = proximal_point_exact(fi, z, mu, rho=rho, tol=1e-12)
            b = proximal_point_exact(fi, zp, mu, rho=rho, x0=a, tol=1e-12)
            lhs2.append(float(np.linalg.norm(a - b)))
            rhs2.append(float(np.linalg.norm(z - zp)) / (1 - mu * rho))
    rep.add("prox_lipschitz", lhs2, rhs2)
    return rep["linearization"], rep["prox_lipschitz"]


# ---------------------------------------------------------------------------
# declared-constant validation


@dataclass
class ConstantsReport:
    declared: dict
    observed: dict
    jacobian_fd_error: float

    @property
    def margins(self):
        return {k: self.declared[k] - self.observed[k] for k in self.declared}

    @property
    def passed(self):
        return all(m >= -slack(self.declared[k]) for k, m in self.margins.items()) and (
            self.jacobian_fd_error <= 1e-6
        )


def validate_constants(g: SmoothMap, samples=500, seed=0, box=3.0) -> ConstantsReport:
    """Sample the declared ``L_g``, ``beta``, ``C_g`` and check the Jacobian.

    Half of the pairs are drawn independently in ``[-box, box]^d``, half as
    close neighbours, since local slopes are what the constants bound.
    """
    if samples < 2:
        raise ValueError("samples must be at least 2")
    rng = np.random.default_rng(seed)
    d = g.dim_in
    X = rng.uniform(-box, box, (samples, d))
    Y = rng.uniform(-box, box, (samples, d))
    near = samples // 2
    Y[:near] = X[:near] + rng.normal(scale=1e-3, size=(near, d))
    lg = beta = cg = 0.0
    fd_err = 0.0
    for x, y in zip(X, Y):
        dxy = float(np.linalg.norm(x - y))
        gx, gy = np.asarray(g.value(x)), np.asarray(g.value(y))
        Jx, Jy = g.jacobian(x), g.jacobian(y)
        cg = max(cg, float(np.linalg.norm(gx)))
        if dxy > 0:
            lg = max(lg, float(np.linalg.norm(gx - gy)) / dxy)
            beta = max(beta, float(np.linalg.norm(Jx - Jy, 2)) / dxy)
    for x in X[: min(samples, 50)]:
        J_fd = oracles.finite_difference_jacobian(g.value, x).reshape(g.dim_out, d)
        fd_err = max(fd_err, float(np.max(np.abs(J_fd - g.jacobian(x)))))
    return ConstantsReport(
        declared=dict(L_g=g.L_g, beta=g.beta, C_g=g.C_g),
        observed=dict(L_g=lg, beta=beta, C_g=cg),
        jacobian_fd_error=fd_err,
    )


def audit_pagm_rows(rows, meta) -> AuditReport:
    """Offline audit of a verify-mode PAGM trace from its CSV rows and sidecar.

    The sampled linearization and proximal-Lipschitz checks need the problem
    itself and are not part of this function.
    """
    if not meta.get("verified"):
        raise ValueError("trace was not run in verify mode; oracle columns are empty")
    p = meta["params"]
    K = len(rows) - 1
    rep = AuditReport()
    q = 1.0 - p["t"] * p["c"]
    for i in (1, 2):
        dist = np.asarray(meta[f"dist{i}"], float).reshape(-1, 2)
        rep.add(f"contraction_{i}", dist[:, 0], q * dist[:, 1] + 1e-8 - 1e-12)
    by_k = {r["k"]: r for r in rows}
    avg = float(np.mean([by_k[k]["Delta_k"] + by_k[k]["delta_k"] for k in range(1, K + 1)]))
    rhs = (
        147.0 * meta["delta0"] / p["theta"] ** 2
        + 7.0 * meta["Delta0"]
        + 49.0 * by_k[K]["Delta_k"]
        + 32.0 * p["mu"] ** 2 * (by_k[1]["fmu"] - by_k[K + 1]["fmu"]) / p["gamma"]
    ) / K
    rep.add("telescoped", avg, rhs, detail=f"K={K}")
    if meta.get("C1") is not None:
        rep.add("Delta_K", by_k[K]["Delta_k"], 8 * p["mu"] * meta["C1"])
    if meta.get("C") is not None:
        rep.add("C_premise", by_k[1]["fmu"] - by_k[K + 1]["fmu"], meta["C"])
    return rep
