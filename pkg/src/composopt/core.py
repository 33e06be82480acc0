"""Problem objects, declared constants and derived step parameters."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

# max |d/ds sech^2(s)| = max |2 sech^2(s) tanh(s)|
SECH2_SLOPE = 4.0 / (3.0 * math.sqrt(3.0))


class ComposoptError(Exception):
    """Base class for library errors."""


class ParameterError(ComposoptError, ValueError):
    """A derived-parameter precondition does not hold."""


class ProxUnavailableError(ComposoptError):
    pass


class SolverError(ComposoptError):
    """An inner solver hit its iteration cap."""


class TrajectoryError(ComposoptError):
    """A run produced a non-finite value or broke a checked inequality."""

    def __init__(self, message, step=None):
        super().__init__(message if step is None else f"step {step}: {message}")
        self.step = step


def as_vec(x, dim=None, name="x"):
    v = np.atleast_1d(np.asarray(x, dtype=float))
    if v.ndim != 1:
        raise ValueError(f"{name} must be a vector, got shape {v.shape}")
    if dim is not None and v.shape[0] != dim:
        raise ValueError(f"{name} has dimension {v.shape[0]}, expected {dim}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} has non-finite entries")
    return v


@dataclass(frozen=True)
class ProxResult:
    point: np.ndarray
    objective: float
    multiplicity_hint: bool = False


@dataclass(frozen=True)
class SmoothMap:
    """A C^1 map ``g: R^d -> R^m`` with declared constants.

    ``value`` must accept a single point (shape ``(d,)``) and should also
    accept a batch (shape ``(n, d)``) when it is used with the grid oracles.
    ``jacobian`` returns the ``(m, d)`` Jacobian at a single point.
    """

    dim_in: int
    dim_out: int
    value: Callable[[np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray], np.ndarray]
    L_g: float
    beta: float
    C_g: float
    name: str = "g"

    def __call__(self, x):
        return self.value(x)


def tanh_affine(A, b, name="tanh-affine") -> SmoothMap:
    """``g(x) = tanh(A x + b)`` componentwise, with exact declared constants.

    ``L_g = ||A||_op``; ``beta = SECH2_SLOPE * max_j ||a_j|| * ||A||_op``
    (row ``j`` of the Jacobian moves by at most ``SECH2_SLOPE |a_j'(x-y)|``);
    ``C_g = sqrt(m)`` because ``|tanh| < 1``.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float).reshape(A.shape[0])
    opn = float(np.linalg.norm(A, 2))
    rown = float(np.max(np.linalg.norm(A, axis=1)))

    def value(x):
        return np.tanh(np.asarray(x, dtype=float) @ A.T + b)

    def jacobian(x):
        s = 1.0 - np.tanh(A @ x + b) ** 2
        return s[:, None] * A

    return SmoothMap(
        dim_in=A.shape[1],
        dim_out=A.shape[0],
        value=value,
        jacobian=jacobian,
        L_g=opn,
        beta=SECH2_SLOPE * rown * opn,
        C_g=math.sqrt(A.shape[0]),
        name=name,
    )


class OuterFunction:
    """Lipschitz outer function ``h: R^m -> R`` with a prox oracle.

    Subclasses implement ``value`` (vectorized over a leading batch axis) and
    ``prox``; ``subgradient_contains`` is optional and only used by audits.
    ``minimizer`` is a point where ``h`` attains ``lower_bound`` when known.
    """

    convex = False

    def __init__(self, dim, lipschitz, lower_bound, minimizer=None, name="h"):
        self.dim = int(dim)
        self.lipschitz = float(lipschitz)
        self.lower_bound = float(lower_bound)
        self.minimizer = None if minimizer is None else as_vec(minimizer, self.dim)
        self.name = name

    def value(self, y):
        raise NotImplementedError

    def __call__(self, y):
        return self.value(y)

    def prox(self, mu, u) -> ProxResult:
        raise ProxUnavailableError(f"{self.name} has no prox oracle")

    def subgradient_contains(self, v, s, atol=1e-9) -> bool:
        raise NotImplementedError(f"{self.name} has no subdifferential oracle")

    def __repr__(self):
        return f"{type(self).__name__}(dim={self.dim})"


class ConvexOuter(OuterFunction):
    """Convex Lipschitz outer function whose composition with an affine map
    has a computable prox.

    ``dual_kind`` / ``dual_weight`` describe the conjugate's domain for
    support-function outers (see :mod:`composopt.kernels`); ``None`` means the
    generic prox-of-conjugate path is used by the subproblem solver.
    """

    convex = True
    dual_kind: Optional[int] = None
    dual_weight: float = 1.0

    def affine_prox(self, mu, A, b, u, **kw):
        from .proxlib import affine_prox

        return affine_prox(self, mu, A, b, u, **kw)


@dataclass(frozen=True)
class CompositionalProblem:
    g: SmoothMap
    h: OuterFunction
    name: str = "compositional"

    def __post_init__(self):
        if self.g.dim_out != self.h.dim:
            raise ValueError(
                f"g maps into R^{self.g.dim_out} but h is defined on R^{self.h.dim}"
            )

    @property
    def dim(self):
        return self.g.dim_in

    def objective(self, x):
        return float(self.h.value(self.g.value(as_vec(x, self.dim))))


@dataclass(frozen=True)
class DCProblem:
    """``min_x h2(g2(x)) - h1(g1(x))`` with convex Lipschitz ``h1, h2``."""

    g1: SmoothMap
    g2: SmoothMap
    h1: ConvexOuter
    h2: ConvexOuter
    name: str = "dc"
    rho: float = field(init=False)

    def __post_init__(self):
        if self.g1.dim_in != self.g2.dim_in:
            raise ValueError("g1 and g2 must share the input dimension")
        for g, h, i in ((self.g1, self.h1, 1), (self.g2, self.h2, 2)):
            if g.dim_out != h.dim:
                raise ValueError(f"g{i} maps into R^{g.dim_out} but h{i} is on R^{h.dim}")
            if not h.convex:
                raise ValueError(f"h{i} must be convex")
        L = max(self.h1.lipschitz, self.h2.lipschitz)
        beta = max(self.g1.beta, self.g2.beta)
        rho = L * beta
        if not rho > 0:
            raise ValueError("weak-convexity modulus rho = L*beta must be positive")
        object.__setattr__(self, "rho", rho)

    @property
    def dim(self):
        return self.g1.dim_in

    def component(self, i):
        return (self.g1, self.h1) if i == 1 else (self.g2, self.h2)

    def f1(self, x):
        return float(self.h1.value(self.g1.value(x)))

    def f2(self, x):
        return float(self.h2.value(self.g2.value(x)))

    def objective(self, x):
        x = as_vec(x, self.dim)
        return self.f2(x) - self.f1(x)


# ---------------------------------------------------------------------------
# smoothing compositional gradient parameters


@dataclass(frozen=True)
class ScgmParams:
    delta: float
    epsilon: float
    mu: float
    gamma: float
    K: int
    C: float
    C_v: float
    Delta: float
    H_max: float
    L_h: float
    K_real: float


def default_H_max(problem: CompositionalProblem) -> float:
    """Upper bound on ``h(g(x))`` from Lipschitz continuity around an anchor.

    ``h(g(x)) <= h(a) + L_h (C_g + ||a||)`` for any anchor ``a``; the anchor is
    the declared minimizer of ``h`` (so ``h(a)`` is the lower bound), or the
    origin when no minimizer is declared.
    """
    h, g = problem.h, problem.g
    a = h.minimizer if h.minimizer is not None else np.zeros(h.dim)
    return float(h.value(a)) + h.lipschitz * (g.C_g + float(np.linalg.norm(a)))


def derive_scgm_params(problem: CompositionalProblem, delta, epsilon, x1, H_max=None) -> ScgmParams:
    """Step size, smoothing and iteration budget for a target ``(delta, epsilon)``.

    ``mu = delta / (2 L_h)``, ``gamma = 2 C / mu`` and
    ``K = ceil(16 L_h C Delta / (delta epsilon^2))`` where
    ``C = L_g^2 + beta C_g + C_v L_g``, ``C_v = C_g + sqrt(2 mu (H_max - h_low))``
    and ``Delta = h(g(x1)) - h_low``.
    """
    g, h = problem.g, problem.h
    if not (delta > 0 and math.isfinite(delta)):
        raise ParameterError(f"delta must be positive, got {delta}")
    if not (epsilon > 0 and math.isfinite(epsilon)):
        raise ParameterError(f"epsilon must be positive, got {epsilon}")
    if not h.lipschitz > 0:
        raise ParameterError("the outer Lipschitz constant L_h must be positive")
    x1 = as_vec(x1, problem.dim, "x1")
    f1 = problem.objective(x1)
    if H_max is None:
        H_max = default_H_max(problem)
    H_max = float(H_max)
    if H_max < h.lower_bound:
        raise ParameterError(f"H_max={H_max} is below the lower bound {h.lower_bound}")
    if H_max < f1:
        raise ParameterError(f"H_max={H_max} is below h(g(x1))={f1}")
    if g.beta > g.L_g:
        warnings.warn(
            "beta > L_g: the curvature constant C = L_g^2 + beta*C_g + C_v*L_g may not "
            "dominate the true envelope curvature (which needs C_v*beta); descent checks "
            "can fail",
            stacklevel=2,
        )
    L_h = h.lipschitz
    mu = delta / (2.0 * L_h)
    C_v = g.C_g + math.sqrt(2.0 * mu * (H_max - h.lower_bound))
    C = g.L_g**2 + g.beta * g.C_g + C_v * g.L_g
    gamma = 2.0 * C / mu
    Delta = f1 - h.lower_bound
    K_real = 16.0 * L_h * C * Delta / (delta * epsilon**2)
    K = max(1, math.ceil(K_real))
    return ScgmParams(
        delta=float(delta),
        epsilon=float(epsilon),
        mu=mu,
        gamma=gamma,
        K=K,
        C=C,
        C_v=C_v,
        Delta=Delta,
        H_max=H_max,
        L_h=L_h,
        K_real=K_real,
    )


# ---------------------------------------------------------------------------
# prox-linear approximate gradient parameters


@dataclass(frozen=True)
class PagmParams:
    mu: float
    t: float
    rho: float
    c: float
    theta: float
    L_mu: float
    gamma: float
    K: int
    sigma: float
    gamma_theorem: float

    @property
    def contraction(self):
        """Per-step factor ``1 - t c`` on squared distances."""
        return 1.0 - self.t * self.c

    def check(self):
        """Recompute every derived value from ``(mu, t, rho)``; True if all match."""
        fresh = _pagm_formulas(self.mu, self.t, self.rho)
        return all(getattr(self, k) == v for k, v in fresh.items())


def _pagm_formulas(mu, t, rho):
    c = 1.0 / mu - rho
    theta = t * c
    if not 0.0 < theta < 1.0:
        raise ParameterError(f"t*c = {theta:.6g} is outside (0, 1)")
    L_mu = 2.0 / (mu - mu**2 * rho)
    gamma = min(
        1.0 / (4.0 * L_mu),
        math.sqrt(t**3 * c**4 * mu**3 / (48.0 * (1.0 - t**2 * c**2))),
    )
    return dict(c=c, theta=theta, L_mu=L_mu, gamma_theorem=gamma, sigma=1.0 / (mu * c))


def derive_pagm_params(
    problem: DCProblem, mu, t, K=1, gamma=None, theorem_mode=False, enforce=True
) -> PagmParams:
    """Derived constants for the prox-linear approximate gradient method.

    Requires ``1/mu > max(1, rho)`` and ``1/t >= 1/mu + rho``. ``gamma``
    overrides the theorem step (tests and negative controls only);
    ``enforce=False`` lets a run go through with ``1/t < 1/mu + rho`` as long as
    the formulas stay defined. ``theorem_mode`` asserts
    ``mu <= min(1, 1/rho)``, which the first precondition already implies; it
    is kept as an explicit guard.
    """
    rho = problem.rho
    if not (mu > 0 and t > 0):
        raise ParameterError("mu and t must be positive")
    if not 1.0 / mu > max(1.0, rho):
        raise ParameterError(
            f"violated 1/mu > max(1, rho): 1/mu={1.0 / mu:.6g}, rho={rho:.6g}"
        )
    if theorem_mode and not mu <= min(1.0, 1.0 / rho):
        raise ParameterError(f"violated mu <= min(1, 1/rho): mu={mu}, rho={rho}")
    # t = 1/(1/mu + rho) computed in floating point must pass
    if enforce and not t * (1.0 / mu + rho) <= 1.0 + 1e-12:
        raise ParameterError(
            f"violated 1/t >= 1/mu + rho: 1/t={1.0 / t:.6g}, 1/mu + rho={1.0 / mu + rho:.6g}"
        )
    vals = _pagm_formulas(mu, t, rho)
    if K < 1:
        raise ParameterError("K must be at least 1")
    return PagmParams(
        mu=float(mu),
        t=float(t),
        rho=rho,
        K=int(K),
        gamma=vals["gamma_theorem"] if gamma is None else float(gamma),
        **vals,
    )


def pagm_theorem_iterations(params: PagmParams, delta0, Delta0, C1, C, epsilon):
    """Iteration budget that makes the sampled output nearly ``2 epsilon``-critical.

    ``K = max(704 delta0/theta^2, 28 Delta0, 1568 mu C1, 96 mu^2 C/gamma) / (mu^2 eps^2)``,
    rounded up.
    """
    if not epsilon > 0:
        raise ParameterError("epsilon must be positive")
    p = params
    terms = (
        704.0 * delta0 / p.theta**2,
        28.0 * Delta0,
        1568.0 * p.mu * C1,
        96.0 * p.mu**2 * C / p.gamma,
    )
    return max(1, math.ceil(max(terms) / (p.mu**2 * epsilon**2)))


REL_TOL = 1e-8
ABS_TOL = 1e-12


def slack(*values):
    """Floating-point allowance for checking an exact inequality between
    quantities of the given magnitudes."""
    return REL_TOL * max((abs(float(v)) for v in values), default=0.0) + ABS_TOL
