"""Shipped test problems with exact declared constants."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from ..core import CompositionalProblem, DCProblem, tanh_affine
from ..proxlib import AbsValue, CappedAbs, L1Norm


@dataclass(frozen=True)
class Instance:
    """A built problem plus the defaults the runners need.

    ``x1`` is the SCGM start point. ``C1`` and ``C`` bound
    ``h_i(g_i(z)) - inf h_i(g_i)`` and the surrogate decrease for DC problems;
    both follow from ``lower_bound <= h_i(g_i) <= L_i * sqrt(m)`` type bounds
    on the shipped maps.
    """

    problem: object
    x1: Optional[np.ndarray] = None
    C1: Optional[float] = None
    C: Optional[float] = None


@dataclass(frozen=True)
class ProblemEntry:
    name: str
    algorithm: str
    description: str
    default_d: int
    default_m: int
    build: Callable[..., Instance]

    def make(self, d=None, m=None, seed=0) -> Instance:
        return self.build(self.default_d if d is None else d, self.default_m if m is None else m, seed)


def _random_affine(rng, m, d, scale):
    A = scale * rng.standard_normal((m, d)) / np.sqrt(d)
    b = 0.2 * rng.standard_normal(m)
    return A, b


def _capped_tanh(d, m, seed, theta=0.8):
    if d == m:
        A = np.eye(d)
        b = np.resize([0.2, -0.1], m)
    else:
        A, b = _random_affine(np.random.default_rng(seed), m, d, 1.0)
    g = tanh_affine(A, b, name="tanh(Ax+b)")
    h = CappedAbs(m, theta)
    # starts inside the sloped band of the capped penalty
    x1 = np.resize([0.7, -0.6], d)
    return Instance(CompositionalProblem(g, h, name="capped-tanh"), x1=x1)


def _capped_tanh_scalar(d, m, seed):
    if d != 1 or m != 1:
        raise ValueError("capped-tanh-1d is scalar (d = m = 1)")
    g = tanh_affine(np.ones((1, 1)), np.zeros(1), name="tanh")
    h = CappedAbs(1, 0.8)
    return Instance(CompositionalProblem(g, h, name="capped-tanh-1d"), x1=np.array([0.9]))


def _l1_diff_tanh(d, m, seed):
    rng = np.random.default_rng(seed)
    A1, b1 = _random_affine(rng, m, d, 0.8)
    A2, b2 = _random_affine(rng, m, d, 0.8)
    g1 = tanh_affine(A1, b1, name="g1")
    g2 = tanh_affine(A2, b2, name="g2")
    h = L1Norm(m)
    prob = DCProblem(g1, g2, h, h, name="l1-diff-tanh")
    # 0 <= ||tanh(.)||_1 < m
    return Instance(prob, C1=float(m), C=2.0 * m)


def _scalar_dc(d, m, seed):
    if m != 1:
        raise ValueError("scalar-dc has m = 1")
    if d == 1:
        a1, a2 = np.ones((1, 1)), np.full((1, 1), 0.8)
    else:
        rng = np.random.default_rng(seed)
        a1 = rng.standard_normal((1, d)) / np.sqrt(d)
        a2 = 0.8 * rng.standard_normal((1, d)) / np.sqrt(d)
    g1 = tanh_affine(a1, [-1.0], name="tanh(x-1)")
    g2 = tanh_affine(a2, [0.5], name="tanh(0.8x+0.5)")
    h = AbsValue()
    return Instance(DCProblem(g1, g2, h, h, name="scalar-dc"), C1=1.0, C=2.0)


_REGISTRY = (
    ProblemEntry(
        "capped-tanh", "scgm",
        "g = tanh(Ax+b) componentwise (A = I when d = m), h = sum_j min(|y_j|, 0.8)",
        2, 2, _capped_tanh,
    ),
    ProblemEntry(
        "capped-tanh-1d", "scgm", "g = tanh(x), h = min(|y|, 0.8)", 1, 1, _capped_tanh_scalar,
    ),
    ProblemEntry(
        "l1-diff-tanh", "pagm",
        "||tanh(A2 x + b2)||_1 - ||tanh(A1 x + b1)||_1, random A_i (seeded)",
        3, 2, _l1_diff_tanh,
    ),
    ProblemEntry(
        "scalar-dc", "pagm", "|tanh(0.8x + 0.5)| - |tanh(x - 1)|", 1, 1, _scalar_dc,
    ),
)


def registry_problems():
    return list(_REGISTRY)


def get_entry(name) -> ProblemEntry:
    for e in _REGISTRY:
        if e.name == name:
            return e
    known = ", ".join(e.name for e in _REGISTRY)
    raise KeyError(f"unknown problem {name!r}; known: {known}")


def make_problem(name, d=None, m=None, seed=0) -> Instance:
    return get_entry(name).make(d, m, seed)


def maps_of(problem):
    if isinstance(problem, DCProblem):
        return [problem.g1, problem.g2]
    return [problem.g]
