"""First-order methods for non-smooth non-convex compositional problems."""
from ._jit import backend
from .core import (
    CompositionalProblem,
    ComposoptError,
    ConvexOuter,
    DCProblem,
    OuterFunction,
    PagmParams,
    ParameterError,
    ProxResult,
    ScgmParams,
    SmoothMap,
    SolverError,
    TrajectoryError,
    derive_pagm_params,
    derive_scgm_params,
    pagm_theorem_iterations,
    tanh_affine,
)
from .proxlib import AbsValue, CappedAbs, L1Norm, MaxCoordinate

__version__ = "0.1.0"
