import numpy as np
import pytest

from composopt.oracles import (
    GridSpec,
    finite_difference_gradient,
    finite_difference_jacobian,
    grid_maximize_G,
    grid_minimize,
    grid_prox,
)
from composopt.proxlib import AbsValue, CappedAbs, L1Norm
from composopt.core import OuterFunction


class Zero(OuterFunction):
    def __init__(self, dim=1):
        super().__init__(dim, 0.0, 0.0)

    def value(self, y):
        return np.zeros(np.shape(y)[:-1]) if np.ndim(y) > 1 else 0.0


class TestGridSpec:
    def test_validation(self):
        with pytest.raises(ValueError, match="resolution"):
            GridSpec((0,), (1,), resolution=2)
        with pytest.raises(ValueError, match="exceed"):
            GridSpec((1,), (0,))

    def test_default_accuracy_1d(self):
        assert GridSpec.default(1).accuracy()[0] < 1e-6


class TestGridMinimize:
    def test_quadratic_2d(self):
        x, v = grid_minimize(lambda X: np.sum(X**2, axis=1), GridSpec((-1, -1), (1, 1), 241, 4))
        assert np.all(np.abs(x) <= GridSpec((-1, -1), (1, 1), 241, 4).accuracy())
        assert v < 1e-12

    def test_l1_prox_incumbent(self):
        x, _ = grid_prox(AbsValue(), 1.0, [3.0])
        assert abs(x[0] - 2.0) <= 1e-4

    def test_resolution_doubling_consistent(self):
        f = lambda X: np.abs(X[:, 0]) + (X[:, 0] - 3.0) ** 2 / 2 + 0.1 * np.sin(7 * X[:, 0])
        a = GridSpec.default(1)
        b = GridSpec(a.lower, a.upper, 2 * a.resolution - 1, a.refine_rounds)
        xa, _ = grid_minimize(f, a)
        xb, _ = grid_minimize(f, b)
        assert abs(xa[0] - xb[0]) <= a.accuracy()[0]

    def test_tie_break_lexicographic(self):
        # minima at -1 and +1
        x, _ = grid_minimize(lambda X: (X[:, 0] ** 2 - 1.0) ** 2, GridSpec((-2,), (2,), 401, 1))
        assert x[0] == -1.0

    def test_rejects_3d(self):
        with pytest.raises(ValueError, match="dimension <= 2"):
            grid_minimize(lambda X: X[:, 0], GridSpec((0,) * 3, (1,) * 3))

    def test_non_vectorized(self):
        x, _ = grid_minimize(lambda x: float((x[0] - 0.25) ** 2), GridSpec((-1,), (1,), 201, 3), vectorized=False)
        assert abs(x[0] - 0.25) < 1e-6


class TestGridG:
    def test_zero_outer(self):
        assert grid_maximize_G(Zero(), 1.0, [3.0]) == pytest.approx(4.5, abs=1e-9)

    def test_abs(self):
        assert grid_maximize_G(AbsValue(), 1.0, [3.0]) == pytest.approx(2.0, abs=1e-9)

    def test_capped_at_zero(self):
        assert grid_maximize_G(CappedAbs(1, 1.0), 1.0, [0.0]) == pytest.approx(0.0, abs=1e-12)


class TestFiniteDifferences:
    def test_linear(self):
        a = np.array([1.5, -2.0, 0.25])
        g = finite_difference_gradient(lambda z: a @ z, np.array([0.3, 0.1, -4.0]))
        assert np.allclose(g, a, atol=1e-9)

    def test_quadratic(self):
        z = np.array([0.7, -1.2])
        assert np.allclose(finite_difference_gradient(lambda y: 0.5 * y @ y, z), z, atol=1e-9)

    def test_step_positive(self):
        with pytest.raises(ValueError):
            finite_difference_gradient(lambda y: 0.0, np.zeros(1), step=0.0)

    def test_jacobian(self):
        A = np.array([[1.0, 2.0], [-1.0, 0.5], [0.0, 3.0]])
        assert np.allclose(finite_difference_jacobian(lambda x: A @ x, np.ones(2)), A, atol=1e-9)
