import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from composopt.core import ProxUnavailableError, OuterFunction
from composopt.oracles import GridSpec, grid_maximize_G, grid_minimize, grid_prox, high_precision_prox_point
from composopt.proxlib import (
    AbsValue,
    CappedAbs,
    L1Norm,
    MaxCoordinate,
    ProxLinearSubproblem,
    affine_prox,
    capped_abs_prox,
    dc_decomposition_G,
    moreau_value,
    prox,
    solve_prox_linear,
)
from composopt.core import SmoothMap
from composopt.core import SolverError

from reference import prox_linear_reference

finite = st.floats(-5.0, 5.0, allow_nan=False)
mus = st.floats(0.05, 3.0)

# max-coordinate prox-linear instance (seed 7); MAX2_GRID is the 2-D grid
# minimizer computed over y = Q x + b and mapped back with x = Q'(y - b).
# A grid over x itself stalls near the rotated kink y1 = y2 (off by ~3e-4).
MAX2_Q = np.array([[-0.004487307929991413, 0.9999899319830882], [0.9999899319830882, 0.004487307929991571]])
MAX2_B = np.array([-0.22733539258586127, -0.4958232774982312])
MAX2_LIN = np.array([0.030071801298719242, 0.6701076227772668])
MAX2_ANCHOR = np.array([-0.49220651855132963, -0.6204748998199404])
MAX2_STEP = 0.7
MAX2_GRID = np.array([-1.0126593855618167, -1.291489503321495])


class TestProxExamples:
    def test_l1(self):
        r = prox(L1Norm(3), 1.0, [3.0, -0.5, 0.0])
        assert np.array_equal(r.point, [2.0, 0.0, 0.0])
        # per-coordinate grid oracle agrees
        for u, v in zip([3.0, -0.5, 0.0], r.point):
            assert abs(grid_prox(AbsValue(), 1.0, [u])[0][0] - v) <= 1e-6

    @pytest.mark.parametrize("h", [L1Norm(2), CappedAbs(2, 0.7), AbsValue()])
    def test_minimizer_is_fixed_point(self, h):
        u = h.minimizer
        assert np.array_equal(prox(h, 0.8, u).point, u)

    def test_capped_flat_region(self):
        assert prox(CappedAbs(1, 1.0), 1.0, [3.0]).point[0] == 3.0
        assert abs(grid_prox(CappedAbs(1, 1.0), 1.0, [3.0])[0][0] - 3.0) <= 1e-4

    def test_no_oracle(self):
        class Bare(OuterFunction):
            def value(self, y):
                return 0.0

        with pytest.raises(ProxUnavailableError):
            prox(Bare(1, 1.0, 0.0), 1.0, [0.0])

    def test_rejects_bad_mu(self):
        with pytest.raises(ValueError):
            prox(L1Norm(1), 0.0, [1.0])


class TestCappedAbsProx:
    def test_examples(self):
        assert capped_abs_prox(1.0, 1.0, 0.0) == 0.0
        assert capped_abs_prox(1.0, 1.0, 3.0) == 3.0
        assert capped_abs_prox(1.0, 1.0, 0.5) == 0.0

    def test_tie_goes_to_smaller_magnitude(self):
        # theta=1, mu=1: inner cost at u is 1 - 1/2 + ... ; tie at u = 1.5
        # inner t=0.5 cost 0.5+0.5=1.0, outer t=1.5 cost 1.0
        r = prox(CappedAbs(1, 1.0), 1.0, [1.5])
        assert r.point[0] == 0.5
        assert r.multiplicity_hint

    @settings(max_examples=200, deadline=None)
    @given(u=finite, mu=mus, theta=st.floats(0.1, 2.0))
    def test_matches_grid(self, u, mu, theta):
        h = CappedAbs(1, theta)
        v = capped_abs_prox(theta, mu, u)
        xg, fg = grid_prox(h, mu, [u])
        fv = float(h.value(np.array([v]))) + (v - u) ** 2 / (2 * mu)
        assert fv <= fg + 1e-10
        if not prox(h, mu, [u]).multiplicity_hint:
            assert abs(v - xg[0]) <= 1e-4 or abs(fv - fg) <= 1e-9


class TestEnvelope:
    def test_examples(self):
        assert moreau_value(L1Norm(1), 1.0, [0.0]) == 0.0
        assert moreau_value(L1Norm(1), 1.0, [3.0]) == 2.5
        assert moreau_value(CappedAbs(1, 1.0), 1.0, [3.0]) == 1.0

    def test_G_examples(self):
        assert dc_decomposition_G(L1Norm(1), 1.0, [3.0]) == 2.0
        assert dc_decomposition_G(CappedAbs(1, 1.0), 1.0, [0.0]) == 0.0

    @settings(max_examples=100, deadline=None)
    @given(u=st.lists(finite, min_size=2, max_size=2), mu=mus)
    def test_sandwich(self, u, mu):
        for h in (L1Norm(2), CappedAbs(2, 0.8), MaxCoordinate(2)):
            val = moreau_value(h, mu, u)
            lo = h.lower_bound
            assert lo - 1e-12 <= val <= float(h.value(np.asarray(u))) + 1e-12


class TestProxCompetition:
    @settings(max_examples=60, deadline=None)
    @given(u=st.lists(finite, min_size=3, max_size=3), mu=mus, seed=st.integers(0, 2**31))
    def test_beats_random_competitors(self, u, mu, seed):
        rng = np.random.default_rng(seed)
        u = np.asarray(u)
        for h in (L1Norm(3), CappedAbs(3, 0.6), MaxCoordinate(3)):
            r = prox(h, mu, u)
            W = u + 2.0 * rng.standard_normal((100, 3))
            comp = h.value(W) + np.sum((W - u) ** 2, axis=1) / (2 * mu)
            assert r.objective <= comp.min() + 1e-12
            assert r.objective <= float(h.value(u)) + 1e-12

    @settings(max_examples=60, deadline=None)
    @given(u=st.lists(finite, min_size=2, max_size=2), mu=mus)
    def test_optimality_inclusion(self, u, mu):
        u = np.asarray(u)
        for h in (L1Norm(2), CappedAbs(2, 0.9), MaxCoordinate(2)):
            r = prox(h, mu, u)
            assert h.subgradient_contains(r.point, (u - r.point) / mu, atol=1e-9)


class TestDCIdentity:
    @pytest.mark.parametrize("h", [L1Norm(1), CappedAbs(1, 1.0), L1Norm(2), CappedAbs(2, 0.5), MaxCoordinate(2)])
    def test_grid_G(self, h, rng):
        for _ in range(5):
            u = rng.uniform(-3, 3, h.dim)
            mu = rng.uniform(0.2, 2.0)
            Gg = grid_maximize_G(h, mu, u)
            assert abs(float(u @ u) / (2 * mu) - Gg - moreau_value(h, mu, u)) <= 1e-8


class TestAffineProx:
    @settings(max_examples=50, deadline=None)
    @given(seed=st.integers(0, 2**31), m=st.integers(1, 3), d=st.integers(1, 3))
    def test_closed_vs_dual_vs_reference(self, seed, m, d):
        rng = np.random.default_rng(seed)
        A = rng.standard_normal((m, d))
        b = rng.standard_normal(m)
        for h in (L1Norm(m), MaxCoordinate(m)):
            sub = ProxLinearSubproblem(h, A, b, rng.standard_normal(d), rng.standard_normal(d), rng.uniform(0.1, 2.0))
            x, info = solve_prox_linear(sub, full_output=True)
            xd = solve_prox_linear(sub, method="dual")
            xr = prox_linear_reference(sub)
            assert np.allclose(x, xd, atol=1e-8)
            assert np.allclose(x, xr, atol=1e-6)
            assert sub.objective(x) <= sub.objective(xr) + 1e-10
            if not info["exact"]:
                assert info["gap"] <= 1e-10

    def test_single_row_closed_form(self, rng):
        sub = ProxLinearSubproblem(L1Norm(1), np.array([[2.0, -1.0]]), np.array([0.3]), np.zeros(2), np.array([1.0, 1.0]), 0.5)
        x, info = solve_prox_linear(sub, full_output=True)
        assert info["exact"] and info["method"] == "closed"
        assert np.allclose(x, prox_linear_reference(sub), atol=1e-7)

    def test_soft_threshold_example(self):
        sub = ProxLinearSubproblem(L1Norm(2), np.eye(2), np.zeros(2), np.zeros(2), np.array([3.0, -0.5]), 1.0)
        assert np.array_equal(solve_prox_linear(sub), [2.0, 0.0])

    def test_anchor_fixed_point(self):
        A = np.array([[1.0, 2.0], [0.5, -1.0], [1.0, 1.0]])
        anchor = np.array([0.3, -0.7])
        sub = ProxLinearSubproblem(L1Norm(3), A, -A @ anchor, np.zeros(2), anchor, 0.4)
        assert np.allclose(solve_prox_linear(sub), anchor, atol=1e-10)

    def test_max_coordinate_orthonormal_grid(self):
        sub = ProxLinearSubproblem(MaxCoordinate(2), MAX2_Q, MAX2_B, MAX2_LIN, MAX2_ANCHOR, MAX2_STEP)
        y, _ = grid_minimize(lambda Y: sub.objective((Y - MAX2_B) @ MAX2_Q), GridSpec.default(2))
        assert np.allclose((y - MAX2_B) @ MAX2_Q, MAX2_GRID, atol=1e-12)
        for method in ("auto", "dual"):
            assert np.allclose(solve_prox_linear(sub, method=method), MAX2_GRID, atol=1e-6)

    def test_generic_dual_path(self, rng):
        class Huberish(L1Norm):
            dual_kind = None

        A = rng.standard_normal((3, 2))
        sub = ProxLinearSubproblem(Huberish(3), A, rng.standard_normal(3), rng.standard_normal(2), rng.standard_normal(2), 0.6)
        x, info = solve_prox_linear(sub, method="dual", full_output=True)
        assert np.allclose(x, prox_linear_reference(sub), atol=1e-6)
        assert info["gap"] <= 1e-10

    def test_iteration_cap(self, rng):
        A = rng.standard_normal((3, 2))
        with pytest.raises(SolverError, match="did not converge"):
            affine_prox(L1Norm(3), 1.0, A, np.ones(3), np.zeros(2), method="dual", max_iter=1, tol_sub=0.0)

    def test_strong_convexity(self, rng):
        A = rng.standard_normal((2, 3))
        sub = ProxLinearSubproblem(L1Norm(2), A, rng.standard_normal(2), rng.standard_normal(3), rng.standard_normal(3), 0.3)
        x = solve_prox_linear(sub)
        for _ in range(50):
            y = x + rng.standard_normal(3)
            assert sub.objective(y) >= sub.objective(x) + float((y - x) @ (y - x)) / (2 * 0.3) - 1e-9

    def test_matches_high_precision_solver(self, rng):
        # the subproblem is the prox of h(A . + b) at its center with parameter t
        for _ in range(10):
            m, d = rng.integers(1, 4, 2)
            A = rng.standard_normal((m, d))
            b = rng.standard_normal(m)
            sub = ProxLinearSubproblem(L1Norm(m), A, b, rng.standard_normal(d), rng.standard_normal(d), 0.5)
            aff = SmoothMap(d, m, lambda x: x @ A.T + b, lambda x: A, float(np.linalg.norm(A, 2)), 0.0, 1.0)
            ref = high_precision_prox_point((aff, L1Norm(m)), sub.center, 0.5, rho=0.0)
            assert np.allclose(solve_prox_linear(sub), ref, atol=1e-6)
