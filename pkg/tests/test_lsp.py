import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wtmove.lsp import LspConfig, criticality_residual, inner_solve, lsp_run, lsp_step
from wtmove.space import Box, GainFunction, Halfspace, builtin_gain, intersect

from oracles import box_qp_active_set, random_box_qp

NEG_SQ = builtin_gain("neg_sq", center=[0.0])
WIDE = Box([-10.0], [10.0])


def cfg(**kw):
    return LspConfig(**{"theta": 1.0, "radius": 10.0, **kw})


class TestInnerSolve:
    def test_unconstrained_stationary_point(self):
        y = inner_solve(NEG_SQ, WIDE, [4.0], 1.0, 10.0, cfg())
        assert y[0] == pytest.approx(2.0, abs=1e-12)

    def test_exploration_ball_active(self):
        y = inner_solve(NEG_SQ, WIDE, [4.0], 1.0, 1.0, cfg(radius=1.0))
        assert y[0] == pytest.approx(3.0, abs=1e-12)

    def test_fixed_point(self):
        y = inner_solve(NEG_SQ, WIDE, [0.0], 1.0, 10.0, cfg())
        assert y[0] == 0.0

    def test_non_finite_objective(self):
        from wtmove.lsp import InnerSolveError
        g = GainFunction.smooth(lambda y: float("inf"), lambda y: y)
        with pytest.raises(InnerSolveError):
            inner_solve(g, WIDE, [1.0], 1.0, 1.0, cfg())


class TestStep:
    def test_quadratic_slack(self):
        st_ = lsp_step(NEG_SQ, WIDE, [4.0], cfg())
        assert st_.x[0] == pytest.approx(2.0, abs=1e-12)
        assert st_.slack == pytest.approx(8.0, abs=1e-10)
        assert not st_.ball_active

    def test_ball_active_reported(self):
        assert lsp_step(NEG_SQ, WIDE, [4.0], cfg(radius=1.0)).ball_active

    def test_fixed_point(self):
        st_ = lsp_step(NEG_SQ, WIDE, [0.0], cfg())
        assert st_.step == 0.0 and st_.slack == 0.0


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2**31 - 1), st.floats(0.05, 3), st.floats(0.1, 5))
def test_slack_nonnegative_on_concave_quadratics(p, seed, theta, r):
    rng = np.random.default_rng(seed)
    H, b, lo, hi = random_box_qp(rng, p)
    g = builtin_gain("concave_quadratic", H=H, b=b)
    box = Box(lo, hi)
    x = rng.uniform(lo, hi)
    conf = LspConfig(theta=theta, radius=r, restarts=1, seed=seed)
    st_ = lsp_step(g, box, x, conf, np.random.default_rng(seed))
    assert st_.accepted and st_.slack >= 0
    assert box.contains(st_.x, 1e-9) and st_.step <= r * (1 + 1e-9)


class TestRun:
    def test_halving_iterates(self):
        tr = lsp_run(NEG_SQ, WIDE, [4.0], cfg())
        xs = np.array([x[0] for x in tr.iterates])
        n = min(21, len(xs))
        np.testing.assert_allclose(xs[:n], 4.0 * 2.0 ** -np.arange(n), rtol=0, atol=1e-8)
        assert tr.converged and tr.residual <= 1e-6

    def test_start_at_critical_point(self):
        tr = lsp_run(NEG_SQ, WIDE, [0.0], cfg())
        assert tr.n_steps == 0 and tr.converged

    def test_start_projected_into_set(self):
        tr = lsp_run(NEG_SQ, Box([1.0], [10.0]), [-3.0], cfg())
        assert tr.iterates[0][0] == 1.0 and tr.n_steps == 0

    @pytest.mark.parametrize("p", [2, 5])
    def test_bump_converges_to_peak(self, p):
        rng = np.random.default_rng(p)
        a = rng.uniform(-1, 1, size=p)
        g = builtin_gain("inverse_quadratic", center=a)
        box = Box(-2 * np.ones(p), 2 * np.ones(p))
        tr = lsp_run(g, box, rng.uniform(-2, 2, size=p), LspConfig(theta=0.1, radius=1.0, residual_tol=1e-5))
        assert tr.converged and tr.residual <= 1e-5
        assert np.all(np.diff(tr.values) >= 0) and min(tr.slacks) >= 0
        assert np.linalg.norm(tr.x - a) <= 1e-4
        # distance to the maximizer never grows (monotone-distance diagnostic)
        dists = [np.linalg.norm(x - a) for x in tr.iterates]
        assert np.all(np.diff(dists) <= 1e-12)

    def test_summability(self):
        tr = lsp_run(NEG_SQ, WIDE, [4.0], cfg())
        assert tr.summability_ok(0.0, 1.0)
        assert tr.squared_steps[-1] <= 16.0 + tr.eps_total
        assert not tr.summability_degraded(0.0, 1.0)

    def test_step_vanishing(self):
        tr = lsp_run(NEG_SQ, WIDE, [4.0], cfg())
        assert max(tr.steps[-3:]) <= 1e-5

    def test_iteration_cap(self):
        tr = lsp_run(NEG_SQ, WIDE, [4.0], cfg(max_iter=3))
        assert not tr.converged and tr.n_steps == 3

    def test_constrained_quadratic_matches_oracle(self):
        rng = np.random.default_rng(4)
        H, b, lo, hi = random_box_qp(rng, 4)
        g = builtin_gain("concave_quadratic", H=H, b=b)
        tr = lsp_run(g, Box(lo, hi), rng.uniform(lo, hi), LspConfig(theta=0.5, radius=1.0, restarts=0))
        np.testing.assert_allclose(tr.x, box_qp_active_set(H, b, lo, hi), atol=1e-6)

    def test_polyhedral_set(self):
        g = builtin_gain("neg_sq", center=[2.0, 2.0])
        cset = intersect(Box([-3, -3], [3, 3]), Halfspace([1.0, 1.0], 1.0))
        tr = lsp_run(g, cset, [0.0, 0.0], LspConfig(theta=1.0, radius=1.0))
        np.testing.assert_allclose(tr.x, [0.5, 0.5], atol=1e-6)

    def test_deterministic(self):
        g = builtin_gain("inverse_quadratic", center=[0.3, -0.2])
        box = Box([-2, -2], [2, 2])
        a = lsp_run(g, box, [1.5, 1.5], LspConfig(theta=0.1, seed=3))
        b = lsp_run(g, box, [1.5, 1.5], LspConfig(theta=0.1, seed=3))
        assert all(np.array_equal(x, y) for x, y in zip(a.iterates, b.iterates))


class TestResidual:
    def test_interior_critical(self):
        assert criticality_residual(NEG_SQ, WIDE, [0.0]) == 0

    def test_boundary_critical(self):
        assert criticality_residual(NEG_SQ, Box([1.0], [10.0]), [1.0]) == 0

    def test_interior_non_critical(self):
        assert criticality_residual(NEG_SQ, Box([1.0], [10.0]), [2.0]) == pytest.approx(4.0, rel=1e-12)


@pytest.mark.parametrize("kw", [{"theta": 0}, {"radius": -1}, {"backtrack": 1.0}, {"residual_tol": 0}])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        LspConfig(**kw)
