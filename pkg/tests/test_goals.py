import numpy as np
import pytest

from wtmove.behavior import enclosing_set
from wtmove.goals import frustration, goal_state, reachable_supremum, satisficing_level, set_aspiration

from instances import random_instance, t3


def test_reachable_supremum_t3():
    space, g = t3()
    assert [reachable_supremum(1.0, space, g, x) for x in range(3)] == [3, 3, 3]


def test_reachable_supremum_collapses():
    space, g = t3()
    assert [reachable_supremum(1e9, space, g, x) for x in range(3)] == [0, 2, 3]


def test_aspiration():
    assert set_aspiration(0.0, 3.0, 0.5) == 1.5
    assert set_aspiration(1.0, 3.0, 1.0) == 3.0
    assert set_aspiration(2.0, 2.0, 0.3) == 2.0
    with pytest.raises(ValueError):
        set_aspiration(0.0, 1.0, 0.0)


def test_satisficing_level():
    tilde, eps = satisficing_level(0.0, 1.5, 0.5)
    assert (tilde, eps) == (0.75, 0.75)
    assert satisficing_level(2.0, 2.0, 0.4) == (2.0, 0.0)
    assert satisficing_level(0.0, 1.0, 1 - 1e-12)[0] == pytest.approx(1.0)
    with pytest.raises(ValueError):
        satisficing_level(0.0, 1.0, 1.0)


def test_goal_state_t3():
    space, g = t3()
    gs = goal_state(1.0, space, g, 0, 0.5, 0.5)
    assert (gs.aspiration, gs.satisficing, gs.improvement, gs.sigma) == (1.5, 0.75, 0.75, 0.25)


def test_frustration():
    assert frustration(2.0, 2.0, 2.0) == 0
    assert frustration(2.0, 1.5, 0.0) == 3


def test_chain_and_shrink_inequality_random():
    rng = np.random.default_rng(17)
    for _ in range(30):
        space, g = random_instance(rng, n=int(rng.integers(5, 60)))
        theta = rng.uniform(0.05, 2)
        p, q = rng.uniform(0.1, 1), rng.uniform(0.05, 0.95)
        for x in range(len(space)):
            gs = goal_state(theta, space, g, x, p, q)
            assert gs.gain <= gs.satisficing <= gs.aspiration <= gs.reachable <= g.upper
            # improving enough: g(y) - g(x) >= eps  <=>  g(y) - g(x) >= sigma (s - g)
            for y in range(len(space)):
                d = g(y) - g(x)
                lhs = d >= gs.improvement
                rhs = d >= gs.sigma * (gs.reachable - gs.gain)
                if abs(gs.improvement - gs.sigma * (gs.reachable - gs.gain)) < 1e-12 and lhs != rhs:
                    continue  # rounding between q (p Δ) and (pq) Δ
                assert lhs == rhs
            _, rho = enclosing_set(theta, space, g, x)
            assert gs.reachable - gs.gain >= theta * rho - 1e-12
