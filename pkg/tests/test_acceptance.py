"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines inline; they
are also repeated in the terminal summary.
"""

import contextlib
import json
import time
from pathlib import Path

import numpy as np
import pytest

from wtmove.behavior import (
    CostModel,
    RestPoint,
    advantage_to_move,
    classify_rest_point,
    cost_to_move,
    enclosing_mask,
    enclosing_membership,
    enclosing_set,
    satisficing_theta,
    worthwhile_membership,
    worthwhile_set,
)
from wtmove.cli import main
from wtmove.dynamics import (
    ProcessConfig,
    ekeland_certificate,
    run_process,
    time_accounting,
    verify_budget,
    verify_certificate,
)
from wtmove.goals import frustration, goal_state
from wtmove.lsp import LspConfig, criticality_residual, lsp_run
from wtmove.space import Box, builtin_gain, validate_metric

from instances import random_agent, random_instance, t3, unit_profile
from oracles import box_qp_active_set, ekeland_clauses_hold, random_box_qp

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"
RESULTS = {}


@contextlib.contextmanager
def criterion(k, title, capsys):
    detail = {}
    try:
        yield detail
    except BaseException:
        RESULTS[k] = f"criterion {k:>2} FAIL  {title}"
        raise
    else:
        RESULTS[k] = f"criterion {k:>2} PASS  {title}" + (f"  ({detail['note']})" if "note" in detail else "")
    finally:
        with capsys.disabled():
            print("\n" + RESULTS.get(k, f"criterion {k:>2} FAIL  {title}"))


def pytest_terminal_summary_lines():
    return [RESULTS[k] for k in sorted(RESULTS)]


def instances(seed=2024, count=200):
    """The shared random corpus: 5-200 points, line or tree metrics, random gains."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        space, g = random_instance(rng, spread=float(rng.uniform(1, 10)))
        out.append((space, g, int(rng.integers(len(space)))))
    return out


CORPUS = instances()


def test_criterion_01_budget_law(capsys):
    with criterion(1, "budget law on 200 random instances at 1e-12", capsys) as info:
        rng = np.random.default_rng(1)
        start = time.perf_counter()
        runs = 0
        for k, (space, g, x0) in enumerate(CORPUS):
            opp = bool(k % 2)
            prof, model, t_y = random_agent(rng, len(space), opportunity=opp,
                                            friction=("dry", "viscous", "table")[k % 3])
            for mode in ("muddling-through", "improving-enough"):
                cfg = ProcessConfig(mode=mode, radius=float(rng.uniform(0.05, 1) * space.diameter),
                                    policy=("max-gain", "min-distance", "first-found")[k % 3], exploit_time=t_y)
                tr = run_process(space, g, prof, model, cfg, x0)
                assert tr.theta == satisficing_theta(prof, g(x0) if opp else None, opp)
                rep = verify_budget(tr, tr.theta, g.upper, tol=1e-12)
                assert rep.ok, (k, mode, [str(c) for c in rep.failures])
                runs += 1
        elapsed = time.perf_counter() - start
        info["note"] = f"{runs} traces in {elapsed:.2f} s"
        assert elapsed < 10


def test_criterion_02_shrinking_rest_point(capsys):
    with criterion(2, "improving-enough runs end at rho(S)=0, W={x*}, no frustration", capsys) as info:
        rng = np.random.default_rng(2)
        completed = 0
        for k, (space, g, x0) in enumerate(CORPUS):
            # every control at its bound, so the worthwhile set is the enclosing set
            prof, model, t_y = random_agent(rng, len(space), tight=True)
            cfg = ProcessConfig(mode="improving-enough", radius=float("inf"), p=0.5, q=0.5, exploit_time=t_y,
                                policy=("max-gain", "min-distance", "first-found")[k % 3])
            assert cfg.sigma == 0.25
            tr = run_process(space, g, prof, model, cfg, x0)
            if not tr.completed:
                continue
            completed += 1
            x = tr.terminal
            members, rho = enclosing_set(tr.theta, space, g, x)
            assert rho == 0 and members.tolist() == [x]
            assert worthwhile_set(prof, model, space, g, t_y, x).tolist() == [x]
            gs = goal_state(tr.theta, space, g, x, cfg.p, cfg.q)
            assert frustration(prof.mu, gs.aspiration, gs.gain) == 0
        info["note"] = f"{completed}/{len(CORPUS)} runs completed"
        assert completed == len(CORPUS)


def test_criterion_03_rest_point_taxonomy(capsys):
    with criterion(3, "T3 rest-point taxonomy", capsys):
        space, g = t3()
        got = {x: classify_rest_point(1.0, space, g, x) for x in range(3)}
        assert got == {0: RestPoint.NOT_REST, 1: RestPoint.WEAK_ONLY, 2: RestPoint.STRONG}


def test_criterion_04_inefficiency_gap(capsys, tmp_path):
    with criterion(4, "G3 compare gaps 0.9 and 0", capsys):
        assert main(["compare", "--scenario", str(SCENARIOS / "g3.json"), "--out", str(tmp_path)]) == 0
        doc = json.loads((tmp_path / "compare.json").read_text())
        assert doc["wtm"]["gap"] == 0.9 and doc["wtm"]["terminal"] == 0
        assert doc["hill_climb"]["gap"] == 0.0


def test_criterion_05_ekeland(capsys):
    with criterion(5, "Ekeland certificates on 100 random instances and T3", capsys):
        rng = np.random.default_rng(5)
        for space, g, x0 in CORPUS[:100]:
            theta = float(rng.uniform(0.05, 3))
            eps = (g.upper - g(x0)) * float(rng.uniform(1, 3))
            cert = ekeland_certificate(space, g, theta, eps, x0)
            assert cert.found and cert.strict
            assert verify_certificate(space, g, cert).ok
            assert ekeland_clauses_hold(space.dist.tolist(), g.table.tolist(), theta, eps, x0, cert.x_star)
        space, g = t3()
        cert = ekeland_certificate(space, g, 1.0, 1.0, 1)
        assert cert.x_star == 2 and ekeland_clauses_hold(space.dist, g.table, 1.0, 1.0, 1, 2)


def test_criterion_06_finite_time(capsys):
    with criterion(6, "T3 three-visit trace: T = 8 and both time bounds", capsys):
        space, g = t3()
        tr = run_process(space, g, unit_profile(), CostModel(speed=1.0),
                         ProcessConfig(radius=1, policy="min-distance", alpha=0.5, exploit_time=1.0), 0)
        assert tr.states == [0, 1, 2]
        rep = time_accounting(tr, alpha=0.5, speed=1.0, alpha_min=0.5, speed_min=1.0)
        assert rep.total == 8.0
        assert rep.ok and len(rep.checks) == 2


def test_criterion_07_lsp_closed_form(capsys):
    with criterion(7, "LSP halving iterates within 1e-8, residual <= 1e-6", capsys) as info:
        g = builtin_gain("neg_sq", center=[0.0])
        box = Box([-10.0], [10.0])
        start = time.perf_counter()
        tr = lsp_run(g, box, [4.0], LspConfig(theta=1.0, radius=10.0))
        elapsed = time.perf_counter() - start
        xs = np.array([x[0] for x in tr.iterates[:21]])
        assert xs.size == 21
        assert np.max(np.abs(xs - 4.0 * 2.0 ** -np.arange(21))) <= 1e-8
        assert tr.converged and criticality_residual(g, box, tr.x) <= 1e-6
        info["note"] = f"{tr.n_steps} steps in {elapsed:.3f} s"
        assert elapsed < 1


def test_criterion_08_lsp_quasi_concave(capsys):
    with criterion(8, "LSP on the inverse-quadratic bump, p = 2 and 5", capsys) as info:
        start = time.perf_counter()
        rng = np.random.default_rng(8)
        for p in (2, 5):
            a = rng.uniform(-1, 1, size=p)
            g = builtin_gain("inverse_quadratic", center=a)
            box = Box(-2 * np.ones(p), 2 * np.ones(p))
            tr = lsp_run(g, box, rng.uniform(-2, 2, size=p), LspConfig(theta=0.1, radius=1.0, residual_tol=1e-5))
            assert tr.converged and criticality_residual(g, box, tr.x) <= 1e-5
            assert np.all(np.diff(tr.values) >= 0)
            assert min(tr.slacks) >= 0
            assert np.linalg.norm(tr.x - a) <= 1e-4
        elapsed = time.perf_counter() - start
        info["note"] = f"{elapsed:.3f} s"
        assert elapsed < 5


def test_criterion_09_lsp_box_quadratics(capsys):
    with criterion(9, "LSP on 50 concave box quadratics vs active-set oracle at 1e-6", capsys) as info:
        rng = np.random.default_rng(9)
        worst = 0.0
        for _ in range(50):
            p = int(rng.integers(1, 11))
            H, b, lo, hi = random_box_qp(rng, p)
            want = box_qp_active_set(H, b, lo, hi)
            g = builtin_gain("concave_quadratic", H=H, b=b)
            # the inner problem is strictly concave, so a single start suffices
            tr = lsp_run(g, Box(lo, hi), rng.uniform(lo, hi), LspConfig(theta=0.5, radius=1.0, restarts=0))
            assert tr.converged
            worst = max(worst, float(np.max(np.abs(tr.x - want))))
        info["note"] = f"worst deviation {worst:.2e}"
        assert worst <= 1e-6


def test_criterion_10_structural(capsys):
    with criterion(10, "structural properties on every generated instance", capsys) as info:
        rng = np.random.default_rng(10)
        triples = 0
        for k, (space, g, x0) in enumerate(CORPUS):
            assert validate_metric(space).ok
            prof, model, t_y = random_agent(rng, len(space), friction=("dry", "viscous", "table")[k % 3])
            theta = satisficing_theta(prof)
            n = len(space)
            for x in range(n):
                assert advantage_to_move(prof, g, t_y, x, x) == 0
                assert cost_to_move(model, space, x, x) == 0
                assert worthwhile_membership(prof, model, space, g, t_y, x, x)
                assert enclosing_membership(theta, space, g, x, x)
            S = np.array([enclosing_mask(theta, space, g, x) for x in range(n)])
            # every triple at once: y in S(x) and z in S(y) must give z in S(x)
            chained = S.astype(np.int64) @ S.astype(np.int64)
            assert not np.any((chained > 0) & ~S)
            triples += int(chained.sum())
            for _ in range(50):
                x, y = (int(v) for v in rng.integers(n, size=2))
                if S[x, y]:
                    assert all(enclosing_membership(theta, space, g, x, z) for z in np.flatnonzero(S[y]))
        info["note"] = f"{triples} chained triples checked"


@pytest.fixture(scope="module", autouse=True)
def summary(request):
    yield
    reporter = request.config.pluginmanager.get_plugin("terminalreporter")
    if reporter is not None:
        reporter.write_sep("=", "acceptance criteria")
        for line in pytest_terminal_summary_lines():
            reporter.write_line(line)
