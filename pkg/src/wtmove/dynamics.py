"""The punctuated explore/exploit/move process on finite spaces and its verifiers."""

from __future__ import annotations

import enum
from dataclasses import asdict, dataclass, field, fields
from typing import List, Optional

import numpy as np

from .behavior import (
    AgentProfile,
    CostModel,
    RestPoint,
    classify_rest_point,
    enclosing_mask,
    move_terms,
    satisficing_theta,
    set_radius,
)
from .goals import goal_state
from .space import TIE_TOL, FiniteMetricSpace, GainFunction


class Mode(str, enum.Enum):
    MUDDLING = "muddling-through"
    IMPROVING = "improving-enough"
    HILL_CLIMB = "hill-climb"


class Policy(str, enum.Enum):
    MAX_GAIN = "max-gain"
    MIN_DISTANCE = "min-distance"
    FIRST_FOUND = "first-found"


@dataclass(frozen=True)
class ProcessConfig:
    """Settings of one run.

    ``exploit_time`` is the exploitation duration per visit (also the
    destination duration entering the advantage to move); ``None`` means the
    profile's cap ``t_max``. ``alpha`` is the exploited fraction of each
    static period and ``spend`` the per-unit-time exploration expenditure.
    """

    mode: Mode = Mode.IMPROVING
    radius: float = float("inf")
    policy: Policy = Policy.MAX_GAIN
    max_steps: int = 10_000
    alpha: float = 1.0
    exploit_time: Optional[float] = None
    spend: float = 1.0
    p: float = 0.5
    q: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        object.__setattr__(self, "policy", Policy(self.policy))
        if not self.radius > 0:
            raise ValueError("exploration radius must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if not 0 < self.alpha <= 1:
            raise ValueError("exploitation fraction must lie in (0, 1]")
        if not 0 < self.p <= 1 or not 0 < self.q < 1:
            raise ValueError("need 0 < p <= 1 and 0 < q < 1")
        if self.exploit_time is not None and self.exploit_time <= 0:
            raise ValueError("exploitation time must be positive")
        if self.spend < 0:
            raise ValueError("exploration spend must be nonnegative")

    @property
    def sigma(self) -> float:
        return self.p * self.q


@dataclass(frozen=True)
class TraceRecord:
    """One visit. Move columns describe the move out of ``state`` (zero on the last row)."""

    n: int
    state: int
    gain: float
    dist: float = 0.0
    advantage: Optional[float] = None
    cost: Optional[float] = None
    opportunity: Optional[float] = None
    ratio: Optional[float] = None
    eps: Optional[float] = None
    radius: Optional[float] = None
    h: float = 0.0
    t: float = 0.0
    tau: float = 0.0
    move_time: float = 0.0
    terminal: bool = False
    spend: float = 0.0


COLUMNS = tuple(f.name for f in fields(TraceRecord))


@dataclass
class Trace:
    records: List[TraceRecord] = field(default_factory=list)
    mode: Mode = Mode.MUDDLING
    theta: Optional[float] = None
    sigma: Optional[float] = None
    classification: Optional[RestPoint] = None
    completed: bool = True

    @property
    def states(self) -> List[int]:
        return [r.state for r in self.records]

    @property
    def gains(self) -> np.ndarray:
        return np.array([r.gain for r in self.records])

    @property
    def n_moves(self) -> int:
        return max(len(self.records) - 1, 0)

    @property
    def moves(self):
        return list(zip(self.records[:-1], self.records[1:]))

    @property
    def terminal(self) -> Optional[int]:
        return self.records[-1].state if self.records else None

    def to_dict(self) -> dict:
        return {
            "mode": self.mode.value,
            "theta": self.theta,
            "sigma": self.sigma,
            "completed": self.completed,
            "terminal": self.terminal,
            "classification": self.classification.value if self.classification else None,
            "records": [asdict(r) for r in self.records],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "Trace":
        cl = doc.get("classification")
        return cls(
            records=[TraceRecord(**r) for r in doc["records"]],
            mode=Mode(doc["mode"]),
            theta=doc.get("theta"),
            sigma=doc.get("sigma"),
            classification=RestPoint(cl) if cl else None,
            completed=doc.get("completed", True),
        )


def select_next(x: int, candidates, policy, space: FiniteMetricSpace, g: GainFunction) -> Optional[int]:
    """Pick one acceptable destination; ``None`` when there is none."""
    cand = [int(c) for c in candidates if int(c) != x]
    if not cand:
        return None
    policy = Policy(policy)
    if policy is Policy.FIRST_FOUND:
        return min(cand)
    if policy is Policy.MAX_GAIN:
        return min(cand, key=lambda y: (-g(y), space.d(x, y), y))
    return min(cand, key=lambda y: (space.d(x, y), -g(y), y))


def _exploit_time(profile: AgentProfile, config: ProcessConfig) -> float:
    t = profile.t_max if config.exploit_time is None else config.exploit_time
    return float(min(t, profile.t_max))


def run_process(space: FiniteMetricSpace, g: GainFunction, profile: AgentProfile, model: CostModel,
                config: ProcessConfig, x0: int) -> Trace:
    if config.mode is Mode.HILL_CLIMB:
        raise ValueError("use hill_climb for the comparator")
    theta = satisficing_theta(profile, g(x0) if model.opportunity else None, model.opportunity)
    t_exp = _exploit_time(profile, config)
    h = t_exp / config.alpha
    tau = h - t_exp
    improving = config.mode is Mode.IMPROVING
    vals = g.table

    records = []
    x = x0
    completed = False
    for n in range(config.max_steps + 1):
        terms = move_terms(profile, model, space, g, t_exp, x)
        s_mask = enclosing_mask(theta, space, g, x)
        rho = set_radius(space, x, np.flatnonzero(s_mask))
        eps = None
        ok = terms.worthwhile & (space.dist[x] <= config.radius) & (vals > vals[x])
        if improving:
            eps = goal_state(theta, space, g, x, config.p, config.q).improvement
            ok &= (vals - vals[x]) >= eps
            if eps <= 0:
                ok[:] = False
        base = dict(n=n, state=x, gain=float(vals[x]), eps=eps, radius=rho, h=h, t=t_exp, tau=tau,
                    spend=tau * config.spend)
        y = None if n == config.max_steps else select_next(x, np.flatnonzero(ok), config.policy, space, g)
        if y is None:
            completed = n < config.max_steps or not ok.any()
            records.append(TraceRecord(**base, terminal=completed))
            break
        d = space.d(x, y)
        records.append(TraceRecord(
            **base,
            dist=d,
            advantage=float(terms.advantage[y]),
            cost=float(terms.cost[y]),
            opportunity=float(terms.opportunity[y]),
            ratio=float(terms.ratio[y]),
            move_time=d / model.speed,
        ))
        x = y

    return Trace(
        records=records,
        mode=config.mode,
        theta=theta,
        sigma=config.sigma if improving else None,
        classification=classify_rest_point(theta, space, g, x),
        completed=completed,
    )


def hill_climb(space: FiniteMetricSpace, g: GainFunction, r: float, x0: int, max_steps: int = 10_000) -> Trace:
    """Greedy local search: move to the best strict improvement within distance ``r``."""
    if not r > 0:
        raise ValueError("neighbourhood radius must be positive")
    vals = g.table
    records = []
    x = x0
    completed = False
    for n in range(max_steps + 1):
        ok = (space.dist[x] <= r) & (vals > vals[x])
        y = None if n == max_steps else select_next(x, np.flatnonzero(ok), Policy.MAX_GAIN, space, g)
        if y is None:
            completed = not ok.any()
            records.append(TraceRecord(n=n, state=x, gain=float(vals[x]), terminal=completed))
            break
        records.append(TraceRecord(n=n, state=x, gain=float(vals[x]), dist=space.d(x, y)))
        x = y
    return Trace(records=records, mode=Mode.HILL_CLIMB, completed=completed)


def inefficiency_gap(trace: Trace, g_upper: float) -> float:
    return g_upper - trace.records[-1].gain


# ---------------------------------------------------------------------------
# verifiers


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""
    step: Optional[int] = None


@dataclass
class Report:
    title: str
    checks: List[Check] = field(default_factory=list)
    status: str = ""

    def add(self, name, passed, detail="", step=None):
        self.checks.append(Check(name, bool(passed), detail, step))

    @property
    def ok(self) -> bool:
        if self.status == "refused":
            return False
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> List[Check]:
        return [c for c in self.checks if not c.passed]

    def summary(self) -> str:
        status = self.status or ("pass" if self.ok else "fail")
        lines = [f"{self.title}: {status}"]
        for c in self.failures:
            where = f" at step {c.step}" if c.step is not None else ""
            lines.append(f"  FAILED {c.name}{where}: {c.detail}")
        return "\n".join(lines)


def verify_budget(trace: Trace, theta: float, g_upper: float, tol: float = TIE_TOL,
                  long_trace: int = 50, tail_tol: Optional[float] = None) -> Report:
    """Per-step law ``g_{n+1} - g_n >= theta d_n``, the distance budget
    ``sum d_n <= (g_upper - g_0) / theta``, monotone gains and, on long traces,
    a small last step."""
    rep = Report("budget")
    moves = trace.moves
    for a, b in moves:
        step_gain = b.gain - a.gain
        if step_gain < -tol:
            rep.add("monotone gain", False, f"gain fell by {-step_gain:.3e}", a.n)
        if step_gain < theta * a.dist - tol:
            rep.add("per-step law", False, f"gain {step_gain:.6g} < theta*d = {theta * a.dist:.6g}", a.n)
    if not rep.checks:
        rep.add("per-step law", True)
    if not trace.records:
        rep.status = "pass (vacuous)"
        return rep
    total = sum(a.dist for a, _ in moves)
    budget = (g_upper - trace.records[0].gain) / theta
    rep.add("distance budget", total <= budget + tol, f"sum d = {total:.6g}, budget = {budget:.6g}")
    # tail budget: distance still to travel from x_n is bounded by (g_upper - g_n) / theta
    tail = 0.0
    for a, _ in reversed(moves):
        tail += a.dist
        room = (g_upper - a.gain) / theta
        if tail > room + tol:
            rep.add("tail budget", False, f"{tail:.6g} > {room:.6g}", a.n)
    if tail_tol is not None and len(moves) >= long_trace:
        last = moves[-1][0]
        rep.add("last step small", last.dist <= tail_tol, f"d = {last.dist:.3e}", last.n)
    return rep


def verify_shrinking(trace: Trace, space: FiniteMetricSpace, g: GainFunction,
                     sigma_min: Optional[float] = None, tol: float = TIE_TOL) -> Report:
    """Each move improves by ``sigma_min (s(x_n) - g(x_n)) >= sigma_min theta rho(S(x_n))``
    and the terminal state has ``rho(S(x*)) = 0``."""
    rep = Report("shrinking")
    if trace.mode is not Mode.IMPROVING:
        rep.status = "refused"
        rep.add("mode", False, f"shrinking needs an improving-enough trace, got {trace.mode.value}")
        return rep
    theta = trace.theta
    sig = trace.sigma if sigma_min is None else sigma_min
    for a, b in trace.moves:
        x = a.state
        s_mask = enclosing_mask(theta, space, g, x)
        s = float(g.table[s_mask].max())
        rho = set_radius(space, x, np.flatnonzero(s_mask))
        need = sig * (s - a.gain)
        if b.gain - a.gain < need - tol:
            rep.add("improves enough", False, f"{b.gain - a.gain:.6g} < {need:.6g}", a.n)
        if need < sig * theta * rho - tol:
            rep.add("radius bound", False, f"{need:.6g} < sigma*theta*rho = {sig * theta * rho:.6g}", a.n)
    if not trace.completed:
        rep.status = "non-terminal, shrinking not concluded"
        return rep
    last = trace.records[-1].state
    rho = set_radius(space, last, np.flatnonzero(enclosing_mask(theta, space, g, last)))
    rep.add("terminal radius zero", rho == 0.0, f"rho(S(x*)) = {rho:.6g}", trace.records[-1].n)
    return rep


@dataclass(frozen=True)
class TimeReport:
    total: float
    exploit: float
    horizon: float
    moving: float
    distance: float
    checks: tuple

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)


def time_accounting(trace: Trace, alpha: float, speed: float, alpha_min: Optional[float] = None,
                    speed_min: Optional[float] = None, tol: float = TIE_TOL) -> TimeReport:
    """Total time ``sum h(x_n) + t(x_n, x_{n+1})`` with ``h = t / alpha`` and moving time ``d / speed``.

    Checks moving time against ``sum d / speed_min`` and static time against
    ``sum t / alpha_min``.
    """
    if not alpha > 0 or not speed > 0:
        raise ValueError("alpha and speed must be positive")
    alpha_min = alpha if alpha_min is None else alpha_min
    speed_min = speed if speed_min is None else speed_min
    if not 0 < alpha_min <= alpha or not 0 < speed_min <= speed:
        raise ValueError("floors must be positive and not above the actual values")
    exploit = sum(r.t for r in trace.records)
    horizon = sum(r.t / alpha for r in trace.records)
    distance = sum(r.dist for r in trace.records)
    moving = sum(r.dist / speed for r in trace.records)
    checks = (
        Check("moving time bound", moving <= distance / speed_min + tol, f"{moving:.6g} <= {distance / speed_min:.6g}"),
        Check("static time bound", horizon <= exploit / alpha_min + tol, f"{horizon:.6g} <= {exploit / alpha_min:.6g}"),
    )
    return TimeReport(horizon + moving, exploit, horizon, moving, distance, checks)


# ---------------------------------------------------------------------------
# Ekeland certificate


@dataclass(frozen=True)
class EkelandCertificate:
    x0: int
    theta: float
    eps: float
    precondition_slack: float
    x_star: Optional[int] = None
    improvement: Optional[float] = None
    budget_slack: Optional[float] = None
    maximality_slack: Optional[float] = None
    strict: bool = False

    @property
    def precondition_ok(self) -> bool:
        return self.precondition_slack >= 0

    @property
    def found(self) -> bool:
        return self.x_star is not None

    @property
    def status(self) -> str:
        if not self.precondition_ok:
            return "precondition failed"
        if not self.found:
            return "no witness"
        return "strict" if self.strict else "tie"

    def to_dict(self) -> dict:
        return {**asdict(self), "status": self.status}


def _ekeland_slacks(space, g, theta, eps, x0, x):
    vals = g.table
    pen = vals - theta * space.dist[x]
    pen = np.delete(pen, x)
    margin = float(vals[x] - pen.max()) if pen.size else float("inf")
    return float(vals[x] - vals[x0]), float(eps - theta * space.d(x0, x)), margin


def ekeland_certificate(space: FiniteMetricSpace, g: GainFunction, theta: float, eps: float, x0: int) -> EkelandCertificate:
    """Search for x* with g(x*) >= g(x0), theta d(x0, x*) <= eps and
    g(y) - theta d(x*, y) < g(x*) for every y != x*.

    All states are enumerated. ``x0`` is preferred when it qualifies, then the
    highest gain, nearest, lowest index. If no state satisfies the third
    clause strictly, the best non-strict witness is returned flagged as a tie.
    """
    pre = float(eps - (g.upper - g(x0)))
    if pre < 0:
        return EkelandCertificate(x0, theta, eps, pre)
    strict, weak = [], []
    for x in range(len(space)):
        imp, budget, margin = _ekeland_slacks(space, g, theta, eps, x0, x)
        if imp < 0 or budget < 0:
            continue
        if margin > 0:
            strict.append(x)
        elif margin >= 0:
            weak.append(x)
    pool = strict or weak
    if not pool:
        return EkelandCertificate(x0, theta, eps, pre)
    best = x0 if x0 in pool else min(pool, key=lambda y: (-g(y), space.d(x0, y), y))
    imp, budget, margin = _ekeland_slacks(space, g, theta, eps, x0, best)
    return EkelandCertificate(x0, theta, eps, pre, best, imp, budget, margin, bool(strict))


def verify_certificate(space: FiniteMetricSpace, g: GainFunction, cert: EkelandCertificate) -> Report:
    """Re-check the three clauses by direct pairwise enumeration."""
    rep = Report("ekeland")
    if not cert.found:
        rep.add("witness", False, cert.status)
        return rep
    x, x0 = cert.x_star, cert.x0
    rep.add("improves", g(x) >= g(x0), f"g(x*) = {g(x)}, g(x0) = {g(x0)}")
    rep.add("within budget", cert.eps >= cert.theta * space.d(x0, x), f"theta d = {cert.theta * space.d(x0, x)}")
    for y in range(len(space)):
        if y == x:
            continue
        lhs = g(y) - cert.theta * space.d(x, y)
        ok = lhs < g(x) if cert.strict else lhs <= g(x)
        if not ok:
            rep.add("maximal", False, f"y = {y}: {lhs} vs {g(x)}", y)
    if not rep.failures:
        rep.add("maximal", True)
    return rep


# ---------------------------------------------------------------------------
# clairvoyance


def clairvoyance_index(trace: Trace, space: FiniteMetricSpace, g: GainFunction, profile: AgentProfile,
                       model: CostModel, r: float, exploit_time: Optional[float] = None) -> Optional[int]:
    """First step whose whole worthwhile set lies within distance ``r``."""
    t_y = profile.t_max if exploit_time is None else min(exploit_time, profile.t_max)
    for rec in trace.records:
        W = move_terms(profile, model, space, g, t_y, rec.state).worthwhile
        if set_radius(space, rec.state, np.flatnonzero(W)) <= r:
            return rec.n
    return None
