"""Advantages and costs to move, the worthwhile and enclosing relations, rest points."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .space import TIE_TOL, FiniteMetricSpace, GainFunction, MalformedInputError


@dataclass(frozen=True)
class AgentProfile:
    """Psychological weights of the agent and the bounds it encloses them in.

    ``lam``, ``mu``, ``nu`` weight satisfaction, disappointment and utility;
    their sum is the character index ``delta``. ``xi`` is the non-sacrificing
    rate (the fraction of moving costs the agent wants covered). The bounds
    ``xi_min``, ``e_min``, ``t_max``, ``delta_max`` (and ``v_max`` when
    opportunity costs are counted) define the uniform satisficing ratio.
    Positivity of the bounds is checked where they are used, by
    :func:`satisficing_theta`.
    """

    lam: float = 1.0
    mu: float = 0.0
    nu: float = 0.0
    xi: float = 1.0
    xi_min: float = 1.0
    e_min: float = 1.0
    t_max: float = 1.0
    delta_max: float = 1.0
    v_min: Optional[float] = None
    v_max: Optional[float] = None
    alpha_min: float = 1.0

    def __post_init__(self):
        for name in ("lam", "mu", "nu", "xi"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if self.delta <= 0:
            raise ValueError("character index lam + mu + nu must be positive")
        if self.delta > self.delta_max:
            raise ValueError(f"character index {self.delta} exceeds delta_max {self.delta_max}")
        if self.xi < self.xi_min:
            raise ValueError(f"xi {self.xi} is below xi_min {self.xi_min}")
        if not 0 < self.alpha_min <= 1:
            raise ValueError("alpha_min must lie in (0, 1]")
        for name in ("v_min", "v_max"):
            v = getattr(self, name)
            if v is not None and v <= 0:
                raise ValueError(f"{name} must be positive")

    @property
    def delta(self) -> float:
        return self.lam + self.mu + self.nu


class Friction(str, enum.Enum):
    DRY = "dry"
    VISCOUS = "viscous"
    TABLE = "table"


@dataclass(frozen=True, eq=False)
class CostModel:
    """Cost to move ``C(x, y) = e(x, y) d(x, y)``.

    dry:     e = effort (or effort-speed law), so C grows linearly with d
    viscous: e = effort * d, so C = effort * d**2 and small steps are cheap
    table:   e read from ``table[x][y]``

    ``speed`` is the constant moving speed; moving time is ``d / speed``.
    With ``speed_law=True`` the per-distance effort follows the strictly
    increasing law ``effort * (1 + speed / v_max)``.
    """

    friction: Friction = Friction.DRY
    effort: float = 1.0
    speed: float = 1.0
    opportunity: bool = False
    table: Optional[np.ndarray] = None
    speed_law: bool = False
    v_max: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "friction", Friction(self.friction))
        if self.effort <= 0:
            raise ValueError("effort per distance must be positive")
        if self.speed <= 0:
            raise ValueError("moving speed must be positive")
        if self.friction is Friction.TABLE:
            if self.table is None:
                raise MalformedInputError("table friction needs an effort table")
            t = np.array(self.table, dtype=float)
            t.setflags(write=False)
            object.__setattr__(self, "table", t)
        if self.speed_law and not self.v_max:
            raise ValueError("the effort-speed law needs v_max")

    def unit_effort(self) -> float:
        if self.speed_law:
            return self.effort * (1.0 + self.speed / self.v_max)
        return self.effort

    def effort_row(self, space: FiniteMetricSpace, x: int) -> np.ndarray:
        """Per-distance efforts e(x, .) for every destination."""
        if self.friction is Friction.TABLE:
            row = self.table[x]
            if row.shape[0] != len(space) or np.any(np.isnan(row)):
                raise MalformedInputError(f"effort table incomplete at row {x}")
            return np.array(row)
        base = np.full(len(space), self.unit_effort())
        if self.friction is Friction.VISCOUS:
            return base * space.dist[x]
        return base

    def effort_at(self, space, x, y) -> float:
        return float(self.effort_row(space, x)[y])


# ---------------------------------------------------------------------------
# advantages


def instantaneous_advantage(profile: AgentProfile, g: GainFunction, aspiration: float, x, y) -> float:
    """Weighted per-unit-of-time advantage a(x, y) of exploiting ``y`` seen from ``x``.

    Utility, satisfaction relative to ``g(x)`` and disappointment relative to
    the aspiration level at ``x``. The difference ``a(x, y) - a(x, x)`` equals
    ``delta * (g(y) - g(x))``.
    """
    gx, gy = g(x), g(y)
    if aspiration < gx:
        raise ValueError("aspiration level must be at least g(x)")
    return profile.nu * gy + profile.lam * (gy - gx) - profile.mu * (aspiration - gy)


def advantage_to_move(profile: AgentProfile, g: GainFunction, t_y: float, x, y) -> float:
    if t_y < 0:
        raise ValueError("exploitation duration must be nonnegative")
    return t_y * profile.delta * (g(y) - g(x))


# ---------------------------------------------------------------------------
# costs


def cost_to_move(model: CostModel, space: FiniteMetricSpace, x: int, y: int) -> float:
    return model.effort_at(space, x, y) * space.d(x, y)


def moving_time(model: CostModel, space: FiniteMetricSpace, x: int, y: int) -> float:
    return space.d(x, y) / model.speed


def cost_rate(model: CostModel, space: FiniteMetricSpace, x: int, y: int) -> float:
    """Per-unit-of-time cost of moving, c = e * v, so that e d = t c."""
    return model.effort_at(space, x, y) * model.speed


def opportunity_cost(model: CostModel, g: GainFunction, space: FiniteMetricSpace, x: int, y: int) -> float:
    """Gain forgone while moving: moving time times g(x)."""
    if model.speed <= 0:
        raise ValueError("degenerate moving speed")
    if x == y:
        return 0.0
    return space.d(x, y) / model.speed * g(x)


def transition_ratio(profile, model, space, g, t_y, x, y) -> float:
    """Acceptable transition rate theta(x, y).

    ``A >= xi (C [+ O])`` holds iff ``g(y) - g(x) >= theta(x, y) d(x, y)``.
    """
    if t_y <= 0:
        raise ValueError("exploitation duration must be positive")
    e = model.effort_at(space, x, y)
    if model.opportunity:
        e = e + g(x) / model.speed
    return profile.xi * e / (t_y * profile.delta)


def worthwhile_membership(profile, model, space, g, t_y, x, y) -> bool:
    if x == y:
        return True
    a = advantage_to_move(profile, g, t_y, x, y)
    c = cost_to_move(model, space, x, y)
    if model.opportunity:
        c += opportunity_cost(model, g, space, x, y)
    return a >= profile.xi * c


@dataclass(frozen=True)
class MoveTerms:
    """Advantage, cost, opportunity cost and ratio from ``x`` to every state."""

    advantage: np.ndarray
    cost: np.ndarray
    opportunity: np.ndarray
    ratio: np.ndarray
    worthwhile: np.ndarray


def move_terms(profile, model, space: FiniteMetricSpace, g: GainFunction, t_y: float, x: int) -> MoveTerms:
    if t_y <= 0:
        raise ValueError("exploitation duration must be positive")
    vals = g.table
    d = space.dist[x]
    e = model.effort_row(space, x)
    A = t_y * profile.delta * (vals - vals[x])
    C = e * d
    O = d / model.speed * vals[x] if model.opportunity else np.zeros_like(d)
    ratio = profile.xi * (e + (vals[x] / model.speed if model.opportunity else 0.0)) / (t_y * profile.delta)
    W = A >= profile.xi * (C + O)
    W[x] = True
    return MoveTerms(A, C, O, ratio, W)


def worthwhile_set(profile, model, space, g, t_y, x) -> np.ndarray:
    return np.flatnonzero(move_terms(profile, model, space, g, t_y, x).worthwhile)


# ---------------------------------------------------------------------------
# enclosing relation and rest points


def enclosing_membership(theta: float, space: FiniteMetricSpace, g: GainFunction, x, y) -> bool:
    if theta < 0:
        raise ValueError("theta must be nonnegative")
    return g(y) - g(x) >= theta * space.d(x, y)


def enclosing_mask(theta: float, space: FiniteMetricSpace, g: GainFunction, x: int) -> np.ndarray:
    mask = (g.table - g.table[x]) >= theta * space.dist[x]
    mask[x] = True
    return mask


def enclosing_set(theta: float, space: FiniteMetricSpace, g: GainFunction, x: int):
    """Members of S(x) and the radius max_{y in S(x)} d(x, y)."""
    mask = enclosing_mask(theta, space, g, x)
    members = np.flatnonzero(mask)
    return members, float(space.dist[x, members].max())


def set_radius(space: FiniteMetricSpace, x: int, members) -> float:
    members = np.asarray(members, dtype=int)
    return float(space.dist[x, members].max()) if members.size else 0.0


class RestPoint(str, enum.Enum):
    STRONG = "Strong"
    WEAK_ONLY = "WeakOnly"
    NOT_REST = "NotRest"


def classify_rest_point(theta: float, space: FiniteMetricSpace, g: GainFunction, x: int, tol: float = TIE_TOL) -> RestPoint:
    """Strong if every other state falls strictly short of ``theta * d``,
    weak-only if some state ties it (within ``tol``), otherwise not a rest point."""
    if theta < 0:
        raise ValueError("theta must be nonnegative")
    gap = (g.table - g.table[x]) - theta * space.dist[x]
    gap = np.delete(gap, x)
    if gap.size == 0 or np.all(gap < -tol):
        return RestPoint.STRONG
    if np.all(gap <= tol):
        return RestPoint.WEAK_ONLY
    return RestPoint.NOT_REST


def satisficing_theta(profile: AgentProfile, g_x0: Optional[float] = None, opportunity: bool = False) -> float:
    """Uniform lower bound on the acceptable transition ratio."""
    bounds = {"xi_min": profile.xi_min, "e_min": profile.e_min, "t_max": profile.t_max, "delta_max": profile.delta_max}
    if opportunity:
        bounds["v_max"] = profile.v_max
    for name, value in bounds.items():
        if value is None or not value > 0:
            raise ValueError(f"bound {name} must be strictly positive, got {value}")
    effort = profile.e_min
    if opportunity:
        effort = effort + (g_x0 or 0.0) / profile.v_max
    theta = profile.xi_min * effort / (profile.t_max * profile.delta_max)
    if not theta > 0:
        raise ValueError(f"satisficing ratio must be positive, got {theta}")
    return theta
