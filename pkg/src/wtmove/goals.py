"""Aspiration and satisficing levels for the improving-enough process."""

from __future__ import annotations

from dataclasses import dataclass

from .behavior import enclosing_mask
from .space import FiniteMetricSpace, GainFunction


@dataclass(frozen=True)
class GoalState:
    gain: float
    reachable: float
    aspiration: float
    satisficing: float
    p: float
    q: float

    @property
    def sigma(self) -> float:
        return self.p * self.q

    @property
    def improvement(self) -> float:
        return self.satisficing - self.gain


def reachable_supremum(theta: float, space: FiniteMetricSpace, g: GainFunction, x: int) -> float:
    """Highest gain reachable inside the enclosing set S(x)."""
    return float(g.table[enclosing_mask(theta, space, g, x)].max())


def set_aspiration(gx: float, s: float, p: float) -> float:
    if not 0 < p <= 1:
        raise ValueError("aspiration rate p must lie in (0, 1]")
    return gx + p * (s - gx)


def satisficing_level(gx: float, aspiration: float, q: float):
    """Return ``(satisficing level, improvement gap)`` for need-reduction rate ``q``."""
    if not 0 < q < 1:
        raise ValueError("need-reduction rate q must lie in (0, 1)")
    eps = q * (aspiration - gx)
    return gx + eps, eps


def frustration(mu: float, aspiration: float, gx: float) -> float:
    if mu < 0:
        raise ValueError("disappointment weight must be nonnegative")
    return mu * (aspiration - gx)


def goal_state(theta, space, g, x, p=0.5, q=0.5) -> GoalState:
    gx = g(x)
    s = reachable_supremum(theta, space, g, x)
    hat = set_aspiration(gx, s, p)
    tilde, _ = satisficing_level(gx, hat, q)
    return GoalState(gx, s, hat, tilde, p, q)
