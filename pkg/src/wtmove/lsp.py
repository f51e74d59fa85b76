"""Local search proximal algorithm on R^p with a convex constraint set.

Each outer step maximizes ``g(y) - theta * ||y - x_n||**2`` over the
constraint set intersected with the exploration ball ``B(x_n, r)``. The inner
problem is solved by projected gradient ascent with spectral (Barzilai-Borwein)
step sizes and backtracking, started from ``x_n`` and from a few random
feasible points.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .space import Ball, ConstraintSet, GainFunction, intersect

logger = logging.getLogger(__name__)


class InnerSolveError(RuntimeError):
    pass


@dataclass(frozen=True)
class LspConfig:
    theta: float = 1.0
    radius: float = 1.0
    eps: float = 1e-10
    step0: float = 1.0
    backtrack: float = 0.5
    restarts: int = 2
    inner_iter: int = 500
    inner_tol: float = 1e-12
    step_tol: float = 1e-10
    residual_tol: float = 1e-6
    stall: int = 3
    probe: float = 1e-3
    max_iter: int = 10_000
    seed: int = 0

    def __post_init__(self):
        for name in ("theta", "radius", "step0", "inner_tol", "step_tol", "residual_tol", "probe"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0 < self.backtrack < 1:
            raise ValueError("backtracking factor must lie in (0, 1)")
        if self.eps < 0 or self.restarts < 0 or self.inner_iter < 1 or self.max_iter < 1:
            raise ValueError("invalid iteration settings")


@dataclass
class LspStep:
    x: np.ndarray
    value: float
    step: float
    slack: float
    ball_active: bool
    accepted: bool


@dataclass
class LspTrace:
    iterates: List[np.ndarray] = field(default_factory=list)
    values: List[float] = field(default_factory=list)
    steps: List[float] = field(default_factory=list)
    slacks: List[float] = field(default_factory=list)
    ball_active: List[bool] = field(default_factory=list)
    residuals: List[float] = field(default_factory=list)
    converged: bool = False
    eps_total: float = 0.0

    @property
    def n_steps(self) -> int:
        return len(self.steps)

    @property
    def x(self) -> np.ndarray:
        return self.iterates[-1]

    @property
    def residual(self) -> float:
        return self.residuals[-1]

    @property
    def squared_steps(self) -> np.ndarray:
        """Partial sums of squared step norms."""
        return np.cumsum(np.square(self.steps))

    def summability_bound(self, g_upper: float, theta: float) -> float:
        return (g_upper - self.values[0]) / theta + self.eps_total / theta

    def summability_ok(self, g_upper: float, theta: float, tol: float = 1e-10) -> bool:
        total = float(np.sum(np.square(self.steps)))
        return total <= self.summability_bound(g_upper, theta) + tol

    def summability_degraded(self, g_upper: float, theta: float) -> bool:
        """True when the bound only holds once the inexactness allowance is added."""
        total = float(np.sum(np.square(self.steps)))
        return total > (g_upper - self.values[0]) / theta


def criticality_residual(g: GainFunction, cset: ConstraintSet, x, probe: float = 1e-3) -> float:
    """``||P_C(x + s grad g(x)) - x|| / s``; zero exactly at critical points of g over C."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return float(np.linalg.norm(cset.project(x + probe * g.gradient(x)) - x) / probe)


def _ascend(phi, grad, proj, y, config: LspConfig):
    """Projected gradient ascent from a feasible ``y``; never decreases ``phi``."""
    fy, gy = phi(y), grad(y)
    eta = config.step0
    for _ in range(config.inner_iter):
        while True:
            z = proj(y + eta * gy)
            s = z - y
            fz = phi(z)
            if not np.isfinite(fz):
                raise InnerSolveError("non-finite objective value")
            if fz >= fy + gy @ s - (s @ s) / (2 * eta) or eta < 1e-16:
                break
            eta *= config.backtrack
        if np.linalg.norm(s) / eta <= config.inner_tol or fz < fy:
            if fz >= fy:
                y, fy = z, fz
            break
        gz = grad(z)
        yk = gz - gy
        curv = -(s @ yk)
        eta = (s @ s) / curv if curv > 0 else config.step0
        eta = min(max(eta, 1e-12), 1e12)
        y, fy, gy = z, fz, gz
    return y, fy


def inner_solve(g: GainFunction, cset: ConstraintSet, x_n, theta: float, r: float,
                config: LspConfig, rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """Approximate argmax of ``g(y) - theta ||y - x_n||^2`` over C and ``||y - x_n|| <= r``.

    Starting from ``x_n`` makes the returned objective at least ``g(x_n)``.
    """
    x_n = np.atleast_1d(np.asarray(x_n, dtype=float))
    feasible = intersect(cset, Ball(x_n, r))
    proj = feasible.project

    def phi(y):
        return g(y) - theta * float((y - x_n) @ (y - x_n))

    def grad(y):
        return g.gradient(y) - 2 * theta * (y - x_n)

    base = phi(x_n)
    if not np.isfinite(base):
        raise InnerSolveError("non-finite objective at the current iterate")
    starts = [x_n]
    if config.restarts and rng is not None:
        for _ in range(config.restarts):
            u = rng.normal(size=x_n.size)
            u *= r * rng.uniform() ** (1 / x_n.size) / np.linalg.norm(u)
            starts.append(proj(x_n + u))
    best, fbest = x_n, base
    for y0 in starts:
        y, fy = _ascend(phi, grad, proj, y0, config)
        if fy > fbest:
            best, fbest = y, fy
    return best


def lsp_step(g: GainFunction, cset: ConstraintSet, x_n, config: LspConfig,
             rng: Optional[np.random.Generator] = None, eps: Optional[float] = None) -> LspStep:
    x_n = np.atleast_1d(np.asarray(x_n, dtype=float))
    eps = config.eps if eps is None else eps
    y = inner_solve(g, cset, x_n, config.theta, config.radius, config, rng)
    delta = float(np.linalg.norm(y - x_n))
    gy = g(y)
    slack = gy - g(x_n) - config.theta * delta**2
    if slack < -eps:
        logger.warning("inner solve lost %.3e of sufficient increase; step rejected", -slack)
        return LspStep(x_n, g(x_n), 0.0, 0.0, False, False)
    return LspStep(y, gy, delta, slack, delta >= config.radius * (1 - 1e-9), True)


def lsp_run(g: GainFunction, cset: ConstraintSet, x0, config: LspConfig) -> LspTrace:
    """Iterate proximal local-search steps until the step and the criticality residual are small."""
    rng = np.random.default_rng(config.seed)
    x = cset.project(np.atleast_1d(np.asarray(x0, dtype=float)))
    tr = LspTrace(iterates=[x], values=[g(x)], residuals=[criticality_residual(g, cset, x, config.probe)])
    idle = 0
    for _ in range(config.max_iter):
        st = lsp_step(g, cset, x, config, rng)
        if st.step <= config.step_tol and tr.residuals[-1] <= config.residual_tol:
            tr.converged = True
            break
        # no representable ascent left from x
        idle = idle + 1 if st.step == 0.0 else 0
        if idle >= config.stall:
            logger.info("LSP stalled with residual %.3e", tr.residuals[-1])
            break
        if not st.accepted or st.step == 0.0:
            continue
        x = st.x
        tr.iterates.append(x)
        tr.values.append(st.value)
        tr.steps.append(st.step)
        tr.slacks.append(st.slack)
        tr.ball_active.append(st.ball_active)
        tr.residuals.append(criticality_residual(g, cset, x, config.probe))
        tr.eps_total += config.eps
    else:
        logger.info("LSP stopped at the iteration cap with residual %.3e", tr.residuals[-1])
    return tr
