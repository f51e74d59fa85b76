"""State spaces, gain functions and convex constraint sets."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

TIE_TOL = 1e-12


class MalformedInputError(ValueError):
    """Raised when a table or document cannot describe a valid object."""


class InfeasibleConstraintError(ValueError):
    """Raised when an intersection of constraint sets is empty."""


# ---------------------------------------------------------------------------
# metric spaces


@dataclass(frozen=True)
class Violation:
    axiom: str
    indices: tuple

    def __str__(self):
        return f"{self.axiom} at {self.indices}"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok

    def lines(self):
        return [str(v) for v in self.violations]


class FiniteMetricSpace:
    """A finite point set with a pairwise distance table.

    The table is copied and frozen. Construction does not validate the metric
    axioms; call :func:`validate_metric` (or ``FiniteMetricSpace.checked``).
    """

    def __init__(self, dist, points: Optional[Sequence] = None):
        table = np.array(dist, dtype=float)
        if table.ndim != 2 or table.shape[0] != table.shape[1]:
            raise MalformedInputError(f"distance table must be square, got shape {table.shape}")
        if not np.all(np.isfinite(table)):
            raise MalformedInputError("distance table has non-finite entries")
        if np.any(table < 0):
            i, j = np.argwhere(table < 0)[0]
            raise MalformedInputError(f"negative distance at ({i}, {j})")
        table.setflags(write=False)
        self.dist = table
        n = table.shape[0]
        self.points = tuple(points) if points is not None else tuple(range(n))
        if len(self.points) != n:
            raise MalformedInputError("number of labels does not match the distance table")

    @classmethod
    def checked(cls, dist, points=None) -> "FiniteMetricSpace":
        space = cls(dist, points)
        report = validate_metric(space)
        if not report.ok:
            raise MalformedInputError("; ".join(report.lines()))
        return space

    @classmethod
    def line(cls, n: int) -> "FiniteMetricSpace":
        """Points 0..n-1 on a line with unit spacing."""
        idx = np.arange(n, dtype=float)
        return cls(np.abs(idx[:, None] - idx[None, :]))

    def __len__(self):
        return self.dist.shape[0]

    def d(self, i: int, j: int) -> float:
        return float(self.dist[i, j])

    @property
    def diameter(self) -> float:
        return float(self.dist.max()) if len(self) else 0.0

    def ball(self, i: int, r: float) -> np.ndarray:
        """Indices within distance ``r`` of ``i`` (the exploration set)."""
        return np.flatnonzero(self.dist[i] <= r)


def validate_metric(space: FiniteMetricSpace) -> ValidationReport:
    """List every violated metric axiom with its offending indices."""
    D = space.dist
    n = D.shape[0]
    out = []
    for i in range(n):
        if D[i, i] != 0:
            out.append(Violation("nonzero self-distance", (i,)))
    for i in range(n):
        for j in range(i + 1, n):
            if D[i, j] != D[j, i]:
                out.append(Violation("asymmetry", (i, j)))
            if D[i, j] == 0 or D[j, i] == 0:
                out.append(Violation("identity of indiscernibles", (i, j)))
    # d(i,k) <= d(i,j) + d(j,k), exact comparison
    for j in range(n):
        excess = D[:, j][:, None] + D[j, :][None, :]
        bad = np.argwhere(D > excess)
        for i, k in bad:
            if i > k and D[i, k] == D[k, i] and D[i, j] == D[j, i] and D[j, k] == D[k, j]:
                continue  # mirror image of (k, j, i)
            out.append(Violation("triangle inequality", (int(i), j, int(k))))
    out.sort(key=lambda v: (v.axiom != "triangle inequality", v.indices))
    return ValidationReport(tuple(out))


@dataclass(frozen=True)
class EuclideanSpace:
    dim: int

    def __post_init__(self):
        if self.dim < 1:
            raise MalformedInputError("dimension must be >= 1")

    @staticmethod
    def d(x, y) -> float:
        return float(np.linalg.norm(np.asarray(x, float) - np.asarray(y, float)))


# ---------------------------------------------------------------------------
# gain functions


@dataclass(frozen=True, eq=False)
class GainFunction:
    """Per-unit-of-time utility ``g``.

    Either ``table`` (one value per point of a finite space) or ``func`` plus
    ``grad`` (smooth mode on a Euclidean space) is set. ``upper`` is the
    supremum of ``g`` on the feasible set: exact in table mode, supplied in
    smooth mode (or ``None`` when unknown). ``gross`` and ``maintenance`` are
    an optional decomposition ``g = gross - maintenance``.
    """

    table: Optional[np.ndarray] = None
    func: Optional[Callable] = None
    grad: Optional[Callable] = None
    upper: Optional[float] = None
    gross: Optional[object] = None
    maintenance: Optional[object] = None
    name: str = ""

    @classmethod
    def from_table(cls, values, gross=None, maintenance=None) -> "GainFunction":
        arr = np.array(values, dtype=float)
        if arr.ndim != 1 or not np.all(np.isfinite(arr)):
            raise MalformedInputError("gain table must be a finite 1-D array")
        arr.setflags(write=False)
        if gross is not None or maintenance is not None:
            if gross is None or maintenance is None:
                raise MalformedInputError("gross utility and maintenance cost come together")
            gross = np.array(gross, dtype=float)
            maintenance = np.array(maintenance, dtype=float)
            if gross.shape != arr.shape or maintenance.shape != arr.shape:
                raise MalformedInputError("decomposition tables must match the gain table")
            if np.any(gross - maintenance != arr):
                raise MalformedInputError("gain table differs from gross - maintenance")
        return cls(table=arr, upper=float(arr.max()), gross=gross, maintenance=maintenance)

    @classmethod
    def from_decomposition(cls, gross, maintenance) -> "GainFunction":
        gross = np.array(gross, dtype=float)
        maintenance = np.array(maintenance, dtype=float)
        return cls.from_table(gross - maintenance, gross, maintenance)

    @classmethod
    def smooth(cls, func, grad, upper=None, name="") -> "GainFunction":
        return cls(func=func, grad=grad, upper=upper, name=name)

    @property
    def is_table(self) -> bool:
        return self.table is not None

    def __call__(self, x):
        if self.table is not None:
            return float(self.table[x])
        return float(self.func(np.asarray(x, dtype=float)))

    def gradient(self, x) -> np.ndarray:
        if self.grad is None:
            raise MalformedInputError("gain function has no gradient")
        return np.atleast_1d(np.asarray(self.grad(np.asarray(x, dtype=float)), dtype=float))

    def __len__(self):
        return 0 if self.table is None else len(self.table)


def gradient_check(g: GainFunction, point, h: float = 1e-5) -> float:
    """Max-norm gap between ``g.gradient`` and central differences of step ``h``."""
    if h <= 0:
        raise ValueError("finite-difference step must be positive")
    x = np.atleast_1d(np.asarray(point, dtype=float))
    fd = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        fp, fm = g(x + e), g(x - e)
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise MalformedInputError("gain function returned a non-finite value")
        fd[i] = (fp - fm) / (2 * h)
    grad = g.gradient(x)
    if not np.all(np.isfinite(grad)):
        raise MalformedInputError("gradient returned a non-finite value")
    return float(np.max(np.abs(grad - fd)))


# built-in smooth gains, referenced by name from scenario documents


def _neg_sq(center):
    c = np.asarray(center, dtype=float)
    return GainFunction.smooth(
        lambda y: -float(np.sum((y - c) ** 2)),
        lambda y: -2.0 * (y - c),
        upper=0.0,
        name="neg_sq",
    )


def _concave_quadratic(H, b, upper=None):
    # g(y) = -1/2 y'Hy + b'y with H symmetric positive definite
    H = np.atleast_2d(np.asarray(H, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    return GainFunction.smooth(
        lambda y: float(-0.5 * y @ H @ y + b @ y),
        lambda y: -(H @ y) + b,
        upper=upper,
        name="concave_quadratic",
    )


def _inverse_quadratic(center):
    a = np.asarray(center, dtype=float)

    def f(y):
        return 1.0 / (1.0 + float(np.sum((y - a) ** 2)))

    def grad(y):
        q = 1.0 + float(np.sum((y - a) ** 2))
        return -2.0 * (y - a) / q**2

    return GainFunction.smooth(f, grad, upper=1.0, name="inverse_quadratic")


def _linear(coef, upper=None):
    c = np.atleast_1d(np.asarray(coef, dtype=float))
    return GainFunction.smooth(lambda y: float(c @ y), lambda y: c.copy(), upper=upper, name="linear")


BUILTIN_GAINS = {
    "neg_sq": _neg_sq,
    "concave_quadratic": _concave_quadratic,
    "inverse_quadratic": _inverse_quadratic,
    "linear": _linear,
}


def builtin_gain(name: str, **params) -> GainFunction:
    try:
        factory = BUILTIN_GAINS[name]
    except KeyError:
        raise MalformedInputError(f"unknown built-in gain {name!r}; known: {sorted(BUILTIN_GAINS)}")
    return factory(**params)


def load_finite(path_or_doc) -> tuple:
    """Read ``{"points": [...], "dist": [[...]], "g": [...]}``.

    Returns ``(space, gain)``; the space is validated.
    """
    if isinstance(path_or_doc, (str, Path)):
        doc = json.loads(Path(path_or_doc).read_text())
    else:
        doc = path_or_doc
    if "dist" not in doc or "g" not in doc:
        raise MalformedInputError("finite space document needs 'dist' and 'g'")
    space = FiniteMetricSpace.checked(doc["dist"], doc.get("points"))
    gain = GainFunction.from_table(doc["g"])
    if len(gain) != len(space):
        raise MalformedInputError("gain table length does not match the number of points")
    return space, gain


# ---------------------------------------------------------------------------
# constraint sets


class ConstraintSet:
    def project(self, x) -> np.ndarray:
        raise NotImplementedError

    def contains(self, x, tol: float = 1e-10) -> bool:
        raise NotImplementedError

    @property
    def dim(self) -> int:
        raise NotImplementedError

    def _check(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.shape != (self.dim,):
            raise MalformedInputError(f"expected a point of dimension {self.dim}, got shape {x.shape}")
        return x


@dataclass(frozen=True, eq=False)
class Box(ConstraintSet):
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float))
        hi = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lo.shape != hi.shape:
            raise MalformedInputError("box bounds differ in shape")
        if np.any(lo > hi):
            raise InfeasibleConstraintError("box has a lower bound above its upper bound")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self):
        return self.lower.size

    def project(self, x):
        return np.clip(self._check(x), self.lower, self.upper)

    def contains(self, x, tol=1e-10):
        x = self._check(x)
        return bool(np.all(x >= self.lower - tol) and np.all(x <= self.upper + tol))


@dataclass(frozen=True, eq=False)
class Ball(ConstraintSet):
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.atleast_1d(np.asarray(self.center, dtype=float)))
        if not self.radius >= 0:
            raise InfeasibleConstraintError("ball radius must be nonnegative")

    @property
    def dim(self):
        return self.center.size

    def project(self, x):
        x = self._check(x)
        v = x - self.center
        n = np.linalg.norm(v)
        if n <= self.radius:
            return x
        return self.center + v * (self.radius / n)

    def contains(self, x, tol=1e-10):
        return bool(np.linalg.norm(self._check(x) - self.center) <= self.radius + tol)


@dataclass(frozen=True, eq=False)
class Halfspace(ConstraintSet):
    """``{x : normal . x <= offset}``."""

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.normal, dtype=float))
        if not np.any(a):
            raise MalformedInputError("halfspace normal must be nonzero")
        object.__setattr__(self, "normal", a)

    @property
    def dim(self):
        return self.normal.size

    def project(self, x):
        x = self._check(x)
        excess = self.normal @ x - self.offset
        if excess <= 0:
            return x
        return x - (excess / (self.normal @ self.normal)) * self.normal

    def contains(self, x, tol=1e-10):
        return bool(self.normal @ self._check(x) - self.offset <= tol * np.linalg.norm(self.normal))


@dataclass(frozen=True, eq=False)
class Intersection(ConstraintSet):
    """Intersection of convex sets, projected with Dykstra's algorithm.

    The last member is projected onto last in each sweep, so the returned
    point lies exactly in it.
    """

    sets: tuple
    tol: float = 1e-10
    max_sweeps: int = 10_000

    def __post_init__(self):
        flat = []
        for s in self.sets:
            flat.extend(s.sets if isinstance(s, Intersection) else [s])
        if not flat:
            raise MalformedInputError("empty intersection list")
        if len({s.dim for s in flat}) != 1:
            raise MalformedInputError("intersected sets differ in dimension")
        object.__setattr__(self, "sets", tuple(flat))

    @property
    def dim(self):
        return self.sets[0].dim

    def contains(self, x, tol=1e-10):
        return all(s.contains(x, tol) for s in self.sets)

    def project(self, x):
        x = self._check(x)
        if len(self.sets) == 1:
            return self.sets[0].project(x)
        if self.contains(x, 0.0):
            return x
        incr = [np.zeros_like(x) for _ in self.sets]
        cur = x.copy()
        for _ in range(self.max_sweeps):
            prev = cur
            shift = 0.0
            for k, s in enumerate(self.sets):
                z = cur + incr[k]
                cur = s.project(z)
                new = z - cur
                shift += float(np.sum((new - incr[k]) ** 2))
                incr[k] = new
            # the iterate can sit still for a sweep while the increments move
            if np.linalg.norm(cur - prev) <= self.tol and shift <= self.tol**2 and self.contains(cur, 10 * self.tol):
                return cur
        if not self.contains(cur, 1e-6):
            raise InfeasibleConstraintError("alternating projections did not reach a common point")
        return cur


@dataclass(frozen=True, eq=False)
class BoxBall(ConstraintSet):
    """Box intersected with a ball centred inside it, projected exactly.

    The projection of z is ``clip(c + mu (z - c))`` for the largest mu in [0, 1]
    keeping it in the ball. Along that path the squared distance to c is
    piecewise quadratic in mu with breakpoints where coordinates reach the box.
    """

    box: Box
    ball: Ball

    def __post_init__(self):
        if self.box.dim != self.ball.dim:
            raise MalformedInputError("intersected sets differ in dimension")
        if not self.box.contains(self.ball.center, 0.0):
            raise MalformedInputError("ball centre must lie in the box")

    @property
    def dim(self):
        return self.box.dim

    def contains(self, x, tol=1e-10):
        return self.box.contains(x, tol) and self.ball.contains(x, tol)

    def project(self, x):
        z = self._check(x)
        lo, hi, c, r = self.box.lower, self.box.upper, self.ball.center, self.ball.radius
        w = z - c
        full = np.clip(z, lo, hi)
        if np.sum((full - c) ** 2) <= r * r:
            return full
        # mu at which each coordinate reaches the face it is heading for
        face = np.where(w > 0, hi, lo)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            t = np.where(w != 0, (face - c) / w, np.inf)
        order = np.argsort(t)
        t, w2, clamped = t[order], (w**2)[order], ((face - c) ** 2)[order]
        free = np.sum(w2) - np.concatenate(([0.0], np.cumsum(w2)))  # weight of still-free coordinates
        fixed = np.concatenate(([0.0], np.cumsum(clamped)))
        # segment k covers mu in [t[k-1], t[k]] with the first k coordinates clamped
        for k in range(t.size + 1):
            end = t[k] if k < t.size else 1.0
            end = min(end, 1.0)
            if end * end * free[k] + fixed[k] >= r * r or k == t.size:
                mu = np.sqrt(max(r * r - fixed[k], 0.0) / free[k]) if free[k] > 0 else end
                break
        return np.clip(c + min(mu, 1.0) * w, lo, hi)


def intersect(*sets) -> ConstraintSet:
    if len(sets) == 1:
        return sets[0]
    if len(sets) == 2:
        box = next((s for s in sets if isinstance(s, Box)), None)
        ball = next((s for s in sets if isinstance(s, Ball)), None)
        if box is not None and ball is not None and box.contains(ball.center, 0.0):
            return BoxBall(box, ball)
    return Intersection(tuple(sets))


def project(cset: ConstraintSet, point) -> np.ndarray:
    return cset.project(point)
