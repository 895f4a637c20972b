"""Piecewise-linear approximation of cumulative cost.

Breakpoints are geometric in experience, because learning acts per doubling.
For learning curves the cumulative cost is concave, so chords lie below it
and the approximation is optimistic.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .curves import (
    DomainError,
    LearningSpec,
    Modified,
    UnsupportedVariantError,
    cumulative_cost,
    is_integrable,
    unit_cost,
)

# Interior sample count per segment when checking the chord error.
_SEG_SAMPLES = 33
# Split a little before the target so the unsampled maximum stays below it.
_ERR_SAFETY = 0.99
MAX_BREAKPOINTS = 20_000


@dataclass(frozen=True)
class PwlPolicy:
    """Either ``per_doubling`` segments per doubling or a ``max_rel_error`` target."""

    per_doubling: int | None = None
    max_rel_error: float | None = None

    def __post_init__(self):
        if (self.per_doubling is None) == (self.max_rel_error is None):
            raise ValueError("set exactly one of per_doubling and max_rel_error")
        if self.per_doubling is not None and self.per_doubling < 1:
            raise ValueError("per_doubling must be >= 1")
        if self.max_rel_error is not None and not self.max_rel_error > 0:
            raise ValueError("max_rel_error must be > 0")


@dataclass(frozen=True, eq=False)
class PwlApprox:
    breakpoints: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        if bp.ndim != 1 or bp.shape != vals.shape or len(bp) < 2:
            raise ValueError("need matching 1-d breakpoints and values, at least two")
        if np.any(np.diff(bp) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        bp.setflags(write=False)
        vals.setflags(write=False)
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "values", vals)

    @property
    def slopes(self) -> np.ndarray:
        return np.diff(self.values) / np.diff(self.breakpoints)

    @property
    def segments(self) -> int:
        return len(self.breakpoints) - 1

    @property
    def x_min(self) -> float:
        return float(self.breakpoints[0])

    @property
    def x_max(self) -> float:
        return float(self.breakpoints[-1])

    def to_csv(self, fh=None) -> str | None:
        """Write ``x,value`` rows; returns the text when no file is given."""
        own = fh is None
        if own:
            fh = io.StringIO()
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "value"])
        for x, v in zip(self.breakpoints, self.values):
            w.writerow([repr(float(x)), repr(float(v))])
        return fh.getvalue() if own else None


def _exact(spec, x):
    return cumulative_cost(spec, x)


def _segment_error(spec, a, fa, b, fb):
    """Largest sampled relative chord error on ``[a, b]``."""
    slope = (fb - fa) / (b - a)
    ts = np.geomspace(a, b, _SEG_SAMPLES + 2)[1:-1]
    pts = np.append(ts, 0.5 * (a + b))
    worst = 0.0
    for u in pts:
        exact = _exact(spec, float(u))
        chord = fa + slope * (u - a)
        if exact > 0:
            worst = max(worst, abs(chord - exact) / exact)
    if fa == 0.0:
        # limit of chord/exact - 1 as u -> a
        c = unit_cost(spec, a)
        worst = max(worst, abs(slope - c) / c)
    return worst


def _is_linear(spec) -> bool:
    """Constant unit cost, so two breakpoints represent it exactly."""
    if isinstance(spec, Modified):
        return _is_linear(spec.inner)
    return spec._trend() == "flat"


def build_breakpoints(
    spec: LearningSpec,
    x_max: float,
    policy: PwlPolicy | None = None,
    *,
    per_doubling: int | None = None,
    max_rel_error: float | None = None,
) -> PwlApprox:
    """Breakpoints from ``spec.x0`` to ``x_max`` with exact cumulative cost values."""
    if policy is None:
        policy = PwlPolicy(per_doubling=per_doubling, max_rel_error=max_rel_error)
    if not is_integrable(spec):
        raise UnsupportedVariantError(f"{type(spec).__name__} curve has no cumulative cost")
    x0 = float(spec.x0)
    x_max = float(x_max)
    if not (math.isfinite(x_max) and x_max > x0):
        raise DomainError(f"x_max must exceed the reference point {x0!r}, got {x_max!r}")

    if _is_linear(spec):
        return PwlApprox(np.array([x0, x_max]), np.array([0.0, _exact(spec, x_max)]))

    if policy.per_doubling is not None:
        doublings = math.log2(x_max / x0)
        k = max(1, math.ceil(policy.per_doubling * doublings - 1e-9))
        xs = x0 * (x_max / x0) ** (np.arange(k + 1) / k)
        xs[0], xs[-1] = x0, x_max
        return PwlApprox(xs, np.array([_exact(spec, float(x)) for x in xs]))

    eps = policy.max_rel_error * _ERR_SAFETY
    done = {x0: 0.0, x_max: _exact(spec, x_max)}
    # depth-first bisection, left half first
    stack = [(x0, x_max)]
    while stack:
        a, b = stack.pop()
        fa, fb = done[a], done[b]
        if _segment_error(spec, a, fa, b, fb) <= eps:
            continue
        m = math.sqrt(a * b)
        if not a < m < b:
            raise DomainError("breakpoint spacing underflow while refining")
        done[m] = _exact(spec, m)
        if len(done) > MAX_BREAKPOINTS:
            raise DomainError(f"more than {MAX_BREAKPOINTS} breakpoints needed")
        stack.append((m, b))
        stack.append((a, m))
    xs = sorted(done)
    return PwlApprox(np.array(xs), np.array([done[x] for x in xs]))


def eval_pwl(pwl: PwlApprox, x):
    """Linear interpolation; no extrapolation outside the breakpoints."""
    arr = np.asarray(x, dtype=float)
    lo, hi = pwl.x_min, pwl.x_max
    slack = 1e-12 * max(abs(lo), abs(hi))
    if np.any(arr < lo - slack) or np.any(arr > hi + slack) or np.any(np.isnan(arr)):
        raise DomainError(f"experience outside the approximation range [{lo!r}, {hi!r}]")
    out = np.interp(np.clip(arr, lo, hi), pwl.breakpoints, pwl.values)
    return float(out) if out.ndim == 0 else out


def approx_error(pwl: PwlApprox, spec: LearningSpec, grid: int = 10_000, spacing: str = "geometric") -> float:
    """Maximum relative error against the exact cumulative cost on a dense grid."""
    if spacing == "geometric":
        xs = np.geomspace(pwl.x_min, pwl.x_max, grid)
    elif spacing == "linear":
        xs = np.linspace(pwl.x_min, pwl.x_max, grid)
    else:
        raise ValueError(f"unknown spacing {spacing!r}")
    approx = eval_pwl(pwl, xs)
    worst = 0.0
    for x, v in zip(xs, approx):
        exact = _exact(spec, float(x))
        worst = max(worst, abs(v - exact) / max(exact, 1e-300))
    return worst
