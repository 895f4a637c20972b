"""Learning-curve families.

Every family exposes the same three evaluations through module-level
functions: :func:`unit_cost`, :func:`cumulative_cost` and
:func:`effective_learning_rate`. Specs are frozen dataclasses, so they can
be shared between threads and used as dictionary keys.

Experience ``x`` is cumulative capacity (or units produced); all costs are
per unit of experience.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Mapping, Sequence, Union

import numpy as np
from scipy import optimize, special

LN2 = math.log(2.0)

# Relative step for central-difference elasticities.
FD_REL_STEP = 1e-6

# Gauss-Legendre nodes on [-1, 1] used per doubling for the diminishing curve.
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(24)


class CurveError(ValueError):
    """Base class for learning-curve errors."""


class DomainError(CurveError):
    """Argument outside the domain of the curve."""


class UnsupportedVariantError(CurveError):
    """Operation not defined for this curve family."""


class ArgumentError(CurveError, TypeError):
    """Missing or superfluous argument for this curve family."""


def lr_to_exponent(lr: float) -> float:
    """Learning exponent for a learning rate, ``log2(1 - lr)``."""
    lr = float(lr)
    if not lr < 1.0:
        raise DomainError(f"learning rate must be < 1, got {lr!r}")
    return math.log1p(-lr) / LN2


def exponent_to_lr(b: float) -> float:
    """Learning rate for a learning exponent, ``1 - 2**b``."""
    return -math.expm1(float(b) * LN2)


def _check_positive(name: str, value: float) -> None:
    if not (math.isfinite(value) and value > 0):
        raise DomainError(f"{name} must be finite and > 0, got {value!r}")


def _check_finite(name: str, value: float) -> None:
    if not math.isfinite(value):
        raise DomainError(f"{name} must be finite, got {value!r}")


def _check_x(x: float) -> float:
    x = float(x)
    if not (x > 0 and math.isfinite(x)):
        raise DomainError(f"experience must be finite and > 0, got {x!r}")
    return x


def _power_integral(c: float, ref: float, e: float, a: float, b: float) -> float:
    """Integral of ``c * (u/ref)**e`` over ``[a, b]`` (a, b > 0)."""
    if b == a:
        return 0.0
    p = e + 1.0
    span = math.log(b / a)
    if p == 0.0:
        return c * ref * span
    # expm1 form stays accurate when the exponent is close to -1
    return c * ref * math.exp(p * math.log(a / ref)) * math.expm1(p * span) / p


@dataclass(frozen=True)
class OneFactor:
    """Single power law ``c0 * (x/x0)**exponent``."""

    c0: float
    x0: float
    exponent: float

    def __post_init__(self):
        _check_positive("c0", self.c0)
        _check_positive("x0", self.x0)
        _check_finite("exponent", self.exponent)
        if not self.exponent < 1.0:
            raise DomainError("learning rate must lie in (-1, 1)")

    @classmethod
    def from_lr(cls, c0: float, x0: float, lr: float) -> "OneFactor":
        return cls(c0, x0, lr_to_exponent(lr))

    @property
    def lr(self) -> float:
        return exponent_to_lr(self.exponent)

    def _cost(self, x):
        return self.c0 * math.exp(self.exponent * math.log(x / self.x0))

    def _integral(self, a, b):
        return _power_integral(self.c0, self.x0, self.exponent, a, b)

    def _elasticity(self, x):
        return self.exponent

    def _trend(self):
        return _sign_trend(self.exponent)


@dataclass(frozen=True)
class TwoFactor:
    """Learning by doing times learning by research.

    ``c0 * (x/x0)**exponent * (y/y0)**research_exponent`` where ``y`` is
    cumulative research spending.
    """

    c0: float
    x0: float
    exponent: float
    y0: float
    research_exponent: float

    def __post_init__(self):
        _check_positive("c0", self.c0)
        _check_positive("x0", self.x0)
        _check_positive("y0", self.y0)
        _check_finite("exponent", self.exponent)
        _check_finite("research_exponent", self.research_exponent)

    @property
    def lr(self) -> float:
        return exponent_to_lr(self.exponent)

    @property
    def research_lr(self) -> float:
        return exponent_to_lr(self.research_exponent)

    def _cost2(self, x, y):
        return self.c0 * math.exp(
            self.exponent * math.log(x / self.x0)
            + self.research_exponent * math.log(y / self.y0)
        )


@dataclass(frozen=True)
class Component:
    """One cost component of a composite curve.

    Entries of different composites (or of the same one) that share an
    ``id`` read the same experience value, which is how spillover between
    technologies is expressed.
    """

    id: str
    c0: float
    x0: float
    exponent: float

    def __post_init__(self):
        if not (math.isfinite(self.c0) and self.c0 >= 0):
            raise DomainError(f"component {self.id!r}: c0 must be >= 0")
        _check_positive(f"component {self.id!r} x0", self.x0)
        _check_finite(f"component {self.id!r} exponent", self.exponent)

    @classmethod
    def from_lr(cls, id: str, c0: float, x0: float, lr: float) -> "Component":
        return cls(id, c0, x0, lr_to_exponent(lr))

    @property
    def lr(self) -> float:
        return exponent_to_lr(self.exponent)


@dataclass(frozen=True)
class Composite:
    """Sum of per-component power laws.

    With a scalar experience ``x`` every component grows by the same factor
    ``x / x0`` where ``x0`` is the first component's reference. A mapping
    ``{component id: experience}`` evaluates each component at its own
    experience instead.
    """

    components: tuple[Component, ...]

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        if not self.components:
            raise DomainError("composite curve needs at least one component")
        if not sum(c.c0 for c in self.components) > 0:
            raise DomainError("composite curve needs a positive total cost")

    @property
    def c0(self) -> float:
        return math.fsum(c.c0 for c in self.components)

    @property
    def x0(self) -> float:
        return self.components[0].x0

    def _parts(self, x):
        r = math.log(x / self.x0)
        return [c.c0 * math.exp(c.exponent * r) for c in self.components]

    def _cost(self, x):
        return math.fsum(self._parts(x))

    def _integral(self, a, b):
        return math.fsum(
            _power_integral(c.c0, self.x0, c.exponent, a, b) for c in self.components
        )

    def _elasticity(self, x):
        parts = self._parts(x)
        return math.fsum(p * c.exponent for p, c in zip(parts, self.components)) / math.fsum(parts)

    def _trend(self):
        signs = {_sign_trend(c.exponent) for c in self.components if c.c0 > 0}
        signs.discard("flat")
        if not signs:
            return "flat"
        return signs.pop() if len(signs) == 1 else "mixed"


@dataclass(frozen=True)
class Partial:
    """Only a share ``alpha`` of the initial cost learns."""

    c0: float
    x0: float
    exponent: float
    alpha: float

    def __post_init__(self):
        _check_positive("c0", self.c0)
        _check_positive("x0", self.x0)
        _check_finite("exponent", self.exponent)
        if not 0.0 <= self.alpha <= 1.0:
            raise DomainError(f"alpha must lie in [0, 1], got {self.alpha!r}")

    @classmethod
    def from_lr(cls, c0, x0, lr, alpha) -> "Partial":
        return cls(c0, x0, lr_to_exponent(lr), alpha)

    @property
    def lr(self) -> float:
        return exponent_to_lr(self.exponent)

    def _cost(self, x):
        r = math.exp(self.exponent * math.log(x / self.x0))
        return self.c0 * ((1.0 - self.alpha) + self.alpha * r)

    def _integral(self, a, b):
        return (1.0 - self.alpha) * self.c0 * (b - a) + _power_integral(
            self.alpha * self.c0, self.x0, self.exponent, a, b
        )

    def _elasticity(self, x):
        r = math.exp(self.exponent * math.log(x / self.x0))
        return self.alpha * self.exponent * r / ((1.0 - self.alpha) + self.alpha * r)

    def _trend(self):
        return "flat" if self.alpha == 0 else _sign_trend(self.exponent)


@dataclass(frozen=True)
class Diminishing:
    """Learning rate decaying by a factor ``1 - d`` per doubling.

    The local rate is ``lr0 * (1 - d)**log2(x/x0)``. Cost follows from
    integrating the matching local elasticity ``log2(1 - LR(x))`` over
    ``ln x``, which has a closed form through the dilogarithm.
    """

    c0: float
    x0: float
    lr0: float
    d: float

    def __post_init__(self):
        _check_positive("c0", self.c0)
        _check_positive("x0", self.x0)
        if not 0.0 < self.lr0 < 1.0:
            raise DomainError(f"lr0 must lie in (0, 1), got {self.lr0!r}")
        if not 0.0 <= self.d < 1.0:
            raise DomainError(f"d must lie in [0, 1), got {self.d!r}")

    def local_lr(self, x: float) -> float:
        s = math.log2(x / self.x0)
        return self.lr0 * (1.0 - self.d) ** s

    def _log_factor(self, s):
        # ln(C/c0) = int_0^s ln(1 - lr0 * q**t) dt
        a = self.lr0
        q = 1.0 - self.d
        lam = math.log1p(-self.d)
        if abs(lam) * max(abs(s), 1.0) < 1e-3:
            # small decay: the dilogarithm difference cancels, so integrate the
            # Taylor series of ln(1 - a e^(lam t)) around t = 0 instead
            r = 1.0 - a
            terms = (
                -a / r,
                -a / r**2,
                -a * (1 + a) / r**3,
                -a * (1 + 4 * a + a * a) / r**4,
            )
            out = s * math.log1p(-a)
            for k, c in enumerate(terms, start=1):
                out += c * lam**k * s ** (k + 1) / math.factorial(k + 1)
            return out
        z = a * q**s
        if z >= 1.0:
            raise DomainError("local learning rate reaches 1 below the reference point")
        # Li2(z) = spence(1 - z)
        return (special.spence(1.0 - a) - special.spence(1.0 - z)) / lam

    def _cost(self, x):
        return self.c0 * math.exp(self._log_factor(math.log2(x / self.x0)))

    def _integral(self, a, b):
        if b == a:
            return 0.0
        sa, sb = math.log2(a / self.x0), math.log2(b / self.x0)
        cuts = [sa] + [float(k) for k in range(math.floor(sa) + 1, math.ceil(sb))] + [sb]
        total = []
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            if hi <= lo:
                continue
            half = 0.5 * (hi - lo)
            s = lo + half * (_GL_NODES + 1.0)
            vals = np.array([self._log_factor(t) for t in s]) + s * LN2
            total.append(half * float(np.dot(_GL_WEIGHTS, np.exp(vals))))
        return self.c0 * self.x0 * LN2 * math.fsum(total)

    def _elasticity(self, x):
        return lr_to_exponent(self.local_lr(x))

    def _trend(self):
        return "down"


DEFAULT_STAGE_BOUNDS = (3.0, 8.0, math.inf)


@dataclass(frozen=True)
class Staged:
    """Stage-wise learning rates indexed by doublings since ``x0``.

    ``stages`` holds ``(upper doubling count, learning rate)`` pairs; the
    last bound must be infinite. The curve is continuous: each stage starts
    from the cost reached at the end of the previous one. Experience below
    ``x0`` uses the first stage's rate.
    """

    c0: float
    x0: float
    stages: tuple[tuple[float, float], ...]

    def __post_init__(self):
        _check_positive("c0", self.c0)
        _check_positive("x0", self.x0)
        stages = tuple((float(u), float(lr)) for u, lr in self.stages)
        object.__setattr__(self, "stages", stages)
        if not stages:
            raise DomainError("staged curve needs at least one stage")
        bounds = [u for u, _ in stages]
        rates = [lr for _, lr in stages]
        if any(b2 <= b1 for b1, b2 in zip(bounds, bounds[1:])) or bounds[0] <= 0:
            raise DomainError("stage bounds must be positive and strictly increasing")
        if bounds[-1] != math.inf:
            raise DomainError("the last stage must extend to infinity")
        if any(r2 > r1 for r1, r2 in zip(rates, rates[1:])):
            raise DomainError("stage learning rates must be non-increasing")
        if any(not r < 1 for r in rates):
            raise DomainError("stage learning rates must be < 1")

    @classmethod
    def nems(cls, c0, x0, rates: Sequence[float], bounds=DEFAULT_STAGE_BOUNDS) -> "Staged":
        """Revolutionary / evolutionary / conventional stages (3 and 8 doublings)."""
        if len(rates) != len(bounds):
            raise DomainError(f"expected {len(bounds)} stage rates, got {len(rates)}")
        return cls(c0, x0, tuple(zip(bounds, rates)))

    @cached_property
    def _segments(self):
        # (start doubling, start cost, exponent) per stage
        segs = []
        start, cost = 0.0, self.c0
        for upper, lr in self.stages:
            e = lr_to_exponent(lr)
            segs.append((start, cost, e))
            if math.isfinite(upper):
                cost = cost * 2.0 ** (e * (upper - start))
                start = upper
        return tuple(segs)

    def _segment_at(self, n):
        segs = self._segments
        k = 0
        for i in range(1, len(segs)):
            if n > segs[i][0]:
                k = i
        return segs[k]

    def _cost(self, x):
        n = math.log2(x / self.x0)
        start, cost, e = self._segment_at(n)
        return cost * 2.0 ** (e * (n - start))

    def _integral(self, a, b):
        segs = self._segments
        edges = [0.0] + [self.x0 * 2.0 ** s[0] for s in segs[1:]] + [math.inf]
        parts = []
        for (start, cost, e), lo, hi in zip(segs, edges[:-1], edges[1:]):
            l, h = max(a, lo), min(b, hi)
            if h > l:
                parts.append(_power_integral(cost, self.x0 * 2.0**start, e, l, h))
        return math.fsum(parts)

    def _elasticity(self, x):
        return self._segment_at(math.log2(x / self.x0))[2]

    def _trend(self):
        signs = {_sign_trend(lr_to_exponent(lr)) for _, lr in self.stages}
        signs.discard("flat")
        if not signs:
            return "flat"
        return signs.pop() if len(signs) == 1 else "mixed"


@dataclass(frozen=True)
class Modified:
    """Floor cost and/or pre-commercial threshold around another curve.

    Below ``threshold_x`` the cost is held at the inner curve's ``c0``.
    Elsewhere the cost is ``max(inner, floor_cost)``; the floor is ignored
    for curves whose cost rises with experience.
    """

    inner: "LearningSpec"
    floor_cost: float | None = None
    threshold_x: float | None = None

    def __post_init__(self):
        if isinstance(self.inner, (Modified, TwoFactor)):
            raise UnsupportedVariantError(
                f"cannot wrap a {type(self.inner).__name__} curve in Modified"
            )
        if self.floor_cost is not None and not (math.isfinite(self.floor_cost) and self.floor_cost >= 0):
            raise DomainError("floor_cost must be finite and >= 0")
        if self.threshold_x is not None:
            _check_positive("threshold_x", self.threshold_x)

    @property
    def c0(self) -> float:
        return self.inner.c0

    @property
    def x0(self) -> float:
        return self.inner.x0

    @property
    def _floor_active(self):
        return self.floor_cost is not None and self.floor_cost > 0 and self.inner._trend() in ("down", "mixed")

    @cached_property
    def _crossing(self):
        # experience where a decreasing inner curve meets the floor
        f = self.floor_cost
        if self.inner._cost(self.x0) <= f:
            lo = self.x0
            while self.inner._cost(lo) <= f:
                lo /= 2.0
                if lo < 1e-300:
                    return 0.0
            hi = lo * 2.0
        else:
            hi = self.x0
            while self.inner._cost(hi) > f:
                hi *= 2.0
                if hi > 1e300:
                    return math.inf
            lo = hi / 2.0
        g = lambda t: math.log(self.inner._cost(math.exp(t))) - math.log(f)
        return math.exp(optimize.brentq(g, math.log(lo), math.log(hi), xtol=1e-15, rtol=4 * np.finfo(float).eps))

    def _floored(self, x):
        c = self.inner._cost(x)
        if self._floor_active and c < self.floor_cost:
            return self.floor_cost
        return c

    def _cost(self, x):
        if self.threshold_x is not None and x < self.threshold_x:
            return self.inner.c0
        return self._floored(x)

    def _floored_integral(self, a, b):
        if not self._floor_active:
            return self.inner._integral(a, b)
        if self.inner._trend() == "down":
            xs = self._crossing
            if xs >= b:
                return self.inner._integral(a, b)
            if xs <= a:
                return self.floor_cost * (b - a)
            return self.inner._integral(a, xs) + self.floor_cost * (b - xs)
        # mixed trend: locate every crossing inside [a, b]
        grid = np.geomspace(a, b, 257)
        g = np.array([self.inner._cost(u) for u in grid]) - self.floor_cost
        cuts = [a]
        for i in range(len(grid) - 1):
            if g[i] == 0 or g[i] * g[i + 1] < 0:
                if g[i] == 0:
                    cuts.append(float(grid[i]))
                else:
                    cuts.append(optimize.brentq(lambda u: self.inner._cost(u) - self.floor_cost, grid[i], grid[i + 1], xtol=1e-14 * grid[i]))
        cuts.append(b)
        total = []
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            if hi <= lo:
                continue
            mid = math.sqrt(lo * hi)
            if self.inner._cost(mid) >= self.floor_cost:
                total.append(self.inner._integral(lo, hi))
            else:
                total.append(self.floor_cost * (hi - lo))
        return math.fsum(total)

    def _integral(self, a, b):
        th = self.threshold_x
        if th is None or th <= a:
            return self._floored_integral(a, b)
        if th >= b:
            return self.inner.c0 * (b - a)
        return self.inner.c0 * (th - a) + self._floored_integral(th, b)

    def _elasticity(self, x):
        if self.threshold_x is not None and x < self.threshold_x:
            return 0.0
        if self._floor_active and self.inner._cost(x) < self.floor_cost:
            return 0.0
        return _elasticity(self.inner, x)

    def _trend(self):
        return self.inner._trend()


LearningSpec = Union[OneFactor, TwoFactor, Composite, Partial, Diminishing, Staged, Modified]

_SPEC_TYPES = (OneFactor, TwoFactor, Composite, Partial, Diminishing, Staged, Modified)


def _sign_trend(exponent: float) -> str:
    if exponent < 0:
        return "down"
    if exponent > 0:
        return "up"
    return "flat"


def _check_spec(spec) -> None:
    if not isinstance(spec, _SPEC_TYPES):
        raise TypeError(f"not a learning spec: {spec!r}")


def unit_cost(spec: LearningSpec, x, y: float | None = None) -> float:
    """Cost per unit at cumulative experience ``x``.

    ``y`` (cumulative research spending) is required for :class:`TwoFactor`
    and rejected otherwise. For :class:`Composite`, ``x`` may also be a
    mapping from component id to experience.
    """
    _check_spec(spec)
    if isinstance(spec, TwoFactor):
        if y is None:
            raise ArgumentError("two-factor curve needs research spending y")
        return spec._cost2(_check_x(x), _check_x(y))
    if y is not None:
        raise ArgumentError(f"{type(spec).__name__} curve takes no research spending")
    if isinstance(x, Mapping):
        if not isinstance(spec, Composite):
            raise ArgumentError("per-component experience only applies to composite curves")
        return math.fsum(component_costs(spec, x))
    return spec._cost(_check_x(x))


def component_costs(spec: Composite, x) -> list[float]:
    """Per-component costs, in component order."""
    if isinstance(x, Mapping):
        missing = {c.id for c in spec.components} - set(x)
        if missing:
            raise ArgumentError(f"no experience given for components {sorted(missing)}")
        return [
            c.c0 * math.exp(c.exponent * math.log(_check_x(x[c.id]) / c.x0))
            for c in spec.components
        ]
    return spec._parts(_check_x(x))


def cumulative_cost(spec: LearningSpec, x: float) -> float:
    """Total expenditure to move experience from ``spec.x0`` to ``x``."""
    _check_spec(spec)
    if isinstance(spec, TwoFactor):
        raise UnsupportedVariantError(
            "cumulative cost of a two-factor curve depends on the research trajectory"
        )
    x = _check_x(x)
    if x < spec.x0:
        raise DomainError(f"experience {x!r} is below the reference point {spec.x0!r}")
    return spec._integral(spec.x0, x)


def _elasticity(spec, x):
    fn = getattr(spec, "_elasticity", None)
    if fn is None:
        return elasticity_fd(spec, x)
    return fn(x)


def elasticity_fd(spec: LearningSpec, x: float) -> float:
    """Log-log slope of unit cost by central differences."""
    x = _check_x(x)
    h = FD_REL_STEP
    up, down = spec._cost(x * (1 + h)), spec._cost(x * (1 - h))
    return (math.log(up) - math.log(down)) / (math.log1p(h) - math.log1p(-h))


def effective_learning_rate(spec: LearningSpec, x: float, method: str = "analytic") -> float:
    """Learning rate implied by the local log-log slope of unit cost.

    ``method="fd"`` forces central finite differences.
    """
    _check_spec(spec)
    if isinstance(spec, TwoFactor):
        raise UnsupportedVariantError("effective learning rate needs a one-factor curve")
    x = _check_x(x)
    if method == "fd":
        e = elasticity_fd(spec, x)
    elif method == "analytic":
        e = _elasticity(spec, x)
    else:
        raise ValueError(f"unknown method {method!r}")
    return exponent_to_lr(e)


def with_learning_rate(spec: LearningSpec, lr: float) -> LearningSpec:
    """Copy of a one-factor or partial curve (possibly modified) with a new rate."""
    if isinstance(spec, (OneFactor, Partial)):
        return dataclasses.replace(spec, exponent=lr_to_exponent(lr))
    if isinstance(spec, Modified):
        return dataclasses.replace(spec, inner=with_learning_rate(spec.inner, lr))
    raise UnsupportedVariantError(
        f"learning-rate sweeps need a one-factor or partial curve, got {type(spec).__name__}"
    )


def is_integrable(spec: LearningSpec) -> bool:
    return isinstance(spec, _SPEC_TYPES) and not isinstance(spec, TwoFactor)
