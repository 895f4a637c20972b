"""Learning-rate estimation from historical cost observations.

Fits are ordinary least squares in log space, with the first observation
as reference point: ``ln(cost) = ln(c0) + b * ln(x/x0) [+ b_r * ln(y/y0)]``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy import stats

from .curves import exponent_to_lr

# Condition-number limit on the standardised regressors of a two-factor fit.
COLLINEARITY_LIMIT = 1e10


class FitError(ValueError):
    """Base class for fitting errors."""


class InsufficientDataError(FitError):
    pass


class DegenerateDesignError(FitError):
    """A regressor has no variation."""


class CollinearityError(DegenerateDesignError):
    """Experience and research spending move together."""


@dataclass(frozen=True)
class Observation:
    x: float
    cost: float
    y: float | None = None


@dataclass(frozen=True)
class ObservationSeries:
    points: tuple[Observation, ...]
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        pts = tuple(p if isinstance(p, Observation) else Observation(*p) for p in self.points)
        object.__setattr__(self, "points", pts)
        for i, p in enumerate(pts):
            for name in ("x", "cost"):
                v = getattr(p, name)
                if not (math.isfinite(v) and v > 0):
                    raise FitError(f"point {i}: {name} must be finite and > 0, got {v!r}")
            if p.y is not None and not (math.isfinite(p.y) and p.y > 0):
                raise FitError(f"point {i}: y must be finite and > 0, got {p.y!r}")
        xs = [p.x for p in pts]
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise FitError("experience values must be strictly increasing")

    @classmethod
    def from_arrays(cls, x, cost, y=None, **metadata) -> "ObservationSeries":
        if y is None:
            pts = [Observation(float(a), float(c)) for a, c in zip(x, cost)]
        else:
            pts = [Observation(float(a), float(c), float(r)) for a, c, r in zip(x, cost, y)]
        return cls(tuple(pts), dict(metadata))

    @property
    def x(self) -> np.ndarray:
        return np.array([p.x for p in self.points])

    @property
    def cost(self) -> np.ndarray:
        return np.array([p.cost for p in self.points])

    @property
    def y(self) -> np.ndarray | None:
        if any(p.y is None for p in self.points):
            return None
        return np.array([p.y for p in self.points])

    def __len__(self):
        return len(self.points)


@dataclass(frozen=True)
class FitResult:
    model: str
    n: int
    x0: float
    c0_hat: float
    b_hat: float
    stderr: dict
    r_squared: float
    lr_hat: float
    lr_ci: tuple[float, float]
    level: float
    y0: float | None = None
    b_lbr_hat: float | None = None
    lbr_hat: float | None = None

    def to_dict(self) -> dict:
        out = {
            "model": self.model,
            "n": self.n,
            "x0": self.x0,
            "c0_hat": self.c0_hat,
            "b_hat": self.b_hat,
            "lr_hat": self.lr_hat,
            "lr_ci": list(self.lr_ci),
            "level": self.level,
            "r_squared": self.r_squared,
            "stderr": dict(self.stderr),
        }
        if self.model == "two":
            out.update(y0=self.y0, b_lbr_hat=self.b_lbr_hat, lbr_hat=self.lbr_hat)
        return out


def read_series(path) -> ObservationSeries:
    """Read ``x,cost[,y]`` columns (with header) from a delimited file."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        sample = fh.read(4096)
        fh.seek(0)
        try:
            dialect = csv.Sniffer().sniff(sample, delimiters=",;\t")
        except csv.Error:
            dialect = csv.excel
        reader = csv.reader(fh, dialect)
        header = [h.strip().lower() for h in next(reader, [])]
        if header[:2] != ["x", "cost"] or header[2:] not in ([], ["y"]):
            raise FitError(f"{path}: expected header 'x,cost[,y]', got {','.join(header)!r}")
        pts = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                vals = [float(c) for c in row if c.strip() != ""]
            except ValueError as exc:
                raise FitError(f"{path}:{lineno}: {exc}") from None
            if len(vals) not in (2, 3) or len(vals) > len(header):
                raise FitError(f"{path}:{lineno}: expected {len(header)} values")
            pts.append(Observation(*vals))
    return ObservationSeries(tuple(pts), {"source": str(path)})


def _ols(X: np.ndarray, z: np.ndarray):
    """Coefficients, standard errors and r^2 of ``z ~ X``."""
    n, k = X.shape
    coef, *_ = np.linalg.lstsq(X, z, rcond=None)
    resid = z - X @ coef
    ss_res = float(resid @ resid)
    ss_tot = float(((z - z.mean()) ** 2).sum())
    if ss_tot <= 1e-30 * max(1.0, float(z @ z)):
        # constant response: the intercept fits it exactly
        r2 = 1.0
    else:
        r2 = min(1.0, max(0.0, 1.0 - ss_res / ss_tot))
    dof = n - k
    if dof > 0:
        sigma2 = ss_res / dof
        cov = sigma2 * np.linalg.inv(X.T @ X)
        se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    else:
        se = np.full(k, math.nan)
    return coef, se, r2, dof


def _check_spread(v: np.ndarray, what: str) -> None:
    if np.ptp(v) <= 1e-12 * max(1.0, float(np.abs(v).max())):
        raise DegenerateDesignError(f"no variation in {what}")


def _lr_interval(b, se, dof, level):
    if dof <= 0 or not math.isfinite(se):
        return (math.nan, math.nan)
    t = stats.t.ppf(0.5 + level / 2, dof)
    lo, hi = b - t * se, b + t * se
    # 1 - 2**b decreases in b
    return (exponent_to_lr(hi), exponent_to_lr(lo))


def _fit_one(x, cost, x0):
    lx = np.log(x / x0)
    _check_spread(lx, "ln(x)")
    X = np.column_stack([np.ones_like(lx), lx])
    return _ols(X, np.log(cost))


def _fit_two(x, cost, y, x0, y0):
    lx, ly = np.log(x / x0), np.log(y / y0)
    _check_spread(lx, "ln(x)")
    if np.ptp(ly) <= 1e-12 * max(1.0, float(np.abs(ly).max())):
        raise CollinearityError("research spending has no variation")
    Z = np.column_stack([lx - lx.mean(), ly - ly.mean()])
    Z /= np.linalg.norm(Z, axis=0)
    if np.linalg.cond(Z) > COLLINEARITY_LIMIT:
        raise CollinearityError("ln(x) and ln(y) are collinear")
    X = np.column_stack([np.ones_like(lx), lx, ly])
    return _ols(X, np.log(cost))


def fit_one_factor(series: ObservationSeries, level: float = 0.95) -> FitResult:
    """Fit ``cost = c0 * (x/x0)**b`` with ``x0`` the first observation."""
    if len(series) < 3:
        raise InsufficientDataError(f"one-factor fit needs >= 3 points, got {len(series)}")
    x0 = series.points[0].x
    coef, se, r2, dof = _fit_one(series.x, series.cost, x0)
    b = float(coef[1])
    return FitResult(
        model="one",
        n=len(series),
        x0=x0,
        c0_hat=math.exp(coef[0]),
        b_hat=b,
        stderr={"ln_c0": float(se[0]), "b": float(se[1])},
        r_squared=r2,
        lr_hat=exponent_to_lr(b),
        lr_ci=_lr_interval(b, float(se[1]), dof, level),
        level=level,
    )


def fit_two_factor(series: ObservationSeries, level: float = 0.95) -> FitResult:
    """Fit ``cost = c0 * (x/x0)**b * (y/y0)**b_r``; every point needs ``y``."""
    y = series.y
    if y is None:
        raise FitError("two-factor fit needs research spending y on every point")
    if len(series) < 4:
        raise InsufficientDataError(f"two-factor fit needs >= 4 points, got {len(series)}")
    x0, y0 = series.points[0].x, series.points[0].y
    coef, se, r2, dof = _fit_two(series.x, series.cost, y, x0, y0)
    b, br = float(coef[1]), float(coef[2])
    return FitResult(
        model="two",
        n=len(series),
        x0=x0,
        c0_hat=math.exp(coef[0]),
        b_hat=b,
        stderr={"ln_c0": float(se[0]), "b": float(se[1]), "b_lbr": float(se[2])},
        r_squared=r2,
        lr_hat=exponent_to_lr(b),
        lr_ci=_lr_interval(b, float(se[1]), dof, level),
        level=level,
        y0=y0,
        b_lbr_hat=br,
        lbr_hat=exponent_to_lr(br),
    )


def fit(series: ObservationSeries, model: str = "one", level: float = 0.95) -> FitResult:
    if model == "one":
        return fit_one_factor(series, level)
    if model == "two":
        return fit_two_factor(series, level)
    raise ValueError(f"unknown model {model!r}; expected 'one' or 'two'")


@dataclass(frozen=True)
class BootstrapInterval:
    low: float
    high: float
    level: float
    resamples: int
    skipped: int
    seed: int


def bootstrap_ci(
    series: ObservationSeries,
    model: str = "one",
    resamples: int = 1000,
    level: float = 0.95,
    seed: int = 0,
) -> BootstrapInterval:
    """Case-resampling percentile interval for the learning rate.

    Resamples whose design is degenerate are skipped; more than half skipped
    raises :class:`FitError`.
    """
    if resamples < 200:
        raise ValueError("bootstrap needs at least 200 resamples")
    if not 0 < level < 1:
        raise ValueError("level must lie in (0, 1)")
    fit(series, model)  # the full sample must be fittable
    n = len(series)
    x, cost = series.x, series.cost
    y = series.y
    x0 = series.points[0].x
    y0 = series.points[0].y
    idx = np.random.default_rng(seed).integers(0, n, size=(resamples, n))
    rates = []
    skipped = 0
    for row in idx:
        try:
            if model == "one":
                coef = _fit_one(x[row], cost[row], x0)[0]
            else:
                coef = _fit_two(x[row], cost[row], y[row], x0, y0)[0]
        except (DegenerateDesignError, np.linalg.LinAlgError):
            skipped += 1
            continue
        rates.append(exponent_to_lr(float(coef[1])))
    if skipped > resamples / 2:
        raise FitError(f"{skipped} of {resamples} bootstrap resamples were degenerate")
    alpha = (1 - level) / 2
    lo, hi = np.quantile(np.array(rates), [alpha, 1 - alpha])
    return BootstrapInterval(float(lo), float(hi), level, resamples, skipped, seed)
