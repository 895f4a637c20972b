"""Multi-period capacity expansion with endogenous learning.

Investment in a period is the difference of a technology's cumulative cost
between its experience after and before the period's local build. The
cumulative cost is concave, so it enters the program as a piecewise-linear
block with one binary per segment. World additions move a technology along
its curve without being paid for locally.

Generation is modelled internally in units of ``MWh / hours_per_period``
(average MW) to keep row coefficients near one.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .curves import (
    LearningSpec,
    UnsupportedVariantError,
    cumulative_cost,
    is_integrable,
    unit_cost,
    with_learning_rate,
)
from .milp import INF, LinearProgram, MilpProblem, MilpSolution, NumericError, solve_milp
from .pwl import PwlApprox, PwlPolicy, approx_error, build_breakpoints, eval_pwl

MODES = ("endogenous", "exogenous")
DEFAULT_POLICY = PwlPolicy(per_doubling=2)
# builds below this (MW) are reported as zero
BUILD_EPS = 1e-7


class ConfigError(ValueError):
    pass


class InfeasibleScenarioError(RuntimeError):
    """No plan meets demand and emission limits; ``period`` is the first failing one."""

    def __init__(self, message: str, period: int | None = None, report: dict | None = None):
        super().__init__(message)
        self.period = period
        self.report = report or {}


def _per_period(value, periods: int, what: str) -> tuple[float, ...]:
    if isinstance(value, (int, float)):
        return (float(value),) * periods
    vals = tuple(float(v) for v in value)
    if len(vals) == 1:
        return vals * periods
    if len(vals) != periods:
        raise ConfigError(f"{what}: expected {periods} values, got {len(vals)}")
    return vals


@dataclass(frozen=True)
class TechnologySpec:
    name: str
    learning: LearningSpec
    x0_local: float | None = None  # defaults to the curve's reference experience
    world_additions: float | tuple[float, ...] = 0.0
    var_cost: float = 0.0
    emission_factor: float = 0.0
    availability: float = 1.0
    max_build: float = INF
    exo_cost_path: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.x0_local is None:
            object.__setattr__(self, "x0_local", float(self.learning.x0))
        if not self.x0_local >= self.learning.x0:
            raise ConfigError(f"{self.name}: x0_local must be >= the curve's x0 ({self.learning.x0})")
        if not 0.0 < self.availability <= 1.0:
            raise ConfigError(f"{self.name}: availability must lie in (0, 1]")
        if not self.max_build >= 0.0:
            raise ConfigError(f"{self.name}: max_build must be >= 0")
        if not self.emission_factor >= 0.0:
            raise ConfigError(f"{self.name}: emission_factor must be >= 0")
        if not math.isfinite(self.var_cost):
            raise ConfigError(f"{self.name}: var_cost must be finite")
        w = self.world_additions
        if isinstance(w, (int, float)):
            if not w >= 0.0:
                raise ConfigError(f"{self.name}: world_additions must be >= 0")
        else:
            object.__setattr__(self, "world_additions", tuple(float(v) for v in w))
            if any(not v >= 0.0 for v in self.world_additions):
                raise ConfigError(f"{self.name}: world_additions must be >= 0")
        if self.exo_cost_path is not None:
            object.__setattr__(self, "exo_cost_path", tuple(float(v) for v in self.exo_cost_path))


@dataclass(frozen=True)
class ScenarioConfig:
    technologies: tuple[TechnologySpec, ...]
    periods: int
    hours_per_period: float = 8760.0
    demand: float | tuple[float, ...] = 0.0
    emission_cap: float | tuple[float, ...] = INF
    discount_rate: float = 0.0
    mode: str = "endogenous"
    pwl_policy: PwlPolicy = DEFAULT_POLICY
    name: str = "scenario"
    # restrict builds to {0, 1, ..., n} * max_build / n (brute-force comparisons)
    build_grid_steps: int | None = None
    node_limit: int = 20_000

    def __post_init__(self):
        object.__setattr__(self, "technologies", tuple(self.technologies))
        if self.periods < 1:
            raise ConfigError("periods must be >= 1")
        if not self.technologies:
            raise ConfigError("a scenario needs at least one technology")
        names = [t.name for t in self.technologies]
        if len(set(names)) != len(names):
            raise ConfigError("technology names must be unique")
        if not self.hours_per_period > 0:
            raise ConfigError("hours_per_period must be > 0")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}")
        if not self.discount_rate > -1.0:
            raise ConfigError("discount_rate must be > -1")
        if any(not d >= 0 for d in self.demand_path):
            raise ConfigError("demand must be >= 0")
        if any(not (c >= 0) for c in self.emission_cap_path):
            raise ConfigError("emission_cap must be >= 0")
        for t in self.technologies:
            self.world_path(t)
        if self.build_grid_steps is not None:
            if self.build_grid_steps < 1:
                raise ConfigError("build_grid_steps must be >= 1")
            if any(not math.isfinite(t.max_build) for t in self.technologies):
                raise ConfigError("a build grid needs a finite max_build on every technology")

    @property
    def demand_path(self) -> tuple[float, ...]:
        return _per_period(self.demand, self.periods, "demand")

    @property
    def emission_cap_path(self) -> tuple[float, ...]:
        return _per_period(self.emission_cap, self.periods, "emission_cap")

    def world_path(self, tech: TechnologySpec) -> tuple[float, ...]:
        return _per_period(tech.world_additions, self.periods, f"{tech.name}.world_additions")

    def exo_path(self, tech: TechnologySpec) -> tuple[float, ...]:
        if tech.exo_cost_path is None:
            raise ConfigError(f"{tech.name}: exogenous mode needs exo_cost_path")
        return _per_period(tech.exo_cost_path, self.periods, f"{tech.name}.exo_cost_path")

    def tech(self, name: str) -> TechnologySpec:
        for t in self.technologies:
            if t.name == name:
                return t
        raise ConfigError(f"no technology named {name!r}")

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)

    def replace_tech(self, name: str, **changes) -> "ScenarioConfig":
        self.tech(name)
        techs = tuple(dataclasses.replace(t, **changes) if t.name == name else t for t in self.technologies)
        return dataclasses.replace(self, technologies=techs)

    def discount_factors(self) -> np.ndarray:
        return (1.0 + self.discount_rate) ** -np.arange(self.periods, dtype=float)


def static_cost_path(tech: TechnologySpec, periods: int) -> tuple[float, ...]:
    """Unit cost frozen at the technology's starting experience."""
    return (unit_cost(tech.learning, tech.x0_local),) * periods


# ----------------------------------------------------------------------------
# program construction


@dataclass
class _TechLayout:
    tech: TechnologySpec
    builds: list[int]
    gens: list[int]
    build_cap: float
    world: tuple[float, ...]
    pwl: PwlApprox | None = None
    linear_slope: float | None = None
    # per period: (block for experience after build, block before build or None)
    blocks_after: list = field(default_factory=list)
    blocks_before: list = field(default_factory=list)


@dataclass
class _Block:
    """Convex combination of a segment's two end points, one binary per segment."""

    left: list[int]
    right: list[int]
    active: list[int]  # binary indices, empty when there is a single segment


@dataclass
class BuiltProblem:
    problem: MilpProblem
    names: dict[str, int]
    layouts: list = field(repr=False)
    scenario: ScenarioConfig = field(repr=False)
    discount: np.ndarray = field(repr=False)
    cap_rows: dict = field(default_factory=dict, repr=False)

    def var(self, name: str) -> int:
        return self.names[name]


def _build_cap(sc: ScenarioConfig, t: TechnologySpec) -> float:
    """Per-period build bound; an uncapped technology is bounded by peak need."""
    if math.isfinite(t.max_build):
        return t.max_build
    need = max(sc.demand_path) / (t.availability * sc.hours_per_period)
    return max(need, 0.0)


def _add_block(lp: LinearProgram, binary: set, pwl: PwlApprox, tag: str) -> _Block:
    k = pwl.segments
    left = [lp.add_var(f"{tag}.wl{s}", 0.0, 1.0) for s in range(k)]
    right = [lp.add_var(f"{tag}.wr{s}", 0.0, 1.0) for s in range(k)]
    if k == 1:
        lp.add_row({left[0]: 1.0, right[0]: 1.0}, "=", 1.0, f"{tag}.convex")
        return _Block(left, right, [])
    active = [lp.add_var(f"{tag}.z{s}", 0.0, 1.0) for s in range(k)]
    binary.update(active)
    lp.add_row({z: 1.0 for z in active}, "=", 1.0, f"{tag}.one_segment")
    for s in range(k):
        lp.add_row({left[s]: 1.0, right[s]: 1.0, active[s]: -1.0}, "=", 0.0, f"{tag}.activate{s}")
    return _Block(left, right, active)


def _block_position(block: _Block, pwl: PwlApprox) -> dict[int, float]:
    bp = pwl.breakpoints
    out = {}
    for s, (l, r) in enumerate(zip(block.left, block.right)):
        out[l] = float(bp[s])
        out[r] = float(bp[s + 1])
    return out


def _block_value(block: _Block, pwl: PwlApprox) -> dict[int, float]:
    v = pwl.values
    out = {}
    for s, (l, r) in enumerate(zip(block.left, block.right)):
        out[l] = float(v[s])
        out[r] = float(v[s + 1])
    return out


def _add_objective(lp: LinearProgram, coeffs: dict[int, float], scale: float) -> None:
    for j, a in coeffs.items():
        lp.objective[j] += scale * a


def build_milp(sc: ScenarioConfig) -> BuiltProblem:
    """Assemble the expansion program for ``sc`` (either mode)."""
    lp = LinearProgram(sense="min")
    binary: set[int] = set()
    names: dict[str, int] = {}
    P, h = sc.periods, sc.hours_per_period
    disc = sc.discount_factors()
    layouts = []
    cap_rows = {}

    def var(name, lo=0.0, hi=INF, obj=0.0):
        j = lp.add_var(name, lo, hi, obj)
        names[name] = j
        return j

    for t in sc.technologies:
        cap = _build_cap(sc, t)
        builds = []
        for p in range(P):
            b = var(f"build[{t.name},{p}]", 0.0, cap)
            builds.append(b)
            if sc.build_grid_steps:
                # build = step * sum_i 2^i u_i, capped at the grid's top
                n = sc.build_grid_steps
                step = t.max_build / n
                bits = [var(f"grid[{t.name},{p}].u{i}", 0.0, 1.0) for i in range(max(1, n.bit_length()))]
                binary.update(bits)
                row = {b: 1.0}
                row.update({u: -step * 2**i for i, u in enumerate(bits)})
                lp.add_row(row, "=", 0.0, f"grid[{t.name},{p}]")
                lp.add_row({u: 2**i for i, u in enumerate(bits)}, "<=", float(n), f"grid_top[{t.name},{p}]")
        gens = [var(f"gen[{t.name},{p}]", 0.0, INF, disc[p] * t.var_cost * h) for p in range(P)]
        lay = _TechLayout(t, builds, gens, cap, sc.world_path(t))
        layouts.append(lay)

        # capacity: gen <= a * (x0_local + sum of builds and world additions so far)
        for p in range(P):
            row = {gens[p]: 1.0}
            for q in range(p + 1):
                row[builds[q]] = -t.availability
            rhs = t.availability * (t.x0_local + sum(lay.world[: p + 1]))
            lp.add_row(row, "<=", rhs, f"capacity[{t.name},{p}]")
        if not math.isfinite(t.max_build):
            lp.add_row({b: 1.0 for b in builds}, "<=", cap, f"total_build[{t.name}]")

        if sc.mode == "exogenous":
            path = sc.exo_path(t)
            for p in range(P):
                lp.objective[builds[p]] += disc[p] * path[p]
            continue

        if not is_integrable(t.learning):
            raise UnsupportedVariantError(f"{t.name}: curve has no cumulative cost")
        total_builds = cap * P if math.isfinite(t.max_build) else cap
        x_max = t.x0_local + sum(lay.world) + total_builds
        if x_max <= t.x0_local or total_builds <= 0:
            for b in builds:
                lp.upper[b] = 0.0
            continue
        pwl = build_breakpoints(t.learning, x_max, sc.pwl_policy)
        lay.pwl = pwl
        slopes = pwl.slopes
        if np.all(np.abs(slopes - slopes[0]) <= 1e-12 * abs(slopes[0])):
            # linear cumulative cost (no learning): pay a constant unit cost
            lay.linear_slope = float(slopes[0])
            for p in range(P):
                lp.objective[builds[p]] += disc[p] * lay.linear_slope
            continue

        base = t.x0_local
        prev_after = None
        for p in range(P):
            base_before = base + sum(lay.world[: p + 1])
            # experience after the local build
            after = _add_block(lp, binary, pwl, f"pwl[{t.name},{p}].after")
            row = _block_position(after, pwl)
            for q in range(p + 1):
                row[builds[q]] = row.get(builds[q], 0.0) - 1.0
            lp.add_row(row, "=", base_before, f"position[{t.name},{p}].after")
            _add_objective(lp, _block_value(after, pwl), disc[p])

            if p == 0:
                before = None
                lp.offset -= disc[p] * float(eval_pwl(pwl, base_before))
            elif p > 0 and lay.world[p] == 0.0:
                before = None
                _add_objective(lp, _block_value(prev_after, pwl), -disc[p])
            else:
                before = _add_block(lp, binary, pwl, f"pwl[{t.name},{p}].before")
                row = _block_position(before, pwl)
                for q in range(p):
                    row[builds[q]] = row.get(builds[q], 0.0) - 1.0
                lp.add_row(row, "=", base_before, f"position[{t.name},{p}].before")
                _add_objective(lp, _block_value(before, pwl), -disc[p])
            # experience never falls, so the active segment index never falls
            if prev_after is not None and after.active and prev_after.active:
                row = {z: float(s) for s, z in enumerate(after.active)}
                for s, z in enumerate(prev_after.active):
                    row[z] = row.get(z, 0.0) - float(s)
                lp.add_row(row, ">=", 0.0, f"order[{t.name},{p}]")
            lay.blocks_after.append(after)
            lay.blocks_before.append(before)
            prev_after = after

    for p in range(P):
        lp.add_row({lay.gens[p]: 1.0 for lay in layouts}, ">=", sc.demand_path[p] / h, f"demand[{p}]")
        cap = sc.emission_cap_path[p]
        if math.isfinite(cap):
            row = {lay.gens[p]: lay.tech.emission_factor for lay in layouts if lay.tech.emission_factor}
            lp.add_row(row, "<=", cap / h, f"emissions[{p}]")
    for lay in layouts:
        cap_rows[lay.tech.name] = lay.build_cap
    return BuiltProblem(MilpProblem(lp, frozenset(binary)), names, layouts, sc, disc, cap_rows)


# ----------------------------------------------------------------------------
# solving


@dataclass
class ExpansionPlan:
    scenario: str
    mode: str
    technologies: list[str]
    periods: int
    builds: dict[str, list[float]]
    cumulative: dict[str, list[float]]
    generation: dict[str, list[float]]
    investment_cost: list[float]
    variable_cost: list[float]
    total_discounted_cost: float
    exact_investment_cost: list[float]
    exact_total_discounted_cost: float
    pwl_error_bound: float
    solver_status: str
    gap: float
    nodes: int

    def first_build_period(self, tech: str, eps: float = BUILD_EPS) -> int | None:
        for p, b in enumerate(self.builds[tech]):
            if b > eps:
                return p
        return None

    def mean_build_period(self, tech: str) -> float | None:
        b = np.asarray(self.builds[tech])
        if b.sum() <= BUILD_EPS:
            return None
        return float((b * np.arange(len(b))).sum() / b.sum())

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False) + "\n"

    def to_csv(self) -> str:
        fh = io.StringIO()
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["period", "technology", "build", "cumulative", "generation", "investment_cost", "variable_cost"])
        for p in range(self.periods):
            for t in self.technologies:
                w.writerow(
                    [
                        p,
                        t,
                        repr(self.builds[t][p]),
                        repr(self.cumulative[t][p]),
                        repr(self.generation[t][p]),
                        repr(self.investment_cost[p]),
                        repr(self.variable_cost[p]),
                    ]
                )
        return fh.getvalue()


def _clean(v: float) -> float:
    return 0.0 if abs(v) < 1e-9 else float(v)


def diagnose_infeasibility(sc: ScenarioConfig) -> tuple[int | None, str]:
    """First period whose demand or emission limit cannot be met by any plan."""
    h = sc.hours_per_period
    for p in range(sc.periods):
        caps = []
        for t in sc.technologies:
            cum = t.x0_local + sum(sc.world_path(t)[: p + 1])
            cum += (p + 1) * t.max_build if math.isfinite(t.max_build) else INF
            caps.append(t.availability * cum * h)
        demand = sc.demand_path[p]
        if sum(caps) < demand * (1 - 1e-9):
            return p, (
                f"period {p}: demand {demand!r} MWh exceeds the most energy the technologies "
                f"can deliver, {sum(caps)!r} MWh"
            )
        # cleanest dispatch that meets demand
        rest, emitted = demand, 0.0
        for t, c in sorted(zip(sc.technologies, caps), key=lambda tc: tc[0].emission_factor):
            g = min(rest, c)
            emitted += g * t.emission_factor
            rest -= g
        cap = sc.emission_cap_path[p]
        if emitted > cap * (1 + 1e-9) + 1e-9:
            return p, f"period {p}: meeting demand emits at least {emitted!r} t, above the cap {cap!r} t"
    return None, "no period violates capacity or emission limits on its own; the combination is infeasible"


def _exact_positions(sc: ScenarioConfig, t: TechnologySpec, builds: Sequence[float]):
    before, after = [], []
    x = t.x0_local
    world = sc.world_path(t)
    for p in range(sc.periods):
        x += world[p]
        before.append(x)
        x += builds[p]
        after.append(x)
    return before, after


def recost(sc: ScenarioConfig, builds: dict[str, Sequence[float]]) -> list[float]:
    """Per-period investment of a build schedule using exact cumulative cost."""
    inv = [0.0] * sc.periods
    for t in sc.technologies:
        b = builds[t.name]
        if sc.mode == "exogenous":
            path = sc.exo_path(t)
            for p in range(sc.periods):
                inv[p] += path[p] * b[p]
            continue
        before, after = _exact_positions(sc, t, b)
        for p in range(sc.periods):
            if b[p] > 0:
                inv[p] += cumulative_cost(t.learning, after[p]) - cumulative_cost(t.learning, before[p])
    return inv


def pwl_error_bound(sc: ScenarioConfig, builds: dict[str, Sequence[float]], errors: dict[str, float]) -> float:
    """Bound on |PWL - exact| discounted investment for a schedule.

    ``errors`` holds each technology's maximum relative PWL error; every
    period contributes that fraction of both curve values it differences.
    """
    disc = sc.discount_factors()
    total = 0.0
    for t in sc.technologies:
        e = errors.get(t.name, 0.0)
        if e == 0.0:
            continue
        before, after = _exact_positions(sc, t, builds[t.name])
        for p in range(sc.periods):
            total += disc[p] * e * (cumulative_cost(t.learning, after[p]) + cumulative_cost(t.learning, before[p]))
    return total


def _unpack(bp: BuiltProblem, sol: MilpSolution) -> ExpansionPlan:
    sc = bp.scenario
    x = sol.values
    P, h = sc.periods, sc.hours_per_period
    disc = bp.discount
    builds, cumulative, generation = {}, {}, {}
    investment = [0.0] * P
    variable = [0.0] * P
    errors = {}
    for lay in bp.layouts:
        t = lay.tech
        b = [_clean(min(max(x[j], 0.0), lay.build_cap)) for j in lay.builds]
        b = [0.0 if v < BUILD_EPS else v for v in b]
        if sc.build_grid_steps:
            step = t.max_build / sc.build_grid_steps
            b = [round(v / step) * step for v in b]
        builds[t.name] = b
        cum, acc = [], t.x0_local
        for p in range(P):
            acc += lay.world[p] + b[p]
            cum.append(acc)
        cumulative[t.name] = cum
        gen = [min(max(x[j], 0.0) * h, t.availability * cum[p] * h) for p, j in enumerate(lay.gens)]
        generation[t.name] = [_clean(g) for g in gen]
        for p in range(P):
            variable[p] += t.var_cost * generation[t.name][p]
        if sc.mode == "exogenous":
            path = sc.exo_path(t)
            for p in range(P):
                investment[p] += path[p] * b[p]
        elif lay.pwl is not None:
            if lay.linear_slope is not None:
                for p in range(P):
                    investment[p] += lay.linear_slope * b[p]
            else:
                before, after = _exact_positions(sc, t, b)
                for p in range(P):
                    if b[p] > 0:
                        investment[p] += float(eval_pwl(lay.pwl, after[p]) - eval_pwl(lay.pwl, before[p]))
                errors[t.name] = approx_error(lay.pwl, t.learning, grid=2000)
    exact_inv = recost(sc, builds)
    total = float(sum(disc[p] * (investment[p] + variable[p]) for p in range(P)))
    exact_total = float(sum(disc[p] * (exact_inv[p] + variable[p]) for p in range(P)))
    return ExpansionPlan(
        scenario=sc.name,
        mode=sc.mode,
        technologies=[t.name for t in sc.technologies],
        periods=P,
        builds=builds,
        cumulative=cumulative,
        generation=generation,
        investment_cost=investment,
        variable_cost=variable,
        total_discounted_cost=total,
        exact_investment_cost=exact_inv,
        exact_total_discounted_cost=exact_total,
        pwl_error_bound=pwl_error_bound(sc, builds, errors),
        solver_status=sol.status,
        gap=float(sol.gap),
        nodes=sol.nodes,
    )


def solve_expansion(sc: ScenarioConfig) -> ExpansionPlan:
    """Build, solve and unpack; raises :class:`InfeasibleScenarioError` when no plan exists."""
    bp = build_milp(sc)
    sol = solve_milp(bp.problem, node_limit=sc.node_limit)
    if sol.status == "infeasible":
        period, msg = diagnose_infeasibility(sc)
        raise InfeasibleScenarioError(msg, period, {"scenario": sc.name, "mode": sc.mode, "period": period, "reason": msg})
    if sol.status == "unbounded":
        raise NumericError("expansion program reported unbounded; check cost signs")
    if sol.values is None:
        raise NumericError(f"solver stopped with status {sol.status} and no plan")
    return _unpack(bp, sol)


def active_build_caps(plan: ExpansionPlan, sc: ScenarioConfig, tech: str, tol: float = 1e-6) -> list[int]:
    """Periods in which ``tech`` builds at its implementation-speed limit."""
    cap = sc.tech(tech).max_build
    if not math.isfinite(cap):
        return []
    return [p for p, b in enumerate(plan.builds[tech]) if b >= cap - tol * max(1.0, cap)]


# ----------------------------------------------------------------------------
# studies


@dataclass(frozen=True)
class SweepRow:
    lr: float
    status: str
    total_cost: float | None
    exact_cost: float | None
    total_builds: float | None
    first_build_period: int | None
    message: str = ""


def sweep_learning_rate(sc: ScenarioConfig, technology: str, lr_values: Sequence[float], jobs: int = 1) -> list[SweepRow]:
    """Re-solve with each learning rate for ``technology``; failures become rows, not errors."""
    tech = sc.tech(technology)
    with_learning_rate(tech.learning, 0.0)  # reject unsupported curve types up front

    def one(lr: float) -> SweepRow:
        try:
            run = sc.replace_tech(technology, learning=with_learning_rate(tech.learning, lr))
            plan = solve_expansion(run)
        except InfeasibleScenarioError as exc:
            return SweepRow(lr, "infeasible", None, None, None, None, str(exc))
        except (NumericError, ValueError) as exc:
            return SweepRow(lr, "error", None, None, None, None, str(exc))
        return SweepRow(
            lr,
            plan.solver_status,
            plan.total_discounted_cost,
            plan.exact_total_discounted_cost,
            float(sum(plan.builds[technology])),
            plan.first_build_period(technology),
        )

    lrs = [float(v) for v in lr_values]
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(one, lrs))
    return [one(v) for v in lrs]


@dataclass
class ModeComparison:
    endogenous: ExpansionPlan | None
    exogenous: ExpansionPlan | None
    status: str  # "ok" or "infeasible"
    cost_delta: float | None = None  # endogenous minus exogenous
    first_build: dict = field(default_factory=dict)  # tech -> [endogenous, exogenous]
    timing_delta: dict = field(default_factory=dict)  # tech -> endogenous minus exogenous first period
    build_delta: dict = field(default_factory=dict)  # tech -> per-period build difference
    message: str = ""

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "cost_delta": self.cost_delta,
            "first_build": self.first_build,
            "timing_delta": self.timing_delta,
            "build_delta": self.build_delta,
            "message": self.message,
            "endogenous": self.endogenous.to_dict() if self.endogenous else None,
            "exogenous": self.exogenous.to_dict() if self.exogenous else None,
        }


def compare_modes(sc: ScenarioConfig) -> ModeComparison:
    for t in sc.technologies:
        sc.exo_path(t)
    plans = {}
    messages = []
    for mode in MODES:
        try:
            plans[mode] = solve_expansion(sc.replace(mode=mode))
        except InfeasibleScenarioError as exc:
            plans[mode] = None
            messages.append(f"{mode}: {exc}")
    endo, exo = plans["endogenous"], plans["exogenous"]
    if endo is None or exo is None:
        return ModeComparison(endo, exo, "infeasible", message="; ".join(messages))
    first, timing, delta = {}, {}, {}
    for name in endo.technologies:
        fe, fx = endo.first_build_period(name), exo.first_build_period(name)
        first[name] = [fe, fx]
        timing[name] = None if fe is None or fx is None else fe - fx
        delta[name] = [a - b for a, b in zip(endo.builds[name], exo.builds[name])]
    return ModeComparison(
        endo,
        exo,
        "ok",
        cost_delta=endo.total_discounted_cost - exo.total_discounted_cost,
        first_build=first,
        timing_delta=timing,
        build_delta=delta,
    )
