"""Small dense LP/MILP solver.

``solve_lp`` is a bounded-variable primal simplex on a dense tableau (two
phases, Dantzig pricing, Bland's rule after a run of degenerate pivots).
``solve_milp`` runs branch and bound over binary variables on top of it.
Sized for desk-scale models of up to a couple of thousand variables.
"""

from __future__ import annotations

import heapq
import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

INF = math.inf

RELATIONS = ("<=", "=", ">=")

# pricing / pivoting tolerances
_DJ_TOL = 1e-9
_PIVOT_TOL = 1e-9
_PIVOT_FLOOR = 1e-11
_DEGENERATE_STALL = 100
_REFACTOR_EVERY = 50


class NumericError(RuntimeError):
    """The simplex lost numerical accuracy."""


@dataclass
class Row:
    coeffs: dict[int, float]
    relation: str
    rhs: float
    name: str | None = None


@dataclass
class LinearProgram:
    """``min/max  c.x + offset`` over rows ``a.x (<=|=|>=) rhs`` and variable bounds.

    Build one incrementally with :meth:`add_var` and :meth:`add_row`.
    """

    sense: str = "min"
    objective: list[float] = field(default_factory=list)
    lower: list[float] = field(default_factory=list)
    upper: list[float] = field(default_factory=list)
    rows: list[Row] = field(default_factory=list)
    names: list[str] = field(default_factory=list)
    offset: float = 0.0

    @property
    def n_vars(self) -> int:
        return len(self.objective)

    def add_var(self, name: str | None = None, lower: float = 0.0, upper: float = INF, obj: float = 0.0) -> int:
        self.objective.append(float(obj))
        self.lower.append(float(lower))
        self.upper.append(float(upper))
        self.names.append(name if name is not None else f"x{len(self.objective) - 1}")
        return len(self.objective) - 1

    def add_row(self, coeffs: Mapping[int, float], relation: str, rhs: float, name: str | None = None) -> int:
        merged: dict[int, float] = {}
        for j, a in coeffs.items():
            merged[int(j)] = merged.get(int(j), 0.0) + float(a)
        self.rows.append(Row({j: a for j, a in merged.items() if a != 0.0}, relation, float(rhs), name))
        return len(self.rows) - 1

    def validate(self) -> None:
        n = self.n_vars
        if self.sense not in ("min", "max"):
            raise ValueError(f"sense must be 'min' or 'max', got {self.sense!r}")
        if len(self.lower) != n or len(self.upper) != n or len(self.names) != n:
            raise ValueError("objective, bounds and names must have one entry per variable")
        for j in range(n):
            if not math.isfinite(self.objective[j]):
                raise ValueError(f"objective coefficient of {self.names[j]} is not finite")
            if self.lower[j] > self.upper[j] or self.lower[j] == INF or self.upper[j] == -INF:
                raise ValueError(f"bad bounds for {self.names[j]}: [{self.lower[j]}, {self.upper[j]}]")
        for i, r in enumerate(self.rows):
            if r.relation not in RELATIONS:
                raise ValueError(f"row {i}: relation must be one of {RELATIONS}")
            if not math.isfinite(r.rhs):
                raise ValueError(f"row {i}: rhs is not finite")
            for j, a in r.coeffs.items():
                if not 0 <= j < n:
                    raise ValueError(f"row {i}: variable index {j} out of range")
                if not math.isfinite(a):
                    raise ValueError(f"row {i}: coefficient of {self.names[j]} is not finite")

    def evaluate(self, x) -> float:
        return float(np.dot(self.objective, x)) + self.offset

    def max_violation(self, x) -> float:
        """Largest row or bound violation at ``x``, scaled by ``1 + |rhs|`` for rows."""
        worst = 0.0
        for r in self.rows:
            lhs = math.fsum(a * x[j] for j, a in r.coeffs.items())
            if r.relation == "<=":
                v = lhs - r.rhs
            elif r.relation == ">=":
                v = r.rhs - lhs
            else:
                v = abs(lhs - r.rhs)
            worst = max(worst, v / (1.0 + abs(r.rhs)))
        for j in range(self.n_vars):
            worst = max(worst, self.lower[j] - x[j], x[j] - self.upper[j])
        return worst


@dataclass
class MilpProblem:
    lp: LinearProgram
    binary_vars: frozenset[int] = frozenset()

    def __post_init__(self):
        self.binary_vars = frozenset(int(j) for j in self.binary_vars)
        for j in self.binary_vars:
            if not 0 <= j < self.lp.n_vars:
                raise ValueError(f"binary index {j} out of range")


@dataclass
class MilpSolution:
    status: str  # optimal | infeasible | unbounded | node_limit
    values: np.ndarray | None
    objective: float
    gap: float = 0.0
    nodes: int = 0
    bound: float = -INF
    iterations: int = 0

    @property
    def ok(self) -> bool:
        return self.status == "optimal"


# ----------------------------------------------------------------------------
# simplex


@dataclass
class _Standard:
    """Equality form ``A z = b``, ``lo <= z <= hi`` of a LinearProgram."""

    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    n: int  # structural variables come first
    sign: float  # +1 for min, -1 for max


def _standardise(lp: LinearProgram) -> _Standard:
    lp.validate()
    n, m = lp.n_vars, len(lp.rows)
    n_slack = sum(r.relation != "=" for r in lp.rows)
    A = np.zeros((m, n + n_slack))
    b = np.empty(m)
    k = n
    for i, r in enumerate(lp.rows):
        for j, a in r.coeffs.items():
            A[i, j] = a
        b[i] = r.rhs
        if r.relation != "=":
            A[i, k] = 1.0 if r.relation == "<=" else -1.0
            k += 1
    sign = 1.0 if lp.sense == "min" else -1.0
    c = np.concatenate([sign * np.asarray(lp.objective, dtype=float), np.zeros(n_slack)])
    lo = np.concatenate([np.asarray(lp.lower, dtype=float), np.zeros(n_slack)])
    hi = np.concatenate([np.asarray(lp.upper, dtype=float), np.full(n_slack, INF)])
    return _Standard(A, b, c, lo, hi, n, sign)


class _Tableau:
    def __init__(self, A, b, lo, hi, feas_tol):
        m, n = A.shape
        self.m, self.n_orig = m, n
        self.feas_tol = feas_tol
        x = np.where(np.isfinite(lo), lo, np.where(np.isfinite(hi), hi, 0.0))
        r = b - A @ x
        # a nonnegative singleton column (slack) can start basic in its row
        nnz = np.count_nonzero(A, axis=0)
        first_row = np.argmax(A != 0.0, axis=0)
        basis = [-1] * m
        for j in np.flatnonzero((nnz == 1) & (lo == 0.0) & (hi == INF)):
            i = int(first_row[j])
            if basis[i] < 0 and r[i] / A[i, j] >= 0.0:
                basis[i] = int(j)
        art_rows = [i for i in range(m) if basis[i] < 0]
        n_art = len(art_rows)
        Afull = np.zeros((m, n + n_art))
        Afull[:, :n] = A
        for k, i in enumerate(art_rows):
            Afull[i, n + k] = 1.0 if r[i] >= 0 else -1.0
            basis[i] = n + k
        self.A = Afull
        self.b = b.astype(float)
        self.lo = np.concatenate([lo, np.zeros(n_art)])
        self.hi = np.concatenate([hi, np.full(n_art, INF)])
        self.n_art = n_art
        self.art_rows = np.array(art_rows, dtype=int)
        self.x = np.concatenate([x, np.zeros(n_art)])
        self.basis = np.array(basis, dtype=int)
        self.is_basic = np.zeros(n + n_art, dtype=bool)
        self.is_basic[self.basis] = True
        self.iterations = 0
        self.refactor()

    def refactor(self):
        B = self.A[:, self.basis]
        nb = ~self.is_basic
        rhs = self.b - self.A[:, nb] @ self.x[nb]
        try:
            self.T = np.linalg.solve(B, self.A)
            self.beta = np.linalg.solve(B, rhs)
        except np.linalg.LinAlgError as exc:
            raise NumericError(f"singular basis after {self.iterations} pivots") from exc
        self.x[self.basis] = self.beta

    def run(self, c, max_iter):
        """Primal simplex for cost ``c``; returns 'optimal' or 'unbounded'."""
        degenerate = 0
        bland = False
        since_refactor = 0
        lo, hi = self.lo, self.hi
        movable = lo < hi
        while True:
            if self.iterations >= max_iter:
                raise NumericError(f"simplex iteration limit {max_iter} reached")
            d = c - c[self.basis] @ self.T
            at_lo = np.isfinite(lo) & (self.x <= lo)
            at_hi = np.isfinite(hi) & (self.x >= hi)
            free = ~at_lo & ~at_hi
            cand_up = (at_lo | free) & (d < -_DJ_TOL)
            cand_dn = (at_hi | free) & (d > _DJ_TOL)
            cand = (cand_up | cand_dn) & ~self.is_basic & movable
            idx = np.flatnonzero(cand)
            if idx.size == 0:
                return "optimal"
            j = int(idx[0]) if bland else int(idx[np.argmax(np.abs(d[idx]))])
            direction = 1.0 if cand_up[j] else -1.0

            alpha = self.T[:, j]
            da = direction * alpha
            blo, bhi = lo[self.basis], hi[self.basis]
            big = np.abs(da) > _PIVOT_TOL
            dec = big & (da > 0) & np.isfinite(blo)
            inc = big & (da < 0) & np.isfinite(bhi)
            ratios = np.full(self.m, INF)
            ratios[dec] = np.maximum(self.beta[dec] - blo[dec], 0.0) / da[dec]
            ratios[inc] = np.maximum(bhi[inc] - self.beta[inc], 0.0) / -da[inc]
            theta = float(ratios.min())
            leave = -1
            if theta < INF:
                ties = np.flatnonzero(ratios <= theta + 1e-12)
                if bland:
                    leave = int(ties[np.argmin(self.basis[ties])])
                else:
                    leave = int(ties[np.argmax(np.abs(da[ties]))])
                leave_to = blo[leave] if da[leave] > 0 else bhi[leave]
                best_piv = abs(da[leave])
            flip = hi[j] - lo[j]
            if flip <= theta:
                if not np.isfinite(flip):
                    return "unbounded"
                # bound flip, basis unchanged
                self.x[j] = hi[j] if direction > 0 else lo[j]
                self.beta = self.beta - flip * da
                self.x[self.basis] = self.beta
                self.iterations += 1
                degenerate = 0
                bland = False
                continue
            if leave < 0:
                return "unbounded"
            if best_piv < _PIVOT_FLOOR:
                raise NumericError(f"pivot {best_piv:.3e} below {_PIVOT_FLOOR}")

            self.beta = self.beta - theta * da
            entering_value = self.x[j] + direction * theta
            out = self.basis[leave]
            self.x[out] = leave_to
            self.is_basic[out] = False
            self.basis[leave] = j
            self.is_basic[j] = True
            self.beta[leave] = entering_value
            prow = self.T[leave] / self.T[leave, j]
            self.T -= np.outer(self.T[:, j], prow)
            self.T[leave] = prow
            self.x[self.basis] = self.beta
            self.iterations += 1
            since_refactor += 1
            if since_refactor >= _REFACTOR_EVERY:
                self.refactor()
                since_refactor = 0
            if theta <= 1e-12:
                degenerate += 1
                if degenerate >= _DEGENERATE_STALL:
                    bland = True
            else:
                degenerate = 0
                bland = False


def _solve_standard(std: _Standard, lo, hi, feas_tol, max_iter=None):
    """Returns (status, z, objective in min form, iterations)."""
    m, ntot = std.A.shape
    if m == 0:
        # only bounds: each variable sits at its cheaper bound
        z = np.where(std.c > 0, lo, np.where(std.c < 0, hi, np.where(np.isfinite(lo), lo, np.where(np.isfinite(hi), hi, 0.0))))
        if not np.all(np.isfinite(z)):
            return "unbounded", None, -INF, 0
        return "optimal", z, float(std.c @ z), 0
    tab = _Tableau(std.A, std.b, lo, hi, feas_tol)
    if max_iter is None:
        max_iter = 50 * (m + tab.A.shape[1]) + 1000
    row_tol = feas_tol * (1.0 + np.abs(std.b))
    if tab.n_art:
        c1 = np.concatenate([np.zeros(ntot), np.ones(tab.n_art)])
        tab.run(c1, max_iter)
        tab.refactor()
        if np.any(np.abs(tab.x[ntot:]) > row_tol[tab.art_rows]):
            return "infeasible", None, INF, tab.iterations
        # artificials are pinned at zero from here on
        tab.hi[ntot:] = 0.0
    c2 = np.concatenate([std.c, np.zeros(tab.n_art)])
    status = tab.run(c2, max_iter)
    tab.refactor()
    if status == "unbounded":
        return "unbounded", None, -INF, tab.iterations
    z = np.clip(tab.x[:ntot], lo, hi)
    resid = std.A @ z - std.b
    if np.any(np.abs(resid) > row_tol):
        i = int(np.argmax(np.abs(resid) / row_tol))
        raise NumericError(f"row {i} residual {resid[i]:.3e} exceeds tolerance {row_tol[i]:.1e} after solve")
    return "optimal", z, float(std.c @ z), tab.iterations


def solve_lp(lp: LinearProgram, feas_tol: float = 1e-7) -> MilpSolution:
    """Solve the continuous program; integrality markers are ignored."""
    std = _standardise(lp)
    status, z, obj, iters = _solve_standard(std, std.lo.copy(), std.hi.copy(), feas_tol)
    if status != "optimal":
        worst = INF if status == "infeasible" else -INF
        return MilpSolution(status, None, std.sign * worst, nodes=1, iterations=iters)
    x = z[: std.n] + 0.0
    return MilpSolution("optimal", x, lp.evaluate(x), 0.0, nodes=1, bound=lp.evaluate(x), iterations=iters)


# ----------------------------------------------------------------------------
# branch and bound


def _relative_gap(incumbent: float, bound: float) -> float:
    if incumbent == INF:
        return INF
    return max(0.0, incumbent - bound) / max(1.0, abs(incumbent))


def solve_milp(
    p: MilpProblem,
    int_tol: float = 1e-6,
    gap_tol: float = 1e-6,
    node_limit: int = 20_000,
    feas_tol: float = 1e-7,
) -> MilpSolution:
    """Branch and bound on the binary variables of ``p``.

    Depth-first dive until the first incumbent, then best-bound node
    selection. Branches on the most fractional binary (lowest index on
    ties), rounding direction first.
    """
    lp = p.lp
    std = _standardise(lp)
    lo0, hi0 = std.lo.copy(), std.hi.copy()
    binaries = np.array(sorted(p.binary_vars), dtype=int)
    if binaries.size:
        lo0[binaries] = np.maximum(lo0[binaries], 0.0)
        hi0[binaries] = np.minimum(hi0[binaries], 1.0)
        lo0[binaries] = np.ceil(lo0[binaries] - int_tol)
        hi0[binaries] = np.floor(hi0[binaries] + int_tol)
        if np.any(lo0[binaries] > hi0[binaries]):
            return MilpSolution("infeasible", None, std.sign * INF, nodes=0)

    inc_val = INF  # minimisation form
    inc_z = None
    nodes = 0
    iters = 0
    counter = 0
    # node: (key, order, fixings)  fixings = tuple of (var, value)
    stack: list[tuple[float, int, tuple]] = [(-INF, 0, ())]
    heap: list[tuple[float, int, tuple]] = []
    diving = True

    def pop():
        if diving and stack:
            return stack.pop()
        return heapq.heappop(heap)

    while stack or heap:
        if not diving and stack:
            for item in stack:
                heapq.heappush(heap, item)
            stack.clear()
        key, _, fix = pop()
        if key >= inc_val - gap_tol * max(1.0, abs(inc_val)):
            continue
        if nodes >= node_limit:
            # put it back so the bound below accounts for it
            heapq.heappush(heap, (key, counter, fix))
            break
        lo, hi = lo0.copy(), hi0.copy()
        for j, v in fix:
            lo[j] = hi[j] = v
        status, z, obj, it = _solve_standard(std, lo, hi, feas_tol)
        nodes += 1
        iters += it
        if status == "infeasible":
            continue
        if status == "unbounded":
            return MilpSolution("unbounded", None, -std.sign * INF, INF, nodes, iterations=iters)
        if obj >= inc_val - gap_tol * max(1.0, abs(inc_val)):
            continue
        frac = np.abs(z[binaries] - np.round(z[binaries])) if binaries.size else np.array([])
        if frac.size == 0 or frac.max() <= int_tol:
            inc_val, inc_z = obj, z
            diving = False
            continue
        k = int(np.argmax(frac))  # first maximum -> lowest index
        j = int(binaries[k])
        down, up = fix + ((j, 0.0),), fix + ((j, 1.0),)
        first, second = (down, up) if z[j] >= 0.5 else (up, down)
        counter += 1
        o2 = counter
        counter += 1
        o1 = counter
        if diving:
            stack.append((obj, o2, second))
            stack.append((obj, o1, first))
        else:
            heapq.heappush(heap, (obj, o1, first))
            heapq.heappush(heap, (obj, o2, second))

    open_keys = [k for k, _, _ in heap] + [k for k, _, _ in stack]
    hit_limit = nodes >= node_limit and bool(open_keys)
    if inc_z is None:
        if hit_limit:
            return MilpSolution("node_limit", None, std.sign * INF, INF, nodes, std.sign * min(open_keys), iters)
        return MilpSolution("infeasible", None, std.sign * INF, nodes=nodes, iterations=iters)
    bound = min([inc_val] + open_keys) if hit_limit else inc_val
    x = inc_z[: std.n] + 0.0
    return MilpSolution(
        "node_limit" if hit_limit else "optimal",
        x,
        lp.evaluate(x),
        _relative_gap(inc_val, bound),
        nodes,
        std.sign * bound + lp.offset,
        iters,
    )


# ----------------------------------------------------------------------------
# plain-text export


_BAD_CHARS = re.compile(r"[^A-Za-z0-9_.]")


def _safe_names(names, prefix: str) -> list[str]:
    out = []
    for j, n in enumerate(names):
        n = _BAD_CHARS.sub("_", n or "")
        out.append(n if n and (n[0].isalpha() or n[0] == "_") else f"{prefix}{j}")
    if len(set(out)) != len(out):
        out = [f"{prefix}{j}" for j in range(len(names))]
    return out


def _fmt(v: float) -> str:
    if v == INF:
        return "inf"
    if v == -INF:
        return "-inf"
    return repr(float(v))


def _terms(coeffs: Iterable[tuple[int, float]], names) -> str:
    parts = []
    for j, a in coeffs:
        parts.append(f"{'-' if a < 0 else '+'} {_fmt(abs(a))} {names[j]}")
    return " ".join(parts) if parts else "+ 0"


def to_lp_text(p: MilpProblem | LinearProgram) -> str:
    """Render a problem in the LP-file dialect described in docs/lp_format.md."""
    if isinstance(p, LinearProgram):
        p = MilpProblem(p)
    lp = p.lp
    lp.validate()
    names = _safe_names(lp.names, "x")
    row_names = _safe_names([r.name or f"r{i}" for i, r in enumerate(lp.rows)], "r")
    out = ["\\ learncurve LP export", "Minimize" if lp.sense == "min" else "Maximize"]
    obj = _terms(((j, a) for j, a in enumerate(lp.objective) if a != 0.0), names)
    if lp.offset:
        obj += f" {'-' if lp.offset < 0 else '+'} {_fmt(abs(lp.offset))}"
    out.append(f" obj: {obj}")
    out.append("Subject To")
    for i, r in enumerate(lp.rows):
        out.append(f" {row_names[i]}: {_terms(sorted(r.coeffs.items()), names)} {r.relation} {_fmt(r.rhs)}")
    out.append("Bounds")
    for j in range(lp.n_vars):
        lo, hi = lp.lower[j], lp.upper[j]
        if lo == -INF and hi == INF:
            out.append(f" {names[j]} free")
        else:
            out.append(f" {_fmt(lo)} <= {names[j]} <= {_fmt(hi)}")
    if p.binary_vars:
        out.append("Binaries")
        out.append(" " + " ".join(names[j] for j in sorted(p.binary_vars)))
    out.append("End")
    return "\n".join(out) + "\n"


def _parse_num(tok: str) -> float:
    t = tok.lower()
    if t in ("inf", "+inf", "infinity"):
        return INF
    if t in ("-inf", "-infinity"):
        return -INF
    return float(tok)


def _parse_terms(tokens: list[str], var):
    coeffs: dict[int, float] = {}
    const = 0.0
    i = 0
    while i < len(tokens):
        sign = 1.0
        if tokens[i] in ("+", "-"):
            sign = -1.0 if tokens[i] == "-" else 1.0
            i += 1
        coef = 1.0
        try:
            coef = _parse_num(tokens[i])
            i += 1
        except (ValueError, IndexError):
            pass
        if i < len(tokens) and tokens[i] not in ("+", "-"):
            j = var(tokens[i])
            coeffs[j] = coeffs.get(j, 0.0) + sign * coef
            i += 1
        else:
            const += sign * coef
    return coeffs, const


_SECTIONS = {"minimize": "obj", "maximize": "obj", "subject to": "rows", "bounds": "bounds", "binaries": "binaries", "end": "end"}


def from_lp_text(text: str) -> MilpProblem:
    """Parse the dialect written by :func:`to_lp_text`."""
    lp = LinearProgram()
    sections: dict[str, list[str]] = {k: [] for k in ("obj", "rows", "bounds", "binaries")}
    current = None
    for raw in text.splitlines():
        line = raw.split("\\", 1)[0].strip()
        if not line:
            continue
        low = line.lower()
        if low in _SECTIONS:
            current = _SECTIONS[low]
            if low in ("minimize", "maximize"):
                lp.sense = "min" if low == "minimize" else "max"
            continue
        if current is None or current == "end":
            raise ValueError(f"text outside a section: {line!r}")
        sections[current].append(line)

    index: dict[str, int] = {}

    def var(name: str) -> int:
        if name not in index:
            index[name] = lp.add_var(name)
        return index[name]

    # bounds first so variables keep their declared order
    for line in sections["bounds"]:
        toks = line.split()
        if len(toks) == 2 and toks[1].lower() == "free":
            j = var(toks[0])
            lp.lower[j], lp.upper[j] = -INF, INF
        elif len(toks) == 5 and toks[1] == "<=" and toks[3] == "<=":
            j = var(toks[2])
            lp.lower[j], lp.upper[j] = _parse_num(toks[0]), _parse_num(toks[4])
        else:
            raise ValueError(f"unsupported bound line {line!r}")
    for line in sections["obj"]:
        body = line.split(":", 1)[1] if ":" in line else line
        coeffs, lp.offset = _parse_terms(body.split(), var)
        for j, a in coeffs.items():
            lp.objective[j] = a
    for line in sections["rows"]:
        name, body = line.split(":", 1) if ":" in line else (None, line)
        toks = body.split()
        rels = [k for k, t in enumerate(toks) if t in RELATIONS]
        if len(rels) != 1 or rels[0] != len(toks) - 2:
            raise ValueError(f"cannot parse row {line!r}")
        k = rels[0]
        coeffs, const = _parse_terms(toks[:k], var)
        lp.add_row(coeffs, toks[k], _parse_num(toks[k + 1]) - const, name.strip() if name else None)
    binary = {var(n) for line in sections["binaries"] for n in line.split()}
    return MilpProblem(lp, frozenset(binary))
