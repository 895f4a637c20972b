"""Seeded random MILPs and a brute-force oracle shared by the MILP tests.

The oracle fixes every binary assignment in turn and solves the remaining
continuous program with HiGHS (through scipy), keeping the best value.
"""

from __future__ import annotations

import itertools

import numpy as np
from scipy.optimize import linprog

from learncurve.milp import LinearProgram, MilpProblem

BASE_SEED = 7_000


def random_milp(seed: int) -> MilpProblem:
    """At most 12 binaries and 20 continuous variables, all bounded."""
    rng = np.random.default_rng(seed)
    nb = int(rng.integers(1, 13))
    nc = int(rng.integers(1, 21))
    m = int(rng.integers(2, 16))
    lp = LinearProgram(sense=str(rng.choice(["min", "max"])))
    n = nb + nc
    order = rng.permutation(n)
    binary = set(int(j) for j in order[:nb])
    anchor = np.empty(n)
    for j in range(n):
        if j in binary:
            lp.add_var(f"b{j}", 0.0, 1.0, float(rng.normal(scale=3.0)))
            anchor[j] = float(rng.integers(0, 2))
        else:
            lo = 0.0 if rng.random() < 0.7 else -float(rng.uniform(0, 5))
            hi = lo + float(rng.uniform(1, 10))
            lp.add_var(f"c{j}", lo, hi, float(rng.normal()))
            anchor[j] = float(rng.uniform(lo, hi))
    for _ in range(m):
        a = rng.normal(size=n) * (rng.random(n) < 0.5)
        rel = str(rng.choice(["<=", ">=", "="], p=[0.5, 0.35, 0.15]))
        v = float(a @ anchor)
        if rel == "<=":
            rhs = v + float(rng.uniform(0, 2))
        elif rel == ">=":
            rhs = v - float(rng.uniform(0, 2))
        else:
            rhs = v
        lp.add_row({j: float(a[j]) for j in range(n) if a[j] != 0.0}, rel, rhs)
    # about one problem in ten gets a row that nothing satisfies
    if rng.random() < 0.1:
        lp.add_row({j: 1.0 for j in range(n)}, ">=", float(sum(lp.upper)) + 1.0)
    return MilpProblem(lp, frozenset(binary))


def _dense(lp: LinearProgram):
    n = lp.n_vars
    A_ub, b_ub, A_eq, b_eq = [], [], [], []
    for r in lp.rows:
        row = np.zeros(n)
        for j, a in r.coeffs.items():
            row[j] = a
        if r.relation == "<=":
            A_ub.append(row)
            b_ub.append(r.rhs)
        elif r.relation == ">=":
            A_ub.append(-row)
            b_ub.append(-r.rhs)
        else:
            A_eq.append(row)
            b_eq.append(r.rhs)
    return (
        np.array(A_ub) if A_ub else None,
        np.array(b_ub) if b_ub else None,
        np.array(A_eq) if A_eq else None,
        np.array(b_eq) if b_eq else None,
    )


def enumerate_optimum(p: MilpProblem) -> tuple[str, float | None]:
    """Exhaustive 2^k oracle; returns (status, objective in the problem's own sense)."""
    lp = p.lp
    sign = 1.0 if lp.sense == "min" else -1.0
    c = sign * np.asarray(lp.objective)
    A_ub, b_ub, A_eq, b_eq = _dense(lp)
    bins = sorted(p.binary_vars)
    best = None
    for bits in itertools.product((0.0, 1.0), repeat=len(bins)):
        bounds = list(zip(lp.lower, lp.upper))
        for j, v in zip(bins, bits):
            bounds[j] = (v, v)
        res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds, method="highs")
        if res.status == 0 and (best is None or res.fun < best):
            best = res.fun
    if best is None:
        return "infeasible", None
    return "optimal", sign * best + lp.offset
