"""Small dense LP / binary-MIP layer shared by every solver.

LP relaxations are delegated to HiGHS through :func:`scipy.optimize.linprog`.
Mixed-integer programs run either through the in-house branch and bound below
(deterministic, lowest-fractional-index branching) or HiGHS' own MIP solver for
the larger time-expanded best-response models.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, linprog, milp

LP_TOL = 1e-10
INT_TOL = 1e-7
BNB_MAX_BINARIES = 60

_HIGHS_OPTIONS = {
    "primal_feasibility_tolerance": LP_TOL,
    "dual_feasibility_tolerance": LP_TOL,
}

RELATIONS = ("<=", "==", ">=")


class SolverError(RuntimeError):
    """The backend failed for a reason other than infeasibility or unboundedness."""


@dataclass(frozen=True, eq=False)
class LinearProgram:
    c: np.ndarray
    A: np.ndarray
    relations: tuple[str, ...]
    b: np.ndarray
    bounds: tuple[tuple[float | None, float | None], ...] = ()
    sense: str = "min"

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float).ravel()
        n = c.size
        A = np.asarray(self.A, dtype=float)
        if A.size == 0:
            A = A.reshape(0, n)
        b = np.asarray(self.b, dtype=float).ravel()
        if A.ndim != 2 or A.shape[1] != n:
            raise ValueError(f"constraint matrix has shape {A.shape}, expected (*, {n})")
        if b.size != A.shape[0] or len(self.relations) != A.shape[0]:
            raise ValueError("rhs / relation count does not match constraint rows")
        bad = [r for r in self.relations if r not in RELATIONS]
        if bad:
            raise ValueError(f"unknown relation(s) {bad}")
        if self.sense not in ("min", "max"):
            raise ValueError(f"sense must be 'min' or 'max', got {self.sense!r}")
        bounds = tuple(self.bounds) or tuple((0.0, None) for _ in range(n))
        if len(bounds) != n:
            raise ValueError(f"{len(bounds)} bounds for {n} variables")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "relations", tuple(self.relations))
        object.__setattr__(self, "bounds", bounds)

    @property
    def num_vars(self) -> int:
        return self.c.size


@dataclass(frozen=True, eq=False)
class MipProgram:
    lp: LinearProgram
    binaries: tuple[int, ...] = ()

    def __post_init__(self):
        b = tuple(sorted(set(int(i) for i in self.binaries)))
        if b and (b[0] < 0 or b[-1] >= self.lp.num_vars):
            raise ValueError("binary index out of range")
        object.__setattr__(self, "binaries", b)


@dataclass(frozen=True, eq=False)
class LPResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    value: float = math.nan
    x: np.ndarray | None = None
    nodes: int = 0
    info: dict = field(default_factory=dict)

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def _split(lp: LinearProgram):
    ub_rows, ub_rhs, eq_rows, eq_rhs = [], [], [], []
    for row, rel, rhs in zip(lp.A, lp.relations, lp.b):
        if rel == "<=":
            ub_rows.append(row)
            ub_rhs.append(rhs)
        elif rel == ">=":
            ub_rows.append(-row)
            ub_rhs.append(-rhs)
        else:
            eq_rows.append(row)
            eq_rhs.append(rhs)
    n = lp.num_vars
    A_ub = np.array(ub_rows).reshape(-1, n) if ub_rows else None
    A_eq = np.array(eq_rows).reshape(-1, n) if eq_rows else None
    return A_ub, (np.array(ub_rhs) if ub_rows else None), A_eq, (np.array(eq_rhs) if eq_rows else None)


def _solve_relaxation(lp: LinearProgram, bounds) -> LPResult:
    sign = -1.0 if lp.sense == "max" else 1.0
    A_ub, b_ub, A_eq, b_eq = _split(lp)
    res = linprog(
        sign * lp.c,
        A_ub=A_ub,
        b_ub=b_ub,
        A_eq=A_eq,
        b_eq=b_eq,
        bounds=bounds,
        method="highs",
        options=_HIGHS_OPTIONS,
    )
    if res.status == 0:
        return LPResult("optimal", float(sign * res.fun), np.asarray(res.x, dtype=float))
    if res.status == 2:
        return LPResult("infeasible")
    if res.status == 3:
        return LPResult("unbounded")
    raise SolverError(f"LP backend failed: {res.message}")


def solve_lp(lp: LinearProgram) -> LPResult:
    """Solve ``lp`` to optimality, or report it infeasible / unbounded."""
    return _solve_relaxation(lp, list(lp.bounds))


def _bnb(mip: MipProgram) -> LPResult:
    lp = mip.lp
    maximize = lp.sense == "max"
    base = [list(b) for b in lp.bounds]
    for i in mip.binaries:
        lo, hi = base[i]
        base[i] = [max(0.0, lo if lo is not None else 0.0), min(1.0, hi if hi is not None else 1.0)]

    best_val = -math.inf
    best_x = None
    nodes = 0
    saw_unbounded = False
    # depth-first, "0" branch explored first; fixed order keeps runs reproducible
    stack = [dict()]
    while stack:
        fixed = stack.pop()
        nodes += 1
        bounds = [tuple(b) for b in base]
        for i, v in fixed.items():
            bounds[i] = (float(v), float(v))
        if any(lo is not None and hi is not None and lo > hi for lo, hi in bounds):
            continue
        rel = _solve_relaxation(lp, bounds)
        if rel.status == "infeasible":
            continue
        if rel.status == "unbounded":
            saw_unbounded = True
            continue
        val = rel.value if maximize else -rel.value
        if val <= best_val + 1e-12:
            continue
        frac = [i for i in mip.binaries if abs(rel.x[i] - round(rel.x[i])) > INT_TOL]
        if not frac:
            x = rel.x.copy()
            x[list(mip.binaries)] = np.round(x[list(mip.binaries)])
            best_val, best_x = val, x
            continue
        j = frac[0]
        stack.append({**fixed, j: 1})
        stack.append({**fixed, j: 0})

    if best_x is None:
        return LPResult("unbounded" if saw_unbounded else "infeasible", nodes=nodes)
    return LPResult("optimal", best_val if maximize else -best_val, best_x, nodes=nodes)


def _highs_mip(mip: MipProgram) -> LPResult:
    lp = mip.lp
    sign = -1.0 if lp.sense == "max" else 1.0
    n = lp.num_vars
    lo = np.array([-np.inf if b[0] is None else b[0] for b in lp.bounds], dtype=float)
    hi = np.array([np.inf if b[1] is None else b[1] for b in lp.bounds], dtype=float)
    integrality = np.zeros(n)
    for i in mip.binaries:
        integrality[i] = 1
        lo[i] = max(lo[i], 0.0)
        hi[i] = min(hi[i], 1.0)
    constraints = []
    if lp.A.shape[0]:
        lower = np.where(np.array([r in (">=", "==") for r in lp.relations]), lp.b, -np.inf)
        upper = np.where(np.array([r in ("<=", "==") for r in lp.relations]), lp.b, np.inf)
        constraints.append(LinearConstraint(lp.A, lower, upper))
    res = milp(
        sign * lp.c,
        integrality=integrality,
        bounds=Bounds(lo, hi),
        constraints=constraints,
        options={"mip_rel_gap": 0.0},
    )
    if res.status == 0:
        x = np.asarray(res.x, dtype=float)
        if mip.binaries:
            idx = list(mip.binaries)
            x[idx] = np.round(x[idx])
        return LPResult("optimal", float(sign * res.fun), x)
    if res.status == 2:
        return LPResult("infeasible")
    if res.status == 3:
        return LPResult("unbounded")
    raise SolverError(f"MIP backend failed: {res.message}")


def solve_mip(mip: MipProgram, method: str = "auto") -> LPResult:
    """Solve a binary MIP exactly.

    ``method`` is ``"bnb"`` (in-house branch and bound), ``"highs"`` or ``"auto"``,
    which uses branch and bound up to ``BNB_MAX_BINARIES`` binaries.
    """
    if method == "auto":
        method = "bnb" if len(mip.binaries) <= BNB_MAX_BINARIES else "highs"
    if method == "bnb":
        return _bnb(mip)
    if method == "highs":
        return _highs_mip(mip)
    raise ValueError(f"unknown MIP method {method!r}")


def build_lp(
    c: Sequence[float],
    rows: Sequence[tuple[Sequence[float], str, float]] = (),
    bounds=(),
    sense: str = "min",
) -> LinearProgram:
    """Convenience constructor from ``(coefficients, relation, rhs)`` row triples."""
    c = np.asarray(c, dtype=float)
    if rows:
        A = np.array([r[0] for r in rows], dtype=float).reshape(len(rows), c.size)
        rel = tuple(r[1] for r in rows)
        b = np.array([r[2] for r in rows], dtype=float)
    else:
        A, rel, b = np.zeros((0, c.size)), (), np.zeros(0)
    return LinearProgram(c, A, rel, b, tuple(bounds), sense)
