"""Strong Stackelberg equilibria: multiple LPs, singleton-schedule coverage LPs, and a vertex oracle."""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .games import SUPPORT_TOL, MixedStrategy
from .graph import TargetSpec, target_utility_matrix
from .optim import LinearProgram, SolverError, solve_lp
from .schedules import ScheduleFormGame, schedule_game_matrix

TIE_TOL = 1e-9


@dataclass(frozen=True)
class SSEResult:
    """Leader commitment, follower response and bookkeeping.

    ``strategy`` is a mixed strategy over leader actions (multiple LP) or a
    coverage vector over targets (coverage LP). ``multiplicity`` counts follower
    responses whose LP reached the best value within 1e-9.
    """

    strategy: np.ndarray
    response: int
    value: float
    support: int
    runtime: float
    multiplicity: int = 1
    column_values: tuple = ()
    info: dict = field(default_factory=dict)


def _pick(values: list[float]) -> tuple[int, int]:
    finite = [v for v in values if v is not None]
    if not finite:
        raise SolverError("every follower response is infeasible")
    best = max(finite)
    winners = [j for j, v in enumerate(values) if v is not None and v >= best - TIE_TOL]
    return winners[0], len(winners)


def sse_multiple_lp(A, B) -> SSEResult:
    """One LP per follower column; the best feasible column is the SSE (strong tie-breaking)."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.shape != B.shape or A.ndim != 2 or A.size == 0:
        raise ValueError("A and B must be nonempty matrices of equal shape")
    if not (np.isfinite(A).all() and np.isfinite(B).all()):
        raise ValueError("non-finite payoff")
    t0 = time.perf_counter()
    n, m = A.shape
    values: list[float | None] = []
    xs = []
    for j in range(m):
        others = [k for k in range(m) if k != j]
        # x^T B e_k - x^T B e_j <= 0 for every other column k
        G = (B[:, others] - B[:, [j]]).T if others else np.zeros((0, n))
        lp = LinearProgram(
            A[:, j],
            np.vstack([G, np.ones((1, n))]),
            ("<=",) * len(others) + ("==",),
            np.append(np.zeros(len(others)), 1.0),
            (),
            "max",
        )
        res = solve_lp(lp)
        if res.status == "infeasible":
            values.append(None)
            xs.append(None)
        elif res.optimal:
            x = np.clip(res.x, 0.0, None)
            x /= x.sum()
            values.append(float(x @ A[:, j]))
            xs.append(x)
        else:
            raise SolverError(f"column {j}: LP status {res.status}")
    j, mult = _pick(values)
    x = xs[j]
    return SSEResult(
        strategy=x,
        response=j,
        value=values[j],
        support=MixedStrategy(x).support_size,
        runtime=time.perf_counter() - t0,
        multiplicity=mult,
        column_values=tuple(values),
    )


def _utility_matrix(targets) -> np.ndarray:
    if isinstance(targets, np.ndarray):
        U = np.asarray(targets, dtype=float)
        if U.ndim != 2 or U.shape[0] != 4:
            raise ValueError("target utilities must be a 4 x |T| matrix")
        return U
    return target_utility_matrix(list(targets))


def _coverage_sse(U: np.ndarray, agg: np.ndarray, caps: Sequence[tuple[np.ndarray, float]]) -> SSEResult:
    """Per-target LPs over variables z with coverage ``c = agg @ z`` and ``0 <= z <= 1``.

    ``caps`` are extra ``row @ z <= rhs`` constraints. Support counts entries of z
    above 1e-9.
    """
    nt, nv = agg.shape
    t0 = time.perf_counter()
    d_unc, d_cov, a_cov, a_unc = U
    values: list[float | None] = []
    sols = []
    for t in range(nt):
        rows, rhs = [], []
        # attacker utility at every other target must not exceed the utility at t
        for s in range(nt):
            if s != t:
                rows.append((a_cov[s] - a_unc[s]) * agg[s] - (a_cov[t] - a_unc[t]) * agg[t])
                rhs.append(a_unc[t] - a_unc[s])
        for row, b in caps:
            rows.append(row)
            rhs.append(b)
        if nv == 0:
            ok = all(r <= 0.0 for r in rhs)
            values.append(float(d_unc[t]) if ok else None)
            sols.append(np.zeros(0))
            continue
        lp = LinearProgram(
            (d_cov[t] - d_unc[t]) * agg[t],
            np.array(rows).reshape(len(rows), nv),
            ("<=",) * len(rows),
            np.array(rhs),
            tuple((0.0, 1.0) for _ in range(nv)),
            "max",
        )
        res = solve_lp(lp)
        if res.status == "infeasible":
            values.append(None)
            sols.append(None)
            continue
        if not res.optimal:
            raise SolverError(f"coverage LP for target {t}: {res.status}")
        z = np.clip(res.x, 0.0, 1.0)
        ct = min(float(agg[t] @ z), 1.0)
        values.append(float(ct * d_cov[t] + (1 - ct) * d_unc[t]))
        sols.append(z)
    t_star, mult = _pick(values)
    z = sols[t_star]
    return SSEResult(
        strategy=z,
        response=t_star,
        value=values[t_star],
        support=int(np.count_nonzero(z > SUPPORT_TOL)),
        runtime=time.perf_counter() - t0,
        multiplicity=mult,
        column_values=tuple(values),
        info={"coverage": np.clip(agg @ z, 0.0, 1.0) if z.size else np.zeros(nt)},
    )


def sse_simple_schedules(targets, resources: float, allowed: Sequence[Sequence[int]] | None = None) -> SSEResult:
    """Coverage-space SSE for singleton schedules.

    ``targets`` is a list of :class:`TargetSpec` or a 4 x |T| utility matrix (rows
    u_d_unc, u_d_cov, u_a_cov, u_a_unc). Without ``allowed`` the coverage obeys
    ``sum c <= resources``. With ``allowed`` (one target-index list per resource)
    coverage is split per resource, ``c_t = sum_r c_rt``, each resource spending
    at most one unit and ``resources`` is ignored. ``strategy`` is the coverage
    vector in both cases and ``support`` counts its nonzero entries.
    """
    U = _utility_matrix(targets)
    nt = U.shape[1]
    if nt == 0:
        raise ValueError("no targets")
    if allowed is None:
        if resources <= 0:
            raise ValueError("resources must be > 0")
        res = _coverage_sse(U, np.eye(nt), [(np.ones(nt), float(resources))])
    else:
        pairs = [(r, t) for r, ts in enumerate(allowed) for t in sorted(set(ts))]
        agg = np.zeros((nt, len(pairs)))
        for k, (_, t) in enumerate(pairs):
            agg[t, k] = 1.0
        caps = [(agg[s], 1.0) for s in range(nt)]
        caps += [(np.array([1.0 if pr == r else 0.0 for pr, _ in pairs]), 1.0) for r in range(len(allowed))]
        res = _coverage_sse(U, agg, caps)
    c = res.info["coverage"]
    return replace(res, strategy=c, support=int(np.count_nonzero(c > SUPPORT_TOL)))


def sse_partition(targets, groups: Sequence[Sequence[int]], resources: float) -> SSEResult:
    """SSE when identical resources pick among disjoint schedules (``groups`` of target indices).

    Schedule i is covered with probability ``p_i <= 1``, ``sum p <= resources``,
    and every target of the schedule inherits ``p_i``. ``strategy`` is ``p``.
    """
    U = _utility_matrix(targets)
    nt = U.shape[1]
    agg = np.zeros((nt, len(groups)))
    for i, g in enumerate(groups):
        for t in g:
            if agg[t].any():
                raise ValueError(f"target {t} appears in two schedules")
            agg[t, i] = 1.0
    return _coverage_sse(U, agg, [(np.ones(len(groups)), float(resources))])


def sse_schedule_form(sfg: ScheduleFormGame, simple: bool | None = None) -> SSEResult:
    """SSE of a general-sum schedule-form game.

    Singleton schedules go through the coverage LP (support = covered targets);
    otherwise the joint schedules are expanded to a bimatrix and solved by
    multiple LPs (support = joint actions in the mix).
    """
    if simple is None:
        simple = sfg.is_simple()
    if simple:
        if not sfg.is_simple():
            raise ValueError("sse_simple needs singleton schedules")
        index = {t: j for j, t in enumerate(sfg.targets)}
        allowed = [[index[next(iter(s.targets))] for s in group if s.targets] for group in sfg.schedules]
        return sse_simple_schedules(sfg.target_utilities, len(sfg.schedules), allowed)
    g = schedule_game_matrix(sfg, general_sum=True)
    return sse_multiple_lp(g.A, g.B)


def sse_bruteforce_oracle(A, B, tol: float = 1e-9) -> float:
    """Leader SSE value by enumerating vertices of each follower-response polytope.

    Independent of any LP solver. Limited to games up to 4 x 4.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    n, m = A.shape
    if n > 4 or m > 4:
        raise ValueError("brute-force oracle is limited to 4 x 4 games")
    best = -np.inf
    for j in range(m):
        # inequalities G x <= 0: other columns no better for the follower, and -x <= 0
        G = [B[:, k] - B[:, j] for k in range(m) if k != j] + [-np.eye(n)[i] for i in range(n)]
        G = np.array(G).reshape(-1, n)
        for active in itertools.combinations(range(len(G)), n - 1):
            M = np.vstack([G[list(active)], np.ones(n)]) if n > 1 else np.ones((1, 1))
            if abs(np.linalg.det(M)) < 1e-12:
                continue
            x = np.linalg.solve(M, np.append(np.zeros(n - 1), 1.0))
            if np.all(G @ x <= tol) and np.all(x >= -tol):
                best = max(best, float(x @ A[:, j]))
            if n == 1:
                break
    if best == -np.inf:
        raise SolverError("no follower response is feasible")
    return best
