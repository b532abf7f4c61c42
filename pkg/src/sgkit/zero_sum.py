"""Zero-sum equilibrium solvers: minimax LP, support-bounded MILP and double oracle.

All matrices are in the row (defender) player's terms: the row player maximizes
``x^T A y`` and the column player minimizes it.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass
from typing import Callable, Hashable, Mapping, Sequence

import numpy as np

from .games import MixedStrategy, SolveReport, exploitability
from .graph import MOVING, STATIONARY, ActionMatrix, evaluate_actions, generate_paths, iter_player_actions
from .optim import LinearProgram, MipProgram, SolverError, solve_lp, solve_mip

MINIMAX_TOL = 1e-7
DO_EPS = 1e-12
ENUM_LIMIT = 100_000


def _as_matrix(A) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.size == 0:
        raise ValueError(f"expected a nonempty 2-D payoff matrix, got shape {A.shape}")
    if not np.isfinite(A).all():
        raise ValueError("payoff matrix has non-finite entries")
    return A


def _maximin_lp(A: np.ndarray) -> LinearProgram:
    """max v  s.t.  v <= (x^T A)_j for all j,  x in the simplex."""
    n, m = A.shape
    c = np.zeros(n + 1)
    c[-1] = 1.0
    rows = np.hstack([-A.T, np.ones((m, 1))])
    simplex = np.append(np.ones(n), 0.0)[None, :]
    return LinearProgram(
        c,
        np.vstack([rows, simplex]),
        ("<=",) * m + ("==",),
        np.append(np.zeros(m), 1.0),
        tuple([(0.0, None)] * n + [(None, None)]),
        "max",
    )


def _strategy(p: np.ndarray) -> np.ndarray:
    p = np.clip(p, 0.0, None)
    return p / p.sum()


def nash_lp(A) -> SolveReport:
    """Maximin strategies of both players via the two minimax LPs.

    Raises :class:`SolverError` if the two LP values differ by more than 1e-7.
    """
    A = _as_matrix(A)
    t0 = time.perf_counter()
    row = solve_lp(_maximin_lp(A))
    col = solve_lp(_maximin_lp(-A.T))
    if not (row.optimal and col.optimal):
        raise SolverError(f"minimax LP not solved: {row.status}/{col.status}")
    v_row, v_col = row.value, -col.value
    if abs(v_row - v_col) > MINIMAX_TOL:
        raise SolverError(f"minimax values disagree: {v_row} vs {v_col}")
    x = _strategy(row.x[:-1])
    y = _strategy(col.x[:-1])
    wall = time.perf_counter() - t0
    gap = exploitability(A, x, y)
    return SolveReport(
        value=v_row + 0.0,
        row_strategy=MixedStrategy(x),
        col_strategy=MixedStrategy(y),
        iterations=1,
        wall_time=wall,
        trace=((1, wall, gap),),
        info={"solver": "nash_lp", "col_value": v_col},
    )


def sparse_nash_milp(A, k: int, method: str = "auto") -> SolveReport:
    """Best row strategy using at most ``k`` rows (support indicators ``x_i <= y_i``, ``sum y <= k``)."""
    A = _as_matrix(A)
    n, m = A.shape
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in [1, {n}], got {k}")
    t0 = time.perf_counter()
    # variables: x (n), y (n), v
    N = 2 * n + 1
    c = np.zeros(N)
    c[-1] = 1.0
    best_resp = np.hstack([-A.T, np.zeros((m, n)), np.ones((m, 1))])
    link = np.hstack([np.eye(n), -np.eye(n), np.zeros((n, 1))])
    simplex = np.concatenate([np.ones(n), np.zeros(n), [0.0]])
    budget = np.concatenate([np.zeros(n), np.ones(n), [0.0]])
    lp = LinearProgram(
        c,
        np.vstack([best_resp, link, simplex, budget]),
        ("<=",) * (m + n) + ("==", "<="),
        np.concatenate([np.zeros(m + n), [1.0, float(k)]]),
        tuple([(0.0, None)] * n + [(0.0, 1.0)] * n + [(None, None)]),
        "max",
    )
    res = solve_mip(MipProgram(lp, tuple(range(n, 2 * n))), method)
    if not res.optimal:
        raise SolverError(f"sparse MILP not solved: {res.status}")
    # indicators within the integrality tolerance of 0 may still leak ~1e-7 mass
    x = np.where(res.x[n : 2 * n] >= 0.5, res.x[:n], 0.0)
    x = _strategy(x)
    wall = time.perf_counter() - t0
    value = float(np.min(x @ A))
    return SolveReport(
        value=value,
        row_strategy=MixedStrategy(x),
        col_strategy=None,
        iterations=max(res.nodes, 1),
        wall_time=wall,
        trace=(),
        info={"solver": "sparse_milp", "k": k, "mip_value": res.value, "support": MixedStrategy(x).support_size},
    )


# ---------------------------------------------------------------------------
# double oracle


def _double_oracle(
    payoff: Callable[[Hashable, Hashable], float],
    seed_row: Hashable,
    seed_col: Hashable,
    row_br: Callable[[list, np.ndarray], tuple[Hashable, float]],
    col_br: Callable[[list, np.ndarray], tuple[Hashable, float]],
    eps: float,
    max_iter: int,
    name: str,
) -> SolveReport:
    """Generic loop; ``row_br(cols, y)`` / ``col_br(rows, x)`` return ``(action, row-player value)``."""
    t0 = time.perf_counter()
    rows, cols = [seed_row], [seed_col]
    M = np.array([[payoff(seed_row, seed_col)]], dtype=float)
    trace = []
    stop = "max_iter"
    for it in range(1, max_iter + 1):
        sol = nash_lp(M)
        v = sol.value
        x, y = sol.row_strategy.probs, sol.col_strategy.probs
        r_new, vd = row_br(cols, y)
        c_new, va = col_br(rows, x)
        # a best response can never do worse than the restricted equilibrium actions
        if vd < v - 1e-7 or va > v + 1e-7:
            raise SolverError(f"{name}: best-response oracle returned a non-improving action (vd={vd}, v={v}, va={va})")
        trace.append((it, time.perf_counter() - t0, max(vd - va, 0.0)))
        known_r, known_c = r_new in rows, c_new in cols
        if (vd - v <= eps and v - va <= eps) or (known_r and known_c):
            stop = "converged"
            break
        grow_r = not known_r and vd - v > eps
        grow_c = not known_c and v - va > eps
        if not (grow_r or grow_c):
            # the only "improvements" are LP round-off on actions already present
            stop = "converged"
            break
        if grow_r:
            rows.append(r_new)
            M = np.vstack([M, [payoff(r_new, c) for c in cols]])
        if grow_c:
            cols.append(c_new)
            M = np.hstack([M, np.array([[payoff(r, c_new)] for r in rows])])
    return SolveReport(
        value=v,
        row_strategy=MixedStrategy(x, tuple(rows)),
        col_strategy=MixedStrategy(y, tuple(cols)),
        iterations=it,
        wall_time=time.perf_counter() - t0,
        trace=tuple(trace),
        info={"solver": name, "stop": stop, "restricted_shape": M.shape},
    )


def double_oracle_matrix(A, eps: float = DO_EPS, max_iter: int = 10_000) -> SolveReport:
    """Double oracle on an explicit matrix with exact row/column best responses."""
    A = _as_matrix(A)

    def row_br(cols, y):
        vals = A[:, cols] @ y
        i = int(np.argmax(vals))
        return i, float(vals[i])

    def col_br(rows, x):
        vals = x @ A[rows, :]
        j = int(np.argmin(vals))
        return j, float(vals[j])

    return _double_oracle(lambda i, j: A[i, j], 0, 0, row_br, col_br, eps, max_iter, "do_matrix")


# --- normal-form security games -------------------------------------------


def _attack_action(subset: Sequence[int], T: int) -> ActionMatrix:
    return ActionMatrix(tuple((v,) * T for v in subset), (STATIONARY,) * len(subset))


def interdiction_probabilities(defender_mix: Mapping[ActionMatrix, float], target_nodes: Sequence[int], delta: int) -> np.ndarray:
    """q_t: probability the defender mix keeps at least ``delta`` presence at target t."""
    q = np.zeros(len(target_nodes))
    for action, p in defender_mix.items():
        presence = action.presence_counts()
        for k, t in enumerate(target_nodes):
            if presence.get(t, 0) >= delta:
                q[k] += p
    return q


def attacker_br_nfg(q: Sequence[float], values: Sequence[float], k: int, target_ids: Sequence[int] | None = None) -> tuple[tuple[int, ...], float]:
    """Top-``k`` targets by ``V_t (1 - q_t)``; ties go to the lower target id.

    Returns the chosen ids (sorted) and the attacker's expected utility.
    """
    q = np.asarray(q, dtype=float)
    values = np.asarray(values, dtype=float)
    ids = list(range(len(values))) if target_ids is None else list(target_ids)
    if k > len(ids):
        raise ValueError(f"k={k} exceeds the number of targets ({len(ids)})")
    if k < 0:
        raise ValueError("k must be >= 0")
    gain = values * (1.0 - q)
    order = sorted(range(len(ids)), key=lambda i: (-gain[i], ids[i]))[:k]
    return tuple(sorted(ids[i] for i in order)), float(sum(gain[i] for i in order))


def _defender_models(config):
    starts = list(config.defender_starts) or [()] * config.defender_moving
    ends = list(config.defender_ends) or [()] * config.defender_moving
    return starts, ends


def _br_nfg_mip(weights: dict[int, float], graph, config, delta: int, method: str):
    """Time-expanded binary model: one node per (defender, timestep), presence-gated targets."""
    nodes = list(graph.node_ids)
    idx = {v: i for i, v in enumerate(nodes)}
    V, T, D = len(nodes), config.num_timesteps, config.defender_moving
    starts, ends = _defender_models(config)
    tgt = sorted(weights)
    nv = D * V * T

    def var(d, i, tau):
        return (d * T + tau) * V + i

    N = nv + len(tgt)
    rows, rel, rhs = [], [], []

    def add(coeffs, r, b):
        row = np.zeros(N)
        for j, a in coeffs:
            row[j] += a
        rows.append(row)
        rel.append(r)
        rhs.append(b)

    preds = {}
    for v in nodes:
        nb = graph.neighbors(v)
        moves = set(nb)
        if config.allow_wait or not nb:
            moves.add(v)
        for w in moves:
            preds.setdefault(w, []).append(v)
    bounds = [(0.0, 1.0)] * N
    for d in range(D):
        s_set = set(starts[d]) or set(nodes)
        e_set = set(ends[d]) or set(nodes)
        for tau in range(T):
            add([(var(d, i, tau), 1.0) for i in range(V)], "==", 1.0)
        for i, v in enumerate(nodes):
            if v not in s_set:
                bounds[var(d, i, 0)] = (0.0, 0.0)
            if config.force_return:
                add([(var(d, i, T - 1), 1.0), (var(d, i, 0), -1.0)], ">=", 0.0)
            elif v not in e_set:
                bounds[var(d, i, T - 1)] = (0.0, 0.0)
            for tau in range(T - 1):
                add([(var(d, i, tau + 1), 1.0)] + [(var(d, idx[u], tau), -1.0) for u in preds.get(v, [])], "<=", 0.0)
    for k, t in enumerate(tgt):
        i = idx[t]
        add([(nv + k, float(delta))] + [(var(d, i, tau), -1.0) for d in range(D) for tau in range(T)], "<=", 0.0)
    c = np.zeros(N)
    for k, t in enumerate(tgt):
        c[nv + k] = weights[t]
    lp = LinearProgram(c, np.array(rows), tuple(rel), np.array(rhs), tuple(bounds), "max")
    res = solve_mip(MipProgram(lp, tuple(range(N))), method)
    if not res.optimal:
        raise SolverError("no feasible defender path (check home-base reachability)")
    X = res.x[:nv].reshape(D, T, V)
    positions = tuple(tuple(nodes[int(np.argmax(X[d, tau]))] for tau in range(T)) for d in range(D))
    action = ActionMatrix(positions, (MOVING,) * D)
    return action, _coverage_objective(action, weights, delta)


def _coverage_objective(action: ActionMatrix, weights: Mapping[int, float], delta: int) -> float:
    presence = action.presence_counts()
    return float(sum(w for t, w in weights.items() if presence.get(t, 0) >= delta))


def _count_defender_actions(graph, config) -> int:
    starts, ends = _defender_models(config)
    total = 1
    for s, e in zip(starts, ends):
        total *= len(generate_paths(graph, s, e, config.num_timesteps, config.allow_wait, config.force_return))
        if total > ENUM_LIMIT:
            return total
    if config.defender_stationary:
        total *= len(config.defender_placements or graph.node_ids) ** config.defender_stationary
    return total


def defender_br_nfg(
    attack_probs: Mapping[int, float],
    values: Mapping[int, float],
    graph,
    config,
    delta: int = 1,
    method: str = "auto",
) -> tuple[ActionMatrix, float]:
    """Defender best response against stationary attacks.

    Maximizes ``sum_t P_t V_t g_t`` where ``g_t`` says the defenders spend at least
    ``delta`` (resource, timestep) pairs at target t. ``attack_probs`` maps target
    node to ``P_t``. ``method`` is ``"mip"``, ``"enumerate"`` or ``"auto"`` (enumerate
    when there are at most 1e5 joint paths). Returns the action and its objective.
    """
    weights = {t: float(attack_probs.get(t, 0.0)) * float(values[t]) for t in values}
    if method == "auto":
        method = "enumerate" if config.defender_stationary or _count_defender_actions(graph, config) <= ENUM_LIMIT else "mip"
    if method == "mip":
        if config.defender_stationary:
            raise ValueError("the MIP model covers moving defenders only")
        return _br_nfg_mip(weights, graph, config, delta, "highs")
    if method != "enumerate":
        raise ValueError(f"unknown method {method!r}")
    best, best_val = None, -math.inf
    for action in iter_player_actions(graph, config, "defender"):
        val = _coverage_objective(action, weights, delta)
        if val > best_val + 1e-12:
            best, best_val = action, val
    if best is None:
        raise SolverError("no feasible defender path (check home-base reachability)")
    return best, best_val


def double_oracle_nfg(game, eps: float = DO_EPS, max_iter: int = 10_000, method: str = "auto") -> SolveReport:
    """Double oracle on a normal-form security game, or on a plain matrix.

    For a :class:`~sgkit.instances.SecurityGame` the strategies range over
    defender path matrices and attacker target multisets and payoffs are raw
    (unnormalized) defender utilities.
    """
    if not hasattr(game, "graph"):
        return double_oracle_matrix(game, eps, max_iter)
    graph, config, protocol = game.graph, game.config, game.protocol
    if config.attacker_moving:
        raise ValueError("the NFG oracles assume stationary attackers")
    targets = list(game.targets)
    ids = [t.node_id for t in targets]
    values = {t.node_id: t.value for t in targets}
    delta, T, k = protocol.defense_time_threshold, config.num_timesteps, config.attacker_stationary
    cache: dict = {}

    def payoff(d: ActionMatrix, a: tuple[int, ...]) -> float:
        key = (d, a)
        if key not in cache:
            cache[key] = evaluate_actions(d, _attack_action(a, T), targets, protocol, graph)[1]
        return cache[key]

    def row_br(cols, y):
        P: dict[int, float] = {}
        for a, p in zip(cols, y):
            for t in set(a):
                P[t] = P.get(t, 0.0) + p
        action, obj = defender_br_nfg(P, values, graph, config, delta, method)
        return action, obj - sum(P.get(t, 0.0) * values[t] for t in ids)

    def col_br(rows, x):
        q = interdiction_probabilities(dict(zip(rows, x)), ids, delta)
        subset, util = attacker_br_nfg(q, [values[t] for t in ids], k, ids)
        return subset, -util

    seed_row = next(iter_player_actions(graph, config, "defender"), None)
    if seed_row is None:
        raise SolverError("defender has no feasible action")
    seed_col = next(itertools.combinations_with_replacement(sorted(ids), k))
    return _double_oracle(payoff, seed_row, seed_col, row_br, col_br, eps, max_iter, "do_nfg")


# --- schedule-form games --------------------------------------------------


def _covers(sfg):
    """Per resource, per schedule: array of target indices covered."""
    index = {t: j for j, t in enumerate(sfg.targets)}
    return [[np.array(sorted(index[t] for t in s.targets), dtype=int) for s in group] for group in sfg.schedules]


def _is_full_product(sfg) -> bool:
    return len(sfg.joint_actions) == math.prod(len(g) for g in sfg.schedules)


def defender_br_sfg(sfg, attacker_mix=None, weights=None, method: str = "mip") -> tuple[tuple[int, ...], float]:
    """One schedule per resource maximizing ``sum_t w_t g_t`` with ``g_t`` = target covered.

    ``w_t`` defaults to ``y_t (u_a_uncovered - u_a_covered)`` for attacker mix ``y``.
    Returns the joint action (schedule index per resource) and its objective.
    """
    U = sfg.target_utilities
    if weights is None:
        if attacker_mix is None:
            raise ValueError("give attacker_mix or weights")
        weights = np.asarray(attacker_mix, dtype=float) * (U[3] - U[2])
    w = np.asarray(weights, dtype=float)
    covers = _covers(sfg)
    if method == "enumerate" or not _is_full_product(sfg):
        C = sfg.coverage_matrix()
        vals = C.astype(float) @ w
        i = int(np.argmax(vals))
        return sfg.joint_actions[i], float(vals[i])
    R = len(sfg.schedules)
    offs = np.cumsum([0] + [len(g) for g in sfg.schedules])
    ns, nt = int(offs[-1]), len(sfg.targets)
    N = ns + nt
    rows, rel, rhs = [], [], []
    for r in range(R):
        row = np.zeros(N)
        row[offs[r]:offs[r + 1]] = 1.0
        rows.append(row)
        rel.append("==")
        rhs.append(1.0)
    for j in range(nt):
        up = np.zeros(N)
        up[ns + j] = 1.0
        for r in range(R):
            for i, cov in enumerate(covers[r]):
                if j in cov:
                    up[offs[r] + i] = -1.0
                    lo = np.zeros(N)
                    lo[ns + j] = 1.0
                    lo[offs[r] + i] = -1.0
                    rows.append(lo)
                    rel.append(">=")
                    rhs.append(0.0)
        rows.append(up)
        rel.append("<=")
        rhs.append(0.0)
    c = np.concatenate([np.zeros(ns), w])
    lp = LinearProgram(c, np.array(rows), tuple(rel), np.array(rhs), tuple([(0.0, 1.0)] * N), "max")
    res = solve_mip(MipProgram(lp, tuple(range(N))), "auto")
    if not res.optimal:
        raise SolverError(f"schedule best response not solved: {res.status}")
    action = tuple(int(np.argmax(res.x[offs[r]:offs[r + 1]])) for r in range(R))
    covered = set()
    for r, i in enumerate(action):
        covered.update(covers[r][i].tolist())
    return action, float(sum(w[j] for j in covered))


def sfg_coverage(sfg, defender_mix: Mapping[tuple[int, ...], float]) -> np.ndarray:
    """Per-target coverage probability of a mix over joint actions."""
    actions = list(defender_mix)
    if not actions:
        return np.zeros(len(sfg.targets))
    C = sfg.coverage_matrix(actions).astype(float)
    return np.asarray(list(defender_mix.values()), dtype=float) @ C


def attacker_br_sfg(sfg, defender_mix: Mapping[tuple[int, ...], float]) -> tuple[int, float]:
    """Target index with the highest attacker expected utility (lowest index on ties)."""
    U = sfg.target_utilities
    c = sfg_coverage(sfg, defender_mix)
    eu = c * U[2] + (1.0 - c) * U[3]
    j = int(np.argmax(eu))
    return j, float(eu[j])


def double_oracle_sfg(sfg, eps: float = DO_EPS, max_iter: int = 10_000, method: str = "mip") -> SolveReport:
    """Double oracle over joint schedules and single-target attacks (raw zero-sum payoffs)."""
    U = sfg.target_utilities
    covers = _covers(sfg)

    def covered(a):
        s = set()
        for r, i in enumerate(a):
            s.update(covers[r][i].tolist())
        return s

    def payoff(a, j):
        return -(U[2, j] if j in covered(a) else U[3, j])

    def row_br(cols, y):
        yt = np.zeros(len(sfg.targets))
        for j, p in zip(cols, y):
            yt[j] += p
        action, obj = defender_br_sfg(sfg, yt, method=method)
        return action, obj - float(yt @ U[3])

    def col_br(rows, x):
        j, util = attacker_br_sfg(sfg, dict(zip(rows, x)))
        return j, -util

    return _double_oracle(payoff, sfg.joint_actions[0], 0, row_br, col_br, eps, max_iter, "do_sfg")
