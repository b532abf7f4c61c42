"""Schedule-form security games: schedule enumeration and expansion to normal form."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .games import BimatrixGame
from .graph import DirectedGameGraph, TargetSpec, normalize_by_max_abs, target_utility_matrix


@dataclass(frozen=True)
class Schedule:
    targets: frozenset[int]
    movement_steps: int = 0
    movement_cost: float = 0.0
    path: tuple[int, ...] = field(default=(), compare=False)

    def __post_init__(self):
        object.__setattr__(self, "targets", frozenset(int(t) for t in self.targets))
        if self.movement_steps < 0:
            raise ValueError("movement_steps must be >= 0")

    @property
    def is_idle(self) -> bool:
        return not self.targets

    def sort_key(self):
        return (len(self.targets), tuple(sorted(self.targets)))


@dataclass(frozen=True)
class FullPath:
    path: tuple[int, ...] | None
    cost: float
    steps: float

    @property
    def feasible(self) -> bool:
        return self.path is not None


INFEASIBLE = FullPath(None, math.inf, math.inf)


def get_full_path(graph: DirectedGameGraph, home_base: int, target_set, delta: int, budget: float = math.inf) -> FullPath:
    """Cheapest closed tour from ``home_base`` through every target of ``target_set``.

    Visit orders are tried in lexicographic permutation order of the sorted target
    ids; each leg is a BFS shortest path and the tour dwells ``delta - 1`` extra
    timesteps at every target. ``cost`` counts edges plus dwell timesteps, ``steps``
    only edges. Orders whose running cost already reaches the best cost (or exceeds
    ``budget``) are abandoned, which never changes the returned tour.
    """
    targets = sorted(set(target_set))
    if not targets:
        raise ValueError("target_set must be nonempty")
    hop = graph.hop_distance
    dwell = delta - 1
    best = INFEASIBLE
    best_cost = math.inf
    for perm in itertools.permutations(targets):
        cost = 0
        u = home_base
        ok = True
        for v in perm:
            d = hop(u, v)
            if d == math.inf:
                ok = False
                break
            cost += d + dwell
            u = v
            if cost >= best_cost or cost > budget:
                ok = False
                break
        if not ok:
            continue
        back = hop(u, home_base)
        if back == math.inf:
            continue
        cost += back
        if cost < best_cost and cost <= budget:
            best_cost = cost
            best = perm
    if best is INFEASIBLE:
        return INFEASIBLE
    path = [home_base]
    steps = 0
    u = home_base
    for v in best:
        leg = graph.shortest_path(u, v)
        path.extend(leg[1:])
        steps += len(leg) - 1
        path.extend([v] * dwell)
        u = v
    leg = graph.shortest_path(u, home_base)
    path.extend(leg[1:])
    steps += len(leg) - 1
    return FullPath(tuple(path), best_cost, steps)


def simple_schedules(graph, home_base: int, T: int, delta: int, targets: Sequence[int], step_cost: float = 0.0) -> list[Schedule]:
    """Singleton schedules whose round trip fits the horizon: ``T >= 2|p| + delta - 1``."""
    if home_base not in graph:
        raise ValueError(f"home base {home_base} not in graph")
    out = []
    for t in sorted(set(targets)):
        d = graph.hop_distance(home_base, t)
        back = graph.hop_distance(t, home_base)
        if d == math.inf or back == math.inf:
            continue
        if T >= 2 * d + delta - 1:
            steps = d + back
            out.append(Schedule(frozenset([t]), steps, step_cost * steps))
    return out


def general_schedules(graph, home_base: int, T: int, delta: int, targets: Sequence[int], step_cost: float = 0.0) -> list[Schedule]:
    """All target subsets a single resource can tour from ``home_base`` within ``T``.

    Subsets are grown by backtracking over the feasible singletons. A subset whose
    tour exceeds the horizon is not extended further: adding a target never makes
    the cheapest tour shorter (triangle inequality on hop distances).
    """
    seeds = simple_schedules(graph, home_base, T, delta, targets, step_cost)
    found: dict[frozenset, Schedule] = {}
    for s in seeds:
        fp = get_full_path(graph, home_base, s.targets, delta)
        found[s.targets] = Schedule(s.targets, fp.steps, step_cost * fp.steps, fp.path)
    pool = [next(iter(s.targets)) for s in seeds]

    def backtrack(chosen: tuple[int, ...], start: int):
        for i in range(start, len(pool)):
            subset = chosen + (pool[i],)
            if len(subset) > 1:
                fp = get_full_path(graph, home_base, subset, delta, budget=T)
                if not fp.feasible or fp.cost > T:
                    continue
                key = frozenset(subset)
                found[key] = Schedule(key, fp.steps, step_cost * fp.steps, fp.path)
            backtrack(subset, i + 1)

    backtrack((), 0)
    return sorted(found.values(), key=Schedule.sort_key)


def merge_schedules(groups: Sequence[Sequence[Schedule]]) -> list[Schedule]:
    """Union of schedule lists, keeping the cheapest representative per target set."""
    best: dict[frozenset, Schedule] = {}
    for group in groups:
        for s in group:
            cur = best.get(s.targets)
            if cur is None or s.movement_cost < cur.movement_cost or (
                s.movement_cost == cur.movement_cost and s.movement_steps < cur.movement_steps
            ):
                best[s.targets] = s
    return sorted(best.values(), key=Schedule.sort_key)


def defender_schedules(graph, home_bases: Sequence[int], T: int, delta: int, targets: Sequence[int], step_cost: float = 0.0, simple: bool = False) -> list[Schedule]:
    """Schedules for one resource that may start from any of ``home_bases``.

    Falls back to a single idle schedule when nothing is feasible so joint action
    products stay nonempty.
    """
    finder = simple_schedules if simple else general_schedules
    merged = merge_schedules([finder(graph, h, T, delta, targets, step_cost) for h in home_bases])
    return merged or [Schedule(frozenset(), 0, 0.0)]


def scale_target_utilities(targets: Sequence[TargetSpec], attacker_penalty_factor: float, defender_penalty_factor: float) -> list[TargetSpec]:
    """Set covered payoffs to the uncovered ones divided by the penalty factors."""
    if attacker_penalty_factor <= 0 or defender_penalty_factor <= 0:
        raise ValueError("penalty factors must be > 0")
    return [
        TargetSpec(
            t.node_id,
            t.value,
            u_d_uncovered=t.u_d_uncovered,
            u_d_covered=t.u_d_uncovered / defender_penalty_factor,
            u_a_covered=t.u_a_uncovered / attacker_penalty_factor,
            u_a_uncovered=t.u_a_uncovered,
        )
        for t in targets
    ]


@dataclass(frozen=True, eq=False)
class ScheduleFormGame:
    """Per-defender schedule lists, the 4 x |T| target utility matrix and joint actions."""

    targets: tuple[int, ...]
    schedules: tuple[tuple[Schedule, ...], ...]
    target_utilities: np.ndarray
    joint_actions: tuple[tuple[int, ...], ...] = ()

    def __post_init__(self):
        targets = tuple(int(t) for t in self.targets)
        schedules = tuple(tuple(s) for s in self.schedules)
        U = np.asarray(self.target_utilities, dtype=float)
        if U.shape != (4, len(targets)):
            raise ValueError(f"target utility matrix must be 4 x {len(targets)}, got {U.shape}")
        joint = tuple(tuple(int(i) for i in a) for a in self.joint_actions) or tuple(
            itertools.product(*(range(len(s)) for s in schedules))
        )
        for a in joint:
            if len(a) != len(schedules) or any(not 0 <= i < len(s) for i, s in zip(a, schedules)):
                raise ValueError(f"joint action {a} references an invalid schedule index")
        known = set(targets)
        for group in schedules:
            for s in group:
                if not s.targets <= known:
                    raise ValueError(f"schedule {sorted(s.targets)} covers unknown targets")
        object.__setattr__(self, "targets", targets)
        object.__setattr__(self, "schedules", schedules)
        object.__setattr__(self, "target_utilities", U)
        object.__setattr__(self, "joint_actions", joint)

    @classmethod
    def from_targets(cls, targets: Sequence[TargetSpec], schedules) -> "ScheduleFormGame":
        return cls(tuple(t.node_id for t in targets), schedules, target_utility_matrix(targets))

    @property
    def num_defenders(self) -> int:
        return len(self.schedules)

    def target_specs(self) -> list[TargetSpec]:
        U = self.target_utilities
        return [
            TargetSpec(t, float(U[3, j]), float(U[0, j]), float(U[1, j]), float(U[2, j]), float(U[3, j]))
            for j, t in enumerate(self.targets)
        ]

    def joint_cost(self, action) -> float:
        return float(sum(self.schedules[r][i].movement_cost for r, i in enumerate(action)))

    def joint_costs(self) -> np.ndarray:
        return np.array([self.joint_cost(a) for a in self.joint_actions])

    def coverage_matrix(self, actions=None) -> np.ndarray:
        """Boolean (joint action x target) coverage table."""
        actions = self.joint_actions if actions is None else actions
        index = {t: j for j, t in enumerate(self.targets)}
        C = np.zeros((len(actions), len(self.targets)), dtype=bool)
        for i, a in enumerate(actions):
            for r, s in enumerate(a):
                for t in self.schedules[r][s].targets:
                    C[i, index[t]] = True
        return C

    def is_simple(self) -> bool:
        return all(len(s.targets) <= 1 for group in self.schedules for s in group)

    def __eq__(self, other):
        if not isinstance(other, ScheduleFormGame):
            return NotImplemented
        return (
            self.targets == other.targets
            and self.schedules == other.schedules
            and np.array_equal(self.target_utilities, other.target_utilities)
            and self.joint_actions == other.joint_actions
        )

    __hash__ = None


def schedule_game_matrix(sfg: ScheduleFormGame, general_sum: bool = False, normalize: bool | None = None) -> BimatrixGame:
    """Expand a schedule-form game over its joint actions and single-target attacks.

    A hit on a target covered by any selected schedule pays the covered utilities.
    General-sum mode subtracts the joint movement cost from the defender. The
    zero-sum matrix is the negated attacker payoff, max-abs normalized by default.
    """
    C = sfg.coverage_matrix()
    U = sfg.target_utilities
    A = np.where(C, U[1], U[0])
    B = np.where(C, U[2], U[3])
    if general_sum:
        A = A - sfg.joint_costs()[:, None]
        if normalize:
            scale = max(np.max(np.abs(A)), np.max(np.abs(B)))
            if scale > 0:
                A, B = A / scale, B / scale
        return BimatrixGame(A, B, sfg.joint_actions, sfg.targets)
    Z = -B
    if normalize is None or normalize:
        Z = normalize_by_max_abs(Z)
    return BimatrixGame.from_zero_sum(Z, sfg.joint_actions, sfg.targets)
