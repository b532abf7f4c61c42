"""Graph game layer: the patrol graph, time-expanded actions, interdiction and utility matrices."""

from __future__ import annotations

import itertools
import math
from collections import Counter, deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Sequence

import numpy as np

from .games import BimatrixGame

HOP = "hop_count"
EUCLIDEAN = "euclidean_on_coords"
MOVING = "moving"
STATIONARY = "stationary"


@dataclass(frozen=True)
class Node:
    id: int
    coord: tuple[float, float] | None = None  # (lat, lon) or an abstract 2-D point


@dataclass(frozen=True)
class DirectedGameGraph:
    nodes: tuple[Node, ...]
    edges: frozenset[tuple[int, int]]
    distance_metric: str = HOP

    def __post_init__(self):
        nodes = tuple(n if isinstance(n, Node) else Node(*n) for n in self.nodes)
        ids = [n.id for n in nodes]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate node ids")
        edges = frozenset((int(u), int(v)) for u, v in self.edges)
        known = set(ids)
        for u, v in edges:
            if u not in known or v not in known:
                raise ValueError(f"edge ({u}, {v}) references an unknown node")
        if self.distance_metric not in (HOP, EUCLIDEAN):
            raise ValueError(f"unknown distance metric {self.distance_metric!r}")
        if self.distance_metric == EUCLIDEAN and any(n.coord is None for n in nodes):
            raise ValueError("euclidean distance needs coordinates on every node")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "edges", edges)

    @classmethod
    def from_edges(cls, node_ids: Iterable[int], edges: Iterable[tuple[int, int]], *, undirected=False, coords=None, distance_metric=HOP):
        coords = coords or {}
        edges = set(edges)
        if undirected:
            edges |= {(v, u) for u, v in edges}
        return cls(tuple(Node(i, coords.get(i)) for i in node_ids), frozenset(edges), distance_metric)

    @cached_property
    def node_ids(self) -> tuple[int, ...]:
        return tuple(n.id for n in self.nodes)

    @cached_property
    def _coords(self) -> dict[int, tuple[float, float] | None]:
        return {n.id: n.coord for n in self.nodes}

    @cached_property
    def _succ(self) -> dict[int, tuple[int, ...]]:
        out: dict[int, list[int]] = {i: [] for i in self.node_ids}
        for u, v in self.edges:
            out[u].append(v)
        return {u: tuple(sorted(vs)) for u, vs in out.items()}

    @cached_property
    def _pred(self) -> dict[int, tuple[int, ...]]:
        inc: dict[int, list[int]] = {i: [] for i in self.node_ids}
        for u, v in self.edges:
            inc[v].append(u)
        return {v: tuple(sorted(us)) for v, us in inc.items()}

    def __contains__(self, node_id) -> bool:
        return node_id in self._succ

    def __len__(self) -> int:
        return len(self.nodes)

    def coord(self, node_id: int):
        return self._coords[node_id]

    def neighbors(self, node_id: int) -> tuple[int, ...]:
        """Out-neighbours in ascending id order."""
        return self._succ[node_id]

    def predecessors(self, node_id: int) -> tuple[int, ...]:
        return self._pred[node_id]

    @cached_property
    def _hops(self) -> dict[int, dict[int, int]]:
        return {s: self._bfs(s) for s in self.node_ids}

    def _bfs(self, source: int) -> dict[int, int]:
        dist = {source: 0}
        queue = deque([source])
        while queue:
            u = queue.popleft()
            for v in self._succ[u]:
                if v not in dist:
                    dist[v] = dist[u] + 1
                    queue.append(v)
        return dist

    def hop_distance(self, u: int, v: int) -> float:
        return self._hops[u].get(v, math.inf)

    def shortest_path(self, u: int, v: int) -> list[int] | None:
        """BFS shortest path; among equal-length paths the one through lowest ids wins."""
        if u == v:
            return [u]
        parent = {u: None}
        queue = deque([u])
        while queue:
            a = queue.popleft()
            for b in self._succ[a]:
                if b not in parent:
                    parent[b] = a
                    if b == v:
                        path = [v]
                        while parent[path[-1]] is not None:
                            path.append(parent[path[-1]])
                        return path[::-1]
                    queue.append(b)
        return None

    def distance(self, u: int, v: int) -> float:
        if self.distance_metric == HOP:
            return self.hop_distance(u, v)
        (x1, y1), (x2, y2) = self._coords[u], self._coords[v]
        return math.hypot(x1 - x2, y1 - y2)


@dataclass(frozen=True)
class TargetSpec:
    """A target node with its zero-sum value and general-sum payoffs.

    When the general-sum fields are omitted they default to the zero-sum reading:
    the attacker gains ``value`` on an uncovered hit, the defender loses it, and
    covered hits are worth nothing to either side.
    """

    node_id: int
    value: float
    u_d_uncovered: float | None = None
    u_d_covered: float | None = None
    u_a_covered: float | None = None
    u_a_uncovered: float | None = None

    def __post_init__(self):
        defaults = {
            "u_d_uncovered": -self.value,
            "u_d_covered": 0.0,
            "u_a_covered": 0.0,
            "u_a_uncovered": self.value,
        }
        for name, default in defaults.items():
            if getattr(self, name) is None:
                object.__setattr__(self, name, float(default))

    @property
    def utility_column(self) -> tuple[float, float, float, float]:
        return (self.u_d_uncovered, self.u_d_covered, self.u_a_covered, self.u_a_uncovered)

    def is_well_ordered(self) -> bool:
        return self.u_d_covered >= self.u_d_uncovered and self.u_a_uncovered >= self.u_a_covered


def target_utility_matrix(targets: Sequence[TargetSpec]) -> np.ndarray:
    """4 x |T| matrix with rows u_d uncovered, u_d covered, u_a covered, u_a uncovered."""
    return np.array([t.utility_column for t in targets], dtype=float).T.reshape(4, len(targets))


@dataclass(frozen=True)
class ActionMatrix:
    positions: tuple[tuple[int, ...], ...]
    resource_kinds: tuple[str, ...]

    def __post_init__(self):
        pos = tuple(tuple(int(v) for v in row) for row in self.positions)
        kinds = tuple(self.resource_kinds)
        if len(kinds) != len(pos):
            raise ValueError("one resource kind per row required")
        if len({len(r) for r in pos}) > 1:
            raise ValueError("ragged action matrix")
        for row, kind in zip(pos, kinds):
            if kind not in (MOVING, STATIONARY):
                raise ValueError(f"unknown resource kind {kind!r}")
            if kind == STATIONARY and len(set(row)) > 1:
                raise ValueError("stationary resource rows must be constant")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "resource_kinds", kinds)

    @property
    def num_timesteps(self) -> int:
        return len(self.positions[0]) if self.positions else 0

    @property
    def num_resources(self) -> int:
        return len(self.positions)

    def timestep_major(self) -> np.ndarray:
        """T x m array (row per timestep)."""
        return np.array(self.positions, dtype=int).T

    def is_feasible_on(self, graph: DirectedGameGraph) -> bool:
        for row, kind in zip(self.positions, self.resource_kinds):
            if any(v not in graph for v in row):
                return False
            if kind == MOVING:
                for a, b in zip(row, row[1:]):
                    if a != b and b not in graph.neighbors(a):
                        return False
        return True

    def presence_counts(self) -> Counter:
        """Node -> number of (resource, timestep) pairs spent there."""
        return Counter(v for row in self.positions for v in row)

    def movement_steps(self) -> int:
        return sum(a != b for row in self.positions for a, b in zip(row, row[1:]))


@dataclass(frozen=True)
class InterdictionProtocol:
    capture_radius: float = 0.0
    defense_time_threshold: int = 1

    def __post_init__(self):
        if self.defense_time_threshold < 1:
            raise ValueError("defense time threshold must be >= 1")
        if self.capture_radius < 0:
            raise ValueError("capture radius must be >= 0")


@dataclass(frozen=True)
class GameConfig:
    num_timesteps: int
    defender_moving: int = 1
    defender_stationary: int = 0
    attacker_moving: int = 0
    attacker_stationary: int = 1
    defender_starts: tuple[tuple[int, ...], ...] = ()
    defender_ends: tuple[tuple[int, ...], ...] = ()
    attacker_starts: tuple[tuple[int, ...], ...] = ()
    attacker_ends: tuple[tuple[int, ...], ...] = ()
    defender_placements: tuple[int, ...] = ()
    allow_wait: bool = True
    force_return: bool = False
    defender_step_cost: float = 0.0

    def __post_init__(self):
        if self.num_timesteps < 1:
            raise ValueError("num_timesteps must be >= 1")
        counts = (self.defender_moving, self.defender_stationary, self.attacker_moving, self.attacker_stationary)
        if min(counts) < 0:
            raise ValueError("resource counts must be >= 0")
        if self.defender_step_cost < 0:
            raise ValueError("defender_step_cost must be >= 0")
        for name in ("defender_starts", "defender_ends", "attacker_starts", "attacker_ends"):
            object.__setattr__(self, name, tuple(tuple(int(v) for v in s) for s in getattr(self, name)))
        object.__setattr__(self, "defender_placements", tuple(int(v) for v in self.defender_placements))

    def validate_against(self, graph: DirectedGameGraph) -> None:
        for name in ("defender_starts", "defender_ends", "attacker_starts", "attacker_ends"):
            for s in getattr(self, name):
                missing = [v for v in s if v not in graph]
                if missing:
                    raise ValueError(f"{name} references unknown nodes {missing}")
        missing = [v for v in self.defender_placements if v not in graph]
        if missing:
            raise ValueError(f"defender_placements references unknown nodes {missing}")


def iter_paths(graph, starts, ends, T, allow_wait=True, force_return=False) -> Iterator[tuple[int, ...]]:
    """Depth-first enumeration of length-``T`` node sequences, in deterministic order.

    Sequences start in ``starts``; each step follows an out-edge, or waits in place
    when waiting is allowed or the node has no out-edges. A finished sequence is
    kept if it ends at its origin (``force_return``) or otherwise in ``ends``.
    Empty ``starts`` / ``ends`` mean every node. Duplicate sequences (a wait that
    coincides with a self-loop) are emitted once.
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    starts = sorted(set(starts)) if starts else list(graph.node_ids)
    end_set = set(ends) if ends else set(graph.node_ids)
    for s in starts:
        if s not in graph:
            raise ValueError(f"start node {s} not in graph")
    for s in starts:
        path = [s]
        # explicit stack of successor iterators keeps deep horizons off the call stack
        stack = [iter(_moves(graph, s, allow_wait))]
        if T == 1:
            if (path[-1] == s) if force_return else (path[-1] in end_set):
                yield tuple(path)
            continue
        while stack:
            nxt = next(stack[-1], None)
            if nxt is None:
                stack.pop()
                path.pop()
                continue
            path.append(nxt)
            if len(path) == T:
                ok = (nxt == s) if force_return else (nxt in end_set)
                if ok:
                    yield tuple(path)
                path.pop()
            else:
                stack.append(iter(_moves(graph, nxt, allow_wait)))
        # the root node was popped together with its iterator


def _moves(graph, v, allow_wait):
    nbrs = graph.neighbors(v)
    if allow_wait or not nbrs:
        if v in nbrs:
            return nbrs
        return (v,) + nbrs
    return nbrs


def generate_paths(graph, starts, ends, T, allow_wait=True, force_return=False) -> set[tuple[int, ...]]:
    return set(iter_paths(graph, starts, ends, T, allow_wait, force_return))


def _per_resource(sets, m, label):
    if not sets:
        return [()] * m
    if len(sets) != m:
        raise ValueError(f"{label}: got {len(sets)} node sets for {m} resources")
    return list(sets)


def iter_player_actions(graph, config: GameConfig, player: str, target_nodes: Sequence[int] = ()) -> Iterator[ActionMatrix]:
    """Joint actions for ``player`` in the order: moving path product, then stationary choices."""
    T = config.num_timesteps
    if player == "defender":
        m_mov, m_sta = config.defender_moving, config.defender_stationary
        starts, ends = config.defender_starts, config.defender_ends
    elif player == "attacker":
        m_mov, m_sta = config.attacker_moving, config.attacker_stationary
        starts, ends = config.attacker_starts, config.attacker_ends
    else:
        raise ValueError(f"player must be 'attacker' or 'defender', got {player!r}")
    if m_mov + m_sta < 1:
        raise ValueError(f"{player} has no resources")
    starts = _per_resource(starts, m_mov, f"{player} start sets")
    ends = _per_resource(ends, m_mov, f"{player} end sets")
    path_sets = [
        sorted(generate_paths(graph, s, e, T, config.allow_wait, config.force_return))
        for s, e in zip(starts, ends)
    ]
    if player == "attacker":
        stationary_choices = list(itertools.combinations_with_replacement(sorted(set(target_nodes)), m_sta))
    else:
        placements = sorted(config.defender_placements) if config.defender_placements else list(graph.node_ids)
        stationary_choices = list(itertools.product(placements, repeat=m_sta))
    kinds = (MOVING,) * m_mov + (STATIONARY,) * m_sta
    for moving in itertools.product(*path_sets):
        for fixed in stationary_choices:
            rows = tuple(moving) + tuple((v,) * T for v in fixed)
            yield ActionMatrix(rows, kinds)


def generate_player_actions(graph, config: GameConfig, player: str, targets: Sequence[TargetSpec] = ()) -> list[ActionMatrix]:
    """Enumerate every joint action of ``player``.

    Stationary attackers pick a multiset of target nodes (one per resource);
    stationary defenders pick any node from ``defender_placements`` (default: all).
    """
    if player == "attacker" and config.attacker_stationary and not targets:
        raise ValueError("stationary attackers need a target list")
    return list(iter_player_actions(graph, config, player, [t.node_id for t in targets]))


def _interdiction(defender: ActionMatrix, attacker: ActionMatrix, protocol: InterdictionProtocol, graph):
    """Return ``(reached, stopped)``: target-node sets reached uninterdicted / attacked but interdicted."""
    presence = defender.presence_counts()
    reached, stopped = set(), set()
    for row, kind in zip(attacker.positions, attacker.resource_kinds):
        if kind == STATIONARY:
            node = row[0]
            if presence.get(node, 0) >= protocol.defense_time_threshold:
                stopped.add(node)
            else:
                reached.add(node)
        else:
            caught = any(
                graph.distance(row[tau], drow[tau]) <= protocol.capture_radius
                for tau in range(len(row))
                for drow in defender.positions
            )
            (stopped if caught else reached).update(row)
    return reached, stopped - reached


def _check(defender, attacker, targets, graph):
    if defender.num_timesteps != attacker.num_timesteps:
        raise ValueError("defender and attacker actions have different horizons")
    for t in targets:
        if t.node_id not in graph:
            raise ValueError(f"target node {t.node_id} not in graph")


def evaluate_actions(defender: ActionMatrix, attacker: ActionMatrix, targets, protocol, graph) -> tuple[float, float]:
    """Zero-sum payoffs ``(attacker, defender)``: the attacker collects the value of every captured target."""
    _check(defender, attacker, targets, graph)
    reached, _ = _interdiction(defender, attacker, protocol, graph)
    u_a = float(sum(t.value for t in targets if t.node_id in reached))
    return u_a, -u_a


def evaluate_actions_general(defender, attacker, targets, protocol, graph, step_cost: float = 0.0) -> tuple[float, float]:
    """General-sum payoffs ``(attacker, defender)`` with a per-move defender cost."""
    _check(defender, attacker, targets, graph)
    reached, stopped = _interdiction(defender, attacker, protocol, graph)
    u_a = u_d = 0.0
    for t in targets:
        if t.node_id in reached:
            u_a += t.u_a_uncovered
            u_d += t.u_d_uncovered
        elif t.node_id in stopped:
            u_a += t.u_a_covered
            u_d += t.u_d_covered
    u_d -= step_cost * defender.movement_steps()
    return u_a, u_d


def normalize_by_max_abs(M: np.ndarray) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    scale = np.max(np.abs(M)) if M.size else 0.0
    return M / scale if scale > 0 else M.copy()


def build_utility_matrix(
    defender_actions: Sequence[ActionMatrix],
    attacker_actions: Sequence[ActionMatrix],
    targets,
    protocol,
    graph,
    general_sum: bool = False,
    step_cost: float = 0.0,
    normalize: bool | None = None,
) -> BimatrixGame:
    """Evaluate every (defender, attacker) cell.

    Zero-sum: one defender-view matrix, divided by its max absolute entry unless
    ``normalize`` is False. General-sum: ``(A_defender, B_attacker)``, normalized by
    their joint max only when ``normalize`` is True.
    """
    if not defender_actions or not attacker_actions:
        raise ValueError("both action lists must be nonempty")
    n, m = len(defender_actions), len(attacker_actions)
    if normalize is None:
        normalize = not general_sum
    if not general_sum:
        U = np.empty((n, m))
        for i, d in enumerate(defender_actions):
            for j, a in enumerate(attacker_actions):
                U[i, j] = evaluate_actions(d, a, targets, protocol, graph)[1]
        if normalize:
            U = normalize_by_max_abs(U)
        return BimatrixGame.from_zero_sum(U, tuple(defender_actions), tuple(attacker_actions))
    A = np.empty((n, m))
    B = np.empty((n, m))
    for i, d in enumerate(defender_actions):
        for j, a in enumerate(attacker_actions):
            B[i, j], A[i, j] = evaluate_actions_general(d, a, targets, protocol, graph, step_cost)
    if normalize:
        scale = max(np.max(np.abs(A)), np.max(np.abs(B)))
        if scale > 0:
            A, B = A / scale, B / scale
    return BimatrixGame(A, B, tuple(defender_actions), tuple(attacker_actions))
