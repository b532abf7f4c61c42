"""Domain game generation: grid worlds, wildlife (GSG) and infrastructure (ISG) target scoring."""

from __future__ import annotations

import logging
import math
import warnings
from collections import OrderedDict
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.cluster.vq import kmeans2

from .games import BimatrixGame
from .geo import Projection, point_in_polygon, point_line_distance, polygon_distance
from .graph import (
    DirectedGameGraph,
    GameConfig,
    InterdictionProtocol,
    Node,
    TargetSpec,
    build_utility_matrix,
    generate_player_actions,
)
from .schedules import ScheduleFormGame, defender_schedules, scale_target_utilities, schedule_game_matrix

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class BoundingBox:
    lat_min: float
    lat_max: float
    lon_min: float
    lon_max: float

    def __post_init__(self):
        if not (self.lat_min < self.lat_max and self.lon_min < self.lon_max):
            raise ValueError(f"invalid bounding box {self}")

    def contains(self, lat: float, lon: float) -> bool:
        return self.lat_min <= lat <= self.lat_max and self.lon_min <= lon <= self.lon_max

    @property
    def center(self) -> tuple[float, float]:
        return (self.lat_min + self.lat_max) / 2, (self.lon_min + self.lon_max) / 2


@dataclass(frozen=True)
class TrackRecord:
    animal_id: str
    lat: float
    lon: float
    timestamp: str = ""

    def __post_init__(self):
        if not -90 <= self.lat <= 90 or not -180 <= self.lon <= 180:
            raise ValueError(f"coordinate out of range: ({self.lat}, {self.lon})")


@dataclass(frozen=True)
class FeatureRecord:
    id: str
    type: str
    lat: float
    lon: float


@dataclass(frozen=True)
class FeatureDataset:
    records: tuple[FeatureRecord, ...]
    weights: dict = field(default_factory=dict)

    def retained(self) -> tuple[list[FeatureRecord], int]:
        """Records whose type has a weight, and the number dropped."""
        keep = [r for r in self.records if r.type in self.weights]
        return keep, len(self.records) - len(keep)


@dataclass(frozen=True)
class PopulationBlock:
    geoid: str
    population: int
    polygon: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if self.population < 0:
            raise ValueError(f"block {self.geoid}: negative population")
        object.__setattr__(self, "polygon", tuple(tuple(map(float, p)) for p in self.polygon))


def build_grid_graph(bbox: BoundingBox, rows: int, cols: int) -> DirectedGameGraph:
    """``rows x cols`` cells over ``bbox``; node ``r * cols + c`` sits at the cell centre.

    Row 0 is the southernmost row. Cells are joined to their 4-neighbours in both directions.
    """
    if rows < 1 or cols < 1:
        raise ValueError("rows and cols must be >= 1")
    dlat = (bbox.lat_max - bbox.lat_min) / rows
    dlon = (bbox.lon_max - bbox.lon_min) / cols
    nodes = []
    edges = set()
    for r in range(rows):
        for c in range(cols):
            i = r * cols + c
            nodes.append(Node(i, (bbox.lat_min + (r + 0.5) * dlat, bbox.lon_min + (c + 0.5) * dlon)))
            if c + 1 < cols:
                edges |= {(i, i + 1), (i + 1, i)}
            if r + 1 < rows:
                edges |= {(i, i + cols), (i + cols, i)}
    return DirectedGameGraph(tuple(nodes), frozenset(edges))


def grid_cell(bbox: BoundingBox, rows: int, cols: int, lat: float, lon: float) -> int | None:
    if not bbox.contains(lat, lon):
        return None
    r = min(int((lat - bbox.lat_min) / (bbox.lat_max - bbox.lat_min) * rows), rows - 1)
    c = min(int((lon - bbox.lon_min) / (bbox.lon_max - bbox.lon_min) * cols), cols - 1)
    return r * cols + c


def _projection(graph: DirectedGameGraph) -> Projection:
    return Projection.around([n.coord for n in graph.nodes if n.coord is not None])


def snap_to_node(graph: DirectedGameGraph, lat: float, lon: float, projection: Projection | None = None) -> int:
    """Nearest node by projected distance; ties go to the lowest node id."""
    proj = projection or _projection(graph)
    best, best_d = None, math.inf
    for n in sorted(graph.nodes, key=lambda n: n.id):
        d = proj.distance((lat, lon), n.coord)
        if d < best_d:
            best, best_d = n.id, d
    if best is None:
        raise ValueError("graph has no coordinates to snap to")
    return best


def kmeans(points: np.ndarray, k: int, seed: int, n_init: int = 10, max_iter: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """k-means++ seeded Lloyd runs (scipy ``kmeans2``); the run with the lowest inertia wins.

    Run r draws its seeding from ``default_rng([seed, r])`` so results are reproducible.
    """
    X = np.asarray(points, dtype=float)
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > len(X):
        raise ValueError(f"k={k} exceeds the number of observations ({len(X)})")
    best = None
    for r in range(n_init):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UserWarning)  # empty clusters keep their centre
            centers, labels = kmeans2(X, k, iter=max_iter, minit="++", seed=np.random.default_rng([seed, r]))
        inertia = float(((X - centers[labels]) ** 2).sum())
        if best is None or inertia < best[0] - 1e-15:
            best = (inertia, centers, labels)
    return best[1], best[2]


def _merge_by_node(scores: Sequence[tuple[int, float]]) -> list[TargetSpec]:
    merged: OrderedDict[int, float] = OrderedDict()
    for node, s in scores:
        merged[node] = merged.get(node, 0.0) + s
    return [TargetSpec(node, float(v)) for node, v in sorted(merged.items())]


def score_targets_centroid(tracks: Sequence[TrackRecord], k: int, bbox: BoundingBox, grid: DirectedGameGraph, seed: int = 0) -> list[TargetSpec]:
    """k-means targets: ``score = cluster_size * num_animals / num_observations``.

    Only observations inside ``bbox`` are clustered or counted. Centroids snapping
    to the same node are merged by summing their scores.
    """
    inside = [t for t in tracks if bbox.contains(t.lat, t.lon)]
    if not inside:
        raise ValueError("no observations inside the bounding box")
    X = np.array([[t.lat, t.lon] for t in inside])
    centers, labels = kmeans(X, k, seed)
    ratio = len({t.animal_id for t in inside}) / len(inside)
    proj = _projection(grid)
    sizes = np.bincount(labels, minlength=k)
    scored = [
        (snap_to_node(grid, float(c[0]), float(c[1]), proj), float(sizes[j] * ratio))
        for j, c in enumerate(centers)
        if sizes[j] > 0
    ]
    return _merge_by_node(scored)


def score_targets_density(tracks: Sequence[TrackRecord], bbox: BoundingBox, rows: int, cols: int) -> list[TargetSpec]:
    """Per-cell observation counts scaled by ``num_animals / num_observations``.

    The ratio uses the whole dataset, so the scores sum to
    ``num_animals * in_bbox / total``. Observations outside ``bbox`` are ignored.
    """
    if not tracks:
        raise ValueError("empty track dataset")
    ratio = len({t.animal_id for t in tracks}) / len(tracks)
    counts: dict[int, int] = {}
    for t in tracks:
        cell = grid_cell(bbox, rows, cols, t.lat, t.lon)
        if cell is not None:
            counts[cell] = counts.get(cell, 0) + 1
    return [TargetSpec(cell, n * ratio) for cell, n in sorted(counts.items())]


def _proximity_values(targets, dists, alpha, closer_is_better=True):
    d_min, d_max = min(dists), max(dists)
    out = []
    for t, d in zip(targets, dists):
        frac = 0.0 if d_max == d_min else (d_max - d) / (d_max - d_min)
        score = t.value
        out.append(TargetSpec(t.node_id, score, u_d_uncovered=-score, u_d_covered=0.0, u_a_covered=0.0, u_a_uncovered=score * (1 + alpha * frac)))
    return out


def apply_escape_line(targets: Sequence[TargetSpec], line, alpha: float, graph: DirectedGameGraph) -> list[TargetSpec]:
    """General-sum values boosted for targets close to an escape line.

    ``attacker = score * (1 + alpha * (1 - (d - d_min) / (d_max - d_min)))`` and
    ``defender = -score``; equal distances leave the attacker value at ``score``.
    """
    if not targets:
        return []
    proj = _projection(graph)
    a, b = (proj.xy(*p) for p in line)
    dists = [point_line_distance(proj.xy(*graph.coord(t.node_id)), a, b) for t in targets]
    return _proximity_values(targets, dists, alpha)


def apply_escape_point(targets: Sequence[TargetSpec], point, alpha: float, graph: DirectedGameGraph) -> list[TargetSpec]:
    """As :func:`apply_escape_line` with the distance to a single escape point."""
    if not targets:
        return []
    proj = _projection(graph)
    dists = [proj.distance(graph.coord(t.node_id), point) for t in targets]
    return _proximity_values(targets, dists, alpha)


def infra_raw_score(weight: float, population: float, alpha_pop: float) -> float:
    """``W * log(P + 1) ** alpha_pop`` with the natural log."""
    return weight * math.log(population + 1.0) ** alpha_pop


def assign_population(feature: FeatureRecord, blocks: Sequence[PopulationBlock], mode: str, radius_m: float = 0.0, projection: Projection | None = None) -> float:
    pt = (feature.lat, feature.lon)
    if mode == "block":
        for b in blocks:
            if point_in_polygon(pt, b.polygon):
                return float(b.population)
        return 0.0
    if mode == "radius":
        proj = projection or Projection(feature.lat)
        p = proj.xy(*pt)
        total = 0.0
        for b in blocks:
            poly = [proj.xy(*v) for v in b.polygon]
            if polygon_distance(p, poly) <= radius_m:
                total += b.population
        return total
    raise ValueError(f"mode must be 'block' or 'radius', got {mode!r}")


def score_infra_targets(features: FeatureDataset, blocks: Sequence[PopulationBlock], mode: str, radius_m: float, alpha_pop: float, street_graph: DirectedGameGraph) -> list[TargetSpec]:
    """Population-weighted infrastructure targets on the nearest street node.

    Features of unweighted types are dropped (logged); co-located features sum.
    """
    keep, dropped = features.retained()
    if dropped:
        log.warning("dropped %d feature(s) with no weight for their type", dropped)
    proj = _projection(street_graph)
    scored = []
    for f in keep:
        P = assign_population(f, blocks, mode, radius_m, proj)
        node = snap_to_node(street_graph, f.lat, f.lon, proj)
        scored.append((node, infra_raw_score(features.weights[f.type], P, alpha_pop)))
    return _merge_by_node(scored)


def randomize_target_values(targets: Sequence[TargetSpec], rng: np.random.Generator, general_sum: bool = False) -> list[TargetSpec]:
    """Resample target payoffs uniformly within the observed ranges (the RT baseline).

    Zero-sum: each value from ``U[min value, max value]``. General-sum: attacker
    uncovered from the range of all attacker payoffs, attacker covered below it;
    defender uncovered from the range of all defender payoffs, defender covered
    above it. Covered payoffs therefore never reward the attacker more.
    """
    if not general_sum:
        vals = [t.value for t in targets]
        lo, hi = min(vals), max(vals)
        return [TargetSpec(t.node_id, float(rng.uniform(lo, hi))) for t in targets]
    a_vals = [v for t in targets for v in (t.u_a_covered, t.u_a_uncovered)]
    d_vals = [v for t in targets for v in (t.u_d_covered, t.u_d_uncovered)]
    a_lo, a_hi = min(a_vals), max(a_vals)
    d_lo, d_hi = min(d_vals), max(d_vals)
    out = []
    for t in targets:
        au = float(rng.uniform(a_lo, a_hi))
        ac = float(rng.uniform(a_lo, au))
        du = float(rng.uniform(d_lo, d_hi))
        dc = float(rng.uniform(du, d_hi))
        out.append(TargetSpec(t.node_id, au, u_d_uncovered=du, u_d_covered=dc, u_a_covered=ac, u_a_uncovered=au))
    return out


@dataclass(frozen=True, eq=False)
class SecurityGame:
    """A fully assembled instance: environment, targets, rules and optional expanded forms."""

    graph: DirectedGameGraph
    targets: tuple[TargetSpec, ...]
    config: GameConfig
    protocol: InterdictionProtocol
    home_bases: tuple[tuple[int, ...], ...]
    general_sum: bool = False
    nfg: BimatrixGame | None = None
    sfg: ScheduleFormGame | None = None
    name: str = "game"
    meta: dict = field(default_factory=dict)

    @property
    def schedule_horizon(self) -> int:
        # num_timesteps counts game states, the initial one included
        return self.config.num_timesteps - 1

    def matrix_game(self) -> BimatrixGame:
        if self.nfg is not None:
            return self.nfg
        if self.sfg is not None:
            return schedule_game_matrix(self.sfg, general_sum=self.general_sum)
        raise ValueError("game has neither a normal-form matrix nor a schedule form")

    def __eq__(self, other):
        if not isinstance(other, SecurityGame):
            return NotImplemented
        return all(
            getattr(self, f) == getattr(other, f)
            for f in ("graph", "targets", "config", "protocol", "home_bases", "general_sum", "nfg", "sfg", "name", "meta")
        )

    __hash__ = None


def build_schedule_form(graph, targets, home_bases, horizon, delta, step_cost=0.0, simple=False) -> ScheduleFormGame:
    node_ids = [t.node_id for t in targets]
    per_defender = [tuple(defender_schedules(graph, hb, horizon, delta, node_ids, step_cost, simple)) for hb in home_bases]
    return ScheduleFormGame.from_targets(targets, per_defender)


def assemble_security_game(
    graph: DirectedGameGraph,
    targets: Sequence[TargetSpec],
    home_bases: Sequence[Sequence[int]],
    *,
    num_timesteps: int,
    num_attackers: int = 1,
    defense_time_threshold: int = 1,
    force_return: bool = False,
    allow_wait: bool = True,
    schedule_form: bool = False,
    simple: bool = False,
    general_sum: bool = False,
    attacker_penalty_factor: float | None = None,
    defender_penalty_factor: float | None = None,
    defender_step_cost: float = 0.0,
    generate_matrix: bool = True,
    name: str = "game",
    meta: dict | None = None,
) -> SecurityGame:
    """Stationary attackers against moving defenders that start (and end) at home bases."""
    if not targets:
        raise ValueError("game has zero targets")
    if not home_bases:
        raise ValueError("at least one defender is required")
    targets = list(targets)
    if attacker_penalty_factor is not None or defender_penalty_factor is not None:
        targets = scale_target_utilities(targets, attacker_penalty_factor or 1.0, defender_penalty_factor or 1.0)
    hb = tuple(tuple(sorted(set(h))) for h in home_bases)
    config = GameConfig(
        num_timesteps=num_timesteps,
        defender_moving=len(hb),
        attacker_stationary=num_attackers,
        defender_starts=hb,
        defender_ends=hb,
        allow_wait=allow_wait,
        force_return=force_return,
        defender_step_cost=defender_step_cost,
    )
    config.validate_against(graph)
    protocol = InterdictionProtocol(0.0, defense_time_threshold)
    nfg = sfg = None
    if schedule_form:
        if num_attackers != 1:
            raise ValueError("schedule form supports a single attacker")
        sfg = build_schedule_form(graph, targets, hb, num_timesteps - 1, defense_time_threshold, defender_step_cost, simple)
        if generate_matrix:
            nfg = schedule_game_matrix(sfg, general_sum=general_sum)
    elif generate_matrix:
        d_actions = generate_player_actions(graph, config, "defender")
        a_actions = generate_player_actions(graph, config, "attacker", targets)
        nfg = build_utility_matrix(d_actions, a_actions, targets, protocol, graph, general_sum, defender_step_cost)
    return SecurityGame(graph, tuple(targets), config, protocol, hb, general_sum, nfg, sfg, name, dict(meta or {}))


def _home_base_nodes(graph, home_bases, bbox: BoundingBox | None, proj):
    out = []
    for group in home_bases:
        nodes = []
        for lat, lon in group:
            if bbox is not None and not bbox.contains(lat, lon):
                raise ValueError(f"home base ({lat}, {lon}) lies outside the bounding box")
            nodes.append(snap_to_node(graph, lat, lon, proj))
        out.append(tuple(sorted(set(nodes))))
    return out


def generate_gsg(
    tracks: Sequence[TrackRecord],
    bbox: BoundingBox,
    *,
    rows: int,
    cols: int,
    home_bases: Sequence[Sequence[tuple[float, float]]],
    num_timesteps: int,
    scoring: str = "centroid",
    num_clusters: int = 10,
    escape_line=None,
    alpha: float = 0.0,
    attacker_value: float = 1.0,
    defender_value: float = 1.0,
    randomize_targets: bool = False,
    seed: int = 0,
    name: str = "gsg",
    **game_kwargs,
) -> SecurityGame:
    """Green security game on a grid over ``bbox`` with animal-activity targets.

    ``home_bases`` lists, per defender, the lat/lon points it may start from.
    ``attacker_value`` / ``defender_value`` scale the general-sum payoffs.
    """
    grid = build_grid_graph(bbox, rows, cols)
    if scoring == "centroid":
        targets = score_targets_centroid(tracks, num_clusters, bbox, grid, seed)
    elif scoring == "density":
        targets = score_targets_density(tracks, bbox, rows, cols)
    else:
        raise ValueError(f"scoring must be 'centroid' or 'density', got {scoring!r}")
    general_sum = game_kwargs.get("general_sum", False)
    if general_sum:
        if escape_line is not None:
            targets = apply_escape_line(targets, escape_line, alpha, grid)
        targets = _scale_values(targets, attacker_value, defender_value)
    if randomize_targets:
        targets = randomize_target_values(targets, np.random.default_rng(seed), general_sum)
    hb = _home_base_nodes(grid, home_bases, bbox, _projection(grid))
    meta = {"domain": "gsg", "scoring": scoring, "seed": seed, "rows": rows, "cols": cols}
    return assemble_security_game(grid, targets, hb, num_timesteps=num_timesteps, name=name, meta=meta, **game_kwargs)


def generate_isg(
    features: FeatureDataset,
    blocks: Sequence[PopulationBlock],
    street_graph: DirectedGameGraph,
    *,
    home_bases: Sequence[Sequence[tuple[float, float]]],
    num_timesteps: int,
    mode: str = "block",
    radius_m: float = 100.0,
    alpha_pop: float = 1.0,
    escape_point=None,
    alpha: float = 0.0,
    attacker_value: float = 1.0,
    defender_value: float = 1.0,
    bbox: BoundingBox | None = None,
    randomize_targets: bool = False,
    seed: int = 0,
    name: str = "isg",
    **game_kwargs,
) -> SecurityGame:
    """Infrastructure security game on a street graph with population-weighted targets."""
    targets = score_infra_targets(features, blocks, mode, radius_m, alpha_pop, street_graph)
    targets = [t for t in targets if t.value > 0]
    general_sum = game_kwargs.get("general_sum", False)
    if general_sum:
        if escape_point is not None:
            targets = apply_escape_point(targets, escape_point, alpha, street_graph)
        targets = _scale_values(targets, attacker_value, defender_value)
    if randomize_targets:
        targets = randomize_target_values(targets, np.random.default_rng(seed), general_sum)
    hb = _home_base_nodes(street_graph, home_bases, bbox, _projection(street_graph))
    meta = {"domain": "isg", "mode": mode, "seed": seed}
    return assemble_security_game(street_graph, targets, hb, num_timesteps=num_timesteps, name=name, meta=meta, **game_kwargs)


def _scale_values(targets, attacker_value, defender_value):
    return [
        replace(
            t,
            u_a_uncovered=t.u_a_uncovered * attacker_value,
            u_a_covered=t.u_a_covered * attacker_value,
            u_d_uncovered=t.u_d_uncovered * defender_value,
            u_d_covered=t.u_d_covered * defender_value,
        )
        for t in targets
    ]
