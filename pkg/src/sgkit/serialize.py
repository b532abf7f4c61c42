"""JSON persistence for graphs, targets, schedule-form artifacts and whole games.

Documents are written with sorted keys and two-space indentation; floats use
Python's shortest round-trip repr, so ``dumps(loads(text)) == text`` for any
document this module produced.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .games import BimatrixGame
from .graph import ActionMatrix, DirectedGameGraph, GameConfig, InterdictionProtocol, Node, TargetSpec
from .instances import SecurityGame
from .schedules import Schedule, ScheduleFormGame

FORMAT = "sgkit.game"
VERSION = 1


class SchemaError(ValueError):
    """A document does not match the expected schema; the message names the JSON path."""


def _finite(x: float, where: str) -> float:
    x = float(x)
    if not math.isfinite(x):
        raise SchemaError(f"{where}: non-finite number")
    return x


def _req(d: dict, key: str, where: str):
    if not isinstance(d, dict) or key not in d:
        raise SchemaError(f"{where}: missing key {key!r}")
    return d[key]


def graph_to_dict(graph: DirectedGameGraph) -> dict:
    nodes = []
    for n in sorted(graph.nodes, key=lambda n: n.id):
        lat, lon = n.coord if n.coord is not None else (None, None)
        nodes.append({"id": n.id, "lat": lat, "lon": lon})
    return {
        "distance_metric": graph.distance_metric,
        "nodes": nodes,
        "edges": [list(e) for e in sorted(graph.edges)],
    }


def graph_from_dict(d: dict, where: str = "$.graph") -> DirectedGameGraph:
    nodes = []
    for i, rec in enumerate(_req(d, "nodes", where)):
        p = f"{where}.nodes[{i}]"
        nid = _req(rec, "id", p)
        lat, lon = rec.get("lat"), rec.get("lon")
        coord = None if lat is None or lon is None else (_finite(lat, p + ".lat"), _finite(lon, p + ".lon"))
        nodes.append(Node(int(nid), coord))
    edges = []
    for i, e in enumerate(_req(d, "edges", where)):
        if not isinstance(e, list) or len(e) != 2:
            raise SchemaError(f"{where}.edges[{i}]: expected [from, to]")
        edges.append((int(e[0]), int(e[1])))
    try:
        return DirectedGameGraph(tuple(nodes), frozenset(edges), d.get("distance_metric", "hop_count"))
    except ValueError as exc:
        raise SchemaError(f"{where}: {exc}") from None


_UTILS = ("u_d_uncovered", "u_d_covered", "u_a_covered", "u_a_uncovered")


def target_to_dict(t: TargetSpec) -> dict:
    d = {"node_id": t.node_id, "value": t.value}
    if t != TargetSpec(t.node_id, t.value):
        d.update({k: getattr(t, k) for k in _UTILS})
    return d


def target_from_dict(d: dict, where: str) -> TargetSpec:
    node = int(_req(d, "node_id", where))
    value = _finite(_req(d, "value", where), where + ".value")
    extra = {k: _finite(d[k], f"{where}.{k}") for k in _UTILS if k in d}
    if extra and len(extra) != 4:
        raise SchemaError(f"{where}: give either a single value or all four utilities")
    return TargetSpec(node, value, **extra)


def dump_graph_document(graph: DirectedGameGraph, targets) -> str:
    doc = {"graph": graph_to_dict(graph), "targets": [target_to_dict(t) for t in targets]}
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def load_graph_document(text: str):
    doc = json.loads(text)
    graph = graph_from_dict(_req(doc, "graph", "$"))
    targets = [target_from_dict(t, f"$.targets[{i}]") for i, t in enumerate(doc.get("targets", []))]
    for t in targets:
        if t.node_id not in graph:
            raise SchemaError(f"$.targets: node {t.node_id} not in graph")
    return graph, targets


def _label_out(x):
    if isinstance(x, ActionMatrix):
        return {"positions": [list(r) for r in x.positions], "kinds": list(x.resource_kinds)}
    if isinstance(x, (tuple, list)):
        return [_label_out(v) for v in x]
    if isinstance(x, (np.integer,)):
        return int(x)
    return x


def _label_in(x):
    if isinstance(x, dict) and "positions" in x:
        return ActionMatrix(tuple(tuple(r) for r in x["positions"]), tuple(x["kinds"]))
    if isinstance(x, list):
        return tuple(_label_in(v) for v in x)
    return x


def bimatrix_to_dict(g: BimatrixGame) -> dict:
    for name, M in (("A", g.A), ("B", g.B)):
        if not np.isfinite(M).all():
            raise SchemaError(f"$.nfg.{name}: non-finite payoff")
    return {
        "A": g.A.tolist(),
        "B": g.B.tolist(),
        "zero_sum": g.zero_sum,
        "row_labels": _label_out(g.row_labels),
        "col_labels": _label_out(g.col_labels),
    }


def bimatrix_from_dict(d: dict, where: str = "$.nfg") -> BimatrixGame:
    A = np.array(_req(d, "A", where), dtype=float)
    B = np.array(_req(d, "B", where), dtype=float)
    try:
        return BimatrixGame(A, B, _label_in(d.get("row_labels", [])), _label_in(d.get("col_labels", [])), bool(d.get("zero_sum", False)))
    except ValueError as exc:
        raise SchemaError(f"{where}: {exc}") from None


def schedule_form_to_dict(sfg: ScheduleFormGame) -> dict:
    return {
        "targets": list(sfg.targets),
        "schedules": [
            [
                {
                    "targets": sorted(s.targets),
                    "movement_steps": s.movement_steps,
                    "movement_cost": s.movement_cost,
                    "path": list(s.path),
                }
                for s in group
            ]
            for group in sfg.schedules
        ],
        "target_utilities": sfg.target_utilities.tolist(),
        "joint_actions": [list(a) for a in sfg.joint_actions],
    }


def schedule_form_from_dict(d: dict, where: str = "$.sfg") -> ScheduleFormGame:
    groups = []
    for r, group in enumerate(_req(d, "schedules", where)):
        out = []
        for i, s in enumerate(group):
            p = f"{where}.schedules[{r}][{i}]"
            out.append(
                Schedule(
                    frozenset(_req(s, "targets", p)),
                    int(_req(s, "movement_steps", p)),
                    _finite(_req(s, "movement_cost", p), p + ".movement_cost"),
                    tuple(s.get("path", ())),
                )
            )
        groups.append(tuple(out))
    try:
        return ScheduleFormGame(
            tuple(_req(d, "targets", where)),
            tuple(groups),
            np.array(_req(d, "target_utilities", where), dtype=float),
            tuple(tuple(a) for a in d.get("joint_actions", [])),
        )
    except ValueError as exc:
        raise SchemaError(f"{where}: {exc}") from None


def _config_to_dict(c: GameConfig) -> dict:
    return {
        "num_timesteps": c.num_timesteps,
        "defender_moving": c.defender_moving,
        "defender_stationary": c.defender_stationary,
        "attacker_moving": c.attacker_moving,
        "attacker_stationary": c.attacker_stationary,
        "defender_starts": [list(s) for s in c.defender_starts],
        "defender_ends": [list(s) for s in c.defender_ends],
        "attacker_starts": [list(s) for s in c.attacker_starts],
        "attacker_ends": [list(s) for s in c.attacker_ends],
        "defender_placements": list(c.defender_placements),
        "allow_wait": c.allow_wait,
        "force_return": c.force_return,
        "defender_step_cost": c.defender_step_cost,
    }


def game_to_dict(game: SecurityGame) -> dict:
    return {
        "format": FORMAT,
        "version": VERSION,
        "name": game.name,
        "general_sum": game.general_sum,
        "meta": game.meta,
        "graph": graph_to_dict(game.graph),
        "targets": [target_to_dict(t) for t in game.targets],
        "config": _config_to_dict(game.config),
        "protocol": {
            "capture_radius": game.protocol.capture_radius,
            "defense_time_threshold": game.protocol.defense_time_threshold,
        },
        "home_bases": [list(h) for h in game.home_bases],
        "nfg": bimatrix_to_dict(game.nfg) if game.nfg is not None else None,
        "sfg": schedule_form_to_dict(game.sfg) if game.sfg is not None else None,
    }


def game_from_dict(d: dict) -> SecurityGame:
    if _req(d, "format", "$") != FORMAT:
        raise SchemaError(f"$.format: expected {FORMAT!r}")
    if d.get("version") != VERSION:
        raise SchemaError(f"$.version: unsupported version {d.get('version')!r}")
    graph = graph_from_dict(_req(d, "graph", "$"))
    targets = tuple(target_from_dict(t, f"$.targets[{i}]") for i, t in enumerate(_req(d, "targets", "$")))
    cfg = _req(d, "config", "$")
    try:
        config = GameConfig(**cfg)
        proto = InterdictionProtocol(**_req(d, "protocol", "$"))
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"$.config: {exc}") from None
    nfg = bimatrix_from_dict(d["nfg"]) if d.get("nfg") is not None else None
    sfg = schedule_form_from_dict(d["sfg"]) if d.get("sfg") is not None else None
    return SecurityGame(
        graph,
        targets,
        config,
        proto,
        tuple(tuple(h) for h in _req(d, "home_bases", "$")),
        bool(d.get("general_sum", False)),
        nfg,
        sfg,
        str(d.get("name", "game")),
        dict(d.get("meta", {})),
    )


def dumps_game(game: SecurityGame) -> str:
    return json.dumps(game_to_dict(game), sort_keys=True, indent=2) + "\n"


def loads_game(text: str) -> SecurityGame:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}") from None
    return game_from_dict(data)


def save_game(game: SecurityGame, path) -> None:
    Path(path).write_text(dumps_game(game))


def load_game(path) -> SecurityGame:
    return loads_game(Path(path).read_text())
