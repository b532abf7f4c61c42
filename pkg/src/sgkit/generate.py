"""Build security games from validated configuration tables."""

from __future__ import annotations

from .config import ConfigError, Section, resolve_path, section
from .ingest import IngestError, check_feature_types, read_blocks_json, read_features_csv, read_tracks_csv, read_weights_json
from .instances import BoundingBox, SecurityGame, generate_gsg, generate_isg
from .serialize import SchemaError, load_graph_document


def _rules(g: Section) -> dict:
    return {
        "num_timesteps": g.int("num_timesteps", minimum=1),
        "num_attackers": g.int("num_attackers", 1, minimum=1),
        "defense_time_threshold": g.int("defense_time_threshold", 1, minimum=1),
        "force_return": g.bool("force_return", False),
        "allow_wait": g.bool("allow_wait", True),
        "schedule_form": g.bool("schedule_form", False),
        "simple": g.bool("simple", False),
        "general_sum": g.bool("general_sum", False),
        "attacker_penalty_factor": g.float("attacker_penalty_factor", None, minimum=0),
        "defender_penalty_factor": g.float("defender_penalty_factor", None, minimum=0),
        "defender_step_cost": g.float("defender_step_cost", 0.0, minimum=0),
        "generate_matrix": g.bool("generate_matrix", True),
    }


def _home_bases(g: Section):
    raw = g.raw("home_bases")
    if not isinstance(raw, list) or not raw:
        raise ConfigError(f"{g.where}.home_bases: expected a nonempty list with one list of [lat, lon] points per defender")
    out = []
    for i, group in enumerate(raw):
        sub = Section({"points": group}, f"{g.where}.home_bases[{i}]")
        pts = sub.points("points")
        if not pts:
            raise ConfigError(f"{g.where}.home_bases[{i}]: needs at least one point")
        out.append(pts)
    return out


def _bbox(s: Section, key: str, required: bool = True):
    v = s.numbers(key, None)
    if v is None:
        if required:
            raise ConfigError(f"{s.where}.{key}: required key is missing")
        return None
    if len(v) != 4:
        raise ConfigError(f"{s.where}.{key}: expected [lat_min, lat_max, lon_min, lon_max]")
    try:
        return BoundingBox(*v)
    except ValueError as exc:
        raise ConfigError(f"{s.where}.{key}: {exc}") from None


def build_game(cfg: dict, seed: int | None = None) -> SecurityGame:
    """Generate the game described by the ``[game]`` table (plus ``[gsg]`` or ``[isg]``).

    ``seed`` overrides the top-level ``seed`` key.
    """
    top_seed = cfg.get("seed", 0)
    if isinstance(top_seed, bool) or not isinstance(top_seed, int):
        raise ConfigError(f"seed: expected an integer, got {top_seed!r}")
    seed = top_seed if seed is None else seed
    g = section(cfg, "game")
    domain = g.str("domain", choices=("gsg", "isg"))
    name = g.str("name", domain)
    rules = _rules(g)
    home_bases = _home_bases(g)
    common = dict(
        home_bases=home_bases,
        alpha=g.float("alpha", 0.0, minimum=0),
        attacker_value=g.float("attacker_value", 1.0),
        defender_value=g.float("defender_value", 1.0),
        randomize_targets=g.bool("randomize_targets", False),
        seed=seed,
        name=name,
        **rules,
    )
    g.finish()
    try:
        if domain == "gsg":
            d = section(cfg, "gsg")
            tracks = read_tracks_csv(resolve_path(cfg, d.str("tracks")))
            bbox = _bbox(d, "bbox")
            line = d.points("escape_line", None, length=2)
            kw = dict(
                rows=d.int("rows", minimum=1),
                cols=d.int("cols", minimum=1),
                scoring=d.str("scoring", "centroid", choices=("centroid", "density")),
                num_clusters=d.int("num_clusters", 10, minimum=1),
                escape_line=line,
            )
            d.finish()
            return generate_gsg(tracks, bbox, **kw, **common)
        d = section(cfg, "isg")
        weights = d.str("weights", None)
        weights = read_weights_json(resolve_path(cfg, weights)) if weights else None
        features = read_features_csv(resolve_path(cfg, d.str("features")), weights)
        check_feature_types(features)
        blocks = read_blocks_json(resolve_path(cfg, d.str("blocks")))
        graph, _ = load_graph_document(resolve_path(cfg, d.str("street_graph")).read_text())
        kw = dict(
            mode=d.str("mode", "block", choices=("block", "radius")),
            radius_m=d.float("radius_m", 100.0, minimum=0),
            alpha_pop=d.float("alpha_pop", 1.0, minimum=0),
            escape_point=d.point("escape_point", None),
            bbox=_bbox(d, "bbox", required=False),
        )
        d.finish()
        return generate_isg(features, blocks, graph, **kw, **common)
    except ConfigError:
        raise
    except (IngestError, SchemaError) as exc:
        raise ConfigError(str(exc)) from None
    except ValueError as exc:
        raise ConfigError(f"game: {exc}") from None
    except OSError as exc:
        raise ConfigError(f"{exc.filename}: {exc.strerror}") from None
