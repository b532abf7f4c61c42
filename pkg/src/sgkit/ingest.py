"""Readers for the simplified geodata inputs (tracks CSV, features CSV, blocks and weights JSON)."""

from __future__ import annotations

import csv
import json
from importlib import resources
from pathlib import Path

from .instances import FeatureDataset, FeatureRecord, PopulationBlock, TrackRecord


class IngestError(ValueError):
    """Malformed input; the message carries the file name and line number."""


def _read_csv(path, header: list[str]):
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            first = next(reader)
        except StopIteration:
            raise IngestError(f"{path}:1: empty file, expected header {','.join(header)}") from None
        if [h.strip() for h in first] != header:
            raise IngestError(f"{path}:1: expected header {','.join(header)}, got {','.join(first)}")
        for row in reader:
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise IngestError(f"{path}:{reader.line_num}: expected {len(header)} fields, got {len(row)}")
            yield reader.line_num, [c.strip() for c in row]


def _coord(path, line, lat, lon):
    try:
        lat, lon = float(lat), float(lon)
    except ValueError:
        raise IngestError(f"{path}:{line}: non-numeric coordinate ({lat!r}, {lon!r})") from None
    if not -90 <= lat <= 90 or not -180 <= lon <= 180:
        raise IngestError(f"{path}:{line}: coordinate out of range ({lat}, {lon})")
    return lat, lon


def read_tracks_csv(path) -> list[TrackRecord]:
    out = []
    for line, (animal, lat, lon, ts) in _read_csv(path, ["animal_id", "lat", "lon", "timestamp"]):
        if not animal:
            raise IngestError(f"{path}:{line}: missing animal_id")
        lat, lon = _coord(path, line, lat, lon)
        out.append(TrackRecord(animal, lat, lon, ts))
    return out


def read_features_csv(path, weights: dict | None = None) -> FeatureDataset:
    recs = []
    for line, (fid, ftype, lat, lon) in _read_csv(path, ["id", "type", "lat", "lon"]):
        if not ftype:
            raise IngestError(f"{path}:{line}: missing feature type")
        lat, lon = _coord(path, line, lat, lon)
        recs.append(FeatureRecord(fid, ftype, lat, lon))
    return FeatureDataset(tuple(recs), dict(weights if weights is not None else default_infra_weights()))


def read_weights_json(path) -> dict[str, float]:
    with open(path) as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise IngestError(f"{path}: weights must be a JSON object of type -> weight")
    out = {}
    for k, v in data.items():
        if not isinstance(v, (int, float)) or v <= 0:
            raise IngestError(f"{path}: weight for {k!r} must be a positive number")
        out[str(k)] = float(v)
    return out


def default_infra_weights() -> dict[str, float]:
    text = resources.files("sgkit").joinpath("data/infra_weights.json").read_text()
    return json.loads(text)


def read_blocks_json(path) -> list[PopulationBlock]:
    with open(path) as fh:
        data = json.load(fh)
    if not isinstance(data, list):
        raise IngestError(f"{path}: expected a JSON list of block records")
    out = []
    for i, rec in enumerate(data):
        where = f"{path}: record {i}"
        try:
            geoid, pop, poly = str(rec["geoid"]), rec["population"], rec["polygon"]
        except (KeyError, TypeError):
            raise IngestError(f"{where}: needs geoid, population and polygon") from None
        if not isinstance(pop, int) or pop < 0:
            raise IngestError(f"{where}: population must be a non-negative integer")
        if not isinstance(poly, list) or len(poly) < 3 or any(not isinstance(p, list) or len(p) != 2 for p in poly):
            raise IngestError(f"{where}: polygon must list at least 3 [lat, lon] pairs")
        out.append(PopulationBlock(geoid, pop, tuple(tuple(p) for p in poly)))
    return out


def check_feature_types(features: FeatureDataset) -> None:
    """Raise naming the first feature type that has no weight."""
    missing = sorted({r.type for r in features.records} - set(features.weights))
    if missing:
        raise IngestError(f"no weight for feature type(s): {', '.join(missing)}")
