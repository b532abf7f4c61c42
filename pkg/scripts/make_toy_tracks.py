"""Regenerate src/sgkit/data/toy_tracks.csv: synthetic collar fixes inside the
Lobeke-style bounding box, clustered around ten activity hotspots."""

import csv
from datetime import datetime, timedelta
from pathlib import Path

import numpy as np

BBOX = (2.0530, 2.2837, 15.8790, 16.2038)
# (lat, lon, number of fixes); spread so each hotspot falls in its own 7x7 cell
HOTSPOTS = [
    (2.075, 15.905, 60), (2.090, 16.010, 140), (2.110, 16.150, 90),
    (2.145, 15.950, 180), (2.160, 16.060, 250), (2.185, 16.180, 70),
    (2.215, 15.900, 110), (2.230, 16.020, 200), (2.255, 16.120, 130),
    (2.270, 15.960, 50),
]
OUTSIDE = 40


def main(out: Path, seed: int = 2024) -> None:
    rng = np.random.default_rng(seed)
    rows = []
    for h, (lat, lon, count) in enumerate(HOTSPOTS):
        pts = rng.normal([lat, lon], [0.004, 0.005], size=(count, 2))
        for k, (a, b) in enumerate(pts):
            animal = f"E{(h + k) % 6 + 1}"
            rows.append((animal, round(float(a), 6), round(float(b), 6), h * 1000 + k))
    for k in range(OUTSIDE):
        rows.append((f"E{k % 6 + 1}", round(float(rng.uniform(2.30, 2.40)), 6), round(float(rng.uniform(15.8, 16.3)), 6), 90000 + k))
    rows.sort(key=lambda r: (r[0], r[3]))
    with out.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["animal_id", "lat", "lon", "timestamp"])
        for animal, lat, lon, ts in rows:
            w.writerow([animal, lat, lon, (datetime(2004, 1, 1) + timedelta(hours=ts)).isoformat()])


if __name__ == "__main__":
    main(Path(__file__).resolve().parents[1] / "src" / "sgkit" / "data" / "toy_tracks.csv")
