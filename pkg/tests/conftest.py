"""Shared synthetic data generators.

Everything is seeded; the acceptance suite depends on these exact
generators, so changing defaults changes frozen expectations.
"""

from datetime import datetime, timedelta

import numpy as np
import pytest

from som3d import EncodedDataset, IncidentRecord, apply_normalization, fit_rescale

# Three spatiotemporal Gaussian clusters in raw units: time-of-day fraction,
# latitude and longitude in degrees. Time spread dominates the raw scales.
CLUSTER_CENTERS = np.array([
    [0.18, 40.62, -74.05],
    [0.52, 40.76, -73.92],
    [0.83, 40.70, -73.78],
])
CLUSTER_SPREADS = np.array([
    [0.050, 0.020, 0.025],
    [0.060, 0.018, 0.020],
    [0.050, 0.022, 0.028],
])
CLUSTER_WEIGHTS = np.array([0.40, 0.35, 0.25])


def cluster_points(n=5000, seed=2025):
    """Raw (time-fraction, lat, lon) points from three Gaussian clusters."""
    rng = np.random.default_rng(seed)
    which = rng.choice(len(CLUSTER_WEIGHTS), size=n, p=CLUSTER_WEIGHTS)
    points = rng.normal(CLUSTER_CENTERS[which], CLUSTER_SPREADS[which])
    points[:, 0] = np.clip(points[:, 0], 0.0, 1.0 - 1e-9)
    return points


def rescaled_dataset(points) -> EncodedDataset:
    norm = fit_rescale(points)
    return EncodedDataset(vectors=apply_normalization(norm, points), norm=norm)


def time_dominant_points(n=4000, seed=3):
    """Points whose first-axis (time) variance dwarfs the spatial spread.

    Uniform over the day with tight spatial blobs: the shape a grid's
    longest side should be aligned with.
    """
    rng = np.random.default_rng(seed)
    return np.column_stack([
        rng.uniform(0.0, 1.0, n),
        rng.normal(0.5, 0.05, n),
        rng.normal(0.5, 0.06, n),
    ])


def shifting_peak_records(n=4000, seed=77):
    """Records whose daily peak hour moves two hours later per weekday.

    Mondays peak at 06:00, Sundays at 18:00; location is a single blob.
    """
    rng = np.random.default_rng(seed)
    base = datetime(2015, 1, 5)  # a Monday
    records = []
    for _ in range(n):
        day = int(rng.integers(0, 28))
        weekday = day % 7
        peak_minute = (6 + 2 * weekday) * 60
        minute = float(np.clip(rng.normal(peak_minute, 55.0), 0, 1439))
        ts = base + timedelta(days=day, minutes=minute)
        lat = float(rng.normal(40.72, 0.05))
        lon = float(rng.normal(-73.95, 0.06))
        records.append(IncidentRecord(timestamp=ts, latitude=lat, longitude=lon))
    return records


MIXED_SHARES = (0.45, 0.30, 0.20, 0.04, 0.01)
MIXED_CENTERS = np.array([
    [0.20, 40.60, -74.05],
    [0.50, 40.78, -73.90],
    [0.80, 40.68, -73.75],
])
MIXED_SPREADS = np.array([
    [0.05, 0.020, 0.022],
    [0.05, 0.018, 0.020],
    [0.05, 0.020, 0.025],
])


def mixed_category_dataset(n=5000, seed=404) -> EncodedDataset:
    """Five categories with shares 45/30/20/4/1 percent.

    The three major categories sit in separate clusters. The two minor
    ones have no territory of their own: they are drawn from the majors'
    own mixture (category 4 with a wider spread), so every node's weight
    row is dominated by a major and winner-take-all starves the rare IDs.
    """
    rng = np.random.default_rng(seed)
    counts = np.round(np.array(MIXED_SHARES) * n).astype(int)
    counts[0] += n - counts.sum()
    major_p = np.array(MIXED_SHARES[:3]) / sum(MIXED_SHARES[:3])
    raw = []
    ids = []
    for cat, count in enumerate(counts):
        if cat < 3:
            pts = rng.normal(MIXED_CENTERS[cat], MIXED_SPREADS[cat], size=(count, 3))
        else:
            host = rng.choice(3, size=count, p=major_p)
            widen = 1.6 if cat == 3 else 1.0
            pts = rng.normal(MIXED_CENTERS[host], MIXED_SPREADS[host] * widen)
        raw.append(pts)
        ids.extend([cat + 1] * count)
    raw = np.vstack(raw)
    raw[:, 0] = np.clip(raw[:, 0], 0.0, 1.0 - 1e-9)
    ids = np.array(ids, dtype=np.int64)
    order = rng.permutation(len(raw))
    raw, ids = raw[order], ids[order]
    norm = fit_rescale(raw)
    one_hot = np.zeros((len(ids), len(MIXED_SHARES)))
    one_hot[np.arange(len(ids)), ids - 1] = 1.0
    return EncodedDataset(
        vectors=apply_normalization(norm, raw),
        norm=norm,
        category_ids=ids,
        one_hot=one_hot,
        vocabulary=["cat1", "cat2", "cat3", "cat4", "cat5"],
    )


def write_incident_csv(path, n=150, seed=11, with_category=False):
    """Small synthetic incident CSV for exercising the CLI."""
    rng = np.random.default_rng(seed)
    labels = ["Burglary", "Robbery", "Assault"]
    lines = ["date,time,latitude,longitude" + (",offense" if with_category else "")]
    for _ in range(n):
        day = int(rng.integers(1, 29))
        hour = int(rng.integers(0, 24))
        minute = int(rng.integers(0, 60))
        lat = 40.5 + float(rng.random()) * 0.4
        lon = -74.2 + float(rng.random()) * 0.5
        row = f"2015-01-{day:02d},{hour:02d}:{minute:02d},{lat:.6f},{lon:.6f}"
        if with_category:
            row += f",{labels[int(rng.integers(0, len(labels)))]}"
        lines.append(row)
    path.write_text("\n".join(lines) + "\n")
    return path


@pytest.fixture(scope="session")
def clusters5000():
    return cluster_points()


@pytest.fixture(scope="session")
def mixed5000():
    return mixed_category_dataset()
