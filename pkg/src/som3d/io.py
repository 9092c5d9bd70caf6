"""Dataset ingestion and on-disk artifact formats.

Models and reports are single JSON documents with a format version;
floats are serialized at full precision (shortest round-tripping decimal),
so save -> load -> save is byte-identical. Tabular artifacts (assignments,
run logs, density grids) are plain comma-separated text.
"""

import csv
import json
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path

import numpy as np

from .errors import DataError
from .grid import Codebook, GridDims
from .preprocess import IncidentRecord, NormalizationParams, as_dataset, invert_normalization
from .train import SomModel, TrainingConfig

MODEL_FORMAT = "som3d-model"
REPORT_FORMAT = "som3d-report"
FORMAT_VERSION = 1


@dataclass
class ColumnMapping:
    """Which input columns hold what; category is optional."""

    date: str = "date"
    time: str = "time"
    latitude: str = "latitude"
    longitude: str = "longitude"
    category: str | None = None


def load_records(path, columns: ColumnMapping | None = None, strict: bool = False):
    """Parse a CSV of incident rows into records.

    Returns (records, errors) where errors is a list of (line_number,
    message) for rows that failed to parse. In strict mode the first bad
    row aborts; in lenient mode bad rows are skipped, but more than 50%
    unparseable rows abort either way.
    """
    columns = columns or ColumnMapping()
    path = Path(path)
    if not path.exists():
        raise DataError(f"input file not found: {path}")
    needed = [columns.date, columns.time, columns.latitude, columns.longitude]
    if columns.category is not None:
        needed.append(columns.category)

    records = []
    errors = []
    try:
        fh = path.open(newline="")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    with fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in needed if c not in header]
        if missing:
            raise DataError(f"{path}: missing mapped column(s) {missing}; header has {header}")
        for line, row in enumerate(reader, start=2):
            try:
                records.append(_parse_row(row, columns, line))
            except (ValueError, KeyError) as exc:
                if strict:
                    raise DataError(f"{path}:{line}: {exc}") from None
                errors.append((line, str(exc)))
    total = len(records) + len(errors)
    if total and len(errors) > total / 2:
        raise DataError(
            f"{path}: {len(errors)} of {total} rows unparseable; first: "
            f"line {errors[0][0]}: {errors[0][1]}"
        )
    return records, errors


def _parse_row(row, columns: ColumnMapping, line: int) -> IncidentRecord:
    date_s = (row[columns.date] or "").strip()
    time_s = (row[columns.time] or "").strip()
    ts = _parse_timestamp(date_s, time_s)
    lat = float((row[columns.latitude] or "").strip())
    lon = float((row[columns.longitude] or "").strip())
    category = None
    if columns.category is not None:
        category = (row[columns.category] or "").strip()
        if not category:
            raise ValueError(f"empty category in column {columns.category!r}")
    return IncidentRecord(timestamp=ts, latitude=lat, longitude=lon,
                          category=category, source_line=line)


def _parse_timestamp(date_s: str, time_s: str) -> datetime:
    try:
        day = datetime.strptime(date_s, "%Y-%m-%d").date()
    except ValueError:
        raise ValueError(f"date {date_s!r} is not YYYY-MM-DD") from None
    for fmt in ("%H:%M", "%H:%M:%S"):
        try:
            clock = datetime.strptime(time_s, fmt).time()
            break
        except ValueError:
            continue
    else:
        raise ValueError(f"time {time_s!r} is not HH:MM or HH:MM:SS")
    return datetime.combine(day, clock)


def save_model(model: SomModel, path) -> Path:
    """Write a model as a self-describing JSON document."""
    doc = {
        "format": MODEL_FORMAT,
        "format_version": FORMAT_VERSION,
        "dims": list(model.dims.shape),
        "codebook": model.codebook.vectors.tolist(),
        "node_ids": None if model.node_ids is None else model.node_ids.tolist(),
        "weight_matrix": None if model.weight_matrix is None else model.weight_matrix.tolist(),
        "normalization": _norm_to_dict(model.norm),
        "vocabulary": model.vocabulary,
        "alpha": model.alpha,
        "periods": list(model.periods),
        "config": _config_to_dict(model.config),
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n")
    return path


def load_model(path) -> SomModel:
    """Read back a model artifact written by save_model."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"model file not found: {path}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: not valid JSON: {exc}") from None
    if doc.get("format") != MODEL_FORMAT:
        raise DataError(f"{path}: not a {MODEL_FORMAT} document")
    if doc.get("format_version") != FORMAT_VERSION:
        raise DataError(f"{path}: unsupported format version {doc.get('format_version')}")
    dims = GridDims(*doc["dims"])
    node_ids = doc["node_ids"]
    weights = doc["weight_matrix"]
    return SomModel(
        codebook=Codebook(dims, np.array(doc["codebook"], dtype=np.float64)),
        norm=_norm_from_dict(doc["normalization"]),
        node_ids=None if node_ids is None else np.array(node_ids, dtype=np.int64),
        weight_matrix=None if weights is None else np.array(weights, dtype=np.float64),
        vocabulary=doc["vocabulary"],
        alpha=doc["alpha"],
        periods=tuple(doc["periods"]),
        config=_config_from_dict(doc["config"]),
    )


def write_assignments(path, assignment) -> Path:
    """Per-input BMU table: input index, flat node index, winning distance."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = ["index,bmu,distance"]
    for i, (b, d) in enumerate(zip(assignment.bmu, assignment.distance)):
        lines.append(f"{i},{int(b)},{float(d)!r}")
    path.write_text("\n".join(lines) + "\n")
    return path


def write_run_log(path, radii, qe_history) -> Path:
    """Per-epoch radius and quantization error."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = ["epoch,radius,qe"]
    for epoch, (r, qe) in enumerate(zip(radii, qe_history)):
        lines.append(f"{epoch},{float(r)!r},{float(qe)!r}")
    path.write_text("\n".join(lines) + "\n")
    return path


def write_report(report, path) -> Path:
    """Write an evaluation report as a JSON document."""
    doc = {"format": REPORT_FORMAT, "format_version": FORMAT_VERSION}
    doc.update(report.to_dict())
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")
    return path


def export_density(model: SomModel, data, axes, divisions, out_dir, prefix: str = "density"):
    """Write input-density matrices and node point lists for a projection.

    Everything is exported in raw (de-normalized) units. Two axes produce a
    single matrix plus one node list; three axes produce one matrix and one
    node list per slice along the first axis. Counts use clamp binning, so
    slice totals add up to the dataset size.
    """
    from .evaluate import frequency_tensor, project  # late import avoids a cycle

    dataset = as_dataset(data)
    axes = tuple(int(a) for a in axes)
    divisions = tuple(int(d) for d in np.atleast_1d(divisions))
    if len(axes) not in (2, 3):
        raise ValueError("density export needs 2 or 3 projection axes")
    if len(divisions) != len(axes):
        raise ValueError(f"need one division count per axis, got {divisions} for {axes}")
    raw_points = invert_normalization(model.norm, dataset.vectors)
    raw_nodes = invert_normalization(model.norm, model.codebook.vectors)
    pts = project(raw_points, axes)
    nodes = project(raw_nodes, axes)
    bounds = [(float(pts[:, a].min()), float(pts[:, a].max())) for a in range(pts.shape[1])]
    tensor = frequency_tensor(pts, bounds, divisions)

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    if len(axes) == 2:
        written.append(_write_matrix(out_dir / f"{prefix}.csv", tensor.counts))
        written.append(_write_points(out_dir / f"{prefix}_nodes.csv", nodes))
        return written

    # Slice along the first axis; a node belongs to the slice its own
    # (clamped) first coordinate falls in.
    lo, hi = bounds[0]
    node_slice = np.floor((nodes[:, 0] - lo) / (hi - lo) * divisions[0]).astype(np.int64)
    node_slice = np.clip(node_slice, 0, divisions[0] - 1)
    for s in range(divisions[0]):
        written.append(_write_matrix(out_dir / f"{prefix}_slice{s:03d}.csv", tensor.counts[s]))
        written.append(_write_points(out_dir / f"{prefix}_nodes_slice{s:03d}.csv",
                                     nodes[node_slice == s]))
    return written


def _write_matrix(path: Path, counts) -> Path:
    rows = np.atleast_2d(np.asarray(counts))
    path.write_text("\n".join(",".join(str(int(v)) for v in row) for row in rows) + "\n")
    return path


def _write_points(path: Path, points) -> Path:
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if pts.size == 0:
        path.write_text("")
        return path
    path.write_text("\n".join(",".join(repr(float(v)) for v in row) for row in pts) + "\n")
    return path


def _norm_to_dict(norm: NormalizationParams) -> dict:
    doc = {"kind": norm.kind}
    for name in ("minimum", "maximum", "mean", "std"):
        value = getattr(norm, name)
        doc[name] = None if value is None else np.asarray(value, dtype=np.float64).tolist()
    return doc


def _norm_from_dict(doc: dict) -> NormalizationParams:
    def arr(name):
        value = doc.get(name)
        return None if value is None else np.array(value, dtype=np.float64)

    return NormalizationParams(kind=doc["kind"], minimum=arr("minimum"),
                               maximum=arr("maximum"), mean=arr("mean"), std=arr("std"))


def _config_to_dict(config: TrainingConfig | None):
    if config is None:
        return None
    return {
        "dims": list(config.dims.shape),
        "epochs": config.epochs,
        "radius_start": config.radius_start,
        "radius_end": config.radius_end,
        "init": config.init,
        "seed": config.seed,
        "alpha": config.alpha,
        "id_mode": config.id_mode,
        "id_threshold": config.id_threshold,
    }


def _config_from_dict(doc):
    if doc is None:
        return None
    return TrainingConfig(
        dims=GridDims(*doc["dims"]),
        epochs=doc["epochs"],
        radius_start=doc["radius_start"],
        radius_end=doc["radius_end"],
        init=doc["init"],
        seed=doc["seed"],
        alpha=doc["alpha"],
        id_mode=doc["id_mode"],
        id_threshold=doc["id_threshold"],
    )
