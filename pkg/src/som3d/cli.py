"""Command-line orchestration: train, evaluate, export-density, inspect.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.
Diagnostics go to stderr; results go to files (or stdout for inspect).
"""

import argparse
import json
import os
import sys
from dataclasses import dataclass, fields
from pathlib import Path

from . import io as artifacts
from .errors import DataError, NumericError, UsageError
from .evaluate import PERIOD_SECTIONS, evaluate
from .grid import GridDims
from .preprocess import EncodingConfig, build_dataset
from .train import TrainingConfig, assign_bmus, radius_schedule, train

OUT_DIR_ENV = "SOM3D_OUT"


@dataclass
class RunConfig:
    """Flat bag of options shared by all subcommands.

    Values merge in order: defaults, then a JSON config file, then
    explicit command-line flags.
    """

    input: str | None = None
    model: str | None = None
    out: str | None = None
    grid: str | None = None
    epochs: int = 100
    normalize: str = "rescale"
    periods: str = "day"
    category_column: str | None = None
    alpha: float | None = None
    id_mode: str = "wta"
    divisions: str | None = None
    seed: int = 0
    strict: bool = False
    radius_start: float | None = None
    radius_end: float = 0.5
    init: str = "linear"
    axes: str | None = None
    date_column: str = "date"
    time_column: str = "time"
    lat_column: str = "latitude"
    lon_column: str = "longitude"

    def out_dir(self) -> Path:
        return Path(self.out or os.environ.get(OUT_DIR_ENV, "."))


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="som3d", description="3D self-organizing maps for "
                     "temporal-spatial point data")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_io(p, need_input=True, need_model=False):
        p.add_argument("--config", help="JSON config file; flags override its values")
        if need_input:
            p.add_argument("--input", help="CSV file of incident rows")
            p.add_argument("--date-column")
            p.add_argument("--time-column")
            p.add_argument("--lat-column")
            p.add_argument("--lon-column")
            p.add_argument("--category-column")
            p.add_argument("--strict", action="store_true", default=None,
                           help="abort on the first bad row instead of skipping")
        if need_model:
            p.add_argument("--model", help="model artifact written by `som3d train`")
        p.add_argument("--out", help=f"output directory (default ${OUT_DIR_ENV} or .)")

    p_train = sub.add_parser("train", help="train a map and write its artifacts")
    add_io(p_train)
    p_train.add_argument("--grid", help="node counts, e.g. 13x8x7")
    p_train.add_argument("--epochs", type=int)
    p_train.add_argument("--normalize", choices=("none", "rescale", "zscore"))
    p_train.add_argument("--periods", help="comma list from day,week,month")
    p_train.add_argument("--alpha", type=float, help="category mismatch penalty")
    p_train.add_argument("--id-mode", help="wta, prob, or hybrid:THRESHOLD")
    p_train.add_argument("--seed", type=int)
    p_train.add_argument("--radius-start", type=float)
    p_train.add_argument("--radius-end", type=float)
    p_train.add_argument("--init", choices=("linear", "random"))

    p_eval = sub.add_parser("evaluate", help="measure a trained map against data")
    add_io(p_eval, need_model=True)
    p_eval.add_argument("--divisions", help="reliability cell counts, e.g. 8x5x5")

    p_dens = sub.add_parser("export-density", help="write density grids and node lists")
    add_io(p_dens, need_model=True)
    p_dens.add_argument("--axes", help="comma list of axis names or indices, e.g. day,lat,lon")
    p_dens.add_argument("--divisions", help="cell counts matching --axes, e.g. 8x5x5")

    p_inspect = sub.add_parser("inspect", help="print a model summary")
    p_inspect.add_argument("--config", help="JSON config file; flags override its values")
    p_inspect.add_argument("--model", help="model artifact to summarize")

    return parser


def _merge_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig()
    valid = {f.name for f in fields(RunConfig)}
    config_path = getattr(args, "config", None)
    if config_path:
        path = Path(config_path)
        if not path.exists():
            raise UsageError(f"config file not found: {path}")
        try:
            doc = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise UsageError(f"{path}: not valid JSON: {exc}") from None
        if not isinstance(doc, dict):
            raise UsageError(f"{path}: config must be a JSON object")
        for key, value in doc.items():
            if key not in valid:
                raise UsageError(f"{path}: unknown config key {key!r}")
            setattr(cfg, key, value)
    for key, value in vars(args).items():
        if key in ("command", "config") or value is None:
            continue
        setattr(cfg, key, value)
    return cfg


def _parse_triple(text: str, what: str) -> tuple:
    parts = text.lower().replace("×", "x").split("x")
    try:
        values = tuple(int(p) for p in parts)
    except ValueError:
        raise UsageError(f"{what} must look like AxBxC, got {text!r}") from None
    if any(v < 1 for v in values):
        raise UsageError(f"{what} entries must be positive, got {text!r}")
    return values


def _parse_grid(cfg: RunConfig) -> GridDims:
    if not cfg.grid:
        raise UsageError("--grid LxMxN is required to train")
    values = _parse_triple(cfg.grid, "--grid")
    if len(values) != 3:
        raise UsageError(f"--grid needs exactly three sides, got {cfg.grid!r}")
    return GridDims(*values)


def _parse_id_mode(text: str) -> tuple:
    if text in ("wta", "prob"):
        return text, 0.5
    if text.startswith("hybrid:"):
        try:
            threshold = float(text.split(":", 1)[1])
        except ValueError:
            raise UsageError(f"--id-mode hybrid:T needs a number, got {text!r}") from None
        return "hybrid", threshold
    if text == "hybrid":
        return "hybrid", 0.5
    raise UsageError(f"--id-mode must be wta, prob or hybrid:T, got {text!r}")


def _parse_periods(text: str) -> tuple:
    periods = tuple(p.strip() for p in text.split(",") if p.strip())
    if not periods:
        raise UsageError("--periods needs at least one of day, week, month")
    for p in periods:
        if p not in ("day", "week", "month"):
            raise UsageError(f"--periods accepts day, week, month; got {p!r}")
    return periods


def _columns(cfg: RunConfig) -> artifacts.ColumnMapping:
    return artifacts.ColumnMapping(
        date=cfg.date_column,
        time=cfg.time_column,
        latitude=cfg.lat_column,
        longitude=cfg.lon_column,
        category=cfg.category_column,
    )


def _load_input(cfg: RunConfig):
    if not cfg.input:
        raise UsageError("--input FILE is required")
    records, errors = artifacts.load_records(cfg.input, _columns(cfg), strict=cfg.strict)
    for line, message in errors:
        print(f"som3d: {cfg.input}:{line}: skipped: {message}", file=sys.stderr)
    return records


def cmd_train(cfg: RunConfig) -> int:
    records = _load_input(cfg)
    dims = _parse_grid(cfg)
    id_mode, threshold = _parse_id_mode(cfg.id_mode)
    encoding = EncodingConfig(
        periods=_parse_periods(cfg.periods),
        normalize=cfg.normalize,
        use_categories=cfg.category_column is not None,
    )
    dataset = build_dataset(records, encoding)
    config = TrainingConfig(
        dims=dims,
        epochs=cfg.epochs,
        radius_start=cfg.radius_start,
        radius_end=cfg.radius_end,
        init=cfg.init,
        seed=cfg.seed,
        alpha=cfg.alpha,
        id_mode=id_mode,
        id_threshold=threshold,
    )
    model = train(dataset, config)
    assignment = assign_bmus(
        dataset.vectors, model.codebook.vectors,
        node_ids=model.node_ids if dataset.category_ids is not None else None,
        x_ids=dataset.category_ids if model.is_heterogeneous else None,
        alpha=(model.alpha or 0.0) if model.is_heterogeneous else 0.0,
    )
    out = cfg.out_dir()
    model_path = artifacts.save_model(model, out / "model.json")
    artifacts.write_assignments(out / "assignments.csv", assignment)
    artifacts.write_run_log(out / "run_log.csv", radius_schedule(config), model.qe_history)
    print(f"som3d: trained {dims.shape} map on {len(dataset)} inputs -> {model_path}",
          file=sys.stderr)
    return 0


def _encode_for_model(cfg: RunConfig, model):
    if model.is_heterogeneous and cfg.category_column is None:
        raise DataError(
            "encoding mismatch: model was trained with categories; pass --category-column"
        )
    if not model.periods:
        raise DataError("model artifact carries no period metadata; cannot encode data")
    records = _load_input(cfg)
    encoding = EncodingConfig(
        periods=model.periods,
        normalize=model.norm.kind,
        use_categories=model.is_heterogeneous,
        unknown_category="error" if cfg.strict else "skip",
    )
    try:
        return build_dataset(records, encoding, vocabulary=model.vocabulary, norm=model.norm)
    except DataError as exc:
        raise DataError(f"encoding mismatch between model and data: {exc}") from None


def _load_model(cfg: RunConfig):
    if not cfg.model:
        raise UsageError("--model FILE is required")
    return artifacts.load_model(cfg.model)


def cmd_evaluate(cfg: RunConfig) -> int:
    model = _load_model(cfg)
    dataset = _encode_for_model(cfg, model)
    divisions = _parse_triple(cfg.divisions or "8x5x5", "--divisions")
    if len(divisions) != 3:
        raise UsageError(f"--divisions needs three entries, got {cfg.divisions!r}")
    report = evaluate(dataset, model, divisions=divisions)
    path = artifacts.write_report(report, cfg.out_dir() / "report.json")
    print(f"som3d: QE={report.qe:.6g} TE={report.te:.6g} -> {path}", file=sys.stderr)
    return 0


def _parse_axes(cfg: RunConfig, model) -> tuple:
    if not cfg.axes:
        raise UsageError("--axes is required, e.g. --axes day,lat,lon")
    names = [*model.periods, "lat", "lon"]
    out = []
    for token in (t.strip() for t in cfg.axes.split(",")):
        if not token:
            continue
        if token in names:
            out.append(names.index(token))
        else:
            try:
                out.append(int(token))
            except ValueError:
                raise UsageError(
                    f"--axes token {token!r} is neither an index nor one of {names}"
                ) from None
    if len(out) not in (2, 3):
        raise UsageError("--axes needs 2 or 3 entries")
    return tuple(out)


def cmd_export_density(cfg: RunConfig) -> int:
    model = _load_model(cfg)
    dataset = _encode_for_model(cfg, model)
    axes = _parse_axes(cfg, model)
    names = [*model.periods, "lat", "lon"]
    if cfg.divisions:
        divisions = _parse_triple(cfg.divisions, "--divisions")
        if len(divisions) != len(axes):
            raise UsageError(
                f"--divisions needs {len(axes)} entries to match --axes, got {cfg.divisions!r}"
            )
    else:
        defaults = {"lat": 5, "lon": 5}
        divisions = tuple(
            PERIOD_SECTIONS.get(names[a], defaults.get(names[a], 8)) for a in axes
        )
    written = artifacts.export_density(model, dataset, axes, divisions, cfg.out_dir())
    print(f"som3d: wrote {len(written)} density files to {cfg.out_dir()}", file=sys.stderr)
    return 0


def cmd_inspect(cfg: RunConfig) -> int:
    model = _load_model(cfg)
    dims = model.dims
    lines = [
        f"grid: {dims.l}x{dims.m}x{dims.n} ({dims.n_nodes} nodes)",
        f"features: {model.codebook.d} numeric dimensions",
        f"periods: {', '.join(model.periods) if model.periods else '(none)'}",
        f"normalization: {model.norm.kind}",
    ]
    if model.is_heterogeneous:
        counts = {q: int((model.node_ids == q).sum()) for q in range(1, model.n_categories + 1)}
        unassigned = int((model.node_ids == 0).sum())
        lines.append(f"categories: {model.n_categories} (alpha={model.alpha!r})")
        if model.vocabulary:
            for q, label in enumerate(model.vocabulary, start=1):
                lines.append(f"  id {q}: {label} ({counts.get(q, 0)} nodes)")
        if unassigned:
            lines.append(f"  unassigned nodes: {unassigned}")
    if model.config is not None:
        start, end = model.config.radius_bounds()
        lines.append(
            f"training: {model.config.epochs} epochs, radius {start:g} -> {end:g}, "
            f"init={model.config.init}, seed={model.config.seed}"
        )
    print("\n".join(lines))
    return 0


_COMMANDS = {
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "export-density": cmd_export_density,
    "inspect": cmd_inspect,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = _merge_config(args)
        return _COMMANDS[args.command](cfg)
    except UsageError as exc:
        print(f"som3d: usage error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"som3d: data error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"som3d: numeric failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
