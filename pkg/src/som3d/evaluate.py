"""Map quality and reliability measurements.

Reliability slices the bounded input space into a regular grid of cells,
counts inputs, nodes, and node hit masses per cell, and compares the
resulting frequency tensors with Pearson correlation. Hit masses are
binned at the node's own location, so correlating them with the input
tensor asks whether nodes sit where the data is and absorb proportional
shares of it.
"""

from dataclasses import dataclass

import numpy as np

from .errors import (
    DataError,
    DimensionMismatchError,
    NumericError,
    UndefinedCorrelationError,
)
from .grid import grid_coordinates
from .preprocess import as_dataset
from .train import SomModel, assign_bmus

# First-axis section count per time period when building projection reports.
PERIOD_SECTIONS = {"week": 7, "month": 12}


@dataclass
class FrequencyTensor:
    """Counts of points per cell over a sliced bounding box."""

    divisions: tuple
    bounds: tuple  # per-axis (min, max)
    counts: np.ndarray

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def frequency_tensor(points, bounds, divisions, weights=None) -> FrequencyTensor:
    """Bin points into a regular grid; out-of-bounds points go to edge cells.

    Optional integer weights turn the count into a weighted mass (used for
    binning node hit counts at node locations).
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    divisions = tuple(int(d) for d in np.atleast_1d(divisions))
    bounds = tuple((float(lo), float(hi)) for lo, hi in bounds)
    if len(divisions) != len(bounds) or pts.shape[1] != len(divisions):
        raise DimensionMismatchError(
            f"points ({pts.shape[1]}D), bounds ({len(bounds)}) and divisions "
            f"({len(divisions)}) must agree"
        )
    if any(d < 1 for d in divisions):
        raise ValueError("every division count must be positive")
    for axis, (lo, hi) in enumerate(bounds):
        if hi <= lo:
            raise ValueError(f"axis {axis} bounds ({lo}, {hi}) must satisfy max > min")
    counts = np.zeros(divisions, dtype=np.int64)
    cell = []
    for axis, (lo, hi) in enumerate(bounds):
        idx = np.floor((pts[:, axis] - lo) / (hi - lo) * divisions[axis]).astype(np.int64)
        cell.append(np.clip(idx, 0, divisions[axis] - 1))
    if weights is None:
        np.add.at(counts, tuple(cell), 1)
    else:
        np.add.at(counts, tuple(cell), np.asarray(weights, dtype=np.int64))
    return FrequencyTensor(divisions=divisions, bounds=bounds, counts=counts)


def marginalize(tensor: FrequencyTensor, axes) -> FrequencyTensor:
    """Sum a frequency tensor down to the kept axes (in the given order)."""
    axes = tuple(axes)
    dropped = tuple(i for i in range(len(tensor.divisions)) if i not in axes)
    counts = tensor.counts.sum(axis=dropped)
    counts = np.transpose(counts, [sorted(axes).index(a) for a in axes])
    return FrequencyTensor(
        divisions=tuple(tensor.divisions[a] for a in axes),
        bounds=tuple(tensor.bounds[a] for a in axes),
        counts=counts,
    )


def correlation(x, y) -> float:
    """Pearson correlation over all cells of two equally shaped tensors."""
    xa = _cells(x)
    ya = _cells(y)
    if xa.shape != ya.shape:
        raise DimensionMismatchError(f"tensor shapes differ: {xa.shape} vs {ya.shape}")
    xd = xa.ravel() - xa.mean()
    yd = ya.ravel() - ya.mean()
    sx = float(xd @ xd)
    sy = float(yd @ yd)
    if sx == 0.0 or sy == 0.0:
        sides = [name for name, s in (("first", sx), ("second", sy)) if s == 0.0]
        raise UndefinedCorrelationError(
            f"correlation undefined: {' and '.join(sides)} operand constant"
        )
    return float(np.clip((xd @ yd) / np.sqrt(sx * sy), -1.0, 1.0))


def r_squared(x, y) -> float:
    """R^2 of the ordinary least-squares line (with intercept) fitting y to x."""
    xa = np.asarray(x, dtype=np.float64).ravel()
    ya = np.asarray(y, dtype=np.float64).ravel()
    if xa.shape != ya.shape:
        raise DimensionMismatchError(f"shapes differ: {xa.shape} vs {ya.shape}")
    xd = xa - xa.mean()
    var_x = float(xd @ xd)
    if var_x == 0.0:
        raise NumericError("regression undefined: predictor values are constant")
    slope = float(xd @ (ya - ya.mean())) / var_x
    intercept = ya.mean() - slope * xa.mean()
    residual = ya - (intercept + slope * xa)
    ss_tot = float(((ya - ya.mean()) ** 2).sum())
    if ss_tot == 0.0:
        raise NumericError("regression undefined: response values are constant")
    return 1.0 - float(residual @ residual) / ss_tot


def project(vectors, axes) -> np.ndarray:
    """Keep only the listed coordinate axes of each vector."""
    x = np.asarray(vectors, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    axes = tuple(int(a) for a in axes)
    if not axes:
        raise ValueError("at least one axis must be kept")
    if len(set(axes)) != len(axes):
        raise ValueError(f"projection axes must be distinct, got {axes}")
    for a in axes:
        if not 0 <= a < x.shape[1]:
            raise IndexError(f"axis {a} out of range for {x.shape[1]}-dimensional vectors")
    return x[:, axes].copy()


def quantization_error(data, model: SomModel) -> float:
    """Mean distance from each input to its BMU (mixed distance when categorical)."""
    dataset = as_dataset(data)
    if len(dataset) == 0:
        raise DataError("quantization error of an empty dataset is undefined")
    return float(_assign(dataset, model).distance.mean())


def topographic_error(data, model: SomModel, connectivity: int = 6) -> float:
    """Fraction of inputs whose first and second BMU are not grid-adjacent."""
    dataset = as_dataset(data)
    if len(dataset) == 0:
        raise DataError("topographic error of an empty dataset is undefined")
    if model.dims.n_nodes < 2:
        raise NumericError("topographic error needs a grid with at least 2 nodes")
    asg = _assign(dataset, model)
    coords = grid_coordinates(model.dims)
    step = np.abs(coords[asg.bmu] - coords[asg.second])
    if connectivity == 6:
        adjacent = step.sum(axis=1) == 1
    elif connectivity == 18:
        adjacent = (step.max(axis=1) == 1) & (step.sum(axis=1) <= 2)
    elif connectivity == 26:
        adjacent = step.max(axis=1) == 1
    else:
        raise ValueError(f"connectivity must be 6, 18 or 26, got {connectivity}")
    return float(1.0 - adjacent.mean())


@dataclass
class ReliabilityResult:
    """Overall and per-slice correlations of map tensors against the input."""

    cor_nodes: float | None
    cor_hits: float | None
    slice_cor_nodes: list  # None where a slice is degenerate
    slice_cor_hits: list
    input_tensor: FrequencyTensor
    nodes_tensor: FrequencyTensor
    hits_tensor: FrequencyTensor


def reliability(data, model: SomModel, divisions, axes=None) -> ReliabilityResult:
    """Correlate node and hit-mass tensors against the input tensor.

    All three tensors share bounds taken from the input data on the chosen
    axes. Slice correlations run along the first axis. Wherever a tensor
    is constant the correlation is reported as None rather than a
    fabricated value; that applies per slice and overall.
    """
    dataset = as_dataset(data)
    divisions = tuple(int(d) for d in np.atleast_1d(divisions))
    if axes is None:
        axes = tuple(range(len(divisions)))
    pts = project(dataset.vectors, axes)
    nodes = project(model.codebook.vectors, axes)
    bounds = [(float(pts[:, a].min()), float(pts[:, a].max())) for a in range(pts.shape[1])]
    input_t = frequency_tensor(pts, bounds, divisions)
    nodes_t = frequency_tensor(nodes, bounds, divisions)
    hit_counts = np.bincount(_assign(dataset, model).bmu, minlength=model.dims.n_nodes)
    hits_t = frequency_tensor(nodes, bounds, divisions, weights=hit_counts)
    slice_nodes = []
    slice_hits = []
    for s in range(divisions[0]):
        slice_nodes.append(_maybe_correlation(nodes_t.counts[s], input_t.counts[s]))
        slice_hits.append(_maybe_correlation(hits_t.counts[s], input_t.counts[s]))
    return ReliabilityResult(
        cor_nodes=_maybe_correlation(nodes_t, input_t),
        cor_hits=_maybe_correlation(hits_t, input_t),
        slice_cor_nodes=slice_nodes,
        slice_cor_hits=slice_hits,
        input_tensor=input_t,
        nodes_tensor=nodes_t,
        hits_tensor=hits_t,
    )


@dataclass
class SectionSums:
    """Input, node, and hit totals per section along one axis."""

    input_sums: np.ndarray
    node_sums: np.ndarray
    hit_sums: np.ndarray


def section_sums(data, model: SomModel, sections: int, axis: int = 0) -> SectionSums:
    """Totals of inputs, nodes, and node hit masses per section of one axis."""
    if sections < 2:
        raise ValueError("at least 2 sections are required")
    dataset = as_dataset(data)
    pts = dataset.vectors[:, axis]
    nodes = model.codebook.vectors[:, axis]
    bounds = [(float(pts.min()), float(pts.max()))]
    input_t = frequency_tensor(pts, bounds, (sections,))
    nodes_t = frequency_tensor(nodes, bounds, (sections,))
    hit_counts = np.bincount(_assign(dataset, model).bmu, minlength=model.dims.n_nodes)
    hits_t = frequency_tensor(nodes, bounds, (sections,), weights=hit_counts)
    return SectionSums(input_t.counts.copy(), nodes_t.counts.copy(), hits_t.counts.copy())


def section_sums_r2(data, model: SomModel, sections: int, axis: int = 0) -> tuple:
    """Section sums plus the R^2 of regressing node and hit sums on input sums."""
    sums = section_sums(data, model, sections, axis)
    return sums, r_squared(sums.input_sums, sums.node_sums), r_squared(sums.input_sums, sums.hit_sums)


@dataclass
class CategoryReliability:
    """Reliability of one category's nodes and hits against its inputs.

    present is False when no node carries the ID; correlations are None
    when degenerate (or absent).
    """

    id: int
    label: str | None
    n_inputs: int
    n_nodes: int
    n_hits: int
    cor_nodes: float | None
    cor_hits: float | None
    present: bool


def per_category_reliability(data, model: SomModel, divisions, axes=None) -> list:
    """Reliability per category ID, over ID-matching inputs, nodes, and hits.

    A node's hits are all inputs whose BMU it is, so per-ID hit totals sum
    to the number of inputs assigned to ID-carrying nodes.
    """
    dataset = as_dataset(data)
    if dataset.category_ids is None or not model.is_heterogeneous:
        raise DataError("per-category reliability needs categorical data and node IDs")
    divisions = tuple(int(d) for d in np.atleast_1d(divisions))
    if axes is None:
        axes = tuple(range(len(divisions)))
    pts = project(dataset.vectors, axes)
    nodes = project(model.codebook.vectors, axes)
    # Bounds from the full input data anchor every per-ID tensor to the
    # same geometry.
    bounds = [(float(pts[:, a].min()), float(pts[:, a].max())) for a in range(pts.shape[1])]
    bmu = _assign(dataset, model).bmu
    hit_counts = np.bincount(bmu, minlength=model.dims.n_nodes)
    out = []
    for q in range(1, model.n_categories + 1):
        label = model.vocabulary[q - 1] if model.vocabulary else None
        node_mask = model.node_ids == q
        input_mask = dataset.category_ids == q
        n_nodes = int(node_mask.sum())
        n_hits = int(hit_counts[node_mask].sum())
        if n_nodes == 0:
            out.append(CategoryReliability(q, label, int(input_mask.sum()), 0, n_hits,
                                           None, None, present=False))
            continue
        input_q = frequency_tensor(pts[input_mask], bounds, divisions)
        nodes_q = frequency_tensor(nodes[node_mask], bounds, divisions)
        hits_q = frequency_tensor(nodes[node_mask], bounds, divisions,
                                  weights=hit_counts[node_mask])
        out.append(CategoryReliability(
            q, label, int(input_mask.sum()), n_nodes, n_hits,
            _maybe_correlation(nodes_q, input_q),
            _maybe_correlation(hits_q, input_q),
            present=True,
        ))
    return out


@dataclass
class ProjectionReport:
    """One subspace's reliability block: CORs per slice, sums, and R^2."""

    name: str
    axes: tuple
    divisions: tuple
    cor_nodes: float | None
    cor_hits: float | None
    slice_cor_nodes: list
    slice_cor_hits: list
    input_sums: list
    node_sums: list
    hit_sums: list
    r2_nodes: float | None
    r2_hits: float | None


@dataclass
class PlaneReport:
    """Correlations on the plane spanned by the first two time periods."""

    axes: tuple
    divisions: tuple
    cor_nodes: float | None
    cor_hits: float | None


@dataclass
class EvaluationReport:
    """Everything measured for one model/dataset pair."""

    qe: float
    te: float
    divisions: tuple
    n_inputs: int
    total_hits: int
    projections: list
    plane: PlaneReport | None = None
    categories: list | None = None

    def to_dict(self) -> dict:
        return {
            "qe": self.qe,
            "te": self.te,
            "divisions": list(self.divisions),
            "n_inputs": self.n_inputs,
            "total_hits": self.total_hits,
            "projections": [
                {
                    "name": p.name,
                    "axes": list(p.axes),
                    "divisions": list(p.divisions),
                    "cor_nodes": p.cor_nodes,
                    "cor_hits": p.cor_hits,
                    "slice_cor_nodes": p.slice_cor_nodes,
                    "slice_cor_hits": p.slice_cor_hits,
                    "input_sums": p.input_sums,
                    "node_sums": p.node_sums,
                    "hit_sums": p.hit_sums,
                    "r2_nodes": p.r2_nodes,
                    "r2_hits": p.r2_hits,
                }
                for p in self.projections
            ],
            "plane": None if self.plane is None else {
                "axes": list(self.plane.axes),
                "divisions": list(self.plane.divisions),
                "cor_nodes": self.plane.cor_nodes,
                "cor_hits": self.plane.cor_hits,
            },
            "categories": None if self.categories is None else [
                {
                    "id": c.id,
                    "label": c.label,
                    "n_inputs": c.n_inputs,
                    "n_nodes": c.n_nodes,
                    "n_hits": c.n_hits,
                    "cor_nodes": c.cor_nodes,
                    "cor_hits": c.cor_hits,
                    "present": c.present,
                }
                for c in self.categories
            ],
        }


def evaluate(data, model: SomModel, divisions=(8, 5, 5), connectivity: int = 6) -> EvaluationReport:
    """Assemble the full report: QE, TE, and a reliability block per subspace.

    With a single time period the one projection is (time, lat, lon). With
    several, each period gets its own (period, lat, lon) projection - the
    first axis split into divisions[0] sections for the day period, one
    section per weekday or month otherwise - plus a period-vs-period plane
    block for the first two periods. Categorical models add per-ID rows.
    """
    dataset = as_dataset(data)
    d = dataset.vectors.shape[1]
    divisions = tuple(int(v) for v in divisions)
    if len(divisions) != 3:
        raise ValueError("divisions must have three entries (time, axis1, axis2)")

    qe = quantization_error(dataset, model)
    te = topographic_error(dataset, model, connectivity=connectivity)
    hit_total = len(dataset)  # every input lands on exactly one node

    periods = dataset.periods
    if periods:
        n_time = len(periods)
        spatial = (n_time, n_time + 1)
        proj_specs = [
            (f"{p}-lat-lon", (i, *spatial), _sections_for(p, divisions[0]))
            for i, p in enumerate(periods)
        ]
    else:
        if d != 3:
            raise DimensionMismatchError(
                "datasets without period metadata must be 3-dimensional to evaluate"
            )
        proj_specs = [("time-lat-lon", (0, 1, 2), divisions[0])]

    projections = []
    for name, axes, sections in proj_specs:
        proj_div = (sections, divisions[1], divisions[2])
        rel = _maybe(lambda: reliability(dataset, model, proj_div, axes=axes))
        sums = section_sums(dataset, model, sections, axis=axes[0])
        projections.append(ProjectionReport(
            name=name,
            axes=axes,
            divisions=proj_div,
            cor_nodes=None if rel is None else rel.cor_nodes,
            cor_hits=None if rel is None else rel.cor_hits,
            slice_cor_nodes=[] if rel is None else rel.slice_cor_nodes,
            slice_cor_hits=[] if rel is None else rel.slice_cor_hits,
            input_sums=[int(v) for v in sums.input_sums],
            node_sums=[int(v) for v in sums.node_sums],
            hit_sums=[int(v) for v in sums.hit_sums],
            r2_nodes=_maybe(lambda: r_squared(sums.input_sums, sums.node_sums)),
            r2_hits=_maybe(lambda: r_squared(sums.input_sums, sums.hit_sums)),
        ))

    plane = None
    if len(periods) >= 2:
        plane_div = (_sections_for(periods[0], divisions[0]),
                     _sections_for(periods[1], divisions[0]))
        rel = _maybe(lambda: reliability(dataset, model, plane_div, axes=(0, 1)))
        plane = PlaneReport(
            axes=(0, 1),
            divisions=plane_div,
            cor_nodes=None if rel is None else rel.cor_nodes,
            cor_hits=None if rel is None else rel.cor_hits,
        )

    categories = None
    if model.is_heterogeneous and dataset.category_ids is not None:
        first = projections[0]
        categories = per_category_reliability(dataset, model, first.divisions, axes=first.axes)

    return EvaluationReport(
        qe=qe,
        te=te,
        divisions=divisions,
        n_inputs=len(dataset),
        total_hits=hit_total,
        projections=projections,
        plane=plane,
        categories=categories,
    )


def _sections_for(period: str, default: int) -> int:
    return PERIOD_SECTIONS.get(period, default)


def _assign(dataset, model: SomModel):
    mixed = dataset.category_ids is not None and model.is_heterogeneous
    return assign_bmus(
        dataset.vectors,
        model.codebook.vectors,
        node_ids=model.node_ids if mixed else None,
        x_ids=dataset.category_ids if mixed else None,
        alpha=(model.alpha or 0.0) if mixed else 0.0,
    )


def _cells(x) -> np.ndarray:
    if isinstance(x, FrequencyTensor):
        return np.asarray(x.counts, dtype=np.float64)
    return np.asarray(x, dtype=np.float64)


def _maybe_correlation(x, y):
    try:
        return correlation(x, y)
    except UndefinedCorrelationError:
        return None


def _maybe(fn):
    try:
        return fn()
    except NumericError:
        return None
