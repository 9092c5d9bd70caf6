"""Initialization and batch training of the 3D map.

Training alternates a full BMU assignment pass with a batch update in
which every codebook vector becomes the Gaussian-weighted average of the
per-node Voronoi sums. Heterogeneous (numeric + categorical) data adds a
weight matrix W and a per-node category ID refreshed every epoch.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, DimensionMismatchError, NumericError
from .grid import Codebook, GridDims, grid_coordinates, pairwise_sq_grid_distances
from .preprocess import EncodedDataset, InputVector, NormalizationParams, as_dataset

# Node ID value meaning "no category assigned"; real IDs are 1-based.
UNASSIGNED_ID = 0


class RotationHazardWarning(UserWarning):
    """The longest grid side is not on axis 0; the map may rotate while training."""


@dataclass
class TrainingConfig:
    """Everything train() needs beyond the data itself."""

    dims: GridDims
    epochs: int = 100
    radius_start: float | None = None  # default max(l,m,n)/2
    radius_end: float = 0.5
    init: str = "linear"  # "linear" | "random"
    seed: int = 0
    alpha: float | None = None  # None -> estimated from the data
    id_mode: str = "wta"  # "wta" | "prob" | "hybrid"
    id_threshold: float = 0.5  # hybrid only: minimum winning proportion

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.radius_end <= 0:
            raise ValueError("radius_end must be > 0")
        if self.radius_start is not None and self.radius_start < self.radius_end:
            raise ValueError("radius_start must be >= radius_end")
        if self.init not in ("linear", "random"):
            raise ValueError(f"init must be 'linear' or 'random', got {self.init!r}")
        if self.alpha is not None and self.alpha < 0:
            raise ValueError("alpha must be nonnegative")
        if self.id_mode not in ("wta", "prob", "hybrid"):
            raise ValueError(f"id_mode must be 'wta', 'prob' or 'hybrid', got {self.id_mode!r}")
        if not 0.0 <= self.id_threshold <= 1.0:
            raise ValueError("id_threshold must lie in [0, 1]")

    def radius_bounds(self) -> tuple:
        start = self.radius_start
        if start is None:
            start = max(self.dims.shape) / 2.0
        return (start, min(self.radius_end, start))


def radius_schedule(config: TrainingConfig) -> np.ndarray:
    """Per-epoch neighborhood radius: linear decay from start to end."""
    start, end = config.radius_bounds()
    if config.epochs == 1:
        return np.array([start])
    steps = np.arange(config.epochs) / (config.epochs - 1)
    return start + (end - start) * steps


@dataclass
class SomModel:
    """A trained map: codebook plus whatever the data demanded."""

    codebook: Codebook
    norm: NormalizationParams
    node_ids: np.ndarray | None = None  # (n_nodes,) 1-based, 0 = unassigned
    weight_matrix: np.ndarray | None = None  # (n_nodes, k)
    vocabulary: list | None = None
    alpha: float | None = None
    periods: tuple = ()
    config: TrainingConfig | None = None
    qe_history: list = field(default_factory=list)

    @property
    def dims(self) -> GridDims:
        return self.codebook.dims

    @property
    def is_heterogeneous(self) -> bool:
        return self.node_ids is not None

    @property
    def n_categories(self) -> int:
        if self.weight_matrix is not None:
            return self.weight_matrix.shape[1]
        return len(self.vocabulary) if self.vocabulary else 0


@dataclass
class BmuAssignment:
    """Best and second-best node per input, with the winning distance."""

    bmu: np.ndarray
    second: np.ndarray | None  # None on single-node grids
    distance: np.ndarray


def pca(data) -> tuple:
    """Eigenvalues (descending) and orthonormal eigenvectors of the sample covariance.

    Eigenvectors are returned as columns, column i matching eigenvalue i.
    """
    x = np.asarray(data, dtype=np.float64)
    if x.ndim != 2:
        raise DimensionMismatchError(f"expected an (N, D) array, got shape {x.shape}")
    if len(np.unique(x, axis=0)) < 2:
        raise DataError("PCA needs at least 2 distinct points")
    centered = x - x.mean(axis=0)
    cov = centered.T @ centered / (len(x) - 1)
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1]
    return eigvals[order], eigvecs[:, order]


def linear_init(dims: GridDims, data) -> Codebook:
    """Spread the lattice over the data's top principal components.

    Grid axis 0 follows the largest-eigenvalue direction, axes 1 and 2 the
    next two; along each direction the node coordinates span
    [-2*sqrt(lambda), +2*sqrt(lambda)] around the data mean. Warns when the
    longest grid side is not axis 0, since such a map tends to rotate
    during training and lose its layer structure.
    """
    x = np.asarray(data, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] < 3:
        raise DimensionMismatchError("linear initialization needs at least 3 feature dimensions")
    if max(dims.shape) != dims.l:
        warnings.warn(
            f"grid {dims.shape} has its longest side off axis 0; "
            "expect rotation during training",
            RotationHazardWarning,
            stacklevel=2,
        )
    eigvals, eigvecs = pca(x)
    mean = x.mean(axis=0)
    coords = grid_coordinates(dims)
    vectors = np.tile(mean, (dims.n_nodes, 1))
    for axis, side in enumerate(dims.shape):
        if side == 1:
            continue
        factors = 2.0 * coords[:, axis] / (side - 1) - 1.0  # [-1, 1]
        span = 2.0 * np.sqrt(max(eigvals[axis], 0.0))
        vectors += np.outer(factors * span, eigvecs[:, axis])
    return Codebook(dims, vectors)


def random_init(dims: GridDims, data, seed) -> Codebook:
    """Independent uniform draws within the per-dimension data bounds."""
    x = np.asarray(data, dtype=np.float64)
    if x.ndim != 2:
        raise DimensionMismatchError(f"expected an (N, D) array, got shape {x.shape}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    vectors = rng.uniform(x.min(axis=0), x.max(axis=0), size=(dims.n_nodes, x.shape[1]))
    return Codebook(dims, vectors)


def gaussian_weight(d, r):
    """Neighborhood kernel exp(-d^2 / r^2); 1 at distance 0."""
    if r <= 0:
        raise ValueError(f"radius must be positive, got {r}")
    d = np.asarray(d, dtype=np.float64)
    if np.any(d < 0):
        raise ValueError("distances must be nonnegative")
    out = np.exp(-(d * d) / (r * r))
    return float(out) if out.ndim == 0 else out


def assign_bmus(vectors, codebook_vectors, node_ids=None, x_ids=None,
                alpha: float = 0.0, chunk: int = 2048) -> BmuAssignment:
    """Best and second-best matching node for every input row.

    Uses the plain L2 distance, plus alpha per category mismatch when both
    input IDs and node IDs are supplied. Ties go to the lowest node index.
    """
    x = np.asarray(vectors, dtype=np.float64)
    v = np.asarray(codebook_vectors, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.shape[1] != v.shape[1]:
        raise DimensionMismatchError(
            f"inputs have {x.shape[1]} dimensions, codebook has {v.shape[1]}"
        )
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    mixed = node_ids is not None and x_ids is not None
    n, n_nodes = x.shape[0], v.shape[0]
    bmu = np.empty(n, dtype=np.int64)
    second = np.empty(n, dtype=np.int64) if n_nodes > 1 else None
    distance = np.empty(n, dtype=np.float64)
    for lo in range(0, n, chunk):
        hi = min(lo + chunk, n)
        block = x[lo:hi]
        d = np.sqrt(((block[:, None, :] - v[None, :, :]) ** 2).sum(axis=2))
        if mixed:
            d += alpha * (np.asarray(x_ids)[lo:hi, None] != np.asarray(node_ids)[None, :])
        best = d.argmin(axis=1)
        rows = np.arange(hi - lo)
        bmu[lo:hi] = best
        distance[lo:hi] = d[rows, best]
        if n_nodes > 1:
            d[rows, best] = np.inf
            second[lo:hi] = d.argmin(axis=1)
    return BmuAssignment(bmu=bmu, second=second, distance=distance)


def find_bmu(x, model, alpha: float | None = None) -> tuple:
    """(BMU, second BMU) flat indices for one input; second is None on 1-node grids."""
    vectors, node_ids = _codebook_of(model)
    if isinstance(x, InputVector):
        numeric, x_id = x.numeric, x.category_id
    else:
        numeric, x_id = np.asarray(x, dtype=np.float64), None
    mixed = x_id is not None and node_ids is not None
    if alpha is None:
        alpha = getattr(model, "alpha", None)
    asg = assign_bmus(
        numeric[None, :],
        vectors,
        node_ids=node_ids if mixed else None,
        x_ids=np.array([x_id]) if mixed else None,
        alpha=(alpha or 0.0) if mixed else 0.0,
    )
    second = None if asg.second is None else int(asg.second[0])
    return int(asg.bmu[0]), second


def batch_epoch(codebook: Codebook, data, assignment: BmuAssignment, radius: float) -> Codebook:
    """One batch update: Gaussian-weighted average of per-node Voronoi sums.

    Nodes whose weighted denominator is zero keep their previous vector.
    """
    x = as_dataset(data).vectors
    h = gaussian_weight(np.sqrt(pairwise_sq_grid_distances(codebook.dims)), radius)
    return Codebook(codebook.dims, _batch_update(codebook.vectors, x, assignment.bmu, h))


def _batch_update(vectors, x, bmu, h) -> np.ndarray:
    n_nodes = vectors.shape[0]
    sums = np.zeros_like(vectors)
    np.add.at(sums, bmu, x)
    counts = np.bincount(bmu, minlength=n_nodes).astype(np.float64)
    numerator = h @ sums
    denominator = h @ counts
    updated = vectors.copy()
    alive = denominator > 0
    updated[alive] = numerator[alive] / denominator[alive, None]
    return updated


def estimate_alpha(vectors, seed, pairs: int = 1000) -> float:
    """Mean numeric distance over a random sample of distinct input pairs.

    Used as the default category-mismatch penalty so that the numeric and
    categorical distance terms have comparable magnitude.
    """
    x = np.asarray(vectors, dtype=np.float64)
    n = len(x)
    if n < 2:
        return 1.0
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    i = rng.integers(0, n, size=pairs)
    j = (i + rng.integers(1, n, size=pairs)) % n  # never the same row
    return float(np.linalg.norm(x[i] - x[j], axis=1).mean())


def compute_weight_matrix(h, f, c) -> np.ndarray:
    """Category weight per node: W = H @ (F^T @ C).

    h is the (nodes x nodes) Gaussian neighborhood matrix, f the
    (inputs x nodes) BMU indicator with exactly one 1 per row, and c the
    (inputs x k) one-hot category matrix. F^T C counts each node's hits
    per category; H then spreads those counts over the neighborhood.
    """
    h = np.asarray(h, dtype=np.float64)
    f = np.asarray(f, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise DimensionMismatchError(f"H must be square, got shape {h.shape}")
    if f.ndim != 2 or f.shape[1] != h.shape[0]:
        raise DimensionMismatchError(f"F shape {f.shape} does not match {h.shape[0]} nodes")
    if c.ndim != 2 or c.shape[0] != f.shape[0]:
        raise DimensionMismatchError(f"C shape {c.shape} does not match {f.shape[0]} inputs")
    for name, mat in (("F", f), ("C", c)):
        if not np.isin(mat, (0.0, 1.0)).all() or not (mat.sum(axis=1) == 1.0).all():
            raise ValueError(f"{name} must have exactly one 1 per row")
    return h @ (f.T @ c)


def assign_ids_wta(w) -> np.ndarray:
    """Winner-take-all node IDs: argmax per row, ties to the lowest column.

    Rows with no weight at all stay unassigned.
    """
    w = np.asarray(w, dtype=np.float64)
    if np.any(w < 0):
        raise ValueError("weight matrix entries must be nonnegative")
    ids = w.argmax(axis=1).astype(np.int64) + 1
    ids[w.sum(axis=1) == 0] = UNASSIGNED_ID
    return ids


def assign_ids_probabilistic(w, seed, threshold: float | None = None) -> np.ndarray:
    """Sample each node's ID from its row of W, normalized to probabilities.

    With a threshold, rows whose winning proportion reaches it take the
    argmax instead (the winner-take-all/random hybrid); only the remaining
    rows are sampled. Zero rows stay unassigned.
    """
    w = np.asarray(w, dtype=np.float64)
    if np.any(w < 0):
        raise ValueError("weight matrix entries must be nonnegative")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    k = w.shape[1]
    ids = np.full(w.shape[0], UNASSIGNED_ID, dtype=np.int64)
    for i, row in enumerate(w):
        total = row.sum()
        if total == 0:
            continue
        p = row / total
        if threshold is not None and p.max() >= threshold:
            ids[i] = row.argmax() + 1
        else:
            ids[i] = rng.choice(k, p=p) + 1
    return ids


def train(data, config: TrainingConfig) -> SomModel:
    """Train a map: repeated (BMU pass -> batch update) under a shrinking radius.

    Heterogeneous datasets (category IDs present) additionally recompute
    the weight matrix and per-node IDs after every BMU pass, and use the
    combined numeric + alpha * mismatch distance throughout. Deterministic
    for a fixed config, including all seeded randomness.
    """
    dataset = as_dataset(data)
    x = dataset.vectors
    if len(x) == 0:
        raise DataError("cannot train on an empty dataset")
    if not np.isfinite(x).all():
        raise NumericError("training data contains non-finite components")
    dims = config.dims
    mixed = dataset.category_ids is not None
    ss = np.random.SeedSequence(config.seed)
    init_seed, alpha_seed, id_seed = ss.spawn(3)

    alpha = config.alpha
    if mixed and alpha is None:
        alpha = estimate_alpha(x, np.random.default_rng(alpha_seed))

    if config.init == "linear":
        codebook = linear_init(dims, x)
    else:
        codebook = random_init(dims, x, np.random.default_rng(init_seed))
    vectors = codebook.vectors

    if mixed:
        if dataset.category_ids.min() < 1:
            raise DataError("category IDs must be 1-based positive integers")
        if dataset.one_hot is not None:
            k = dataset.one_hot.shape[1]
        else:
            k = int(dataset.category_ids.max())
        node_ids = np.full(dims.n_nodes, UNASSIGNED_ID, dtype=np.int64)
        id_rng = np.random.default_rng(id_seed)
    else:
        k = 0
        node_ids = None
        id_rng = None

    sq_grid = pairwise_sq_grid_distances(dims)
    weight_matrix = None
    qe_history = []
    for r in radius_schedule(config):
        h = np.exp(-sq_grid / (r * r))
        asg = assign_bmus(
            x, vectors,
            node_ids=node_ids if mixed else None,
            x_ids=dataset.category_ids if mixed else None,
            alpha=alpha if mixed else 0.0,
        )
        qe_history.append(float(asg.distance.mean()))
        if mixed:
            counts = np.zeros((dims.n_nodes, k), dtype=np.float64)
            np.add.at(counts, (asg.bmu, dataset.category_ids - 1), 1.0)
            weight_matrix = h @ counts
            node_ids = _assign_ids(weight_matrix, config, id_rng)
        vectors = _batch_update(vectors, x, asg.bmu, h)
        if not np.isfinite(vectors).all():
            raise NumericError("training produced non-finite codebook components")

    return SomModel(
        codebook=Codebook(dims, vectors),
        norm=dataset.norm,
        node_ids=node_ids,
        weight_matrix=weight_matrix,
        vocabulary=dataset.vocabulary,
        alpha=alpha,
        periods=dataset.periods,
        config=config,
        qe_history=qe_history,
    )


def _assign_ids(w, config: TrainingConfig, rng) -> np.ndarray:
    if config.id_mode == "wta":
        return assign_ids_wta(w)
    if config.id_mode == "prob":
        return assign_ids_probabilistic(w, rng)
    return assign_ids_probabilistic(w, rng, threshold=config.id_threshold)


def _codebook_of(model):
    if isinstance(model, SomModel):
        return model.codebook.vectors, model.node_ids
    if isinstance(model, Codebook):
        return model.vectors, None
    return np.asarray(model, dtype=np.float64), None
