"""Lattice geometry and the distance functions everything else consumes.

The node lattice is an l x m x n box. Axis 0 is the layer axis (the side
that should be longest and carry the dominant data direction); nodes are
enumerated row-major, flat index = a*m*n + b*n + c.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError

# Face / face+edge / face+edge+corner adjacency.
CONNECTIVITIES = (6, 18, 26)


@dataclass(frozen=True)
class GridDims:
    """Node counts along the three lattice axes."""

    l: int
    m: int
    n: int

    def __post_init__(self):
        for name in ("l", "m", "n"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ValueError(f"grid side {name} must be a positive integer, got {value!r}")
            object.__setattr__(self, name, int(value))

    @property
    def n_nodes(self) -> int:
        return self.l * self.m * self.n

    @property
    def shape(self) -> tuple:
        return (self.l, self.m, self.n)


@dataclass
class Codebook:
    """One feature-space vector per lattice node, in flat node order."""

    dims: GridDims
    vectors: np.ndarray  # (n_nodes, D) float

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors, dtype=np.float64)
        if self.vectors.ndim != 2 or self.vectors.shape[0] != self.dims.n_nodes:
            raise ValueError(
                f"codebook needs {self.dims.n_nodes} vectors, got array of shape {self.vectors.shape}"
            )
        if not np.isfinite(self.vectors).all():
            raise ValueError("codebook vectors must be finite")

    @property
    def d(self) -> int:
        return self.vectors.shape[1]


def flat_index(coord, dims: GridDims) -> int:
    """Row-major flat index of lattice coordinate (a, b, c)."""
    a, b, c = coord
    if not (0 <= a < dims.l and 0 <= b < dims.m and 0 <= c < dims.n):
        raise IndexError(f"coordinate {coord!r} out of range for grid {dims.shape}")
    return a * dims.m * dims.n + b * dims.n + c


def grid_coordinate(index: int, dims: GridDims) -> tuple:
    """Inverse of flat_index."""
    if not 0 <= index < dims.n_nodes:
        raise IndexError(f"node index {index} out of range for grid {dims.shape}")
    a, rest = divmod(index, dims.m * dims.n)
    b, c = divmod(rest, dims.n)
    return (a, b, c)


def grid_coordinates(dims: GridDims) -> np.ndarray:
    """All lattice coordinates as an (n_nodes, 3) int array in flat order."""
    grid = np.indices(dims.shape).reshape(3, -1).T
    return np.ascontiguousarray(grid)


def grid_distance(i: int, j: int, dims: GridDims) -> float:
    """Euclidean distance between the lattice coordinates of two nodes.

    This is distance in the grid, not between codebook vectors.
    """
    ca = np.array(grid_coordinate(i, dims), dtype=np.float64)
    cb = np.array(grid_coordinate(j, dims), dtype=np.float64)
    return float(np.linalg.norm(ca - cb))


def pairwise_sq_grid_distances(dims: GridDims) -> np.ndarray:
    """Squared lattice distance between every node pair, (n_nodes, n_nodes)."""
    coords = grid_coordinates(dims)
    diff = coords[:, None, :] - coords[None, :, :]
    return (diff * diff).sum(axis=2).astype(np.float64)


def grid_neighbors(i: int, dims: GridDims, connectivity: int = 6) -> set:
    """Flat indices of the lattice neighbors of node i, clipped at borders.

    connectivity 6 gives face neighbors (+-1 along one axis), 18 adds
    edge neighbors, 26 adds corners.
    """
    if connectivity not in CONNECTIVITIES:
        raise ValueError(f"connectivity must be one of {CONNECTIVITIES}, got {connectivity}")
    a, b, c = grid_coordinate(i, dims)
    out = set()
    for da in (-1, 0, 1):
        for db in (-1, 0, 1):
            for dc in (-1, 0, 1):
                if (da, db, dc) == (0, 0, 0):
                    continue
                manhattan = abs(da) + abs(db) + abs(dc)
                if connectivity == 6 and manhattan > 1:
                    continue
                if connectivity == 18 and manhattan > 2:
                    continue
                na, nb, nc = a + da, b + db, c + dc
                if 0 <= na < dims.l and 0 <= nb < dims.m and 0 <= nc < dims.n:
                    out.add(flat_index((na, nb, nc), dims))
    return out


def euclidean_distance(x, y) -> float:
    """Plain L2 distance between two equal-length vectors."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise DimensionMismatchError(f"vector shapes differ: {x.shape} vs {y.shape}")
    return float(np.linalg.norm(x - y))


def mixed_distance(x_numeric, x_id, node_vector, node_id, alpha: float) -> float:
    """Distance between a categorized input and a categorized node.

    Sum of the numeric L2 distance and alpha times the category mismatch
    indicator (0 when the ID numbers agree, 1 otherwise). An unassigned
    node never matches.
    """
    if alpha < 0:
        raise ValueError(f"alpha must be nonnegative, got {alpha}")
    mismatch = 0.0 if x_id == node_id else 1.0
    return euclidean_distance(x_numeric, node_vector) + alpha * mismatch
