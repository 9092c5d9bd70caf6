"""Basic spatiotemporal clustering with a 3D map.

Walks the core loop end to end on synthetic incident points: normalize,
train, then ask the two questions that matter - how close is the map to
the data (quantization error), and does the lattice topology survive
(topographic error)? Finally, slice the space into cells and check that
nodes and their hit masses land where the data density is.

Run:  python demos/01_basic_clustering.py
"""

import numpy as np

from som3d import (
    EncodedDataset,
    GridDims,
    TrainingConfig,
    apply_normalization,
    fit_rescale,
    quantization_error,
    reliability,
    section_sums_r2,
    topographic_error,
    train,
)

rng = np.random.default_rng(7)

# ---------------------------------------------------------------------------
# Synthetic incidents: (time-of-day fraction, latitude, longitude).
# Three hotspots - an early-morning one downtown, an afternoon one uptown,
# and an evening one out east.
# ---------------------------------------------------------------------------
centers = np.array([
    [0.18, 40.62, -74.05],
    [0.52, 40.76, -73.92],
    [0.83, 40.70, -73.78],
])
spreads = np.array([
    [0.05, 0.020, 0.025],
    [0.06, 0.018, 0.020],
    [0.05, 0.022, 0.028],
])
which = rng.choice(3, size=5000, p=[0.4, 0.35, 0.25])
points = rng.normal(centers[which], spreads[which])
points[:, 0] = np.clip(points[:, 0], 0, 1 - 1e-9)

print(f"{len(points)} raw points; per-axis spans:",
      np.round(points.max(axis=0) - points.min(axis=0), 3))

# ---------------------------------------------------------------------------
# Rescale every axis to [0,1]. Without this, the time axis (span ~1.0)
# dwarfs latitude (span ~0.2) and the map's layers crumple.
# ---------------------------------------------------------------------------
norm = fit_rescale(points)
dataset = EncodedDataset(vectors=apply_normalization(norm, points), norm=norm)

# A 6x4x4 lattice: the longest side goes on axis 0, which carries the
# dominant data direction after the PCA-guided linear initialization.
config = TrainingConfig(dims=GridDims(6, 4, 4), epochs=100, seed=0)
model = train(dataset, config)

print(f"\ntrained {config.dims.shape} grid, {config.epochs} epochs")
print(f"quantization error: {quantization_error(dataset, model):.4f}")
print(f"topographic error:  {topographic_error(dataset, model):.4f}")
print(f"QE over epochs: {model.qe_history[0]:.4f} -> {model.qe_history[-1]:.4f}")

# ---------------------------------------------------------------------------
# Reliability: slice the cube into 4x4x4 cells and correlate three counts
# per cell - inputs, nodes, and node hit masses. Hits track the input
# density closely; raw node counts are a coarser, noisier mirror.
# ---------------------------------------------------------------------------
result = reliability(dataset, model, (4, 4, 4))
print(f"\nCOR(nodes, input) = {result.cor_nodes:.3f}")
print(f"COR(hits,  input) = {result.cor_hits:.3f}")
print("per-time-slice COR(hits, input):",
      [f"{c:.2f}" if c is not None else "None" for c in result.slice_cor_hits])

# Section sums down the time axis, with the least-squares consistency check.
sums, r2_nodes, r2_hits = section_sums_r2(dataset, model, sections=8, axis=0)
print("\nsection        " + " ".join(f"{i:>6d}" for i in range(8)))
print("input counts   " + " ".join(f"{v:>6d}" for v in sums.input_sums))
print("node counts    " + " ".join(f"{v:>6d}" for v in sums.node_sums))
print("hit masses     " + " ".join(f"{v:>6d}" for v in sums.hit_sums))
print(f"r^2 nodes~input: {r2_nodes:.3f}   r^2 hits~input: {r2_hits:.3f}")

# Where did the nodes end up, in raw units? Back through the normalization.
from som3d import invert_normalization

raw_nodes = invert_normalization(model.norm, model.codebook.vectors)
print("\nfirst layer of nodes (time, lat, lon), raw units:")
for row in raw_nodes[:4]:
    hours = row[0] * 24
    print(f"  {int(hours):02d}:{int(hours % 1 * 60):02d}  ({row[1]:.3f}, {row[2]:.3f})")
