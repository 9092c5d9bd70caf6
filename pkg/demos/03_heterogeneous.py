"""Mixed numeric and categorical training.

Incident data rarely stops at when-and-where; there is usually a label.
Labels have no geometry, so the distance between an input and a node
becomes L2(numeric parts) + alpha * (0 if the IDs match else 1), and each
node's ID comes from a weight matrix that spreads neighborhood-weighted
category counts over the lattice.

The demo trains on five categories with very unequal shares and shows the
documented failure mode: winner-take-all never hands a node to a category
that is a minority everywhere.

Run:  python demos/03_heterogeneous.py
"""

import numpy as np

from som3d import (
    EncodedDataset,
    GridDims,
    TrainingConfig,
    apply_normalization,
    assign_bmus,
    assign_ids_probabilistic,
    assign_ids_wta,
    fit_rescale,
    mixed_distance,
    per_category_reliability,
    train,
)

# ---------------------------------------------------------------------------
# The mixed metric on a single pair.
# ---------------------------------------------------------------------------
x = np.array([0.2, 0.4, 0.6])
node = np.array([0.2, 0.4, 0.6])
print("same spot, same ID:      ", mixed_distance(x, 2, node, 2, alpha=0.5))
print("same spot, different ID: ", mixed_distance(x, 2, node, 3, alpha=0.5))

# ---------------------------------------------------------------------------
# Five categories, shares 45/30/20/4/1 percent. The majors get their own
# clusters; the two rare ones ride along inside the majors' territory.
# ---------------------------------------------------------------------------
rng = np.random.default_rng(404)
shares = (0.45, 0.30, 0.20, 0.04, 0.01)
centers = np.array([[0.20, 40.60, -74.05], [0.50, 40.78, -73.90], [0.80, 40.68, -73.75]])
spreads = np.array([[0.05, 0.020, 0.022], [0.05, 0.018, 0.020], [0.05, 0.020, 0.025]])
counts = np.round(np.array(shares) * 5000).astype(int)
counts[0] += 5000 - counts.sum()
raw, ids = [], []
for cat, count in enumerate(counts):
    host = np.full(count, cat) if cat < 3 else rng.choice(3, size=count, p=np.array(shares[:3]) / 0.95)
    raw.append(rng.normal(centers[host], spreads[host] * (1.6 if cat == 3 else 1.0)))
    ids.extend([cat + 1] * count)
raw = np.vstack(raw)
raw[:, 0] = np.clip(raw[:, 0], 0, 1 - 1e-9)
ids = np.array(ids)
order = rng.permutation(len(raw))
raw, ids = raw[order], ids[order]

norm = fit_rescale(raw)
dataset = EncodedDataset(
    vectors=apply_normalization(norm, raw), norm=norm, category_ids=ids,
    one_hot=np.eye(5)[ids - 1], vocabulary=[f"type{q}" for q in range(1, 6)],
)

model = train(dataset, TrainingConfig(dims=GridDims(5, 4, 4), epochs=100, seed=0))
print(f"\nalpha (estimated category penalty): {model.alpha:.3f}")
print("nodes per ID under winner-take-all:",
      [int((model.node_ids == q).sum()) for q in range(1, 6)])

# ---------------------------------------------------------------------------
# Per-category reliability: for each ID, correlate that ID's inputs with
# the nodes carrying the ID and their hit masses. IDs that own no node
# are reported as absent, mirroring how rare categories starve.
# ---------------------------------------------------------------------------
print(f"\n{'id':>3} {'label':>6} {'inputs':>7} {'nodes':>6} {'hits':>6} "
      f"{'COR nodes':>10} {'COR hits':>9}")
for row in per_category_reliability(dataset, model, (8, 5, 5)):
    fmt = lambda v: f"{v:.2f}" if v is not None else "None"
    print(f"{row.id:>3} {row.label:>6} {row.n_inputs:>7} {row.n_nodes:>6} "
          f"{row.n_hits:>6} {fmt(row.cor_nodes):>10} {fmt(row.cor_hits):>9}")

# ---------------------------------------------------------------------------
# The alternatives on the final weight matrix: sampling IDs by row
# probability reaches rare categories occasionally but destabilizes the
# majors; the threshold hybrid only samples genuinely contested rows.
# ---------------------------------------------------------------------------
w = model.weight_matrix
for name, assigned in [
    ("winner-take-all", assign_ids_wta(w)),
    ("probabilistic  ", assign_ids_probabilistic(w, seed=1)),
    ("hybrid t=0.6   ", assign_ids_probabilistic(w, seed=1, threshold=0.6)),
]:
    print(f"{name} -> nodes per ID {[int((assigned == q).sum()) for q in range(1, 6)]}")

# How far do the hit shares drift from the input shares?
asg = assign_bmus(dataset.vectors, model.codebook.vectors, node_ids=model.node_ids,
                  x_ids=dataset.category_ids, alpha=model.alpha)
hits = np.bincount(asg.bmu, minlength=model.dims.n_nodes)
print("\nshare of inputs vs share of hits (by ID):")
for q in range(1, 6):
    input_share = (dataset.category_ids == q).mean()
    hit_share = hits[model.node_ids == q].sum() / len(dataset)
    print(f"  id {q}: input {input_share:5.1%}   hits {hit_share:5.1%}")
