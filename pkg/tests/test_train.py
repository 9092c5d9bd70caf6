from datetime import datetime

import numpy as np
import pytest
from numpy.testing import assert_allclose

from som3d import (
    BmuAssignment,
    Codebook,
    EncodedDataset,
    GridDims,
    RotationHazardWarning,
    TrainingConfig,
    UNASSIGNED_ID,
    assign_bmus,
    assign_ids_probabilistic,
    assign_ids_wta,
    batch_epoch,
    compute_weight_matrix,
    estimate_alpha,
    find_bmu,
    gaussian_weight,
    grid_distance,
    linear_init,
    pca,
    radius_schedule,
    random_init,
    train,
)
from som3d.errors import DataError, DimensionMismatchError, NumericError
from som3d.preprocess import NormalizationParams


def brute_force_batch_update(vectors, data, bmu, dims, radius):
    """Direct evaluation of the batch rule, one input at a time.

    Sums gaussian_weight(grid_distance(bmu(x), i), radius) * x over every
    individual input, with no per-node grouping.
    """
    n_nodes = len(vectors)
    out = vectors.copy()
    for i in range(n_nodes):
        num = np.zeros(vectors.shape[1])
        den = 0.0
        for x, c in zip(data, bmu):
            h = gaussian_weight(grid_distance(int(c), i, dims), radius)
            num += h * x
            den += h
        if den > 0:
            out[i] = num / den
    return out


class TestPca:
    def test_line_along_x(self):
        pts = np.array([[t, 0.0, 0.0] for t in np.linspace(-2, 2, 9)])
        eigvals, eigvecs = pca(pts)
        assert_allclose(np.abs(eigvecs[:, 0]), [1, 0, 0], atol=1e-12)
        assert_allclose(eigvals[1:], 0.0, atol=1e-12)

    def test_isotropic_cloud(self):
        rng = np.random.default_rng(9)
        pts = rng.normal(size=(4000, 3))
        eigvals, _ = pca(pts)
        assert eigvals[0] / eigvals[-1] < 1.2

    def test_hand_covariance(self):
        pts = np.array([[1, 0], [-1, 0], [0, 0.5], [0, -0.5]], dtype=float)
        eigvals, eigvecs = pca(pts)
        assert_allclose(eigvals, [2 / 3, 1 / 6], rtol=0, atol=1e-15)
        assert_allclose(np.abs(eigvecs[:, 0]), [1, 0], atol=1e-12)
        assert_allclose(np.abs(eigvecs[:, 1]), [0, 1], atol=1e-12)

    def test_orthonormality(self):
        rng = np.random.default_rng(10)
        pts = rng.normal(size=(60, 5)) @ rng.normal(size=(5, 5))
        _, eigvecs = pca(pts)
        assert np.abs(eigvecs.T @ eigvecs - np.eye(5)).max() < 1e-9

    def test_needs_two_distinct_points(self):
        with pytest.raises(DataError):
            pca(np.ones((5, 3)))


class TestLinearInit:
    def test_single_node_at_mean(self):
        rng = np.random.default_rng(11)
        pts = rng.normal(size=(30, 3))
        cb = linear_init(GridDims(1, 1, 1), pts)
        assert_allclose(cb.vectors[0], pts.mean(axis=0), atol=1e-12)

    def test_layer_axis_follows_dominant_variance(self):
        rng = np.random.default_rng(12)
        pts = rng.normal(size=(500, 3)) * np.array([10.0, 2.0, 0.5])
        cb = linear_init(GridDims(7, 6, 6), pts)
        grid = cb.vectors.reshape(7, 6, 6, 3)
        # Moving along grid axis 0 sweeps the high-variance data axis 0.
        sweep = grid[-1, 0, 0] - grid[0, 0, 0]
        assert np.abs(sweep[0]) > 10 * max(np.abs(sweep[1]), np.abs(sweep[2]))

    def test_rotation_hazard_warning(self):
        rng = np.random.default_rng(12)
        pts = rng.normal(size=(500, 3)) * np.array([10.0, 2.0, 0.5])
        with pytest.warns(RotationHazardWarning):
            linear_init(GridDims(6, 7, 6), pts)

    def test_span_covers_two_sigma(self):
        rng = np.random.default_rng(13)
        pts = rng.normal(size=(2000, 3)) * np.array([4.0, 2.0, 1.0])
        eigvals, _ = pca(pts)
        cb = linear_init(GridDims(5, 4, 3), pts)
        extent = cb.vectors[:, 0].max() - cb.vectors[:, 0].min()
        assert_allclose(extent, 4.0 * np.sqrt(eigvals[0]), rtol=0.05)


class TestRandomInit:
    def test_deterministic_per_seed(self):
        pts = np.random.default_rng(14).normal(size=(40, 3))
        a = random_init(GridDims(3, 2, 2), pts, seed=5)
        b = random_init(GridDims(3, 2, 2), pts, seed=5)
        assert np.array_equal(a.vectors, b.vectors)

    def test_within_bounds(self):
        pts = np.random.default_rng(15).normal(size=(40, 3)) * 3 + 1
        cb = random_init(GridDims(4, 3, 3), pts, seed=0)
        assert np.all(cb.vectors >= pts.min(axis=0))
        assert np.all(cb.vectors <= pts.max(axis=0))

    def test_seeds_differ(self):
        pts = np.random.default_rng(16).normal(size=(40, 3))
        a = random_init(GridDims(3, 2, 2), pts, seed=1)
        b = random_init(GridDims(3, 2, 2), pts, seed=2)
        assert not np.array_equal(a.vectors, b.vectors)


class TestGaussianWeight:
    def test_unit_at_zero(self):
        assert gaussian_weight(0.0, 3.7) == 1.0

    def test_e_minus_one_at_radius(self):
        assert_allclose(gaussian_weight(2.5, 2.5), np.exp(-1.0), rtol=0, atol=1e-15)

    def test_direct_value(self):
        assert_allclose(gaussian_weight(2.0, 1.0), np.exp(-4.0), rtol=0, atol=1e-18)

    def test_strictly_decreasing(self):
        d = np.linspace(0, 5, 100)
        w = gaussian_weight(d, 1.3)
        assert np.all(np.diff(w) < 0)

    def test_nonpositive_radius(self):
        with pytest.raises(ValueError):
            gaussian_weight(1.0, 0.0)


class TestFindBmu:
    def test_single_node(self):
        cb = Codebook(GridDims(1, 1, 1), np.array([[0.5, 0.5]]))
        assert find_bmu(np.array([0.1, 0.9]), cb) == (0, None)

    def test_tie_goes_to_lowest_index(self):
        vectors = np.zeros((8, 2))
        vectors[3] = [1.0, 0.0]
        vectors[7] = [0.0, 1.0]
        cb = Codebook(GridDims(2, 2, 2), vectors)
        bmu, _ = find_bmu(np.array([0.5, 0.5]), cb)
        assert bmu == 0  # several zero nodes tie; lowest flat index wins

    def test_equidistant_pair(self):
        vectors = np.array([[0.0], [2.0], [10.0], [20.0]])
        cb = Codebook(GridDims(4, 1, 1), vectors)
        bmu, second = find_bmu(np.array([1.0]), cb)
        assert (bmu, second) == (0, 1)

    def test_four_node_brute_force_case(self):
        vectors = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 1]], dtype=float)
        cb = Codebook(GridDims(4, 1, 1), vectors)
        x = np.array([0.9, 0.1, 0.0])
        dists = np.linalg.norm(vectors - x, axis=1)
        order = np.argsort(dists, kind="stable")
        assert find_bmu(x, cb) == (int(order[0]), int(order[1])) == (1, 0)

    def test_input_vector_with_category_pays_mismatch(self):
        from som3d import InputVector, SomModel

        vectors = np.array([[0.0, 0.0], [0.3, 0.0]])
        model = SomModel(codebook=Codebook(GridDims(2, 1, 1), vectors),
                         norm=NormalizationParams(kind="none"),
                         node_ids=np.array([1, 2]), alpha=1.0)
        x = InputVector(numeric=np.array([0.1, 0.0]), category_id=2)
        # plain numeric favors node 0 (0.1 < 0.2), but the ID penalty flips it
        assert find_bmu(x.numeric, model.codebook) == (0, 1)
        assert find_bmu(x, model) == (1, 0)

    def test_assignment_invariants(self):
        rng = np.random.default_rng(17)
        vectors = rng.normal(size=(12, 3))
        x = rng.normal(size=(40, 3))
        asg = assign_bmus(x, vectors)
        assert np.all(asg.bmu != asg.second)
        for i in range(len(x)):
            d = np.linalg.norm(vectors - x[i], axis=1)
            assert asg.distance[i] == d.min()
            assert d[asg.bmu[i]] <= d[asg.second[i]]
            others = np.delete(d, [asg.bmu[i], asg.second[i]])
            assert d[asg.second[i]] <= others.min() + 1e-12


class TestBatchEpoch:
    def test_single_node_moves_to_global_mean(self):
        data = np.random.default_rng(18).normal(size=(25, 3))
        cb = Codebook(GridDims(1, 1, 1), np.zeros((1, 3)))
        asg = assign_bmus(data, cb.vectors)
        out = batch_epoch(cb, data, asg, radius=2.0)
        assert_allclose(out.vectors[0], data.mean(axis=0), atol=1e-12)

    def test_tiny_radius_gives_voronoi_means(self):
        dims = GridDims(3, 1, 1)
        vectors = np.array([[0.0], [1.0], [5.0]])
        data = np.array([[0.1], [-0.1], [0.9], [1.3]])  # nodes 0 and 1 only
        cb = Codebook(dims, vectors)
        asg = assign_bmus(data, vectors)
        out = batch_epoch(cb, data, asg, radius=1e-6)
        assert_allclose(out.vectors[0, 0], 0.0, atol=1e-12)
        assert_allclose(out.vectors[1, 0], 1.1, atol=1e-12)
        assert out.vectors[2, 0] == 5.0  # no hits, no neighborhood mass: unchanged

    def test_hand_two_node_case(self):
        dims = GridDims(2, 1, 1)
        vectors = np.array([[0.1], [0.9]])
        data = np.array([[0.0], [0.2], [1.0]])
        asg = assign_bmus(data, vectors)
        out = batch_epoch(Codebook(dims, vectors), data, asg, radius=1.0)
        h = np.exp(-1.0)
        expected_m0 = (2 * 1.0 * 0.1 + 1 * h * 1.0) / (2 * 1.0 + 1 * h)
        expected_m1 = (2 * h * 0.1 + 1 * 1.0 * 1.0) / (2 * h + 1 * 1.0)
        assert_allclose(out.vectors[:, 0], [expected_m0, expected_m1], rtol=0, atol=1e-15)

    def test_matches_brute_force_oracle(self):
        rng = np.random.default_rng(19)
        dims = GridDims(3, 2, 2)
        data = rng.normal(size=(50, 4))
        vectors = rng.normal(size=(dims.n_nodes, 4))
        asg = assign_bmus(data, vectors)
        for radius in (0.7, 1.5, 3.0):
            fast = batch_epoch(Codebook(dims, vectors), data, asg, radius).vectors
            slow = brute_force_batch_update(vectors, data, asg.bmu, dims, radius)
            assert np.abs(fast - slow).max() < 1e-10

    def test_update_is_convex_combination(self):
        rng = np.random.default_rng(20)
        dims = GridDims(2, 2, 3)
        data = rng.uniform(-3, 7, size=(80, 3))
        vectors = rng.uniform(-3, 7, size=(dims.n_nodes, 3))
        asg = assign_bmus(data, vectors)
        out = batch_epoch(Codebook(dims, vectors), data, asg, radius=1.2).vectors
        assert np.all(out >= data.min(axis=0) - 1e-12)
        assert np.all(out <= data.max(axis=0) + 1e-12)


class TestTrain:
    def test_single_point_fixed_point(self):
        point = np.array([[0.3, 0.6, 0.2]])
        config = TrainingConfig(dims=GridDims(2, 2, 2), epochs=8, init="random", seed=3)
        model = train(point, config)
        assert np.abs(model.codebook.vectors - point).max() < 1e-9

    def test_two_clusters_find_their_means(self):
        rng = np.random.default_rng(21)
        a = rng.normal([0, 0, 0], 0.01, size=(60, 3))
        b = rng.normal([5, 5, 5], 0.01, size=(60, 3))
        data = np.vstack([a, b])
        config = TrainingConfig(dims=GridDims(2, 1, 1), epochs=60, radius_start=1.0,
                                radius_end=0.05, seed=0)
        model = train(data, config)
        means = np.sort(model.codebook.vectors[:, 0])
        oracle = np.sort([a.mean(axis=0)[0], b.mean(axis=0)[0]])
        assert np.abs(means - oracle).max() < 1e-3

    def test_deterministic(self):
        rng = np.random.default_rng(22)
        data = rng.normal(size=(200, 3))
        config = TrainingConfig(dims=GridDims(3, 2, 2), epochs=10, init="random", seed=9)
        m1 = train(data, config)
        m2 = train(data, config)
        assert np.array_equal(m1.codebook.vectors, m2.codebook.vectors)
        assert m1.qe_history == m2.qe_history

    def test_qe_history_monotone_tail(self):
        rng = np.random.default_rng(23)
        data = rng.normal(size=(400, 3))
        config = TrainingConfig(dims=GridDims(4, 3, 3), epochs=50, seed=1)
        model = train(data, config)
        tail = model.qe_history[-10:]
        assert all(b <= a + 1e-12 for a, b in zip(tail, tail[1:]))

    def test_radius_schedule_endpoints(self):
        config = TrainingConfig(dims=GridDims(6, 4, 4), epochs=5)
        radii = radius_schedule(config)
        assert radii[0] == 3.0  # max side / 2
        assert radii[-1] == 0.5
        single = TrainingConfig(dims=GridDims(6, 4, 4), epochs=1)
        assert list(radius_schedule(single)) == [3.0]

    def test_empty_data_rejected(self):
        with pytest.raises(DataError):
            train(np.zeros((0, 3)), TrainingConfig(dims=GridDims(2, 2, 2)))

    def test_non_finite_data_reported_as_corruption(self):
        data = np.random.default_rng(28).normal(size=(30, 3))
        data[11, 2] = np.nan
        with pytest.raises(NumericError, match="non-finite"):
            train(data, TrainingConfig(dims=GridDims(2, 2, 2), epochs=3, init="random"))


class TestWeightMatrix:
    def test_single_node(self):
        h = np.array([[1.0]])
        f = np.ones((3, 1))
        c = np.array([[1, 0], [1, 0], [0, 1]], dtype=float)
        w = compute_weight_matrix(h, f, c)
        assert_allclose(w, [[2.0, 1.0]], rtol=0, atol=0)

    def test_identity_neighborhood_counts_hits(self):
        rng = np.random.default_rng(24)
        n_nodes, n_inputs, k = 6, 40, 3
        f = np.zeros((n_inputs, n_nodes))
        f[np.arange(n_inputs), rng.integers(0, n_nodes, n_inputs)] = 1.0
        c = np.zeros((n_inputs, k))
        c[np.arange(n_inputs), rng.integers(0, k, n_inputs)] = 1.0
        w = compute_weight_matrix(np.eye(n_nodes), f, c)
        assert_allclose(w, f.T @ c, rtol=0, atol=0)

    def test_two_node_chain_hand_case(self):
        h = np.exp(-1.0)
        hmat = np.array([[1.0, h], [h, 1.0]])
        f = np.array([[1, 0], [1, 0], [0, 1]], dtype=float)
        c = np.array([[1, 0], [1, 0], [0, 1]], dtype=float)
        w = compute_weight_matrix(hmat, f, c)
        assert_allclose(w, [[2.0, h], [2.0 * h, 1.0]], rtol=0, atol=1e-15)
        # triple-loop oracle
        oracle = np.zeros((2, 2))
        for i in range(2):
            for j in range(2):
                for node in range(2):
                    hits_jc = sum(1 for t in range(3) if f[t, node] == 1 and c[t, j] == 1)
                    oracle[i, j] += hmat[i, node] * hits_jc
        assert_allclose(w, oracle, rtol=0, atol=1e-15)

    def test_column_sum_identity(self):
        rng = np.random.default_rng(25)
        n_nodes, n_inputs, k = 5, 30, 4
        f = np.zeros((n_inputs, n_nodes))
        f[np.arange(n_inputs), rng.integers(0, n_nodes, n_inputs)] = 1.0
        c = np.zeros((n_inputs, k))
        c[np.arange(n_inputs), rng.integers(0, k, n_inputs)] = 1.0
        hmat = np.exp(-rng.uniform(0, 2, size=(n_nodes, n_nodes)))
        w = compute_weight_matrix(hmat, f, c)
        counts = f.T @ c
        expected = hmat.sum(axis=0) @ counts
        assert_allclose(w.sum(axis=0), expected, rtol=1e-12, atol=0)

    def test_rejects_multi_hot_rows(self):
        with pytest.raises(ValueError):
            compute_weight_matrix(np.eye(2), np.array([[1.0, 1.0]]), np.array([[1.0, 0.0]]))


class TestAssignIds:
    def test_wta_rows(self):
        w = np.array([[0.2, 0.7, 0.1], [0.5, 0.5, 0.0], [0.0, 0.0, 0.0]])
        ids = assign_ids_wta(w)
        assert list(ids) == [2, 1, UNASSIGNED_ID]

    def test_wta_scale_invariance(self):
        rng = np.random.default_rng(26)
        w = rng.uniform(size=(20, 5))
        for scale in (0.01, 3.0, 1e6):
            assert np.array_equal(assign_ids_wta(w), assign_ids_wta(scale * w))

    def test_certain_row(self):
        ids = assign_ids_probabilistic(np.array([[1.0, 0.0, 0.0]]), seed=0)
        assert list(ids) == [1]

    def test_half_half_frequency(self):
        w = np.tile([0.5, 0.5], (10_000, 1))
        ids = assign_ids_probabilistic(w, seed=123)
        freq = (ids == 1).mean()
        assert abs(freq - 0.5) < 0.02

    def test_hybrid_threshold_takes_wta_path(self):
        w = np.tile([0.7, 0.3], (200, 1))
        ids = assign_ids_probabilistic(w, seed=5, threshold=0.6)
        assert np.all(ids == 1)  # 0.7 >= 0.6, argmax regardless of seed

    def test_hybrid_below_threshold_samples(self):
        w = np.tile([0.55, 0.45], (5000, 1))
        ids = assign_ids_probabilistic(w, seed=6, threshold=0.6)
        share = (ids == 1).mean()
        assert 0.5 < share < 0.6  # sampled, not winner-take-all

    def test_zero_row_unassigned(self):
        ids = assign_ids_probabilistic(np.array([[0.0, 0.0]]), seed=1)
        assert list(ids) == [UNASSIGNED_ID]

    def test_deterministic_per_seed(self):
        rng = np.random.default_rng(27)
        w = rng.uniform(size=(50, 4))
        a = assign_ids_probabilistic(w, seed=99)
        b = assign_ids_probabilistic(w, seed=99)
        assert np.array_equal(a, b)


class TestMixedTraining:
    def _dataset(self, seed=30, n=300):
        rng = np.random.default_rng(seed)
        a = rng.normal([0.2, 0.2, 0.2], 0.04, size=(n // 2, 3))
        b = rng.normal([0.8, 0.8, 0.8], 0.04, size=(n - n // 2, 3))
        ids = np.array([1] * (n // 2) + [2] * (n - n // 2))
        return EncodedDataset(
            vectors=np.vstack([a, b]),
            norm=NormalizationParams(kind="none"),
            category_ids=ids,
            one_hot=np.eye(2)[ids - 1],
        )

    def test_nodes_specialize_by_category(self):
        ds = self._dataset()
        config = TrainingConfig(dims=GridDims(2, 2, 2), epochs=30, seed=2)
        model = train(ds, config)
        assert model.node_ids is not None
        assert model.weight_matrix is not None
        assert model.weight_matrix.shape == (8, 2)
        assert set(model.node_ids) <= {1, 2}
        # nodes near each cluster carry that cluster's label
        near_a = np.linalg.norm(model.codebook.vectors - [0.2, 0.2, 0.2], axis=1) < 0.3
        assert np.all(model.node_ids[near_a] == 1)

    def test_alpha_estimated_when_unset(self):
        ds = self._dataset()
        model = train(ds, TrainingConfig(dims=GridDims(2, 2, 2), epochs=5, seed=2))
        expected = estimate_alpha(ds.vectors, np.random.default_rng(
            np.random.SeedSequence(2).spawn(3)[1]))
        assert model.alpha == expected

    def test_mixed_determinism_with_prob_ids(self):
        ds = self._dataset()
        config = TrainingConfig(dims=GridDims(2, 2, 2), epochs=12, seed=4, id_mode="prob")
        m1 = train(ds, config)
        m2 = train(ds, config)
        assert np.array_equal(m1.codebook.vectors, m2.codebook.vectors)
        assert np.array_equal(m1.node_ids, m2.node_ids)
