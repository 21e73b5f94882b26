"""Benchmark generator tests: determinism, statistics, and the text format."""

import numpy as np
import pytest

from coevoprune.problem import (
    BitDataset,
    CentroidSet,
    generate_centroids,
    generate_dataset,
    hamming,
    load_dataset,
    nearest_centroid_indices,
    oracle_cluster_loss,
    save_dataset,
)


class TestGenerateCentroids:
    def test_headline_shape(self):
        c = generate_centroids(k=10, n=1000, seed=5)
        assert c.bits.shape == (10, 1000)
        assert set(np.unique(c.bits)) <= {0, 1}

    def test_smallest_instance(self):
        c = generate_centroids(k=1, n=1, seed=5)
        assert c.bits.shape == (1, 1)
        assert c.bits[0, 0] in (0, 1)

    def test_mean_bit_fraction(self):
        """Bernoulli(0.5) concentration: the mean of 1024 bits has sd ~0.016,
        so 0.5 +- 0.1 is a >6 sigma window."""
        for seed in range(5):
            c = generate_centroids(k=4, n=256, seed=seed)
            assert 0.4 <= c.bits.mean() <= 0.6

    def test_deterministic(self):
        a = generate_centroids(7, 33, seed=123)
        b = generate_centroids(7, 33, seed=123)
        assert np.array_equal(a.bits, b.bits)

    @pytest.mark.parametrize("k,n", [(0, 5), (5, 0), (-1, 3)])
    def test_invalid_dims(self, k, n):
        with pytest.raises(ValueError):
            generate_centroids(k, n, seed=0)


class TestGenerateDataset:
    def test_sample_count(self):
        c = generate_centroids(10, 50, seed=1)
        d = generate_dataset(c, samples_per_centroid=10, q=0.05, seed=2)
        assert d.samples.shape == (100, 50)
        assert d.source_index.shape == (100,)
        assert set(np.unique(d.source_index)) == set(range(10))

    def test_no_corruption(self):
        c = generate_centroids(4, 20, seed=1)
        d = generate_dataset(c, samples_per_centroid=3, q=0.0, seed=2)
        for row, src in zip(d.samples, d.source_index):
            assert np.array_equal(row, c.bits[src])

    def test_mean_hamming_distance(self):
        """Flips per sample ~ Binomial(200, 0.05): mean 10, and the mean of
        100 samples has sd ~0.31, so 10 +- 2 is a wide window."""
        c = generate_centroids(4, 200, seed=3)
        d = generate_dataset(c, samples_per_centroid=25, q=0.05, seed=4)
        dists = [hamming(row, c.bits[src]) for row, src in zip(d.samples, d.source_index)]
        assert abs(np.mean(dists) - 10.0) <= 2.0

    def test_flip_fraction_converges(self):
        c = generate_centroids(5, 400, seed=9)
        d = generate_dataset(c, samples_per_centroid=20, q=0.1, seed=10)
        flipped = (d.samples != c.bits[d.source_index]).mean()
        n_bits = d.samples.size
        sigma = np.sqrt(0.1 * 0.9 / n_bits)
        assert abs(flipped - 0.1) <= 3 * sigma

    def test_deterministic(self):
        c = generate_centroids(3, 30, seed=0)
        d1 = generate_dataset(c, 4, 0.2, seed=11)
        d2 = generate_dataset(c, 4, 0.2, seed=11)
        assert np.array_equal(d1.samples, d2.samples)
        d3 = generate_dataset(c, 4, 0.2, seed=12)
        assert not np.array_equal(d1.samples, d3.samples)

    @pytest.mark.parametrize("q", [-0.1, 1.5])
    def test_invalid_q(self, q):
        c = generate_centroids(2, 5, seed=0)
        with pytest.raises(ValueError):
            generate_dataset(c, 2, q, seed=0)

    def test_invalid_per(self):
        c = generate_centroids(2, 5, seed=0)
        with pytest.raises(ValueError):
            generate_dataset(c, 0, 0.1, seed=0)


class TestHamming:
    def test_identity(self):
        a = np.zeros(4, dtype=np.uint8)
        assert hamming(a, a) == 0

    def test_complement(self):
        assert hamming(np.array([1, 0, 1, 0]), np.array([0, 1, 0, 1])) == 4

    def test_exact_flip_count(self):
        rng = np.random.default_rng(0)
        x = rng.integers(0, 2, 100).astype(np.uint8)
        y = x.copy()
        flip_at = rng.choice(100, size=20, replace=False)
        y[flip_at] ^= 1
        assert hamming(x, y) == 20

    def test_metric_properties(self):
        rng = np.random.default_rng(42)
        for _ in range(50):
            a, b, c = (rng.integers(0, 2, 16).astype(np.uint8) for _ in range(3))
            assert hamming(a, b) >= 0
            assert hamming(a, b) == hamming(b, a)
            assert hamming(a, c) <= hamming(a, b) + hamming(b, c)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            hamming(np.zeros(3), np.zeros(4))


def brute_force_cluster_loss(data: BitDataset, centroids: CentroidSet) -> float:
    """Independent oracle: plain loops over samples and centroids."""
    total = 0
    for sample in data.samples:
        best = None
        for c in centroids.bits:
            d = sum(int(a != b) for a, b in zip(sample, c))
            if best is None or d < best:
                best = d
        total += best
    return total / (data.m * data.n)


class TestOracleClusterLoss:
    def test_uncorrupted_is_zero(self):
        c = generate_centroids(4, 30, seed=1)
        d = generate_dataset(c, 3, 0.0, seed=2)
        assert oracle_cluster_loss(d, c) == 0.0

    def test_matches_brute_force(self):
        c = generate_centroids(3, 12, seed=5)
        d = generate_dataset(c, 4, 0.2, seed=6)
        assert oracle_cluster_loss(d, c) == pytest.approx(brute_force_cluster_loss(d, c), abs=1e-12)

    def test_close_to_q_for_separated_centroids(self):
        c = generate_centroids(6, 400, seed=7)
        d = generate_dataset(c, 10, 0.05, seed=8)
        loss = oracle_cluster_loss(d, c)
        assert 0.03 <= loss <= 0.06

    def test_exact_membership_assignment(self):
        c = generate_centroids(3, 25, seed=9)
        d = BitDataset(
            samples=c.bits[2:3].copy(),
            source_index=np.array([2]),
            q=0.0,
            split="train",
            k=3,
            per=1,
            seed=0,
        )
        assert oracle_cluster_loss(d, c) == 0.0
        assert nearest_centroid_indices(d, c)[0] == 2

    def test_tie_breaks_low_index(self):
        bits = np.array([[0, 0], [0, 0], [1, 1]], dtype=np.uint8)
        c = CentroidSet(bits=bits)
        d = BitDataset(
            samples=np.array([[0, 0]], dtype=np.uint8),
            source_index=np.array([1]),
            q=0.0,
            split="train",
            k=3,
            per=1,
            seed=0,
        )
        assert nearest_centroid_indices(d, c)[0] == 0

    def test_empty_dataset_rejected(self):
        c = generate_centroids(2, 4, seed=0)
        empty = BitDataset(
            samples=np.zeros((0, 4), dtype=np.uint8),
            source_index=np.zeros(0, dtype=np.int64),
            q=0.0,
            split="train",
            k=2,
            per=1,
            seed=0,
        )
        with pytest.raises(ValueError):
            oracle_cluster_loss(empty, c)


class TestTextFormat:
    def test_round_trip_arrays(self, tmp_path):
        c = generate_centroids(5, 40, seed=3)
        d = generate_dataset(c, 4, 0.05, seed=17, split="test")
        path = tmp_path / "data.txt"
        save_dataset(d, path)
        back = load_dataset(path, split="test")
        assert np.array_equal(back.samples, d.samples)
        assert np.array_equal(back.source_index, d.source_index)
        assert (back.k, back.per, back.q, back.seed) == (d.k, d.per, d.q, d.seed)

    def test_round_trip_bytes(self, tmp_path):
        c = generate_centroids(3, 10, seed=5)
        d = generate_dataset(c, 2, 0.3, seed=99)
        p1, p2 = tmp_path / "a.txt", tmp_path / "b.txt"
        save_dataset(d, p1)
        save_dataset(load_dataset(p1), p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_header_layout(self, tmp_path):
        c = generate_centroids(2, 6, seed=1)
        d = generate_dataset(c, 2, 0.05, seed=7)
        path = tmp_path / "data.txt"
        save_dataset(d, path)
        header = path.read_text().splitlines()[0].split()
        assert header == ["2", "6", "2", "0.05", "7"]

    def test_malformed_line_rejected(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("2 4 1 0.0 0\n0101 0\n01 1\n")
        with pytest.raises(ValueError, match=":3"):
            load_dataset(path)
