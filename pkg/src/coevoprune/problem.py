"""Synthetic binary clustering benchmark.

Centroids are random bit vectors; samples are centroids corrupted by
independent bit flips. An ideal reconstructor maps each sample back to
its nearest centroid, so the nearest-centroid loss is the floor that a
trained autoencoder approaches.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class CentroidSet:
    """k binary centroid vectors of dimension n, stored as a k x n 0/1 matrix."""

    bits: np.ndarray

    def __post_init__(self):
        if self.bits.ndim != 2 or self.bits.shape[0] < 1 or self.bits.shape[1] < 1:
            raise ValueError(f"centroid matrix must be k x n with k,n >= 1, got shape {self.bits.shape}")

    @property
    def k(self) -> int:
        return self.bits.shape[0]

    @property
    def n(self) -> int:
        return self.bits.shape[1]


@dataclass(frozen=True)
class BitDataset:
    """Corrupted binary samples plus the bookkeeping needed to regenerate them.

    samples:      m x n 0/1 matrix (uint8)
    source_index: index of the generating centroid for each sample
    q:            per-bit flip probability used during generation
    split:        "train" or "test" tag
    k, per, seed: generation parameters, kept so datasets round-trip
                  through the text format below
    """

    samples: np.ndarray
    source_index: np.ndarray
    q: float
    split: str
    k: int
    per: int
    seed: int

    @property
    def m(self) -> int:
        return self.samples.shape[0]

    @property
    def n(self) -> int:
        return self.samples.shape[1]

    def as_float(self) -> np.ndarray:
        """Samples as a float64 matrix for the neural-net boundary."""
        return self.samples.astype(np.float64)


def generate_centroids(k: int, n: int, seed: int) -> CentroidSet:
    """Draw a k x n matrix of i.i.d. Bernoulli(0.5) bits."""
    if k < 1 or n < 1:
        raise ValueError(f"need k >= 1 and n >= 1, got k={k}, n={n}")
    rng = np.random.default_rng(seed)
    bits = rng.integers(0, 2, size=(k, n), dtype=np.uint8)
    return CentroidSet(bits=bits)


def generate_dataset(
    centroids: CentroidSet,
    samples_per_centroid: int,
    q: float,
    seed: int,
    split: str = "train",
) -> BitDataset:
    """Corrupt each centroid into `samples_per_centroid` samples via q-probability bit flips.

    Samples are ordered centroid-major: all samples of centroid 0 first,
    then centroid 1, and so on.
    """
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"flip probability q must be in [0,1], got {q}")
    if samples_per_centroid < 1:
        raise ValueError(f"samples_per_centroid must be >= 1, got {samples_per_centroid}")
    rng = np.random.default_rng(seed)
    k, n = centroids.k, centroids.n
    m = k * samples_per_centroid
    source = np.repeat(np.arange(k, dtype=np.int64), samples_per_centroid)
    flips = (rng.random((m, n)) < q).astype(np.uint8)
    samples = centroids.bits[source] ^ flips
    return BitDataset(
        samples=samples,
        source_index=source,
        q=float(q),
        split=split,
        k=k,
        per=samples_per_centroid,
        seed=int(seed),
    )


def hamming(a: np.ndarray, b: np.ndarray) -> int:
    """Number of positions where two equal-length bit vectors differ."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    return int(np.count_nonzero(a != b))


def nearest_centroid_indices(data: BitDataset, centroids: CentroidSet) -> np.ndarray:
    """Index of the nearest centroid per sample; ties go to the lowest index."""
    if data.n != centroids.n:
        raise ValueError(f"dimension mismatch: samples have n={data.n}, centroids n={centroids.n}")
    # distances[i, c] = hamming(sample i, centroid c); argmin breaks ties low
    diffs = data.samples[:, None, :] != centroids.bits[None, :, :]
    distances = diffs.sum(axis=2)
    return distances.argmin(axis=1)


def oracle_cluster_loss(data: BitDataset, centroids: CentroidSet) -> float:
    """Mean per-bit distance from each sample to its nearest centroid.

    This is the reconstruction quality an ideal cluster-recovering
    autoencoder would achieve: about q per bit when centroids are well
    separated, exactly 0 for uncorrupted data.
    """
    if data.m == 0:
        raise ValueError("empty dataset")
    if data.n != centroids.n:
        raise ValueError(f"dimension mismatch: samples have n={data.n}, centroids n={centroids.n}")
    diffs = data.samples[:, None, :] != centroids.bits[None, :, :]
    distances = diffs.sum(axis=2)
    return float(distances.min(axis=1).mean() / data.n)


def save_dataset(data: BitDataset, path: str | Path) -> None:
    """Write the plain text format: `k n per q seed` header, then one
    `<bits> <source_index>` line per sample."""
    lines = [f"{data.k} {data.n} {data.per} {data.q!r} {data.seed}"]
    for row, src in zip(data.samples, data.source_index):
        lines.append("".join("1" if b else "0" for b in row) + f" {src}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_dataset(path: str | Path, split: str = "train") -> BitDataset:
    """Read the text format written by save_dataset. Bit-exact round trip."""
    text = Path(path).read_text()
    lines = text.splitlines()
    if not lines:
        raise ValueError(f"{path}: empty dataset file")
    header = lines[0].split()
    if len(header) != 5:
        raise ValueError(f"{path}:1: expected header 'k n per q seed', got {lines[0]!r}")
    k, n, per = int(header[0]), int(header[1]), int(header[2])
    q, seed = float(header[3]), int(header[4])
    samples = np.zeros((len(lines) - 1, n), dtype=np.uint8)
    source = np.zeros(len(lines) - 1, dtype=np.int64)
    for i, line in enumerate(lines[1:], start=2):
        parts = line.split()
        if len(parts) != 2 or len(parts[0]) != n:
            raise ValueError(f"{path}:{i}: expected {n} bits and a source index, got {line!r}")
        samples[i - 2] = np.frombuffer(parts[0].encode(), dtype=np.uint8) - ord("0")
        source[i - 2] = int(parts[1])
    if samples.size and not np.isin(samples, (0, 1)).all():
        raise ValueError(f"{path}: samples must contain only 0/1 characters")
    return BitDataset(samples=samples, source_index=source, q=q, split=split, k=k, per=per, seed=seed)
