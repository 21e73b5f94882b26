"""Pruning operators: random, variance-weighted, and boolean-conjunctive.

Pruning writes 0.0 into selected parameters in place; array shapes never
change, so gradient updates can regrow a pruned weight later. Random and
variance selection draw from the pool of weights only; conjunctive
selection disables whole nodes (incoming weights plus bias).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .nn import AutoencoderModel, LayerParams, forward, nonzero_count

PRUNER_KINDS = ("none", "random", "variance", "conjunctive")

VARIANCE_EPS = 1e-8


@dataclass(frozen=True)
class PrunerSpec:
    """What to prune when an event fires.

    p_a:             fraction of weights removed per event (random, variance)
    threshold_C:     activation threshold in [0,1] (conjunctive)
    heldout_count:   number of held-out probe samples h (conjunctive)
    variance_source: whether a weight is scored by its destination node's
                     activation variance or its source node's
    """

    kind: str
    p_a: float = 0.1
    threshold_C: float = 0.1
    heldout_count: int = 5
    variance_source: str = "destination"

    def __post_init__(self):
        if self.kind not in PRUNER_KINDS:
            raise ValueError(f"unknown pruner kind {self.kind!r}")
        if not 0.0 <= self.p_a <= 1.0:
            raise ValueError(f"p_a must be in [0,1], got {self.p_a}")
        if not 0.0 <= self.threshold_C <= 1.0:
            raise ValueError(f"threshold_C must be in [0,1], got {self.threshold_C}")
        if self.kind == "conjunctive" and self.heldout_count < 1:
            raise ValueError(f"conjunctive pruning needs h >= 1, got {self.heldout_count}")
        if self.variance_source not in ("destination", "source"):
            raise ValueError(f"variance_source must be destination or source, got {self.variance_source!r}")


@dataclass(frozen=True)
class NodeStats:
    """Per-node activation variances over a dataset.

    input_variance covers the raw input features (the source nodes of the
    first layer); layer_variance has one vector per layer in traversal
    order (encoder layers, then decoder layers).
    """

    input_variance: np.ndarray
    layer_variance: list[np.ndarray]


@dataclass(frozen=True)
class PreservedPercent:
    total: float
    encoder: float
    decoder: float


@dataclass(frozen=True)
class LayerPruneRecord:
    """One pruning log entry: which layer, how many parameters newly zeroed."""

    layer: str
    zeroed: int


def preserved_percentage(model: AutoencoderModel) -> PreservedPercent:
    """Percentage of parameters still nonzero, overall and per half."""
    c = nonzero_count(model)
    return PreservedPercent(
        total=100.0 * c.nonzero / c.total_params,
        encoder=100.0 * c.encoder_nonzero / c.encoder_total,
        decoder=100.0 * c.decoder_nonzero / c.decoder_total,
    )


def _layer_labels(model: AutoencoderModel) -> list[str]:
    return [f"encoder[{i}]" for i in range(len(model.encoder))] + [
        f"decoder[{i}]" for i in range(len(model.decoder))
    ]


def _zero_weight_positions(model: AutoencoderModel, flat_idx: np.ndarray) -> list[LayerPruneRecord]:
    """Zero flat weight positions (weights pooled across layers, biases excluded)."""
    records = []
    start = 0
    for label, layer in zip(_layer_labels(model), model.layers):
        size = layer.weights.size
        local = flat_idx[(flat_idx >= start) & (flat_idx < start + size)] - start
        if local.size:
            newly = int(np.count_nonzero(layer.weights.flat[local]))
            layer.weights.flat[local] = 0.0
            records.append(LayerPruneRecord(layer=label, zeroed=newly))
        start += size
    return records


def prune_random(model: AutoencoderModel, p_a: float, rng: np.random.Generator) -> list[LayerPruneRecord]:
    """Zero floor(p_a * W) weight positions chosen uniformly without replacement."""
    if not 0.0 <= p_a <= 1.0:
        raise ValueError(f"p_a must be in [0,1], got {p_a}")
    total_w = sum(l.weights.size for l in model.layers)
    count = math.floor(p_a * total_w)
    if count == 0:
        return []
    idx = rng.choice(total_w, size=count, replace=False)
    return _zero_weight_positions(model, np.sort(idx))


def collect_node_variance(model: AutoencoderModel, data: np.ndarray) -> NodeStats:
    """Population variance of every node's post-activation over the dataset."""
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2 or data.shape[0] < 1:
        raise ValueError("need a nonempty b x n data matrix")
    _, trace = forward(model, data, trace=True)
    return NodeStats(
        input_variance=data.var(axis=0),
        layer_variance=[a.var(axis=0) for a in trace.layers],
    )


def _weight_scores(model: AutoencoderModel, stats: NodeStats, source: str) -> np.ndarray:
    """Flat inverse-variance score per weight, keyed by destination or source node."""
    layers = model.layers
    if len(stats.layer_variance) != len(layers):
        raise ValueError("stats do not match the model's layer count")
    pieces = []
    prev_var = stats.input_variance
    for layer, var in zip(layers, stats.layer_variance):
        if var.shape[0] != layer.out_dim:
            raise ValueError("stats dimension mismatch")
        if source == "destination":
            score = np.repeat(1.0 / (var + VARIANCE_EPS), layer.in_dim)
        else:
            score = np.tile(1.0 / (prev_var + VARIANCE_EPS), layer.out_dim)
        pieces.append(score)
        prev_var = var
    return np.concatenate(pieces)


def prune_variance(
    model: AutoencoderModel,
    stats: NodeStats,
    p_a: float,
    rng: np.random.Generator,
    source: str = "destination",
) -> list[LayerPruneRecord]:
    """Zero floor(p_a * W) weights sampled proportionally to inverse node variance.

    Low-variance nodes attract selection; stats must come from the model's
    current parameters.
    """
    if not 0.0 <= p_a <= 1.0:
        raise ValueError(f"p_a must be in [0,1], got {p_a}")
    scores = _weight_scores(model, stats, source)
    count = math.floor(p_a * scores.size)
    if count == 0:
        return []
    probs = scores / scores.sum()
    idx = rng.choice(scores.size, size=count, replace=False, p=probs)
    return _zero_weight_positions(model, np.sort(idx))


def minmax_normalize(a: np.ndarray) -> np.ndarray:
    """Map a matrix to [0,1] by its overall min/max; a constant matrix maps to 0."""
    lo, hi = float(a.min()), float(a.max())
    if hi == lo:
        return np.zeros_like(a, dtype=np.float64)
    return (a - lo) / (hi - lo)


def select_nodes_conjunctive(below: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """AND thresholded rows; drop random rows until some node survives.

    `below` is the h x nodes boolean matrix of thresholded activations.
    Returns the boolean node-selection vector; all-False when every row
    was removed without finding a selectable node.
    """
    below = np.asarray(below, dtype=bool)
    if below.ndim != 2 or below.shape[0] < 1:
        raise ValueError("need a nonempty h x nodes boolean matrix")
    rows = list(range(below.shape[0]))
    selected = below[rows].all(axis=0)
    while not selected.any() and rows:
        rows.pop(int(rng.integers(0, len(rows))))
        if rows:
            selected = below[rows].all(axis=0)
        else:
            selected = np.zeros(below.shape[1], dtype=bool)
    return selected


def prune_conjunctive(
    model: AutoencoderModel,
    heldout: np.ndarray,
    threshold_C: float,
    rng: np.random.Generator,
) -> list[LayerPruneRecord]:
    """Per layer, disable nodes whose normalized activation stays below the
    threshold across held-out samples (incoming weights and bias zeroed)."""
    heldout = np.asarray(heldout, dtype=np.float64)
    if heldout.ndim != 2 or heldout.shape[0] < 1:
        raise ValueError("held-out set must be a nonempty h x n matrix")
    if not 0.0 <= threshold_C <= 1.0:
        raise ValueError(f"threshold_C must be in [0,1], got {threshold_C}")
    _, trace = forward(model, heldout, trace=True)
    records = []
    for label, layer, acts in zip(_layer_labels(model), model.layers, trace.layers):
        below = minmax_normalize(acts) < threshold_C
        selected = select_nodes_conjunctive(below, rng)
        if selected.any():
            newly = int(np.count_nonzero(layer.weights[selected])) + int(
                np.count_nonzero(layer.biases[selected])
            )
            layer.weights[selected] = 0.0
            layer.biases[selected] = 0.0
            records.append(LayerPruneRecord(layer=label, zeroed=newly))
    return records


def apply_pruner(
    model: AutoencoderModel,
    spec: PrunerSpec,
    rng: np.random.Generator,
    train_matrix: np.ndarray | None = None,
    heldout: np.ndarray | None = None,
) -> list[LayerPruneRecord]:
    """Run the configured operator once against the model."""
    if spec.kind == "none":
        return []
    if spec.kind == "random":
        return prune_random(model, spec.p_a, rng)
    if spec.kind == "variance":
        if train_matrix is None:
            raise ValueError("variance pruning needs the training data")
        stats = collect_node_variance(model, train_matrix)
        return prune_variance(model, stats, spec.p_a, rng, source=spec.variance_source)
    if heldout is None:
        raise ValueError("conjunctive pruning needs held-out samples")
    return prune_conjunctive(model, heldout, spec.threshold_C, rng)
