"""Spatial coevolutionary training loop and the canonical baseline.

A ring of Z cells each holds a center (encoder, decoder) pair. Every
generation a cell copies its radius-r neighborhood into a subpopulation,
mutates learning rates, scores all encoder x decoder pairings on an
evaluation batch, tournament-selects one pair, trains it by SGD over all
batches, optionally prunes it, and keeps the better of {trained pair,
old center}. Neighbor exchange is synchronized: generation t+1 sees only
generation-t centers, and every cell draws from its own deterministic
RNG stream, so results are independent of cell execution order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .metrics import MetricsRow, PruneEventLog
from .nn import (
    Architecture,
    AutoencoderModel,
    LayerParams,
    _activate,
    apply_gradients,
    backward,
    compute_loss,
    forward,
    init_model,
    nonzero_count,
    sgd_step,
)
from .problem import BitDataset
from .pruning import LayerPruneRecord, PrunerSpec, apply_pruner, preserved_percentage
from .schedules import ScheduleSpec, prune_probability
from .seeding import TAG_CELL, TAG_INIT, subseed, substream

LR_MUTATION_SIGMA = 0.1


@dataclass
class Half:
    """One encoder or decoder candidate, carrying its own learning rate."""

    layers: list[LayerParams]
    learning_rate: float

    def copy(self) -> "Half":
        return Half([l.copy() for l in self.layers], self.learning_rate)


@dataclass
class CenterPair:
    encoder: Half
    decoder: Half

    def copy(self) -> "CenterPair":
        return CenterPair(self.encoder.copy(), self.decoder.copy())

    def to_model(self) -> AutoencoderModel:
        """View of the pair as one model (arrays shared, not copied)."""
        return AutoencoderModel(
            encoder=self.encoder.layers,
            decoder=self.decoder.layers,
            learning_rate=self.encoder.learning_rate,
        )


def pair_model(encoder: Half, decoder: Half) -> AutoencoderModel:
    return AutoencoderModel(
        encoder=encoder.layers, decoder=decoder.layers, learning_rate=encoder.learning_rate
    )


@dataclass
class Ring:
    """One-dimensional wraparound grid of cells; indices are modulo Z."""

    radius: int
    centers: list[CenterPair]

    @property
    def Z(self) -> int:
        return len(self.centers)

    @property
    def neighborhood_size(self) -> int:
        return 2 * self.radius + 1

    def neighborhood_indices(self, k: int) -> list[int]:
        return [(k + d) % self.Z for d in range(-self.radius, self.radius + 1)]


@dataclass
class Subpopulation:
    """Copies of the neighborhood's encoders and decoders."""

    encoders: list[Half]
    decoders: list[Half]

    @property
    def size(self) -> int:
        return len(self.encoders)


@dataclass(frozen=True)
class CoevParams:
    """Knobs for one training run (shared by both trainers where applicable)."""

    tournament_size: int = 2
    mutation_prob: float = 0.5
    batch_size: int = 5
    epochs: int = 400
    schedule: ScheduleSpec = field(default_factory=lambda: ScheduleSpec("fixed"))
    pruner: PrunerSpec = field(default_factory=lambda: PrunerSpec("none"))
    seed: int = 0
    loss_kind: str = "l1"
    learning_rate: float = 1e-5
    eval_batch_size: int = 20
    lr_min: float = 1e-8
    lr_max: float = 1e-1

    def __post_init__(self):
        if self.tournament_size < 1:
            raise ValueError(f"tournament_size must be >= 1, got {self.tournament_size}")
        if not 0.0 <= self.mutation_prob <= 1.0:
            raise ValueError(f"mutation_prob must be in [0,1], got {self.mutation_prob}")
        if self.batch_size < 1 or self.epochs < 0:
            raise ValueError("batch_size must be >= 1 and epochs >= 0")
        if self.learning_rate <= 0 or self.lr_min <= 0 or self.lr_max < self.lr_min:
            raise ValueError("learning rates must be positive with lr_min <= lr_max")


@dataclass
class TrialData:
    """Data bundle for one trial: corpora plus the held-out probe matrix."""

    train: BitDataset
    test: BitDataset
    heldout: np.ndarray


@dataclass
class CellStepResult:
    center: CenterPair
    prune_event: bool
    prune_records: list[LayerPruneRecord]


@dataclass
class RunResult:
    model: AutoencoderModel
    rows: list[MetricsRow]
    prune_events: list[PruneEventLog]


def build_ring(Z: int, r: int, arch: Architecture, seed: int, learning_rate: float = 1e-5) -> Ring:
    """Z independently initialized centers; cell k's init stream derives from (seed, k)."""
    if Z < 1 or r < 0:
        raise ValueError(f"need Z >= 1 and r >= 0, got Z={Z}, r={r}")
    if 2 * r + 1 > Z:
        raise ValueError(f"neighborhood size {2 * r + 1} exceeds ring size {Z}")
    centers = []
    for k in range(Z):
        model = init_model(arch, seed=subseed(seed, TAG_INIT, k), learning_rate=learning_rate)
        centers.append(CenterPair(Half(model.encoder, learning_rate), Half(model.decoder, learning_rate)))
    return Ring(radius=r, centers=centers)


def gather_subpopulation(centers: list[CenterPair], k: int, radius: int) -> Subpopulation:
    Z = len(centers)
    idx = [(k + d) % Z for d in range(-radius, radius + 1)]
    return Subpopulation(
        encoders=[centers[i].encoder.copy() for i in idx],
        decoders=[centers[i].decoder.copy() for i in idx],
    )


def evaluate_pairs(sub: Subpopulation, batch: np.ndarray, loss_kind: str = "l1") -> np.ndarray:
    """s x s matrix of reconstruction losses; entry (i, j) pairs encoder i with decoder j."""
    batch = np.asarray(batch, dtype=np.float64)
    if batch.ndim != 2 or batch.shape[0] < 1:
        raise ValueError("evaluation batch must be a nonempty b x n matrix")
    s = sub.size
    fitness = np.zeros((s, s))
    for i, enc in enumerate(sub.encoders):
        latent = _run_layers(enc.layers, batch)
        for j, dec in enumerate(sub.decoders):
            recon = _run_layers(dec.layers, latent)
            fitness[i, j] = compute_loss(batch, recon, loss_kind)
    return fitness


def _run_layers(layers: list[LayerParams], x: np.ndarray) -> np.ndarray:
    a = x
    for layer in layers:
        a = _activate(a @ layer.weights.T + layer.biases, layer.activation)
    return a


def tournament_select(
    sub: Subpopulation, fitness: np.ndarray, tournament_size: int, rng: np.random.Generator
) -> tuple[Half, Half]:
    """Pick an encoder and a decoder by tournament over best-partner fitness.

    An encoder's fitness is its row minimum, a decoder's its column
    minimum. Each role samples tournament_size distinct entrants; the
    entrant with the lowest fitness wins, ties going to the lowest index.
    Returns trainable copies.
    """
    s = sub.size
    if not 1 <= tournament_size <= s:
        raise ValueError(f"tournament_size must be in [1, {s}], got {tournament_size}")
    if fitness.shape != (s, s):
        raise ValueError(f"fitness must be {s}x{s}, got {fitness.shape}")
    enc_fit = fitness.min(axis=1)
    dec_fit = fitness.min(axis=0)

    def pick(fit: np.ndarray) -> int:
        entrants = np.sort(rng.choice(s, size=tournament_size, replace=False))
        best = int(entrants[0])
        for i in entrants[1:]:
            if fit[i] < fit[best]:
                best = int(i)
        return best

    ei = pick(enc_fit)
    di = pick(dec_fit)
    return sub.encoders[ei].copy(), sub.decoders[di].copy()


def mutate_learning_rate(
    sub: Subpopulation,
    mutation_prob: float,
    rng: np.random.Generator,
    bounds: tuple[float, float] = (1e-8, 1e-1),
) -> Subpopulation:
    """With probability beta per individual, scale its rate by exp(N(0, 0.1^2))."""
    if not 0.0 <= mutation_prob <= 1.0:
        raise ValueError(f"mutation_prob must be in [0,1], got {mutation_prob}")
    lo, hi = bounds
    for half in sub.encoders + sub.decoders:
        if rng.random() < mutation_prob:
            factor = math.exp(rng.normal(0.0, LR_MUTATION_SIGMA))
            half.learning_rate = min(hi, max(lo, half.learning_rate * factor))
    return sub


def _pair_loss(encoder: Half, decoder: Half, batch: np.ndarray, loss_kind: str) -> float:
    recon = _run_layers(decoder.layers, _run_layers(encoder.layers, batch))
    return compute_loss(batch, recon, loss_kind)


def cell_step(
    sub: Subpopulation,
    center: CenterPair,
    batches: list[np.ndarray],
    eval_batch: np.ndarray,
    params: CoevParams,
    t: int,
    rng: np.random.Generator,
    train_matrix: np.ndarray | None = None,
    heldout: np.ndarray | None = None,
) -> CellStepResult:
    """One generation for one cell: mutate, evaluate, select, train, prune, replace.

    The trained pair is evaluated before pruning; it replaces the center
    iff its pre-prune loss does not exceed the current center's loss on
    the same evaluation batch (elitist replacement).
    """
    mutate_learning_rate(sub, params.mutation_prob, rng, bounds=(params.lr_min, params.lr_max))
    fitness = evaluate_pairs(sub, eval_batch, params.loss_kind)
    enc, dec = tournament_select(sub, fitness, params.tournament_size, rng)

    model_view = pair_model(enc, dec)
    for batch in batches:
        grads_e, grads_d, _ = backward(model_view, batch, params.loss_kind)
        apply_gradients(enc.layers, grads_e, enc.learning_rate)
        apply_gradients(dec.layers, grads_d, dec.learning_rate)

    trained_loss = _pair_loss(enc, dec, eval_batch, params.loss_kind)
    center_loss = _pair_loss(center.encoder, center.decoder, eval_batch, params.loss_kind)

    prune_event = False
    records: list[LayerPruneRecord] = []
    if params.pruner.kind != "none":
        p = prune_probability(params.schedule, t, neighborhood_size=sub.size)
        if rng.random() < p:
            prune_event = True
            records = apply_pruner(model_view, params.pruner, rng, train_matrix, heldout)

    if trained_loss <= center_loss:
        new_center = CenterPair(enc, dec)
    else:
        new_center = center.copy()
    return CellStepResult(center=new_center, prune_event=prune_event, prune_records=records)


def _metrics_row(
    trial: int,
    epoch: int,
    cell: int,
    model: AutoencoderModel,
    train_matrix: np.ndarray,
    test_matrix: np.ndarray,
    loss_kind: str,
    learning_rate: float,
    prune_event: bool,
) -> MetricsRow:
    train_recon, _ = forward(model, train_matrix)
    test_recon, _ = forward(model, test_matrix)
    preserved = preserved_percentage(model)
    counts = nonzero_count(model)
    return MetricsRow(
        trial=trial,
        epoch=epoch,
        cell=cell,
        train_loss=compute_loss(train_matrix, train_recon, loss_kind),
        test_loss=compute_loss(test_matrix, test_recon, loss_kind),
        preserved_total=preserved.total,
        preserved_encoder=preserved.encoder,
        preserved_decoder=preserved.decoder,
        nonzero_params=counts.nonzero,
        learning_rate=learning_rate,
        prune_event=prune_event,
    )


def _make_batches(train_matrix: np.ndarray, batch_size: int) -> list[np.ndarray]:
    # Fixed sequential partition, identical every epoch: batch order is part
    # of the determinism contract.
    return [train_matrix[i : i + batch_size] for i in range(0, train_matrix.shape[0], batch_size)]


def run_lipi(data: TrialData, ring: Ring, params: CoevParams, trial: int = 0) -> RunResult:
    """T synchronized generations over the ring; returns the center with the
    lowest full-training-set loss (ties to the lowest cell index)."""
    train_matrix = data.train.as_float()
    test_matrix = data.test.as_float()
    batches = _make_batches(train_matrix, params.batch_size)
    eval_batch = train_matrix[: min(params.eval_batch_size, train_matrix.shape[0])]
    streams = [substream(params.seed, TAG_CELL, k) for k in range(ring.Z)]

    rows: list[MetricsRow] = []
    events: list[PruneEventLog] = []
    for t in range(1, params.epochs + 1):
        snapshot = ring.centers
        results = []
        for k in range(ring.Z):
            sub = gather_subpopulation(snapshot, k, ring.radius)
            results.append(
                cell_step(
                    sub,
                    snapshot[k],
                    batches,
                    eval_batch,
                    params,
                    t,
                    streams[k],
                    train_matrix=train_matrix,
                    heldout=data.heldout,
                )
            )
        ring.centers = [res.center for res in results]
        for k, res in enumerate(results):
            rows.append(
                _metrics_row(
                    trial,
                    t,
                    k,
                    res.center.to_model(),
                    train_matrix,
                    test_matrix,
                    params.loss_kind,
                    res.center.encoder.learning_rate,
                    res.prune_event,
                )
            )
            for rec in res.prune_records:
                events.append(
                    PruneEventLog(trial, t, k, params.pruner.kind, rec.layer, rec.zeroed)
                )

    train_losses = [
        _pair_loss(c.encoder, c.decoder, train_matrix, params.loss_kind) for c in ring.centers
    ]
    best_cell = int(np.argmin(train_losses))
    return RunResult(model=ring.centers[best_cell].copy().to_model(), rows=rows, prune_events=events)


def run_canonical(data: TrialData, arch: Architecture, params: CoevParams, trial: int = 0) -> RunResult:
    """Single-model SGD baseline with the same per-epoch pruning hook.

    No population, no selection, no learning-rate mutation. With a ring of
    one cell, zero radius, tournament of one, no mutation and no pruning,
    the coevolutionary trainer reduces to exactly this trajectory.
    """
    train_matrix = data.train.as_float()
    test_matrix = data.test.as_float()
    batches = _make_batches(train_matrix, params.batch_size)
    model = init_model(arch, seed=subseed(params.seed, TAG_INIT, 0), learning_rate=params.learning_rate)
    rng = substream(params.seed, TAG_CELL, 0)

    rows: list[MetricsRow] = []
    events: list[PruneEventLog] = []
    for t in range(1, params.epochs + 1):
        for batch in batches:
            grads_e, grads_d, _ = backward(model, batch, params.loss_kind)
            sgd_step(model, grads_e, grads_d)
        prune_event = False
        if params.pruner.kind != "none":
            p = prune_probability(params.schedule, t, neighborhood_size=1)
            if rng.random() < p:
                prune_event = True
                for rec in apply_pruner(model, params.pruner, rng, train_matrix, data.heldout):
                    events.append(PruneEventLog(trial, t, -1, params.pruner.kind, rec.layer, rec.zeroed))
        rows.append(
            _metrics_row(
                trial, t, -1, model, train_matrix, test_matrix,
                params.loss_kind, model.learning_rate, prune_event,
            )
        )
    return RunResult(model=model, rows=rows, prune_events=events)
