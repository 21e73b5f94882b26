"""Minimal dense feed-forward autoencoder engine.

Plain numpy, float64 everywhere. Models are mutable values: training and
pruning write parameters in place, and zeroed (pruned) weights keep
receiving gradient updates, so they can regrow.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

ACTIVATIONS = ("relu", "sigmoid", "identity")

LOSSES = ("l1", "bce")

BCE_EPS = 1e-7

CHECKPOINT_MAGIC = "COEVOPRUNE-AE 1"


@dataclass
class LayerParams:
    """One dense layer: out_dim x in_dim weights, out_dim biases, activation name."""

    weights: np.ndarray
    biases: np.ndarray
    activation: str

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.weights.ndim != 2 or self.biases.ndim != 1:
            raise ValueError("weights must be 2-d and biases 1-d")
        if self.weights.shape[0] != self.biases.shape[0]:
            raise ValueError(
                f"bias length {self.biases.shape[0]} does not match out_dim {self.weights.shape[0]}"
            )

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]

    def copy(self) -> "LayerParams":
        return LayerParams(self.weights.copy(), self.biases.copy(), self.activation)


@dataclass(frozen=True)
class Architecture:
    """Layer sizes and activations for an encoder/decoder pair.

    Encoder: input_dim -> encoder_hidden... -> latent_dim, last layer uses
    latent_activation. Decoder: latent_dim -> decoder_hidden... -> input_dim,
    last layer uses output_activation.
    """

    input_dim: int
    latent_dim: int
    encoder_hidden: tuple[int, ...] = ()
    decoder_hidden: tuple[int, ...] = ()
    hidden_activation: str = "relu"
    latent_activation: str = "relu"
    output_activation: str = "sigmoid"

    def __post_init__(self):
        dims = (self.input_dim, self.latent_dim, *self.encoder_hidden, *self.decoder_hidden)
        if any(d < 1 for d in dims):
            raise ValueError(f"all layer dims must be >= 1, got {dims}")
        for act in (self.hidden_activation, self.latent_activation, self.output_activation):
            if act not in ACTIVATIONS:
                raise ValueError(f"unknown activation {act!r}")

    def encoder_spec(self) -> list[tuple[int, int, str]]:
        """(in_dim, out_dim, activation) per encoder layer."""
        dims = [self.input_dim, *self.encoder_hidden, self.latent_dim]
        acts = [self.hidden_activation] * (len(dims) - 2) + [self.latent_activation]
        return [(dims[i], dims[i + 1], acts[i]) for i in range(len(dims) - 1)]

    def decoder_spec(self) -> list[tuple[int, int, str]]:
        dims = [self.latent_dim, *self.decoder_hidden, self.input_dim]
        acts = [self.hidden_activation] * (len(dims) - 2) + [self.output_activation]
        return [(dims[i], dims[i + 1], acts[i]) for i in range(len(dims) - 1)]

    @property
    def param_count(self) -> int:
        return sum(o * i + o for i, o, _ in self.encoder_spec() + self.decoder_spec())


# Default sizes approximate the reference setups: the standard model has
# 61,030 parameters (1000x30 + 30 + 30x1000 + 1000) and the small variant
# shrinks the latent layer.
DEFAULT_ARCH = Architecture(input_dim=1000, latent_dim=30)
SMALL_ARCH = Architecture(input_dim=1000, latent_dim=29)


@dataclass
class AutoencoderModel:
    """Paired encoder/decoder layer stacks plus a per-model learning rate."""

    encoder: list[LayerParams]
    decoder: list[LayerParams]
    learning_rate: float

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.encoder[0].in_dim != self.decoder[-1].out_dim:
            raise ValueError("encoder input dim must equal decoder output dim")
        if self.encoder[-1].out_dim != self.decoder[0].in_dim:
            raise ValueError("latent dims of encoder and decoder must match")

    @property
    def input_dim(self) -> int:
        return self.encoder[0].in_dim

    @property
    def latent_dim(self) -> int:
        return self.encoder[-1].out_dim

    @property
    def layers(self) -> list[LayerParams]:
        return self.encoder + self.decoder

    @property
    def param_count(self) -> int:
        return sum(l.weights.size + l.biases.size for l in self.layers)

    def copy(self) -> "AutoencoderModel":
        return AutoencoderModel(
            encoder=[l.copy() for l in self.encoder],
            decoder=[l.copy() for l in self.decoder],
            learning_rate=self.learning_rate,
        )


@dataclass
class ActivationTrace:
    """Post-activation values per traversed layer (encoder layers first)."""

    layers: list[np.ndarray]
    encoder_count: int

    def encoder_layers(self) -> list[np.ndarray]:
        return self.layers[: self.encoder_count]

    def decoder_layers(self) -> list[np.ndarray]:
        return self.layers[self.encoder_count :]


@dataclass
class LayerGrads:
    weights: np.ndarray
    biases: np.ndarray


@dataclass
class Gradients:
    """Per-layer gradients for one half (encoder or decoder) of a model."""

    layers: list[LayerGrads]


def init_model(arch: Architecture, seed: int, learning_rate: float = 1e-5) -> AutoencoderModel:
    """Initialize weights uniformly in [-1/sqrt(in_dim), +1/sqrt(in_dim)], biases zero."""
    rng = np.random.default_rng(seed)

    def make(spec):
        layers = []
        for in_dim, out_dim, act in spec:
            bound = 1.0 / math.sqrt(in_dim)
            w = rng.uniform(-bound, bound, size=(out_dim, in_dim))
            layers.append(LayerParams(w, np.zeros(out_dim), act))
        return layers

    return AutoencoderModel(
        encoder=make(arch.encoder_spec()),
        decoder=make(arch.decoder_spec()),
        learning_rate=learning_rate,
    )


def _activate(z: np.ndarray, kind: str) -> np.ndarray:
    if kind == "relu":
        return np.maximum(z, 0.0)
    if kind == "sigmoid":
        # Split by sign for numerical stability at large |z|.
        out = np.empty_like(z)
        pos = z >= 0
        out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
        ez = np.exp(z[~pos])
        out[~pos] = ez / (1.0 + ez)
        return out
    return z


def _activation_grad(z: np.ndarray, a: np.ndarray, kind: str) -> np.ndarray:
    """d activation / d preactivation; relu'(0) is taken as 0."""
    if kind == "relu":
        return (z > 0).astype(np.float64)
    if kind == "sigmoid":
        return a * (1.0 - a)
    return np.ones_like(z)


def forward(
    model: AutoencoderModel, batch: np.ndarray, trace: bool = False
) -> tuple[np.ndarray, ActivationTrace | None]:
    """Run the batch through encoder and decoder.

    Returns the reconstruction and, when trace is on, the per-layer
    post-activation matrices.
    """
    batch = np.asarray(batch, dtype=np.float64)
    if batch.ndim != 2 or batch.shape[1] != model.input_dim:
        raise ValueError(f"batch must be b x {model.input_dim}, got shape {batch.shape}")
    a = batch
    recorded: list[np.ndarray] = []
    for layer in model.layers:
        z = a @ layer.weights.T + layer.biases
        a = _activate(z, layer.activation)
        if trace:
            recorded.append(a)
    if trace:
        return a, ActivationTrace(layers=recorded, encoder_count=len(model.encoder))
    return a, None


def l1_loss(x: np.ndarray, recon: np.ndarray) -> float:
    """Mean per-element absolute error."""
    if x.shape != recon.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {recon.shape}")
    return float(np.mean(np.abs(x - recon)))


def bce_loss(x: np.ndarray, recon: np.ndarray) -> float:
    """Mean binary cross-entropy with the reconstruction clamped to [eps, 1-eps]."""
    if x.shape != recon.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {recon.shape}")
    c = np.clip(recon, BCE_EPS, 1.0 - BCE_EPS)
    return float(np.mean(-(x * np.log(c) + (1.0 - x) * np.log(1.0 - c))))


def compute_loss(x: np.ndarray, recon: np.ndarray, loss_kind: str) -> float:
    if loss_kind == "l1":
        return l1_loss(x, recon)
    if loss_kind == "bce":
        return bce_loss(x, recon)
    raise ValueError(f"unknown loss {loss_kind!r}")


def backward(
    model: AutoencoderModel, batch: np.ndarray, loss_kind: str = "l1"
) -> tuple[Gradients, Gradients, float]:
    """Gradients of the mean reconstruction loss w.r.t. every parameter.

    The L1 subgradient at zero error is taken as 0; BCE gradients are zero
    where the output clamp is active.
    """
    batch = np.asarray(batch, dtype=np.float64)
    if batch.ndim != 2 or batch.shape[1] != model.input_dim:
        raise ValueError(f"batch must be b x {model.input_dim}, got shape {batch.shape}")
    layers = model.layers
    # Forward, keeping pre- and post-activations for every layer.
    acts = [batch]
    pres = []
    a = batch
    for layer in layers:
        z = a @ layer.weights.T + layer.biases
        a = _activate(z, layer.activation)
        pres.append(z)
        acts.append(a)
    recon = acts[-1]
    n_elems = batch.size

    if loss_kind == "l1":
        loss = float(np.mean(np.abs(batch - recon)))
        d_out = np.sign(recon - batch) / n_elems
    elif loss_kind == "bce":
        c = np.clip(recon, BCE_EPS, 1.0 - BCE_EPS)
        loss = float(np.mean(-(batch * np.log(c) + (1.0 - batch) * np.log(1.0 - c))))
        d_out = np.where(
            (recon > BCE_EPS) & (recon < 1.0 - BCE_EPS),
            (c - batch) / (c * (1.0 - c)),
            0.0,
        ) / n_elems
    else:
        raise ValueError(f"unknown loss {loss_kind!r}")

    grads: list[LayerGrads] = [None] * len(layers)  # type: ignore[list-item]
    delta = d_out
    for i in range(len(layers) - 1, -1, -1):
        layer = layers[i]
        delta = delta * _activation_grad(pres[i], acts[i + 1], layer.activation)
        grads[i] = LayerGrads(weights=delta.T @ acts[i], biases=delta.sum(axis=0))
        if i > 0:
            delta = delta @ layer.weights
    ne = len(model.encoder)
    return Gradients(grads[:ne]), Gradients(grads[ne:]), loss


def apply_gradients(layers: list[LayerParams], grads: Gradients, learning_rate: float) -> None:
    """In-place SGD update of one layer stack. Zeroed weights update too."""
    if len(layers) != len(grads.layers):
        raise ValueError("gradient/layer count mismatch")
    for layer, g in zip(layers, grads.layers):
        if layer.weights.shape != g.weights.shape or layer.biases.shape != g.biases.shape:
            raise ValueError("gradient shape mismatch")
        layer.weights -= learning_rate * g.weights
        layer.biases -= learning_rate * g.biases


def sgd_step(model: AutoencoderModel, grads_e: Gradients, grads_d: Gradients) -> AutoencoderModel:
    """One plain SGD step on both halves using the model's learning rate."""
    apply_gradients(model.encoder, grads_e, model.learning_rate)
    apply_gradients(model.decoder, grads_d, model.learning_rate)
    return model


@dataclass(frozen=True)
class ParamCounts:
    """Exact nonzero counts, split by half and by weights vs biases."""

    encoder_nonzero: int
    decoder_nonzero: int
    total_params: int
    encoder_weight_nonzero: int
    encoder_bias_nonzero: int
    decoder_weight_nonzero: int
    decoder_bias_nonzero: int
    encoder_total: int
    decoder_total: int

    @property
    def nonzero(self) -> int:
        return self.encoder_nonzero + self.decoder_nonzero


def nonzero_count(model: AutoencoderModel) -> ParamCounts:
    """Count parameters whose value is exactly nonzero (weights and biases both)."""

    def half(layers):
        w = sum(int(np.count_nonzero(l.weights)) for l in layers)
        b = sum(int(np.count_nonzero(l.biases)) for l in layers)
        total = sum(l.weights.size + l.biases.size for l in layers)
        return w, b, total

    ew, eb, etot = half(model.encoder)
    dw, db, dtot = half(model.decoder)
    return ParamCounts(
        encoder_nonzero=ew + eb,
        decoder_nonzero=dw + db,
        total_params=etot + dtot,
        encoder_weight_nonzero=ew,
        encoder_bias_nonzero=eb,
        decoder_weight_nonzero=dw,
        decoder_bias_nonzero=db,
        encoder_total=etot,
        decoder_total=dtot,
    )


def save_model(model: AutoencoderModel, path: str | Path) -> None:
    """Versioned checkpoint: text header, JSON layer description, then raw
    row-major little-endian float64 parameter arrays."""
    desc = {
        "learning_rate": model.learning_rate,
        "encoder": [
            {"in": l.in_dim, "out": l.out_dim, "activation": l.activation} for l in model.encoder
        ],
        "decoder": [
            {"in": l.in_dim, "out": l.out_dim, "activation": l.activation} for l in model.decoder
        ],
    }
    with open(path, "wb") as fh:
        fh.write((CHECKPOINT_MAGIC + "\n").encode("ascii"))
        fh.write((json.dumps(desc) + "\n").encode("ascii"))
        for layer in model.layers:
            fh.write(np.ascontiguousarray(layer.weights, dtype="<f8").tobytes())
            fh.write(np.ascontiguousarray(layer.biases, dtype="<f8").tobytes())


def load_model(path: str | Path) -> AutoencoderModel:
    with open(path, "rb") as fh:
        magic = fh.readline().decode("ascii").rstrip("\n")
        if magic != CHECKPOINT_MAGIC:
            raise ValueError(f"{path}: not a model checkpoint (magic {magic!r})")
        desc = json.loads(fh.readline().decode("ascii"))
        blob = fh.read()

    offset = 0

    def take(shape):
        nonlocal offset
        count = int(np.prod(shape))
        arr = np.frombuffer(blob, dtype="<f8", count=count, offset=offset * 8).reshape(shape)
        offset += count
        return arr.astype(np.float64).copy()

    def build(entries):
        layers = []
        for e in entries:
            w = take((e["out"], e["in"]))
            b = take((e["out"],))
            layers.append(LayerParams(w, b, e["activation"]))
        return layers

    encoder = build(desc["encoder"])
    decoder = build(desc["decoder"])
    if offset * 8 != len(blob):
        raise ValueError(f"{path}: trailing bytes in checkpoint")
    return AutoencoderModel(encoder=encoder, decoder=decoder, learning_rate=desc["learning_rate"])
