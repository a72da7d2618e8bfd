"""Dense autoencoders with an optional quantum-circuit bottleneck.

Three variants share the same encoder ``in -> 56 -> 4`` and decoder
``4 -> 56 -> in``:

* ``AE``: the latent vector is the encoder output.
* ``HAE``: the encoder output is fed as rotation angles into a circuit and
  the latent vector is the per-qubit Pauli-Z expectation.
* ``ModifiedAE``: a classical ``4 -> 16 -> 4`` expansion replaces the circuit.

Gradients are computed by hand: backpropagation through the dense layers and
parameter-shift Jacobians through the circuit.
"""

from __future__ import annotations

import copy
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from hae import circuits
from hae.errors import ConfigurationError, TrainingDivergedError, UsageError

VARIANTS = ("AE", "HAE", "ModifiedAE")
HIDDEN = 56
LATENT = 4
EXPANSION = 16
MODEL_FORMAT = "hae-model"
MODEL_FORMAT_VERSION = 1


@dataclass
class DenseLayer:
    weights: np.ndarray  # (out, in)
    biases: np.ndarray  # (out,)
    activation: str = "tanh"

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        self.biases = np.asarray(self.biases, dtype=float)
        if self.weights.ndim != 2 or self.biases.shape != (self.weights.shape[0],):
            raise UsageError(
                f"inconsistent layer shapes {self.weights.shape} / {self.biases.shape}"
            )
        if self.activation not in ("tanh", "identity"):
            raise UsageError(f"unknown activation {self.activation!r}")

    @property
    def shape(self) -> tuple[int, int]:
        return self.weights.shape

    def __call__(self, x):
        z = x @ self.weights.T + self.biases
        return np.tanh(z) if self.activation == "tanh" else z


def _init_layer(rng, n_in, n_out, activation="tanh"):
    bound = 1.0 / np.sqrt(n_in)
    return DenseLayer(
        rng.uniform(-bound, bound, size=(n_out, n_in)),
        rng.uniform(-bound, bound, size=n_out),
        activation,
    )


@dataclass
class Model:
    variant: str
    encoder: list[DenseLayer]
    decoder: list[DenseLayer]
    expansion: list[DenseLayer] = field(default_factory=list)
    circuit: circuits.CircuitSpec | None = None
    theta: np.ndarray | None = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigurationError(f"unknown model variant {self.variant!r}")
        if self.variant == "HAE":
            if self.circuit is None or self.theta is None:
                raise ConfigurationError("HAE needs a circuit and parameters")
            if self.circuit.n_qubits != self.encoder[-1].shape[0]:
                raise ConfigurationError("encoder width must equal the qubit count")
            self.theta = np.asarray(self.theta, dtype=float)
            if self.theta.shape != (self.circuit.n_params,):
                raise ConfigurationError("theta length does not match the circuit")
        if self.variant == "ModifiedAE":
            widths = [layer.shape for layer in self.expansion]
            if widths != [(EXPANSION, LATENT), (LATENT, EXPANSION)]:
                raise ConfigurationError(f"expansion must be 4-16-4, got {widths}")

    @property
    def n_features(self) -> int:
        return self.encoder[0].shape[1]

    def parameters(self) -> list[np.ndarray]:
        """Trainable arrays in a fixed order; updated in place by optimizers."""
        params = []
        for layer in self.encoder + self.expansion + self.decoder:
            params += [layer.weights, layer.biases]
        if self.variant == "HAE":
            params.append(self.theta)
        return params

    def copy(self) -> "Model":
        return copy.deepcopy(self)


def init_model(
    variant: str,
    n_features: int,
    seed: int = 0,
    circuit_id: int = 10,
    circuit_seed: int = 0,
    circuit: circuits.CircuitSpec | None = None,
) -> Model:
    """Freshly initialized model; weights ~ U[-1/sqrt(fan_in), 1/sqrt(fan_in)]."""
    if variant not in VARIANTS:
        raise ConfigurationError(f"unknown model variant {variant!r}")
    if n_features < 1:
        raise ConfigurationError("n_features must be positive")
    rng = np.random.default_rng(seed)
    encoder = [_init_layer(rng, n_features, HIDDEN), _init_layer(rng, HIDDEN, LATENT)]
    expansion = []
    spec = theta = None
    if variant == "ModifiedAE":
        expansion = [_init_layer(rng, LATENT, EXPANSION), _init_layer(rng, EXPANSION, LATENT)]
    elif variant == "HAE":
        spec = circuit if circuit is not None else circuits.build_circuit(circuit_id, circuit_seed)
        theta = rng.uniform(-np.pi, np.pi, size=spec.n_params)
    decoder = [
        _init_layer(rng, LATENT, HIDDEN),
        _init_layer(rng, HIDDEN, n_features, "identity"),
    ]
    return Model(variant, encoder, decoder, expansion, spec, theta)


# ---------------------------------------------------------------------------
# forward / backward


def _check_batch(model, X):
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise UsageError(
            f"expected rows of width {model.n_features}, got shape {X.shape}"
        )
    return X


def _stack_forward(layers, x):
    acts = [x]
    for layer in layers:
        acts.append(layer(acts[-1]))
    return acts


def _stack_backward(layers, acts, grad_out, grads):
    """Backprop ``grad_out`` through ``layers``; prepend (dW, db) pairs to ``grads``."""
    g = grad_out
    pairs = []
    for layer, a_in, a_out in zip(reversed(layers), reversed(acts[:-1]), reversed(acts[1:])):
        if layer.activation == "tanh":
            g = g * (1.0 - a_out**2)
        pairs.append((g.T @ a_in, g.sum(axis=0)))
        g = g @ layer.weights
    for dw, db in reversed(pairs):
        grads += [dw, db]
    return g


def _latent_forward(model, X, with_jacobians=False):
    enc = _stack_forward(model.encoder, X)
    z = enc[-1]
    cache = {"enc": enc}
    if model.variant == "AE":
        latent = z
    elif model.variant == "ModifiedAE":
        exp = _stack_forward(model.expansion, z)
        cache["exp"] = exp
        latent = exp[-1]
    else:
        if with_jacobians:
            latent, d_theta, d_x = circuits.jacobians_batch(model.circuit, model.theta, z)
            cache["d_theta"], cache["d_x"] = d_theta, d_x
        else:
            latent = circuits.evaluate_batch(model.circuit, model.theta, z)
    return latent, cache


def forward_batch(model: Model, X) -> tuple[np.ndarray, np.ndarray]:
    X = _check_batch(model, X)
    latent, _ = _latent_forward(model, X)
    recon = _stack_forward(model.decoder, latent)[-1]
    return recon, latent


def forward(model: Model, x) -> tuple[np.ndarray, np.ndarray]:
    """Reconstruction and latent vector for one input row."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise UsageError("forward takes a single vector; use forward_batch for matrices")
    recon, latent = forward_batch(model, x[None, :])
    return recon[0], latent[0]


def loss(reconstructions, inputs, kind: str = "mse") -> float:
    """Mean squared reconstruction error over batch and features (or its root)."""
    r = np.asarray(reconstructions, dtype=float)
    x = np.asarray(inputs, dtype=float)
    if r.shape != x.shape:
        raise UsageError(f"shape mismatch {r.shape} vs {x.shape}")
    if r.size == 0:
        raise UsageError("empty batch")
    mse = float(np.mean((r - x) ** 2))
    if kind == "mse":
        return mse
    if kind == "rmse":
        return float(np.sqrt(mse))
    raise ConfigurationError(f"unknown loss {kind!r}")


def loss_and_gradients(model: Model, X, kind: str = "mse"):
    """Loss on ``X`` and its gradient for every array in ``model.parameters()``."""
    X = _check_batch(model, X)
    latent, cache = _latent_forward(model, X, with_jacobians=True)
    dec = _stack_forward(model.decoder, latent)
    recon = dec[-1]
    value = loss(recon, X, kind)
    g = 2.0 * (recon - X) / X.size
    if kind == "rmse":
        g = g / (2.0 * value) if value > 0 else np.zeros_like(g)

    dec_grads: list = []
    g_latent = _stack_backward(model.decoder, dec, g, dec_grads)
    exp_grads: list = []
    theta_grad = None
    if model.variant == "AE":
        g_z = g_latent
    elif model.variant == "ModifiedAE":
        g_z = _stack_backward(model.expansion, cache["exp"], g_latent, exp_grads)
    else:
        theta_grad = np.einsum("bi,bij->j", g_latent, cache["d_theta"])
        g_z = np.einsum("bi,bij->bj", g_latent, cache["d_x"])
    enc_grads: list = []
    _stack_backward(model.encoder, cache["enc"], g_z, enc_grads)
    grads = enc_grads + exp_grads + dec_grads
    if theta_grad is not None:
        grads.append(theta_grad)
    return value, grads


def encode_latent(model: Model, data) -> np.ndarray:
    """Latent representation of every row, shape ``(rows, 4)``."""
    data = np.asarray(data, dtype=float)
    if data.ndim == 2 and data.shape[0] == 0:
        if data.shape[1] not in (0, model.n_features):
            raise UsageError("column count does not match the model")
        return np.zeros((0, LATENT))
    return forward_batch(model, data)[1]


def reconstruction_loss(model: Model, data, kind: str = "mse") -> float:
    recon, _ = forward_batch(model, data)
    return loss(recon, data, kind)


# ---------------------------------------------------------------------------
# training


@dataclass
class TrainConfig:
    epochs: int = 80
    batch_size: int = 32
    learning_rate: float = 0.001
    seed: int = 0
    optimizer: str = "adam"
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    loss: str = "mse"

    def __post_init__(self):
        if self.epochs < 0 or self.batch_size < 1 or self.learning_rate <= 0:
            raise ConfigurationError("epochs, batch_size and learning_rate must be positive")
        if self.optimizer not in ("adam", "sgd"):
            raise ConfigurationError(f"unknown optimizer {self.optimizer!r}")
        if self.loss not in ("mse", "rmse"):
            raise ConfigurationError(f"unknown loss {self.loss!r}")


class Adam:
    def __init__(self, params, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = params
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, grads):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * g * g
            m_hat = m / (1 - b1**self.t)
            v_hat = v / (1 - b2**self.t)
            p -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


class SGD:
    def __init__(self, params, lr):
        self.params, self.lr = params, lr

    def step(self, grads):
        for p, g in zip(self.params, grads):
            p -= self.lr * g


def train(model: Model, data, config: TrainConfig | None = None, callback=None):
    """Mini-batch training; returns ``(trained_model, loss_history)``.

    ``loss_history[e]`` is the full-data loss after epoch ``e``. The input
    model is left untouched.
    """
    config = config or TrainConfig()
    data = _check_batch(model, data)
    if data.shape[0] < config.batch_size:
        raise UsageError(
            f"need at least batch_size={config.batch_size} rows, got {data.shape[0]}"
        )
    model = model.copy()
    params = model.parameters()
    if config.optimizer == "adam":
        opt = Adam(params, config.learning_rate, config.beta1, config.beta2, config.eps)
    else:
        opt = SGD(params, config.learning_rate)
    rng = np.random.default_rng(config.seed)
    history = []
    n = data.shape[0]
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            batch = data[order[start:start + config.batch_size]]
            value, grads = loss_and_gradients(model, batch, config.loss)
            if not np.isfinite(value):
                raise TrainingDivergedError(epoch)
            opt.step(grads)
        epoch_loss = reconstruction_loss(model, data, config.loss)
        if not np.isfinite(epoch_loss):
            raise TrainingDivergedError(epoch)
        history.append(epoch_loss)
        if callback is not None:
            callback(epoch, epoch_loss)
    return model, history


# ---------------------------------------------------------------------------
# persistence
#
# A model file is a numpy ``.npz`` archive. Entry ``header`` holds a JSON
# document (format tag, version, variant, layer shapes/activations, circuit
# id and seed); entries ``encoder.<i>.W``/``.b``, ``expansion.<i>.*``,
# ``decoder.<i>.*`` and ``theta`` hold the arrays. Extra arrays supplied by
# the caller (rescaling, forest) are stored under their own names.


def _layer_meta(layers):
    return [[int(l.shape[0]), int(l.shape[1]), l.activation] for l in layers]


def model_arrays(model: Model) -> tuple[dict, dict]:
    header = {
        "format": MODEL_FORMAT,
        "version": MODEL_FORMAT_VERSION,
        "variant": model.variant,
        "layers": {
            "encoder": _layer_meta(model.encoder),
            "expansion": _layer_meta(model.expansion),
            "decoder": _layer_meta(model.decoder),
        },
        "circuit": None,
    }
    arrays = {}
    for name in ("encoder", "expansion", "decoder"):
        for i, layer in enumerate(getattr(model, name)):
            arrays[f"{name}.{i}.W"] = layer.weights
            arrays[f"{name}.{i}.b"] = layer.biases
    if model.variant == "HAE":
        if model.circuit.id is None:
            raise UsageError("only zoo circuits can be persisted")
        header["circuit"] = {"id": model.circuit.id, "seed": model.circuit.seed}
        arrays["theta"] = model.theta
    return header, arrays


def model_from_arrays(header: dict, arrays) -> Model:
    if header.get("format") != MODEL_FORMAT:
        raise UsageError("not a model file")
    if header.get("version") != MODEL_FORMAT_VERSION:
        raise UsageError(f"unsupported model file version {header.get('version')}")
    stacks = {}
    for name, meta in header["layers"].items():
        stacks[name] = [
            DenseLayer(arrays[f"{name}.{i}.W"], arrays[f"{name}.{i}.b"], act)
            for i, (_, _, act) in enumerate(meta)
        ]
    spec = theta = None
    if header["variant"] == "HAE":
        spec = circuits.build_circuit(header["circuit"]["id"], header["circuit"]["seed"])
        theta = np.array(arrays["theta"])
    return Model(header["variant"], stacks["encoder"], stacks["decoder"],
                 stacks["expansion"], spec, theta)


def save_model(path, model: Model, extras: dict | None = None, meta: dict | None = None) -> None:
    header, arrays = model_arrays(model)
    if meta:
        header["meta"] = meta
    for key, value in (extras or {}).items():
        if key in arrays or key == "header":
            raise UsageError(f"extra array name {key!r} collides with model data")
        arrays[key] = value
    with open(path, "wb") as fh:
        np.savez(fh, header=np.array(json.dumps(header)), **arrays)


def load_model(path) -> tuple[Model, dict, dict]:
    """Return ``(model, extra_arrays, meta)`` from a model file."""
    with np.load(Path(path), allow_pickle=False) as archive:
        header = json.loads(str(archive["header"]))
        arrays = {k: archive[k] for k in archive.files if k != "header"}
    model = model_from_arrays(header, arrays)
    own = set(model_arrays(model)[1])
    extras = {k: v for k, v in arrays.items() if k not in own}
    return model, extras, header.get("meta", {})


def config_dict(config: TrainConfig) -> dict:
    return asdict(config)
