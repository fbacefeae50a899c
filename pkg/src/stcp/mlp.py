"""Small fully-connected networks with exact reverse-mode gradients.

Everything is plain numpy: Glorot-uniform init from the package stream,
tanh or gelu hidden activations, inverted dropout after each hidden
activation, and a linear output layer.  The mean_logvar head doubles the
output width; columns [0, m) are means and [m, 2m) log-variances.

Forward in eval mode is a pure function of (params, x).  Train mode draws
dropout masks from an explicit Stream, so a forward/backward pair that
must share masks uses the cached path.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, ShapeError
from .field_tensor import FieldTensor, read_tensor, write_tensor
from .losses import LossKind, loss_grad, loss_value
from .rng import Stream

SIGMA_FLOOR = 1e-6  # lower bound applied when emitting predictive stddevs

ACTIVATIONS = ("tanh", "gelu")
HEADS = ("point", "mean_logvar")

_GELU_C = math.sqrt(2.0 / math.pi)


@dataclass(frozen=True)
class MlpConfig:
    """Architecture: layer_sizes lists input, hidden..., target widths."""

    layer_sizes: tuple[int, ...]
    activation: str = "tanh"
    dropout_rate: float = 0.0
    head: str = "point"

    def __post_init__(self) -> None:
        object.__setattr__(self, "layer_sizes", tuple(int(s) for s in self.layer_sizes))
        if len(self.layer_sizes) < 2:
            raise ConfigError("layer_sizes needs at least input and output widths")
        if any(s < 1 for s in self.layer_sizes):
            raise ConfigError(f"layer widths must be positive, got {self.layer_sizes}")
        if self.activation not in ACTIVATIONS:
            raise ConfigError(f"activation must be one of {ACTIVATIONS}, got {self.activation!r}")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ConfigError(f"dropout_rate must lie in [0,1), got {self.dropout_rate}")
        if self.head not in HEADS:
            raise ConfigError(f"head must be one of {HEADS}, got {self.head!r}")

    @property
    def n_in(self) -> int:
        return self.layer_sizes[0]

    @property
    def n_out(self) -> int:
        """Target width m (what the model predicts, not the raw head width)."""
        return self.layer_sizes[-1]

    def widths(self) -> list[tuple[int, int]]:
        """(fan_in, fan_out) per weight matrix; the head may widen the last."""
        sizes = list(self.layer_sizes)
        if self.head == "mean_logvar":
            sizes[-1] *= 2
        return list(zip(sizes[:-1], sizes[1:]))


@dataclass(frozen=True)
class RangeScaler:
    """Affine map of [lo, hi] onto [-1, 1], shared by all cells of a field."""

    lo: float
    hi: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)) or self.hi <= self.lo:
            raise ConfigError(f"scaler needs finite lo < hi, got [{self.lo}, {self.hi}]")

    @classmethod
    def fit(cls, values: np.ndarray) -> "RangeScaler":
        lo, hi = float(np.min(values)), float(np.max(values))
        if hi <= lo:  # constant field: pick a unit span around it
            lo, hi = lo - 0.5, lo + 0.5
        return cls(lo, hi)

    def transform(self, values: np.ndarray) -> np.ndarray:
        return 2.0 * (np.asarray(values) - self.lo) / (self.hi - self.lo) - 1.0

    def inverse(self, values: np.ndarray) -> np.ndarray:
        return self.lo + (np.asarray(values) + 1.0) * (self.hi - self.lo) / 2.0

    def scale_width(self, width: np.ndarray) -> np.ndarray:
        """Map a width/stddev from normalized to physical units."""
        return np.asarray(width) * (self.hi - self.lo) / 2.0


@dataclass
class ModelParams:
    """Weights/biases plus the scalers fitted during training."""

    config: MlpConfig
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    x_scale: RangeScaler | None = None
    y_scale: RangeScaler | None = None
    seed: int | None = None


def init_params(config: MlpConfig, seed: int) -> ModelParams:
    """Glorot-uniform weights, zero biases, from the seeded stream."""
    stream = Stream(seed)
    weights, biases = [], []
    for n_in, n_out in config.widths():
        limit = math.sqrt(6.0 / (n_in + n_out))
        w = (stream.uniform(n_in * n_out) * 2.0 - 1.0) * limit
        weights.append(w.reshape(n_in, n_out))
        biases.append(np.zeros(n_out))
    return ModelParams(config=config, weights=weights, biases=biases, seed=seed)


def _act(name: str, z: np.ndarray) -> np.ndarray:
    if name == "tanh":
        return np.tanh(z)
    # gelu, tanh approximation
    inner = _GELU_C * (z + 0.044715 * z**3)
    return 0.5 * z * (1.0 + np.tanh(inner))


def _act_grad(name: str, z: np.ndarray) -> np.ndarray:
    if name == "tanh":
        t = np.tanh(z)
        return 1.0 - t * t
    inner = _GELU_C * (z + 0.044715 * z**3)
    t = np.tanh(inner)
    return 0.5 * (1.0 + t) + 0.5 * z * (1.0 - t * t) * _GELU_C * (1.0 + 3 * 0.044715 * z**2)


def _as_batch(x: np.ndarray, n_in: int) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=np.float64)
    squeeze = x.ndim == 1
    if squeeze:
        x = x.reshape(1, -1)
    if x.ndim != 2 or x.shape[1] != n_in:
        raise ShapeError(f"input shape {x.shape} incompatible with n_in={n_in}")
    return x, squeeze


def _forward_cached(
    params: ModelParams, x: np.ndarray, train: bool, stream: Stream | None
) -> tuple[np.ndarray, list[dict]]:
    cfg = params.config
    rate = cfg.dropout_rate if train else 0.0
    if rate > 0.0 and stream is None:
        raise ConfigError("train-mode forward with dropout needs a stream")
    a = x
    caches = []
    last = len(params.weights) - 1
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        z = a @ w + b
        cache: dict = {"a_prev": a, "z": z}
        if i == last:
            a = z  # linear output layer
        else:
            h = _act(cfg.activation, z)
            if rate > 0.0:
                u = stream.uniform(h.size).reshape(h.shape)
                mask = (u >= rate) / (1.0 - rate)  # inverted dropout
                cache["mask"] = mask
                h = h * mask
            a = h
        caches.append(cache)
    return a, caches


def forward(
    params: ModelParams, x: np.ndarray, train: bool = False, stream: Stream | None = None
) -> np.ndarray:
    """Network output; shape (batch, head width) or 1-D for 1-D input."""
    xb, squeeze = _as_batch(x, params.config.n_in)
    out, _ = _forward_cached(params, xb, train, stream)
    return out[0] if squeeze else out


def backward(
    params: ModelParams,
    x: np.ndarray,
    target: np.ndarray,
    kind: LossKind,
    train: bool = False,
    stream: Stream | None = None,
) -> tuple[float, list[np.ndarray], list[np.ndarray]]:
    """Loss and its exact gradients wrt every weight and bias.

    The same dropout masks are used in both passes (sampled once here).
    """
    xb, _ = _as_batch(x, params.config.n_in)
    target = np.asarray(target, dtype=np.float64)
    if target.ndim == 1:
        target = target.reshape(1, -1)
    out, caches = _forward_cached(params, xb, train, stream)
    value = loss_value(kind, out, target)
    delta = loss_grad(kind, out, target)

    cfg = params.config
    grad_w = [np.empty(0)] * len(params.weights)
    grad_b = [np.empty(0)] * len(params.biases)
    for i in range(len(params.weights) - 1, -1, -1):
        cache = caches[i]
        grad_w[i] = cache["a_prev"].T @ delta
        grad_b[i] = delta.sum(axis=0)
        if i > 0:
            delta = delta @ params.weights[i].T
            if "mask" in caches[i - 1]:
                delta = delta * caches[i - 1]["mask"]
            delta = delta * _act_grad(cfg.activation, caches[i - 1]["z"])
    return value, grad_w, grad_b


def mc_dropout(
    params: ModelParams, x: np.ndarray, passes: int, stream: Stream
) -> tuple[np.ndarray, np.ndarray]:
    """Stochastic-forward mean and sample stddev (ddof=1, floored).

    With dropout_rate=0 all passes coincide and the stddev is the floor.
    """
    if passes < 2:
        raise ConfigError(f"mc_dropout needs at least 2 passes, got {passes}")
    xb, squeeze = _as_batch(x, params.config.n_in)
    outs = np.stack([_forward_cached(params, xb, True, stream)[0] for _ in range(passes)])
    mean = outs.mean(axis=0)
    std = np.maximum(outs.std(axis=0, ddof=1), SIGMA_FLOOR)
    if squeeze:
        return mean[0], std[0]
    return mean, std


def predict_norm(params: ModelParams, x_raw: np.ndarray) -> np.ndarray:
    """Eval-mode prediction in normalized output units from raw inputs."""
    if params.x_scale is None:
        raise ConfigError("model has no fitted input scaler")
    return forward(params, params.x_scale.transform(x_raw))


def predict_phys(params: ModelParams, x_raw: np.ndarray) -> np.ndarray:
    """Prediction mapped back to physical output units."""
    if params.y_scale is None:
        raise ConfigError("model has no fitted output scaler")
    out = predict_norm(params, x_raw)
    if params.config.head == "mean_logvar":
        m = params.config.n_out
        out = out[..., :m]
    return params.y_scale.inverse(out)


def mean_sigma(out: np.ndarray, n_out: int) -> tuple[np.ndarray, np.ndarray]:
    """Split a mean_logvar head output into (mu, sigma), sigma floored."""
    mu = out[..., :n_out]
    sigma = np.maximum(np.exp(0.5 * out[..., n_out:]), SIGMA_FLOOR)
    return mu, sigma


# ---------------------------------------------------------------------------
# checkpointing
# ---------------------------------------------------------------------------


def save_model(params: ModelParams, directory: str | Path) -> Path:
    """header.json + one .cpt pair per layer; floats survive via repr."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    cfg = params.config
    header = {
        "layer_sizes": list(cfg.layer_sizes),
        "activation": cfg.activation,
        "dropout_rate": cfg.dropout_rate,
        "head": cfg.head,
        "seed": params.seed,
        "n_layers": len(params.weights),
        "x_scale": None if params.x_scale is None else [params.x_scale.lo, params.x_scale.hi],
        "y_scale": None if params.y_scale is None else [params.y_scale.lo, params.y_scale.hi],
    }
    (directory / "header.json").write_text(json.dumps(header, indent=2, sort_keys=True) + "\n")
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        with open(directory / f"weight_{i}.cpt", "wb") as fh:
            write_tensor(FieldTensor(w.reshape(1, *w.shape, 1)), fh)
        with open(directory / f"bias_{i}.cpt", "wb") as fh:
            write_tensor(FieldTensor(b.reshape(1, b.size, 1, 1)), fh)
    return directory


def load_model(directory: str | Path) -> ModelParams:
    directory = Path(directory)
    header = json.loads((directory / "header.json").read_text())
    cfg = MlpConfig(
        layer_sizes=tuple(header["layer_sizes"]),
        activation=header["activation"],
        dropout_rate=header["dropout_rate"],
        head=header["head"],
    )
    weights, biases = [], []
    for i in range(header["n_layers"]):
        with open(directory / f"weight_{i}.cpt", "rb") as fh:
            w = read_tensor(fh).data[0, :, :, 0]
        with open(directory / f"bias_{i}.cpt", "rb") as fh:
            b = read_tensor(fh).data[0, :, 0, 0]
        weights.append(w.copy())
        biases.append(b.copy())
    x_scale = None if header["x_scale"] is None else RangeScaler(*header["x_scale"])
    y_scale = None if header["y_scale"] is None else RangeScaler(*header["y_scale"])
    return ModelParams(
        config=cfg,
        weights=weights,
        biases=biases,
        x_scale=x_scale,
        y_scale=y_scale,
        seed=header["seed"],
    )
