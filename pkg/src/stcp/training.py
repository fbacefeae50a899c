"""Adam training loop over flattened field pairs.

Inputs and outputs are linearly range-scaled to [-1, 1] using the global
min/max of the training split; the fitted scalers are stored on the model
so downstream consumers can move between normalized and physical units.
Batch order reshuffles every epoch from the model's own seed, which makes
training bit-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DivergenceError
from .losses import LossKind
from .mlp import MlpConfig, ModelParams, RangeScaler, backward, init_params
from .rng import Stream, derive


@dataclass(frozen=True)
class TrainConfig:
    epochs: int
    batch_size: int = 50
    learning_rate: float = 0.005
    decay_every: int = 100  # halve the learning rate this often
    decay_factor: float = 0.5
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise ConfigError(f"epochs must be positive, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be positive, got {self.batch_size}")
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.decay_every < 1:
            raise ConfigError(f"decay_every must be positive, got {self.decay_every}")


class Adam:
    """Standard Adam with bias correction; state per parameter tensor."""

    def __init__(self, cfg: TrainConfig, shapes: list[tuple[int, ...]]):
        self.cfg = cfg
        self.m = [np.zeros(s) for s in shapes]
        self.v = [np.zeros(s) for s in shapes]
        self.t = 0

    def step(self, params: list[np.ndarray], grads: list[np.ndarray], lr: float) -> None:
        c = self.cfg
        self.t += 1
        for i, (p, g) in enumerate(zip(params, grads)):
            self.m[i] = c.beta1 * self.m[i] + (1.0 - c.beta1) * g
            self.v[i] = c.beta2 * self.v[i] + (1.0 - c.beta2) * g * g
            mhat = self.m[i] / (1.0 - c.beta1**self.t)
            vhat = self.v[i] / (1.0 - c.beta2**self.t)
            p -= lr * mhat / (np.sqrt(vhat) + c.eps)


def train(
    x: np.ndarray,
    y: np.ndarray,
    model_cfg: MlpConfig,
    train_cfg: TrainConfig,
    kind: LossKind,
    scalers: tuple[RangeScaler, RangeScaler] | None = None,
) -> tuple[ModelParams, list[float]]:
    """Fit an MLP; returns the model and the per-epoch mean training loss.

    ``scalers`` overrides the (x, y) range fit, letting sibling models of
    one experiment share exactly the same normalization.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 2 or y.ndim != 2:
        raise ConfigError("train expects 2-D (n, features) arrays")
    n = x.shape[0]
    if n == 0:
        raise ConfigError("training set is empty")
    if y.shape[0] != n:
        raise ConfigError(f"x has {n} rows but y has {y.shape[0]}")
    if x.shape[1] != model_cfg.n_in or y.shape[1] != model_cfg.n_out:
        raise ConfigError(
            f"data widths ({x.shape[1]}, {y.shape[1]}) do not match model "
            f"({model_cfg.n_in}, {model_cfg.n_out})"
        )

    if scalers is None:
        x_scale, y_scale = RangeScaler.fit(x), RangeScaler.fit(y)
    else:
        x_scale, y_scale = scalers
    xn = x_scale.transform(x)
    yn = y_scale.transform(y)

    params = init_params(model_cfg, derive(train_cfg.seed, "init"))
    params.x_scale, params.y_scale = x_scale, y_scale
    shapes = [w.shape for w in params.weights] + [b.shape for b in params.biases]
    opt = Adam(train_cfg, shapes)
    shuffle = Stream(derive(train_cfg.seed, "shuffle"))
    dropout = Stream(derive(train_cfg.seed, "dropout"))

    history: list[float] = []
    for epoch in range(train_cfg.epochs):
        lr = train_cfg.learning_rate * train_cfg.decay_factor ** (epoch // train_cfg.decay_every)
        order = shuffle.permutation(n)
        total = 0.0
        batches = 0
        for start in range(0, n, train_cfg.batch_size):
            idx = order[start : start + train_cfg.batch_size]
            # overflow surfaces through the isfinite check, not warnings
            with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
                value, gw, gb = backward(
                    params, xn[idx], yn[idx], kind,
                    train=model_cfg.dropout_rate > 0.0, stream=dropout,
                )
            if not np.isfinite(value):
                raise DivergenceError(f"training loss diverged at epoch {epoch}")
            opt.step(params.weights + params.biases, gw + gb, lr)
            total += value
            batches += 1
        history.append(total / batches)
    return params, history


def train_on_records(records, model_cfg, train_cfg, kind, scalers=None):
    """Convenience wrapper flattening SimulationRecords into matrices."""
    x = np.stack([r.input.flat() for r in records])
    y = np.stack([r.output.flat() for r in records])
    return train(x, y, model_cfg, train_cfg, kind, scalers)
