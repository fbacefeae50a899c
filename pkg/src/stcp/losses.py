"""Training losses with exact (sub)gradients.

All losses reduce by mean over every (sample, output) entry.  L1 and
pinball are non-smooth; their gradients use the subgradient convention
grad = 0 exactly at the kink.  The Gaussian negative log-likelihood
expects predictions of width 2m: the first m columns are means, the last
m are log-variances (no clamping inside the loss, so finite-difference
checks see the pure function).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import ConfigError, ShapeError


@dataclass(frozen=True)
class Mse:
    pass


@dataclass(frozen=True)
class L1:
    pass


@dataclass(frozen=True)
class Pinball:
    """Quantile loss at level tau: mean(max(tau*e, (tau-1)*e)), e = y - pred."""

    tau: float

    def __post_init__(self) -> None:
        if not 0.0 < self.tau < 1.0:
            raise ConfigError(f"pinball tau must lie in (0,1), got {self.tau}")


@dataclass(frozen=True)
class GaussianNll:
    pass


LossKind = Union[Mse, L1, Pinball, GaussianNll]


def _as_2d(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    return a.reshape(1, -1) if a.ndim == 1 else a


def _check_point(pred: np.ndarray, target: np.ndarray) -> None:
    if pred.shape != target.shape:
        raise ShapeError(f"pred shape {pred.shape} != target shape {target.shape}")


def _split_nll(pred: np.ndarray, target: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if pred.shape[-1] != 2 * target.shape[-1] or pred.shape[:-1] != target.shape[:-1]:
        raise ShapeError(
            f"gaussian nll needs pred width 2*m, got pred {pred.shape} target {target.shape}"
        )
    m = target.shape[-1]
    return pred[..., :m], pred[..., m:]


def loss_value(kind: LossKind, pred: np.ndarray, target: np.ndarray) -> float:
    pred, target = _as_2d(pred), _as_2d(target)
    if isinstance(kind, Mse):
        _check_point(pred, target)
        return float(np.mean((pred - target) ** 2))
    if isinstance(kind, L1):
        _check_point(pred, target)
        return float(np.mean(np.abs(pred - target)))
    if isinstance(kind, Pinball):
        _check_point(pred, target)
        e = target - pred
        return float(np.mean(np.maximum(kind.tau * e, (kind.tau - 1.0) * e)))
    if isinstance(kind, GaussianNll):
        mu, logvar = _split_nll(pred, target)
        return float(np.mean(0.5 * logvar + (target - mu) ** 2 / (2.0 * np.exp(logvar))))
    raise ConfigError(f"unknown loss kind {kind!r}")


loss_eval = loss_value  # interface alias


def loss_grad(kind: LossKind, pred: np.ndarray, target: np.ndarray) -> np.ndarray:
    """d(loss)/d(pred), same shape as pred."""
    orig_shape = np.asarray(pred).shape
    grad = _loss_grad_2d(kind, _as_2d(pred), _as_2d(target))
    return grad.reshape(orig_shape)


def _loss_grad_2d(kind: LossKind, pred: np.ndarray, target: np.ndarray) -> np.ndarray:
    if isinstance(kind, Mse):
        _check_point(pred, target)
        return 2.0 * (pred - target) / pred.size
    if isinstance(kind, L1):
        _check_point(pred, target)
        return np.sign(pred - target) / pred.size
    if isinstance(kind, Pinball):
        _check_point(pred, target)
        e = target - pred
        # d/d(pred) of max(tau*e, (tau-1)*e): -tau where e>0, 1-tau where e<0
        g = np.where(e > 0, -kind.tau, np.where(e < 0, 1.0 - kind.tau, 0.0))
        return g / pred.size
    if isinstance(kind, GaussianNll):
        mu, logvar = _split_nll(pred, target)
        inv_var = np.exp(-logvar)
        n = mu.size
        gmu = (mu - target) * inv_var / n
        glogvar = (0.5 - 0.5 * (target - mu) ** 2 * inv_var) / n
        return np.concatenate([gmu, glogvar], axis=-1)
    raise ConfigError(f"unknown loss kind {kind!r}")


def loss_from_name(name: str, tau: float | None = None) -> LossKind:
    """Config-string constructor: mse | l1 | pinball | nll."""
    if name == "mse":
        return Mse()
    if name == "l1":
        return L1()
    if name == "pinball":
        if tau is None:
            raise ConfigError("pinball loss needs a tau level")
        return Pinball(tau)
    if name == "nll":
        return GaussianNll()
    raise ConfigError(f"unknown loss name {name!r}")
