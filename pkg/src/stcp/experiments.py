"""Experiment configuration: JSON schema, defaults, strict validation.

A config file only has to name the experiment; every other field has a
per-experiment default below.  Parsing deep-merges the user document onto
the defaults and rejects unknown keys with their dotted path, so typos
fail loudly instead of silently running the default.

The canonical (merged) document is kept on the parsed config, and its
SHA-256 over a canonical JSON encoding — minus fields that cannot change
results (output dir, worker count) — is the config hash that content-
addresses every artifact downstream.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

from .datasets import KINDS, _SAMPLED, specs_from_dicts
from .errors import ConfigError
from .losses import L1, Mse, Pinball
from .mlp import MlpConfig
from .sampling import ParameterSpec
from .solvers import ConvDiffConfig, PoissonConfig, WaveConfig
from .training import TrainConfig

# 0.05, 0.10, ..., 0.95 — the sweep grid used throughout
DEFAULT_ALPHAS = tuple(round(0.05 * i, 2) for i in range(1, 20))

_SOLVER_CLASSES = {"poisson": PoissonConfig, "convdiff": ConvDiffConfig, "wave": WaveConfig}


def solver_override_keys(kind: str) -> frozenset[str]:
    """Solver config fields that are fixed per run (not sampled per record)."""
    fields = {f.name for f in dataclasses.fields(_SOLVER_CLASSES[kind])}
    return frozenset(fields - set(_SAMPLED[kind]))


_POISSON_PARAMS = [{"name": "rho", "lo": 0.0, "hi": 4.0}]
_CONVDIFF_TRAIN_PARAMS = [
    {"name": "k", "lo": 1.0, "hi": 2.0},        # diffusion profile family index
    {"name": "c", "lo": 0.1, "hi": 0.5},        # convection velocity
    {"name": "mu", "lo": 1.0, "hi": 8.0},       # IC Gaussian mean
    {"name": "sigma2", "lo": 0.25, "hi": 0.75}, # IC Gaussian variance
]
_CONVDIFF_SHIFT_PARAMS = [
    {"name": "k", "lo": 2.0, "hi": 4.0},        # less diffusion
    {"name": "c", "lo": 0.5, "hi": 1.0},        # more convection
    {"name": "mu", "lo": 1.0, "hi": 8.0},
    {"name": "sigma2", "lo": 0.25, "hi": 0.75},
]
_WAVE_PARAMS = [
    {"name": "amplitude", "lo": 10.0, "hi": 50.0},
    {"name": "x_pos", "lo": 0.1, "hi": 0.5},
    {"name": "y_pos", "lo": 0.1, "hi": 0.5},
]

EXPERIMENT_DEFAULTS: dict[str, dict] = {
    "poisson": {
        "name": "poisson",
        "seed": 20250823,
        "out": None,
        "methods": ["aer", "std", "cqr"],
        "n_train": 2000,
        "n_cal": 1000,
        "n_val": 1000,
        "t_in": 1,
        "t_out": 1,
        "alphas": list(DEFAULT_ALPHAS),
        "ncal_sizes": [250, 500, 750, 1000],
        "workers": 1,
        "solver": {"n_grid": 32},
        "regimes": {
            # train/cal/val share one distribution for this experiment
            "train": {"params": _POISSON_PARAMS, "solver": {}},
            "cal": {"params": _POISSON_PARAMS, "solver": {}},
            "val": {"params": _POISSON_PARAMS, "solver": {}},
        },
        "model": {
            "hidden": [64, 64, 64],
            "activation": "tanh",
            "dropout": 0.1,
            "std_passes": 32,
            "cqr_taus": [0.05, 0.5, 0.95],
        },
        "training": {
            "epochs": 200,
            "batch_size": 50,
            "learning_rate": 0.005,
            "decay_every": 100,
            "decay_factor": 0.5,
            "aer_loss": "l1",
        },
    },
    "convdiff": {
        "name": "convdiff",
        "seed": 20250823,
        "out": None,
        "methods": ["aer", "std", "cqr"],
        "n_train": 500,
        "n_cal": 1000,
        "n_val": 1000,
        "t_in": 10,
        "t_out": 10,
        "alphas": list(DEFAULT_ALPHAS),
        "ncal_sizes": [250, 500, 750, 1000],
        "workers": 1,
        "solver": {"n_grid": 200, "n_steps": 100, "dt": 5e-4, "stride": 5},
        "regimes": {
            # calibration/validation shift toward less diffusion, more convection
            "train": {"params": _CONVDIFF_TRAIN_PARAMS, "solver": {}},
            "cal": {"params": _CONVDIFF_SHIFT_PARAMS, "solver": {}},
            "val": {"params": _CONVDIFF_SHIFT_PARAMS, "solver": {}},
        },
        "model": {
            # wider net than poisson: the flattened 10x200 window map needs the
            # capacity, and sharp quantile heads are what exposes the regime shift
            "hidden": [160, 160, 160],
            "activation": "tanh",
            "dropout": 0.1,
            "std_passes": 32,
            "cqr_taus": [0.05, 0.5, 0.95],
        },
        "training": {
            "epochs": 500,
            "batch_size": 50,
            "learning_rate": 0.005,
            "decay_every": 100,
            "decay_factor": 0.5,
            "aer_loss": "mse",
        },
    },
    "wave": {
        "name": "wave",
        "seed": 20250823,
        "out": None,
        "methods": ["aer", "std", "cqr"],
        "n_train": 200,
        "n_cal": 500,
        "n_val": 500,
        "t_in": 10,
        "t_out": 10,
        "alphas": list(DEFAULT_ALPHAS),
        "ncal_sizes": [250, 500],
        "workers": 1,
        "solver": {"n_grid": 17, "n_steps": 150, "dt": 0.00667},
        "regimes": {
            "train": {"params": _WAVE_PARAMS, "solver": {}},
            "cal": {"params": _WAVE_PARAMS, "solver": {}},
            "val": {"params": _WAVE_PARAMS, "solver": {}},
        },
        "model": {
            "hidden": [64, 64, 64],
            "activation": "tanh",
            "dropout": 0.1,
            "std_passes": 32,
            "cqr_taus": [0.05, 0.5, 0.95],
        },
        "training": {
            # the flattened 10x17x17 window concentrates most inputs at the
            # scaler's low edge; lr 5e-3 saturates the first tanh layer within
            # a few steps and the net freezes at the train-mean predictor.
            # Smaller steps + smaller batches (more of them) fit the map.
            "epochs": 1000,
            "batch_size": 20,
            "learning_rate": 0.0005,
            "decay_every": 250,
            "decay_factor": 0.5,
            "aer_loss": "mse",
        },
    },
}

# dict-valued nodes whose keys are validated against the solver, not the
# defaults (so e.g. {"speed": 0.5} is legal for wave even though no default
# names it)
_OPEN_SOLVER_PATHS = {
    "solver",
    "regimes.train.solver",
    "regimes.cal.solver",
    "regimes.val.solver",
}
# list-valued nodes replaced wholesale instead of merged
_REPLACED_PATHS = {
    "methods",
    "alphas",
    "ncal_sizes",
    "regimes.train.params",
    "regimes.cal.params",
    "regimes.val.params",
    "model.hidden",
    "model.cqr_taus",
}


def _merge(defaults, user, path=""):
    if isinstance(defaults, dict):
        if not isinstance(user, dict):
            raise ConfigError(f"config field {path or '<root>'} must be an object")
        out = {}
        if path in _OPEN_SOLVER_PATHS:
            out.update(defaults)
            out.update(user)
            return out
        for key in user:
            if key not in defaults:
                dotted = f"{path}.{key}" if path else key
                raise ConfigError(f"unknown config key: {dotted}")
        for key, dval in defaults.items():
            if key in user:
                child = f"{path}.{key}" if path else key
                if child in _REPLACED_PATHS:
                    out[key] = user[key]
                else:
                    out[key] = _merge(dval, user[key], child)
            else:
                out[key] = dval
        return out
    return user


@dataclass(frozen=True)
class RegimeConfig:
    """Sampling specs and solver overrides for one data split."""

    specs: tuple[ParameterSpec, ...]
    solver: dict


@dataclass(frozen=True)
class ModelSection:
    hidden: tuple[int, ...]
    activation: str
    dropout: float        # applied only in the STD surrogate
    std_passes: int       # MC-dropout forward passes
    cqr_taus: tuple[float, float, float]

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        object.__setattr__(self, "cqr_taus", tuple(float(t) for t in self.cqr_taus))
        if not self.hidden:
            raise ConfigError("model.hidden must list at least one hidden width")
        if any(h < 1 for h in self.hidden):
            raise ConfigError(f"model.hidden widths must be positive: {self.hidden}")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError(f"model.dropout must lie in [0,1), got {self.dropout}")
        if self.std_passes < 2:
            raise ConfigError(f"model.std_passes must be >= 2, got {self.std_passes}")
        if len(self.cqr_taus) != 3:
            raise ConfigError(f"model.cqr_taus needs (lo, mid, hi), got {self.cqr_taus}")
        lo, mid, hi = self.cqr_taus
        if not 0.0 < lo < mid < hi < 1.0:
            raise ConfigError(f"model.cqr_taus must increase inside (0,1): {self.cqr_taus}")

    def mlp_config(self, n_in: int, n_out: int, role: str) -> MlpConfig:
        """Architecture for one surrogate role: aer | std | cqr_(lo|mid|hi)."""
        sizes = (n_in, *self.hidden, n_out)
        if role == "std":
            return MlpConfig(sizes, self.activation, self.dropout, "point")
        return MlpConfig(sizes, self.activation, 0.0, "point")


@dataclass(frozen=True)
class TrainingSection:
    epochs: int
    batch_size: int
    learning_rate: float
    decay_every: int
    decay_factor: float
    aer_loss: str   # "l1" | "mse" — the point-model residual loss

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError(f"training.epochs must be >= 1, got {self.epochs}")
        if self.aer_loss not in ("l1", "mse"):
            raise ConfigError(f"training.aer_loss must be 'l1' or 'mse', got {self.aer_loss!r}")

    def train_config(self, seed: int) -> TrainConfig:
        return TrainConfig(
            epochs=self.epochs,
            batch_size=self.batch_size,
            learning_rate=self.learning_rate,
            decay_every=self.decay_every,
            decay_factor=self.decay_factor,
            seed=seed,
        )

    def point_loss(self):
        return L1() if self.aer_loss == "l1" else Mse()


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    seed: int
    out: str | None
    methods: tuple[str, ...]
    n_train: int
    n_cal: int
    n_val: int
    t_in: int
    t_out: int
    alphas: tuple[float, ...]
    ncal_sizes: tuple[int, ...]
    workers: int
    solver: dict
    regimes: dict  # split -> RegimeConfig
    model: ModelSection
    training: TrainingSection
    raw: dict      # the merged canonical document

    def regime_solver(self, split: str) -> dict:
        """Global solver overrides with the split's own on top."""
        merged = dict(self.solver)
        merged.update(self.regimes[split].solver)
        return merged

    def split_size(self, split: str) -> int:
        return {"train": self.n_train, "cal": self.n_cal, "val": self.n_val}[split]


def _require(cond, msg):
    if not cond:
        raise ConfigError(msg)


def validate_config(doc: dict) -> ExperimentConfig:
    """Build a typed config from a fully merged document."""
    name = doc["name"]
    methods = tuple(doc["methods"])
    _require(methods, "methods must not be empty")
    _require(len(set(methods)) == len(methods), f"duplicate methods: {list(methods)}")
    for m in methods:
        _require(m in ("aer", "std", "cqr"), f"unknown method {m!r}")

    for field in ("n_train", "n_cal", "n_val", "t_in", "t_out", "workers"):
        _require(int(doc[field]) >= 1, f"{field} must be >= 1, got {doc[field]}")
    if name == "poisson":
        _require(
            doc["t_in"] == 1 and doc["t_out"] == 1,
            "poisson is steady-state: t_in and t_out must both be 1",
        )

    alphas = tuple(float(a) for a in doc["alphas"])
    _require(alphas, "alphas must not be empty")
    _require(all(0.0 < a < 1.0 for a in alphas), f"alphas must lie inside (0,1): {list(alphas)}")
    _require(
        all(a2 > a1 for a1, a2 in zip(alphas, alphas[1:])),
        f"alphas must be strictly increasing: {list(alphas)}",
    )

    sizes = tuple(int(s) for s in doc["ncal_sizes"])
    _require(sizes, "ncal_sizes must not be empty")
    _require(all(s >= 1 for s in sizes), f"ncal_sizes must be positive: {list(sizes)}")
    _require(
        all(s2 > s1 for s1, s2 in zip(sizes, sizes[1:])),
        f"ncal_sizes must be strictly increasing: {list(sizes)}",
    )
    _require(
        sizes[-1] <= int(doc["n_cal"]),
        f"ncal_sizes exceed the calibration pool: max {sizes[-1]} > n_cal {doc['n_cal']}",
    )

    allowed = solver_override_keys(name)
    regimes = {}
    for split in ("train", "cal", "val"):
        node = doc["regimes"][split]
        specs = specs_from_dicts(node["params"])
        sampled = {s.name for s in specs}
        _require(
            len(sampled) == len(specs),
            f"regimes.{split}.params has duplicate parameter names",
        )
        _require(
            sampled == set(_SAMPLED[name]),
            f"regimes.{split}.params must sample exactly {sorted(_SAMPLED[name])}, "
            f"got {sorted(sampled)}",
        )
        for scope, overrides in (("solver", doc["solver"]), (f"regimes.{split}.solver", node["solver"])):
            for key in overrides:
                _require(key in allowed, f"{scope}: {key!r} is not a {name} solver field")
        regimes[split] = RegimeConfig(specs=specs, solver=dict(node["solver"]))

    model = ModelSection(
        hidden=doc["model"]["hidden"],
        activation=doc["model"]["activation"],
        dropout=doc["model"]["dropout"],
        std_passes=doc["model"]["std_passes"],
        cqr_taus=doc["model"]["cqr_taus"],
    )
    training = TrainingSection(
        epochs=int(doc["training"]["epochs"]),
        batch_size=int(doc["training"]["batch_size"]),
        learning_rate=float(doc["training"]["learning_rate"]),
        decay_every=int(doc["training"]["decay_every"]),
        decay_factor=float(doc["training"]["decay_factor"]),
        aer_loss=doc["training"]["aer_loss"],
    )

    return ExperimentConfig(
        name=name,
        seed=int(doc["seed"]),
        out=doc["out"],
        methods=methods,
        n_train=int(doc["n_train"]),
        n_cal=int(doc["n_cal"]),
        n_val=int(doc["n_val"]),
        t_in=int(doc["t_in"]),
        t_out=int(doc["t_out"]),
        alphas=alphas,
        ncal_sizes=sizes,
        workers=int(doc["workers"]),
        solver=dict(doc["solver"]),
        regimes=regimes,
        model=model,
        training=training,
        raw=doc,
    )


def config_from_dict(user: dict) -> ExperimentConfig:
    if not isinstance(user, dict):
        raise ConfigError("config root must be a JSON object")
    name = user.get("name")
    if name not in KINDS:
        raise ConfigError(f"config needs \"name\" in {KINDS}, got {name!r}")
    merged = _merge(EXPERIMENT_DEFAULTS[name], user)
    return validate_config(merged)


def parse_config(path: str | Path) -> ExperimentConfig:
    """Read, merge and validate an experiment config file."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        user = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    return config_from_dict(user)


def config_hash(cfg: ExperimentConfig) -> str:
    """SHA-256 of the canonical document, minus result-neutral fields."""
    doc = {k: v for k, v in cfg.raw.items() if k not in ("out", "workers")}
    canon = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


# losses used by the surrogate roles --------------------------------------


def role_loss(cfg: ExperimentConfig, role: str):
    """Training loss for one surrogate role."""
    if role in ("aer", "std"):
        return cfg.training.point_loss()
    if role == "cqr_lo":
        return Pinball(cfg.model.cqr_taus[0])
    if role == "cqr_mid":
        return Pinball(cfg.model.cqr_taus[1])
    if role == "cqr_hi":
        return Pinball(cfg.model.cqr_taus[2])
    raise ConfigError(f"unknown surrogate role {role!r}")


def roles_for_methods(methods) -> tuple[str, ...]:
    """Distinct surrogate models the configured methods need, in train order."""
    roles = []
    if "aer" in methods:
        roles.append("aer")
    if "std" in methods:
        roles.append("std")
    if "cqr" in methods:
        roles.extend(["cqr_lo", "cqr_mid", "cqr_hi"])
    return tuple(roles)
