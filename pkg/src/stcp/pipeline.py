"""Experiment orchestration: generate, train, calibrate, band, validate,
sweep, size study, plot.

Every stage writes into its own content-addressed directory under the run
root: the directory name carries a short hash of everything that
determines the artifact's bytes (upstream keys, seeds, solver/model
settings), and a run_manifest.json — written last — records the config hash,
the master seed, and the SHA-256 of every emitted file.  A directory with
a manifest is complete and is reused as-is on rerun; a directory without
one is a partial artifact left behind by a failure and is rebuilt.

Reports and figures are the human-facing outputs; they live under fixed
names (reports/sweep-aer.csv, ...) and are rewritten each run, with their
hashes recorded in reports/run_manifest.json.

Conformal calibration runs in normalized ([-1, 1] range-scaled) output
units: coverage is invariant under the affine map, and tightness is
comparable across experiments.  Slice CSVs for plotting are emitted in
physical units.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from . import conformal, svgplot
from .conformal import (
    Aer,
    Cqr,
    QuantileField,
    ScoreTensor,
    Std,
    build_band,
    conformal_quantile,
    empirical_coverage,
    report_as_dict,
    score_aer,
    score_cqr,
    score_std,
    sweep_to_csv,
    validation_sweep,
)
from .datasets import Dataset, generate_dataset, load_dataset, save_dataset
from .errors import ConfigError, DataError, StcpError
from .experiments import ExperimentConfig, config_hash, role_loss, roles_for_methods
from .field_tensor import FieldTensor, from_array, read_tensor_file, write_tensor_file
from .mlp import ModelParams, RangeScaler, load_model, mc_dropout, predict_norm, save_model
from .rng import Stream, derive
from .sampling import latin_hypercube
from .training import train
from . import __version__

SPLITS = ("train", "cal", "val")


# ---------------------------------------------------------------------------
# keys and manifests
# ---------------------------------------------------------------------------


def _canon(payload) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def short_hash(payload: dict) -> str:
    """12-hex content key for a stage directory name."""
    return hashlib.sha256(_canon(payload).encode()).hexdigest()[:12]


def _sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(directory: Path, stage: str, cfg: ExperimentConfig, inputs: dict) -> Path:
    """Hash every file in the directory and seal it with run_manifest.json."""
    files = {}
    for p in sorted(directory.rglob("*")):
        if p.is_file() and p.name != "run_manifest.json":
            files[str(p.relative_to(directory))] = _sha256_file(p)
    doc = {
        "stage": stage,
        "config_hash": config_hash(cfg),
        "seed": cfg.seed,
        "inputs": inputs,
        "files": files,
        "package_version": __version__,
    }
    out = directory / "run_manifest.json"
    out.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return out


def is_complete(directory: Path) -> bool:
    return (directory / "run_manifest.json").exists()


def verify_artifact(directory: Path) -> list[str]:
    """Paths whose on-disk bytes no longer match the sealed manifest."""
    directory = Path(directory)
    manifest = directory / "run_manifest.json"
    if not manifest.exists():
        raise DataError(f"no manifest in {directory}")
    doc = json.loads(manifest.read_text())
    bad = []
    for rel, digest in doc["files"].items():
        p = directory / rel
        if not p.exists() or _sha256_file(p) != digest:
            bad.append(rel)
    return bad


# ---------------------------------------------------------------------------
# artifact bookkeeping
# ---------------------------------------------------------------------------


@dataclass
class RunArtifacts:
    out: Path
    config_hash: str
    datasets: dict = field(default_factory=dict)   # split -> Path
    models: dict = field(default_factory=dict)     # role -> Path
    quantiles: dict = field(default_factory=dict)  # method -> Path
    bands: dict = field(default_factory=dict)      # (method, alpha) -> Path
    reports: list = field(default_factory=list)
    figures: list = field(default_factory=list)


def _specs_payload(specs) -> list[dict]:
    return [{"name": s.name, "lo": s.lo, "hi": s.hi, "kind": s.kind} for s in specs]


# ---------------------------------------------------------------------------
# stage: gen
# ---------------------------------------------------------------------------


def dataset_key(cfg: ExperimentConfig, split: str) -> str:
    from .solvers import SOLVER_VERSION

    payload = {
        "kind": cfg.name,
        "split": split,
        "n": cfg.split_size(split),
        "t_in": cfg.t_in,
        "t_out": cfg.t_out,
        "specs": _specs_payload(cfg.regimes[split].specs),
        "overrides": cfg.regime_solver(split),
        "design_seed": derive(cfg.seed, f"design/{split}"),
        "data_seed": derive(cfg.seed, f"data/{split}"),
        "solver_version": SOLVER_VERSION,
    }
    return short_hash(payload)


@lru_cache(maxsize=8)
def _load_dataset_cached(directory: str) -> Dataset:
    # content-addressed dirs are immutable once sealed, so caching by path
    # is safe within a process
    return load_dataset(directory)


def stage_gen(cfg: ExperimentConfig, out: Path, split: str) -> Path:
    target = Path(out) / "datasets" / f"{split}-{dataset_key(cfg, split)}"
    if is_complete(target):
        return target
    design = latin_hypercube(
        list(cfg.regimes[split].specs),
        cfg.split_size(split),
        derive(cfg.seed, f"design/{split}"),
    )
    ds = generate_dataset(
        design,
        cfg.name,
        cfg.t_in,
        cfg.t_out,
        derive(cfg.seed, f"data/{split}"),
        overrides=cfg.regime_solver(split),
        workers=cfg.workers,
    )
    target.mkdir(parents=True, exist_ok=True)
    save_dataset(ds, target, design=design)
    write_manifest(target, "gen", cfg, {"split": split})
    return target


# ---------------------------------------------------------------------------
# stage: train
# ---------------------------------------------------------------------------


def fit_scalers(ds: Dataset) -> tuple[RangeScaler, RangeScaler]:
    """Range scalers shared by every surrogate of one experiment."""
    return RangeScaler.fit(ds.inputs_matrix()), RangeScaler.fit(ds.outputs_matrix())


def model_key(cfg: ExperimentConfig, role: str) -> str:
    payload = {
        "role": role,
        "train_dataset": dataset_key(cfg, "train"),
        "hidden": list(cfg.model.hidden),
        "activation": cfg.model.activation,
        "dropout": cfg.model.dropout if role == "std" else 0.0,
        "loss": repr(role_loss(cfg, role)),
        "training": {
            "epochs": cfg.training.epochs,
            "batch_size": cfg.training.batch_size,
            "learning_rate": cfg.training.learning_rate,
            "decay_every": cfg.training.decay_every,
            "decay_factor": cfg.training.decay_factor,
        },
        "train_seed": derive(cfg.seed, f"train/{role}"),
        "norm": "train-range",
    }
    return short_hash(payload)


def stage_train(cfg: ExperimentConfig, out: Path, role: str) -> Path:
    target = Path(out) / "models" / f"{role}-{model_key(cfg, role)}"
    if is_complete(target):
        return target
    ds_dir = stage_gen(cfg, out, "train")
    ds = _load_dataset_cached(str(ds_dir))
    x = ds.inputs_matrix()
    y = ds.outputs_matrix()
    model_cfg = cfg.model.mlp_config(x.shape[1], y.shape[1], role)
    train_cfg = cfg.training.train_config(derive(cfg.seed, f"train/{role}"))
    started = time.monotonic()
    params, history = train(x, y, model_cfg, train_cfg, role_loss(cfg, role), fit_scalers(ds))
    elapsed = time.monotonic() - started
    target.mkdir(parents=True, exist_ok=True)
    save_model(params, target)
    (target / "train_log.json").write_text(
        json.dumps(
            {
                "role": role,
                "loss": repr(role_loss(cfg, role)),
                "epochs": cfg.training.epochs,
                "final_loss": history[-1],
                "history": history,
                "elapsed_s": round(elapsed, 3),
            },
            indent=2,
        )
        + "\n"
    )
    write_manifest(target, "train", cfg, {"train_dataset": ds_dir.name, "role": role})
    return target


def _load_models(cfg: ExperimentConfig, out: Path, method: str) -> dict[str, ModelParams]:
    roles = {
        "aer": ("aer",),
        "std": ("std",),
        "cqr": ("cqr_lo", "cqr_mid", "cqr_hi"),
    }[method]
    return {role: load_model(stage_train(cfg, out, role)) for role in roles}


# ---------------------------------------------------------------------------
# model outputs per method
# ---------------------------------------------------------------------------


def _method_spec(cfg: ExperimentConfig, method: str):
    if method == "aer":
        return Aer()
    if method == "std":
        return Std(passes=cfg.model.std_passes)
    if method == "cqr":
        return Cqr(alpha_lo=cfg.model.cqr_taus[0], alpha_hi=cfg.model.cqr_taus[2])
    raise ConfigError(f"unknown method {method!r}")


def method_outputs(
    cfg: ExperimentConfig, method: str, models: dict, x_raw: np.ndarray, split: str
) -> dict[str, np.ndarray]:
    """Normalized-space model outputs keyed the way build_band wants them.

    STD draws its MC-dropout masks from a stream derived per split, so
    calibration and validation passes are independent but reproducible.
    """
    if method == "aer":
        return {"pred": predict_norm(models["aer"], x_raw)}
    if method == "std":
        params = models["std"]
        stream = Stream(derive(cfg.seed, f"mcdrop/{split}"))
        mu, sigma = mc_dropout(
            params, params.x_scale.transform(x_raw), cfg.model.std_passes, stream
        )
        return {"mu": mu, "sigma": sigma}
    return {
        "lo": predict_norm(models["cqr_lo"], x_raw),
        "hi": predict_norm(models["cqr_hi"], x_raw),
    }


def _norm_truth(models: dict, ds: Dataset) -> np.ndarray:
    y_scale = next(iter(models.values())).y_scale
    return y_scale.transform(ds.outputs_matrix())


def _score_method(method_spec, outputs: dict, truth: np.ndarray, dims) -> ScoreTensor:
    if isinstance(method_spec, Aer):
        return score_aer(outputs["pred"], truth, dims)
    if isinstance(method_spec, Std):
        return score_std(outputs["mu"], outputs["sigma"], truth, dims, method_spec)
    return score_cqr(outputs["lo"], outputs["hi"], truth, dims, method_spec)


# ---------------------------------------------------------------------------
# stage: calibrate
# ---------------------------------------------------------------------------


def quantile_key(cfg: ExperimentConfig, method: str) -> str:
    payload = {
        "method": method,
        "models": [model_key(cfg, r) for r in roles_for_methods([method])],
        "cal_dataset": dataset_key(cfg, "cal"),
        "alphas": list(cfg.alphas),
        "mc_seed": derive(cfg.seed, "mcdrop/cal") if method == "std" else None,
        "passes": cfg.model.std_passes if method == "std" else None,
        "taus": list(cfg.model.cqr_taus) if method == "cqr" else None,
    }
    return short_hash(payload)


def stage_calibrate(cfg: ExperimentConfig, out: Path, method: str) -> Path:
    target = Path(out) / "quantiles" / f"{method}-{quantile_key(cfg, method)}"
    if is_complete(target):
        return target
    models = _load_models(cfg, out, method)
    cal_dir = stage_gen(cfg, out, "cal")
    ds = _load_dataset_cached(str(cal_dir))
    dims = ds.records[0].output.dims
    outputs = method_outputs(cfg, method, models, ds.inputs_matrix(), "cal")
    scores = _score_method(_method_spec(cfg, method), outputs, _norm_truth(models, ds), dims)

    n_cells = scores.n_cells
    grid = np.empty((len(cfg.alphas), n_cells))
    for i, a in enumerate(cfg.alphas):
        grid[i] = conformal_quantile(scores, a).values.data.reshape(-1)

    target.mkdir(parents=True, exist_ok=True)
    prov = {"config_hash": config_hash(cfg), "seed": cfg.seed, "method": method}
    write_tensor_file(
        target / "scores.cpt",
        from_array(scores.scores.reshape(scores.n_cal, n_cells, 1, 1)),
        labels={"0": "sample", "1": "cell", "2": "-", "3": "-"},
        provenance={**prov, "cell_dims": list(dims)},
    )
    write_tensor_file(
        target / "qgrid.cpt",
        from_array(grid.reshape(len(cfg.alphas), n_cells, 1, 1), allow_inf=True),
        labels={"0": "alpha", "1": "cell", "2": "-", "3": "-"},
        provenance={**prov, "alphas": list(cfg.alphas), "cell_dims": list(dims)},
    )
    write_manifest(
        target,
        "calibrate",
        cfg,
        {"cal_dataset": cal_dir.name, "models": {r: model_key(cfg, r) for r in models}},
    )
    return target


def load_scores(quant_dir: Path, method_spec) -> ScoreTensor:
    """Rebuild the calibration ScoreTensor from a sealed quantiles dir."""
    quant_dir = Path(quant_dir)
    tensor = read_tensor_file(quant_dir / "scores.cpt")
    sidecar = json.loads((quant_dir / "scores.json").read_text())
    dims = tuple(sidecar["provenance"]["cell_dims"])
    n_cal = tensor.dims[0]
    return ScoreTensor(tensor.data.reshape(n_cal, -1), dims, method_spec)


def quantile_at(
    cfg: ExperimentConfig, quant_dir: Path, method: str, alpha: float
) -> QuantileField:
    """Quantile field at alpha: grid row when available, else from scores."""
    spec = _method_spec(cfg, method)
    for i, a in enumerate(cfg.alphas):
        if abs(a - alpha) < 1e-12:
            tensor = read_tensor_file(Path(quant_dir) / "qgrid.cpt")
            sidecar = json.loads((Path(quant_dir) / "qgrid.json").read_text())
            dims = tuple(sidecar["provenance"]["cell_dims"])
            scores_meta = json.loads((Path(quant_dir) / "scores.json").read_text())
            n_cal = scores_meta["dims"][0]
            row = tensor.data[i].reshape(dims)
            return QuantileField(from_array(row, allow_inf=True), a, n_cal, spec)
    return conformal_quantile(load_scores(quant_dir, spec), alpha)


# ---------------------------------------------------------------------------
# stage: band
# ---------------------------------------------------------------------------


def _grid_positions(kind: str, n: int) -> np.ndarray:
    lo, hi = {"poisson": (0.0, 1.0), "convdiff": (0.0, 10.0), "wave": (-1.0, 1.0)}[kind]
    return np.linspace(lo, hi, n)


def _slice_cells(kind: str, dims: tuple[int, int, int, int]) -> tuple[np.ndarray, np.ndarray, str]:
    """Flat cell indices of the plotted 1-D slice, their positions, axis label.

    1-D kinds slice the final output frame along x; the 2-D wave slices the
    final frame along y through the center column.
    """
    t, nx, ny, nv = dims
    cells = np.arange(t * nx * ny * nv).reshape(dims)
    if kind == "wave":
        idx = cells[t - 1, nx // 2, :, 0]
        return idx, _grid_positions(kind, ny), "y"
    idx = cells[t - 1, :, 0, 0]
    return idx, _grid_positions(kind, nx), "x"


def _display_pred(method: str, models: dict, outputs: dict, x_raw: np.ndarray) -> np.ndarray:
    """The curve drawn as 'prediction': point model, MC mean, or CQR median."""
    if method == "aer":
        return outputs["pred"]
    if method == "std":
        return outputs["mu"]
    return predict_norm(models["cqr_mid"], x_raw)


def band_key(cfg: ExperimentConfig, method: str, alpha: float) -> str:
    payload = {
        "method": method,
        "quantiles": quantile_key(cfg, method),
        "val_dataset": dataset_key(cfg, "val"),
        "alpha": alpha,
        "mc_seed": derive(cfg.seed, "mcdrop/val") if method == "std" else None,
    }
    return short_hash(payload)


def _alpha_tag(alpha: float) -> str:
    return format(alpha, "g").replace(".", "p")


def stage_band(cfg: ExperimentConfig, out: Path, method: str, alpha: float = 0.1) -> Path:
    target = Path(out) / "bands" / f"{method}-a{_alpha_tag(alpha)}-{band_key(cfg, method, alpha)}"
    if is_complete(target):
        return target
    quant_dir = stage_calibrate(cfg, out, method)
    qf = quantile_at(cfg, quant_dir, method, alpha)
    models = _load_models(cfg, out, method)
    val_dir = stage_gen(cfg, out, "val")
    ds = _load_dataset_cached(str(val_dir))
    x_raw = ds.inputs_matrix()
    outputs = method_outputs(cfg, method, models, x_raw, "val")
    band = build_band(qf, **outputs)

    target.mkdir(parents=True, exist_ok=True)
    prov = {"config_hash": config_hash(cfg), "seed": cfg.seed, "method": method, "alpha": alpha}
    write_tensor_file(
        target / "qhat.cpt",
        qf.values,
        labels={"0": "time", "1": "x", "2": "y", "3": "variable"},
        provenance=prov,
    )
    # width is finite or +Inf, never -Inf, so the tensor container is legal
    mean_width = band.width().mean(axis=0).reshape(band.dims)
    write_tensor_file(
        target / "width_mean.cpt",
        from_array(mean_width, allow_inf=True),
        labels={"0": "time", "1": "x", "2": "y", "3": "variable"},
        provenance=prov,
    )
    _write_slice_csv(cfg, target / "slice0.csv", method, models, ds, band, outputs, x_raw)
    write_manifest(target, "band", cfg, {"quantiles": quant_dir.name, "val_dataset": val_dir.name})
    return target


def _write_slice_csv(cfg, path, method, models, ds, band, outputs, x_raw) -> None:
    """Physical-unit slice of validation sample 0: truth, pred, band edges."""
    import csv as _csv

    dims = ds.records[0].output.dims
    idx, positions, axis = _slice_cells(cfg.name, dims)
    y_scale = next(iter(models.values())).y_scale
    truth_phys = ds.outputs_matrix()[0]
    pred_phys = y_scale.inverse(_display_pred(method, models, outputs, x_raw)[0])
    lower_phys = y_scale.inverse(band.lower[0])
    upper_phys = y_scale.inverse(band.upper[0])
    with open(path, "w", newline="") as fh:
        w = _csv.writer(fh, lineterminator="\n")
        w.writerow([axis, "truth", "pred", "lower", "upper"])
        for j, cell in enumerate(idx):
            w.writerow(
                [
                    repr(float(positions[j])),
                    repr(float(truth_phys[cell])),
                    repr(float(pred_phys[cell])),
                    repr(float(lower_phys[cell])),
                    repr(float(upper_phys[cell])),
                ]
            )


# ---------------------------------------------------------------------------
# stage: validate
# ---------------------------------------------------------------------------


def _method_validation(cfg, out, method, alpha):
    quant_dir = stage_calibrate(cfg, out, method)
    qf = quantile_at(cfg, quant_dir, method, alpha)
    models = _load_models(cfg, out, method)
    ds = _load_dataset_cached(str(stage_gen(cfg, out, "val")))
    outputs = method_outputs(cfg, method, models, ds.inputs_matrix(), "val")
    truth = _norm_truth(models, ds)
    return qf, outputs, truth


def stage_validate(cfg: ExperimentConfig, out: Path, method: str, alpha: float = 0.1) -> Path:
    reports = Path(out) / "reports"
    reports.mkdir(parents=True, exist_ok=True)
    qf, outputs, truth = _method_validation(cfg, out, method, alpha)
    band = build_band(qf, **outputs)
    report = empirical_coverage(band, truth)
    doc = report_as_dict(report)
    doc["config_hash"] = config_hash(cfg)
    doc["seed"] = cfg.seed
    doc["experiment"] = cfg.name
    if method == "cqr":
        # the raw quantile envelope before calibration: qhat pinned to 0
        zero = QuantileField(
            from_array(np.zeros(qf.values.dims)), qf.alpha, qf.n_cal, qf.method
        )
        raw_band = build_band(zero, **outputs)
        doc["uncalibrated_coverage"] = empirical_coverage(raw_band, truth).mean_coverage
    path = reports / f"validate-{method}-a{_alpha_tag(alpha)}.json"
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path


# ---------------------------------------------------------------------------
# stage: sweep / study
# ---------------------------------------------------------------------------


def stage_sweep(cfg: ExperimentConfig, out: Path, method: str, alphas=None) -> Path:
    reports = Path(out) / "reports"
    reports.mkdir(parents=True, exist_ok=True)
    grid = tuple(alphas) if alphas is not None else cfg.alphas
    quant_dir = stage_calibrate(cfg, out, method)
    scores = load_scores(quant_dir, _method_spec(cfg, method))
    models = _load_models(cfg, out, method)
    ds = _load_dataset_cached(str(stage_gen(cfg, out, "val")))
    outputs = method_outputs(cfg, method, models, ds.inputs_matrix(), "val")
    rows = validation_sweep(scores, _norm_truth(models, ds), grid, **outputs)
    path = reports / f"sweep-{method}.csv"
    sweep_to_csv(rows, path)
    return path


def stage_study(cfg: ExperimentConfig, out: Path, method: str, sizes=None) -> list[Path]:
    """Per-size sweeps over seeded subsamples of the calibration pool."""
    reports = Path(out) / "reports"
    reports.mkdir(parents=True, exist_ok=True)
    sizes = tuple(sizes) if sizes is not None else cfg.ncal_sizes
    quant_dir = stage_calibrate(cfg, out, method)
    spec = _method_spec(cfg, method)
    scores = load_scores(quant_dir, spec)
    models = _load_models(cfg, out, method)
    ds = _load_dataset_cached(str(stage_gen(cfg, out, "val")))
    outputs = method_outputs(cfg, method, models, ds.inputs_matrix(), "val")
    truth = _norm_truth(models, ds)
    paths = []
    for size in sizes:
        if size > scores.n_cal:
            raise ConfigError(
                f"ncal size {size} exceeds the calibration pool ({scores.n_cal})"
            )
        if size == scores.n_cal:
            sub = scores
        else:
            pick = Stream(derive(cfg.seed, f"ncal/{size}")).permutation(scores.n_cal)[:size]
            sub = ScoreTensor(scores.scores[np.sort(pick)], scores.dims, spec)
        rows = validation_sweep(sub, truth, cfg.alphas, **outputs)
        path = reports / f"study-{method}-n{size}.csv"
        sweep_to_csv(rows, path)
        paths.append(path)
    return paths


# ---------------------------------------------------------------------------
# stage: plot
# ---------------------------------------------------------------------------


def stage_plot(cfg: ExperimentConfig, out: Path) -> list[Path]:
    """Coverage diagonals, slice plots at alpha 0.1/0.5, and the size overlay."""
    out = Path(out)
    figures = out / "figures"
    figures.mkdir(parents=True, exist_ok=True)
    made = []
    for method in cfg.methods:
        sweep_csv = out / "reports" / f"sweep-{method}.csv"
        if not sweep_csv.exists():
            raise DataError(f"missing sweep report for plot: {sweep_csv}")
        rows = conformal.read_sweep_csv(sweep_csv)
        fig = figures / f"coverage-{method}.svg"
        svgplot.coverage_plot(rows, f"{cfg.name}: {method} coverage", fig)
        made.append(fig)

        slices = {}
        for alpha in (0.1, 0.5):
            band_dir = stage_band(cfg, out, method, alpha)
            slices[alpha] = svgplot.read_slice_csv(band_dir / "slice0.csv")
        fig = figures / f"slice-{method}.svg"
        svgplot.slice_plot(slices, f"{cfg.name}: {method} band slice", fig)
        made.append(fig)

    overlay = {}
    for size in cfg.ncal_sizes:
        study_csv = out / "reports" / f"study-{cfg.methods[0]}-n{size}.csv"
        if study_csv.exists():
            overlay[size] = conformal.read_sweep_csv(study_csv)
    if overlay:
        fig = figures / f"ncal-{cfg.methods[0]}.svg"
        svgplot.ncal_overlay_plot(
            overlay, f"{cfg.name}: {cfg.methods[0]} coverage vs calibration size", fig
        )
        made.append(fig)
    write_manifest(figures, "plot", cfg, {})
    return made


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------


def default_out(cfg: ExperimentConfig) -> Path:
    return Path(cfg.out) if cfg.out else Path("runs") / cfg.name


def run_experiment(cfg: ExperimentConfig, out: Path | None = None) -> RunArtifacts:
    """All stages in order; every artifact content-addressed and reusable."""
    out = Path(out) if out is not None else default_out(cfg)
    art = RunArtifacts(out=out, config_hash=config_hash(cfg))
    stage = "gen"
    try:
        for split in SPLITS:
            art.datasets[split] = stage_gen(cfg, out, split)
        stage = "train"
        for role in roles_for_methods(cfg.methods):
            art.models[role] = stage_train(cfg, out, role)
        stage = "calibrate"
        for method in cfg.methods:
            art.quantiles[method] = stage_calibrate(cfg, out, method)
        stage = "band"
        for method in cfg.methods:
            for alpha in (0.1, 0.5):
                art.bands[(method, alpha)] = stage_band(cfg, out, method, alpha)
        stage = "validate"
        for method in cfg.methods:
            art.reports.append(stage_validate(cfg, out, method, 0.1))
        stage = "sweep"
        for method in cfg.methods:
            art.reports.append(stage_sweep(cfg, out, method))
        stage = "study-ncal"
        for method in cfg.methods:
            art.reports.extend(stage_study(cfg, out, method))
        stage = "plot"
        art.figures = stage_plot(cfg, out)
        _seal_reports(cfg, out)
    except StcpError as exc:
        raise type(exc)(f"stage {stage} failed under {out}: {exc}") from exc
    return art


def _seal_reports(cfg: ExperimentConfig, out: Path) -> None:
    reports = Path(out) / "reports"
    if reports.exists():
        write_manifest(reports, "reports", cfg, {})


# ---------------------------------------------------------------------------
# acceptance threshold check (the CI entry point behind `validate --assert`)
# ---------------------------------------------------------------------------


def assert_sweep(path: Path) -> list[str]:
    """Check every sweep row for coverage >= target - beta half-width.

    Returns human-readable failure lines; empty means the sweep passes.
    """
    rows = conformal.read_sweep_csv(path)
    failures = []
    for r in rows:
        half_width = 0.5 * (r.beta_hi - r.beta_lo)
        floor = r.target - half_width
        if r.empirical < floor:
            failures.append(
                f"alpha={r.alpha:g}: empirical {r.empirical:.4f} < "
                f"target {r.target:g} - half-width {half_width:.4f}"
            )
    return failures
