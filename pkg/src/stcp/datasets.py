"""Dataset assembly: solver runs windowed into exchangeable (input, output) pairs.

Each design row yields one SimulationRecord.  Trajectories are split as an
initial value problem: the input window is frames [0, t_in) and the output
window frames [t_in, t_in+t_out), so records drawn from i.i.d. rows are
exchangeable by construction.  Generation can fan out across worker
processes; rows are reassembled by index, so results are worker-count
invariant.
"""

from __future__ import annotations

import csv
import json
import multiprocessing
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, FormatError
from .field_tensor import FieldTensor, read_tensor, write_tensor
from .sampling import DesignMatrix, ParameterSpec
from .solvers import (
    SOLVER_VERSION,
    ConvDiffConfig,
    PoissonConfig,
    WaveConfig,
    solve_convdiff_1d,
    solve_poisson_1d,
    solve_wave_2d,
)

KINDS = ("poisson", "convdiff", "wave")

# Config fields that may be set through regime overrides, per solver kind.
_SAMPLED = {
    "poisson": ("rho",),
    "convdiff": ("k", "c", "mu", "sigma2"),
    "wave": ("amplitude", "x_pos", "y_pos"),
}


@dataclass(frozen=True)
class SimulationRecord:
    params: dict[str, float]
    input: FieldTensor  # [t_in, nx, ny, 1]
    output: FieldTensor  # [t_out, nx, ny, 1]

    def __post_init__(self) -> None:
        if self.input.dims[1:] != self.output.dims[1:]:
            raise ConfigError(
                f"input/output spatial dims differ: {self.input.dims} vs {self.output.dims}"
            )


@dataclass(frozen=True)
class Dataset:
    kind: str
    records: tuple[SimulationRecord, ...]
    manifest: dict

    @property
    def n(self) -> int:
        return len(self.records)

    def inputs_matrix(self) -> np.ndarray:
        """(n, t_in*nx*ny*nvar) row-major flattening of all inputs."""
        return np.stack([r.input.flat() for r in self.records])

    def outputs_matrix(self) -> np.ndarray:
        return np.stack([r.output.flat() for r in self.records])


def _solve_row(kind: str, params: dict[str, float], overrides: dict[str, float]) -> FieldTensor:
    merged = dict(overrides)
    merged.update(params)
    if kind == "poisson":
        return solve_poisson_1d(PoissonConfig(**merged))
    if kind == "convdiff":
        return solve_convdiff_1d(ConvDiffConfig(**merged))
    if kind == "wave":
        return solve_wave_2d(WaveConfig(**merged))
    raise ConfigError(f"unknown solver kind {kind!r}")


def _window_record(
    kind: str, params: dict[str, float], traj: FieldTensor, t_in: int, t_out: int
) -> SimulationRecord:
    if kind == "poisson":
        # Steady problem: input is the uniform source field, output the solution.
        if (t_in, t_out) != (1, 1):
            raise ConfigError("poisson datasets use t_in=1, t_out=1")
        n = traj.dims[1]
        source = FieldTensor(np.full((1, n, 1, 1), params["rho"]))
        return SimulationRecord(params=params, input=source, output=traj)
    frames = traj.dims[0]
    if t_in < 1 or t_out < 1 or t_in + t_out > frames:
        raise ConfigError(
            f"window overflow: t_in={t_in} + t_out={t_out} exceeds {frames} frames"
        )
    arr = traj.data
    return SimulationRecord(
        params=params,
        input=FieldTensor(arr[:t_in]),
        output=FieldTensor(arr[t_in : t_in + t_out]),
    )


def _build_one(args: tuple) -> SimulationRecord:
    kind, params, overrides, t_in, t_out = args
    traj = _solve_row(kind, params, overrides)
    return _window_record(kind, params, traj, t_in, t_out)


def generate_dataset(
    design: DesignMatrix,
    kind: str,
    t_in: int,
    t_out: int,
    seed: int,
    overrides: dict[str, float] | None = None,
    workers: int = 1,
) -> Dataset:
    """Run the solver over every design row and window the trajectories.

    ``overrides`` carries solver config fields not present in the design
    (grid sizes, wave speed, ...).  The seed is provenance only: solvers are
    deterministic, so it simply tags the manifest.
    """
    if kind not in KINDS:
        raise ConfigError(f"unknown solver kind {kind!r}; expected one of {KINDS}")
    overrides = dict(overrides or {})
    names = {s.name for s in design.specs}
    required = set(_SAMPLED[kind])
    if not names <= required | set(overrides):
        raise ConfigError(
            f"design columns {sorted(names)} do not match {kind} parameters {sorted(required)}"
        )
    if not required <= names | set(overrides):
        missing = sorted(required - names - set(overrides))
        raise ConfigError(f"{kind} parameters missing from design/overrides: {missing}")

    jobs = [
        (kind, design.row_dict(i), overrides, t_in, t_out) for i in range(design.n)
    ]
    if workers > 1 and design.n > 1:
        with multiprocessing.Pool(workers) as pool:
            records = pool.map(_build_one, jobs, chunksize=max(1, design.n // (4 * workers)))
    else:
        records = [_build_one(job) for job in jobs]

    manifest = {
        "kind": kind,
        "n": design.n,
        "t_in": t_in,
        "t_out": t_out,
        "seed": int(seed),
        "design_seed": int(design.seed),
        "overrides": {k: overrides[k] for k in sorted(overrides)},
        "specs": [
            {"name": s.name, "lo": s.lo, "hi": s.hi, "kind": s.kind} for s in design.specs
        ],
        "solver_version": SOLVER_VERSION,
        "package_version": __version__,
    }
    return Dataset(kind=kind, records=tuple(records), manifest=manifest)


def save_dataset(dataset: Dataset, directory: str | Path, design: DesignMatrix | None = None) -> Path:
    """Persist as manifest.json + params.csv + per-record .cpt pairs."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    (directory / "manifest.json").write_text(
        json.dumps(dataset.manifest, indent=2, sort_keys=True) + "\n"
    )
    names = sorted(dataset.records[0].params) if dataset.records else []
    with open(directory / "params.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(names)
        for rec in dataset.records:
            writer.writerow([repr(rec.params[k]) for k in names])
    for i, rec in enumerate(dataset.records):
        with open(directory / f"input_{i}.cpt", "wb") as fh:
            write_tensor(rec.input, fh)
        with open(directory / f"output_{i}.cpt", "wb") as fh:
            write_tensor(rec.output, fh)
    if design is not None:
        design.to_csv(directory / "design.csv")
    return directory


def load_dataset(directory: str | Path) -> Dataset:
    directory = Path(directory)
    manifest_path = directory / "manifest.json"
    if not manifest_path.exists():
        raise FormatError(f"no manifest.json under {directory}")
    manifest = json.loads(manifest_path.read_text())
    with open(directory / "params.csv", newline="") as fh:
        reader = csv.reader(fh)
        names = next(reader)
        rows = [[float(v) for v in row] for row in reader]
    records = []
    for i, row in enumerate(rows):
        params = dict(zip(names, row))
        with open(directory / f"input_{i}.cpt", "rb") as fh:
            inp = read_tensor(fh)
        with open(directory / f"output_{i}.cpt", "rb") as fh:
            out = read_tensor(fh)
        records.append(SimulationRecord(params=params, input=inp, output=out))
    return Dataset(kind=manifest["kind"], records=tuple(records), manifest=manifest)


def specs_from_dicts(raw: list[dict]) -> tuple[ParameterSpec, ...]:
    """Build parameter specs from JSON-style dicts (config parsing helper)."""
    specs = []
    for item in raw:
        unknown = set(item) - {"name", "lo", "hi", "kind"}
        if unknown:
            raise ConfigError(f"unknown spec keys {sorted(unknown)}")
        specs.append(
            ParameterSpec(
                name=item["name"],
                lo=float(item["lo"]),
                hi=float(item["hi"]),
                kind=item.get("kind", "continuous"),
            )
        )
    return tuple(specs)
