"""Latin hypercube sampling of solver parameter spaces.

Each design column is stratified: stratum i of n covers
[lo + i*(hi-lo)/n, lo + (i+1)*(hi-lo)/n) and receives exactly one point,
placed uniformly inside the stratum.  Strata are assigned by an
independent permutation per column, so any single column is a stratified
uniform sample of its range while rows jointly spread over the box.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .rng import Stream, child_seed


@dataclass(frozen=True)
class ParameterSpec:
    """Half-open sampling range [lo, hi) for one named solver parameter."""

    name: str
    lo: float
    hi: float
    kind: str = "continuous"  # "continuous" | "integer"

    def __post_init__(self) -> None:
        if not self.name:
            raise ConfigError("parameter name must be non-empty")
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise ConfigError(f"{self.name}: bounds must be finite")
        if not self.lo < self.hi:
            raise ConfigError(f"{self.name}: lo must be strictly below hi, got [{self.lo}, {self.hi})")
        if self.kind not in ("continuous", "integer"):
            raise ConfigError(f"{self.name}: unknown kind {self.kind!r}")
        if self.kind == "integer" and not (float(self.lo).is_integer() and float(self.hi).is_integer()):
            raise ConfigError(f"{self.name}: integer kind needs integral bounds")


@dataclass(frozen=True)
class DesignMatrix:
    """n sampled parameter rows, one column per spec, plus the seed used."""

    specs: tuple[ParameterSpec, ...]
    rows: np.ndarray  # shape (n, len(specs)), float64
    seed: int

    def __post_init__(self) -> None:
        rows = np.asarray(self.rows, dtype=np.float64)
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    def column(self, name: str) -> np.ndarray:
        for j, spec in enumerate(self.specs):
            if spec.name == name:
                return self.rows[:, j]
        raise ConfigError(f"no column named {name!r}")

    def row_dict(self, i: int) -> dict[str, float]:
        return {spec.name: float(self.rows[i, j]) for j, spec in enumerate(self.specs)}

    def to_csv(self, path: str | Path | None = None) -> str:
        """Deterministic CSV (repr floats); written to path when given."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow([spec.name for spec in self.specs])
        for row in self.rows:
            writer.writerow([repr(float(v)) for v in row])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text


def latin_hypercube(specs: list[ParameterSpec] | tuple[ParameterSpec, ...], n: int, seed: int) -> DesignMatrix:
    """Sample n rows over the specs' box, one stratum per point per column.

    Column j uses the sub-stream child_seed(seed, j): first a Fisher-Yates
    stratum permutation, then the within-stratum jitters.  Discrete-integer
    columns round to the nearest integer and clamp into [lo, hi).
    """
    specs = tuple(specs)
    if not specs:
        raise ConfigError("need at least one parameter spec")
    names = [s.name for s in specs]
    if len(set(names)) != len(names):
        raise ConfigError(f"duplicate parameter names in {names}")
    if n <= 0:
        raise ConfigError("sample count must be positive")

    rows = np.empty((n, len(specs)), dtype=np.float64)
    for j, spec in enumerate(specs):
        stream = Stream(child_seed(seed, j))
        perm = stream.permutation(n)
        jitter = stream.uniform(n)
        vals = spec.lo + (perm + jitter) * (spec.hi - spec.lo) / n
        if spec.kind == "integer":
            vals = np.clip(np.floor(vals + 0.5), spec.lo, spec.hi - 1)
        rows[:, j] = vals
    return DesignMatrix(specs=specs, rows=rows, seed=seed)
