"""Split conformal prediction over tensor-valued fields.

Everything here works per cell: scores, quantiles, bands and coverage are
computed independently for every cell of the output tensor, on stacks of
samples laid out as (n_samples, n_cells) float64 matrices.  The per-sample
tensor shape rides along as a dims tuple so quantile and coverage fields
can be reshaped back into tensors for persistence.

The calibration rank is k = ceil((n_cal+1)(1-alpha)); when k exceeds n_cal
the quantile is +Inf and the band covers everything (and counts as covered).
Quantile selection uses np.partition, not a full sort — n_cal x cells can
reach ~10^7 values at the wave scale and selection is the hot path.  All
reductions are fixed-shape numpy reductions, so reported scalars are
run-to-run identical at any worker count.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .errors import ConfigError, DataError, ShapeError
from .field_tensor import FieldTensor, from_array
from .mlp import SIGMA_FLOOR
from . import betadist

# ---------------------------------------------------------------------------
# Methods
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Aer:
    """Absolute-error residual score: s = |y - f(x)|, band f +/- qhat."""

    @property
    def tag(self) -> str:
        return "aer"


@dataclass(frozen=True)
class Std:
    """Uncertainty-normalized score: s = |y - mu|/sigma, band mu +/- qhat*sigma."""

    passes: int = 32  # MC-dropout forward passes used to estimate (mu, sigma)

    def __post_init__(self):
        if self.passes < 2:
            raise ConfigError(f"STD needs passes >= 2, got {self.passes}")

    @property
    def tag(self) -> str:
        return "std"


@dataclass(frozen=True)
class Cqr:
    """Quantile-regression score: s = max(lo - y, y - hi), band [lo-qhat, hi+qhat]."""

    alpha_lo: float = 0.05  # pinball tau of the lower quantile model
    alpha_hi: float = 0.95  # pinball tau of the upper quantile model

    def __post_init__(self):
        if not 0.0 < self.alpha_lo < self.alpha_hi < 1.0:
            raise ConfigError(
                f"CQR needs 0 < alpha_lo < alpha_hi < 1, got "
                f"({self.alpha_lo}, {self.alpha_hi})"
            )

    @property
    def tag(self) -> str:
        return "cqr"


Method = Union[Aer, Std, Cqr]

METHOD_TAGS = ("aer", "std", "cqr")


def method_from_name(name: str, **kwargs) -> Method:
    if name == "aer":
        return Aer()
    if name == "std":
        return Std(**kwargs)
    if name == "cqr":
        return Cqr(**kwargs)
    raise ConfigError(f"unknown method {name!r}, expected one of {METHOD_TAGS}")


# ---------------------------------------------------------------------------
# Score and band containers
# ---------------------------------------------------------------------------


def _as_matrix(arr: np.ndarray, name: str) -> np.ndarray:
    a = np.asarray(arr, dtype=np.float64)
    if a.ndim != 2:
        raise ShapeError(f"{name} must be a 2-D (n_samples, n_cells) matrix, got ndim={a.ndim}")
    if a.shape[0] < 1:
        raise ShapeError(f"{name} needs at least one sample row")
    return a


def _check_same_shape(*named):
    first_name, first = named[0]
    for name, a in named[1:]:
        if a.shape != first.shape:
            raise ShapeError(
                f"{name} shape {a.shape} does not match {first_name} shape {first.shape}"
            )


def _resolve_dims(n_cells: int, dims) -> tuple[int, int, int, int]:
    if dims is None:
        return (1, n_cells, 1, 1)
    dims = tuple(int(d) for d in dims)
    if len(dims) != 4 or any(d < 1 for d in dims):
        raise ShapeError(f"dims must be 4 positive extents, got {dims}")
    if math.prod(dims) != n_cells:
        raise ShapeError(f"dims {dims} have {math.prod(dims)} cells, matrix has {n_cells}")
    return dims


def _freeze(a: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(a, dtype=np.float64)
    if out is a:
        out = a.copy()
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class ScoreTensor:
    """Per-cell non-conformity scores for a calibration stack.

    scores: (n_cal, n_cells), read-only, all finite.
    dims: the per-sample tensor extents the columns flatten from.
    """

    scores: np.ndarray
    dims: tuple[int, int, int, int]
    method: Method

    def __post_init__(self):
        m = _as_matrix(self.scores, "scores")
        object.__setattr__(self, "scores", _freeze(m))
        object.__setattr__(self, "dims", _resolve_dims(m.shape[1], self.dims))
        if not np.isfinite(self.scores).all():
            raise DataError("scores must be finite")

    @property
    def n_cal(self) -> int:
        return self.scores.shape[0]

    @property
    def n_cells(self) -> int:
        return self.scores.shape[1]


@dataclass(frozen=True)
class QuantileField:
    """Per-cell calibrated quantile; +Inf marks index overflow (k > n_cal)."""

    values: FieldTensor
    alpha: float
    n_cal: int
    method: Method

    def matrix_row(self) -> np.ndarray:
        """The quantiles as a flat (1, n_cells) row for band arithmetic."""
        return self.values.data.reshape(1, -1)


@dataclass(frozen=True)
class PredictionBand:
    """Per-sample, per-cell closed intervals [lower, upper].

    Rows are validation samples; an overflowed quantile makes the whole
    column infinite (lower = -inf, upper = +inf), which still counts as
    covering every truth.
    """

    lower: np.ndarray
    upper: np.ndarray
    dims: tuple[int, int, int, int]
    alpha: float
    n_cal: int
    method: Method

    def __post_init__(self):
        lo = _as_matrix(self.lower, "lower")
        hi = _as_matrix(self.upper, "upper")
        _check_same_shape(("lower", lo), ("upper", hi))
        if np.any(lo > hi):
            raise DataError("band invariant violated: lower > upper somewhere")
        object.__setattr__(self, "lower", _freeze(lo))
        object.__setattr__(self, "upper", _freeze(hi))
        object.__setattr__(self, "dims", _resolve_dims(lo.shape[1], self.dims))

    @property
    def n_samples(self) -> int:
        return self.lower.shape[0]

    def width(self) -> np.ndarray:
        return self.upper - self.lower


# ---------------------------------------------------------------------------
# Scores
# ---------------------------------------------------------------------------


def score_aer(pred: np.ndarray, truth: np.ndarray, dims=None) -> ScoreTensor:
    """Absolute residuals |truth - pred| per sample per cell."""
    p = _as_matrix(pred, "pred")
    t = _as_matrix(truth, "truth")
    _check_same_shape(("pred", p), ("truth", t))
    return ScoreTensor(np.abs(t - p), _resolve_dims(p.shape[1], dims), Aer())


def score_std(
    mu: np.ndarray, sigma: np.ndarray, truth: np.ndarray, dims=None, method: Std | None = None
) -> ScoreTensor:
    """Normalized residuals |truth - mu| / sigma; sigma must respect the floor."""
    m = _as_matrix(mu, "mu")
    s = _as_matrix(sigma, "sigma")
    t = _as_matrix(truth, "truth")
    _check_same_shape(("mu", m), ("sigma", s), ("truth", t))
    if np.any(s < SIGMA_FLOOR):
        raise DataError(f"sigma below floor {SIGMA_FLOOR}: min={s.min()}")
    return ScoreTensor(np.abs(t - m) / s, _resolve_dims(m.shape[1], dims), method or Std())


def score_cqr(
    lo_pred: np.ndarray,
    hi_pred: np.ndarray,
    truth: np.ndarray,
    dims=None,
    method: Cqr | None = None,
) -> ScoreTensor:
    """Signed distance to the quantile envelope: max(lo - y, y - hi).

    Negative when the truth sits strictly inside [lo, hi].  No ordering is
    assumed on (lo, hi): crossed quantile models still score; bands are
    sorted per cell only at construction.
    """
    lo = _as_matrix(lo_pred, "lo_pred")
    hi = _as_matrix(hi_pred, "hi_pred")
    t = _as_matrix(truth, "truth")
    _check_same_shape(("lo_pred", lo), ("hi_pred", hi), ("truth", t))
    return ScoreTensor(
        np.maximum(lo - t, t - hi), _resolve_dims(lo.shape[1], dims), method or Cqr()
    )


# ---------------------------------------------------------------------------
# Calibration
# ---------------------------------------------------------------------------


def conformal_rank(n_cal: int, alpha: float) -> int:
    """k = ceil((n_cal+1)(1-alpha)); may exceed n_cal (index overflow)."""
    if n_cal < 1:
        raise ConfigError(f"n_cal must be >= 1, got {n_cal}")
    if not 0.0 < alpha < 1.0:
        raise ConfigError(f"alpha must lie in (0,1), got {alpha}")
    v = (n_cal + 1) * (1.0 - alpha)
    # the nudge keeps e.g. 21*0.95 = 19.950000000000003 from ceiling to 20+1;
    # real-valued ceil is always >= 1 here, so restore that after nudging
    return max(math.ceil(v - 1e-9), 1)


def conformal_quantile(scores: ScoreTensor, alpha: float) -> QuantileField:
    """Per-cell k-th smallest calibration score, +Inf when k > n_cal."""
    k = conformal_rank(scores.n_cal, alpha)
    if k > scores.n_cal:
        values = np.full(scores.n_cells, np.inf)
    else:
        # selection, not sort: partition places the k-th order statistic
        # (0-based k-1) in position along the sample axis per cell
        values = np.partition(scores.scores, k - 1, axis=0)[k - 1]
    field = from_array(values.reshape(scores.dims), allow_inf=True)
    return QuantileField(field, float(alpha), scores.n_cal, scores.method)


# ---------------------------------------------------------------------------
# Bands
# ---------------------------------------------------------------------------


def build_band(
    qf: QuantileField,
    *,
    pred: np.ndarray | None = None,
    mu: np.ndarray | None = None,
    sigma: np.ndarray | None = None,
    lo: np.ndarray | None = None,
    hi: np.ndarray | None = None,
) -> PredictionBand:
    """Assemble per-sample bands from model outputs and a quantile field.

    AER wants pred=, STD wants mu= and sigma=, CQR wants lo= and hi=; any
    other combination is a tag mismatch.  CQR bands are sorted per cell so
    lower <= upper holds even if the quantile models crossed.
    """
    q = qf.matrix_row()
    tag = qf.method.tag
    given = {
        "pred": pred is not None,
        "mu": mu is not None,
        "sigma": sigma is not None,
        "lo": lo is not None,
        "hi": hi is not None,
    }
    wanted = {
        "aer": {"pred"},
        "std": {"mu", "sigma"},
        "cqr": {"lo", "hi"},
    }[tag]
    got = {k for k, v in given.items() if v}
    if got != wanted:
        raise ConfigError(f"{tag} band needs exactly {sorted(wanted)}, got {sorted(got)}")

    with np.errstate(invalid="ignore"):  # inf*0 never occurs, but inf-inf cancels below
        if tag == "aer":
            p = _as_matrix(pred, "pred")
            if p.shape[1] != q.shape[1]:
                raise ShapeError(f"pred has {p.shape[1]} cells, quantile field {q.shape[1]}")
            lower, upper = p - q, p + q
        elif tag == "std":
            m = _as_matrix(mu, "mu")
            s = _as_matrix(sigma, "sigma")
            _check_same_shape(("mu", m), ("sigma", s))
            if m.shape[1] != q.shape[1]:
                raise ShapeError(f"mu has {m.shape[1]} cells, quantile field {q.shape[1]}")
            if np.any(s < SIGMA_FLOOR):
                raise DataError(f"sigma below floor {SIGMA_FLOOR}: min={s.min()}")
            lower, upper = m - q * s, m + q * s
        else:
            lo_m = _as_matrix(lo, "lo")
            hi_m = _as_matrix(hi, "hi")
            _check_same_shape(("lo", lo_m), ("hi", hi_m))
            if lo_m.shape[1] != q.shape[1]:
                raise ShapeError(f"lo has {lo_m.shape[1]} cells, quantile field {q.shape[1]}")
            raw_lo, raw_hi = lo_m - q, hi_m + q
            lower = np.minimum(raw_lo, raw_hi)
            upper = np.maximum(raw_lo, raw_hi)
    return PredictionBand(lower, upper, qf.values.dims, qf.alpha, qf.n_cal, qf.method)


# ---------------------------------------------------------------------------
# Coverage
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CoverageLaw:
    """Beta law of per-cell empirical coverage at a calibration size.

    b == 0 marks the degenerate infinite-band case (coverage identically 1).
    """

    a: int
    b: int
    mean: float
    interval: tuple[float, float]
    mass: float


def coverage_beta(n_cal: int, alpha: float, mass: float = 0.99) -> CoverageLaw:
    """Coverage ~ Beta(k, n_cal+1-k) with k the conformal rank; mean ~ 1-alpha."""
    if not 0.0 < mass < 1.0:
        raise ConfigError(f"mass must lie in (0,1), got {mass}")
    k = conformal_rank(n_cal, alpha)
    b = n_cal + 1 - k
    if b <= 0:
        # k = n_cal + 1: an infinite band covers everything, coverage == 1
        return CoverageLaw(n_cal + 1, 0, 1.0, (1.0, 1.0), mass)
    interval = betadist.beta_central_interval(float(k), float(b), mass)
    return CoverageLaw(k, b, betadist.beta_mean(float(k), float(b)), interval, mass)


@dataclass(frozen=True)
class CoverageReport:
    """Validation-set coverage against a band, with the Beta reference law."""

    per_cell: FieldTensor          # fraction covered per cell, in [0, 1]
    mean_coverage: float
    tightness: float               # mean band width over finite-width cells
    n_infinite_cells: int          # cells whose band overflowed to infinite width
    n_val: int
    alpha: float
    n_cal: int
    method_tag: str
    beta: CoverageLaw


def empirical_coverage(
    band: PredictionBand, truths: np.ndarray, mass: float = 0.99
) -> CoverageReport:
    """Fraction of validation truths inside the closed band, per cell."""
    t = _as_matrix(truths, "truths")
    _check_same_shape(("truths", t), ("band.lower", band.lower))
    inside = (t >= band.lower) & (t <= band.upper)
    per_cell = inside.mean(axis=0)
    width = band.width()
    finite = np.isfinite(width)
    if finite.all():
        tightness = float(width.mean())
        n_inf = 0
    else:
        infinite_cols = ~finite.all(axis=0)
        n_inf = int(infinite_cols.sum())
        tightness = float(width[finite].mean()) if finite.any() else float("inf")
    return CoverageReport(
        per_cell=from_array(per_cell.reshape(band.dims)),
        mean_coverage=float(per_cell.mean()),
        tightness=tightness,
        n_infinite_cells=n_inf,
        n_val=t.shape[0],
        alpha=band.alpha,
        n_cal=band.n_cal,
        method_tag=band.method.tag,
        beta=coverage_beta(band.n_cal, band.alpha, mass),
    )


def report_as_dict(report: CoverageReport) -> dict:
    """JSON-ready summary (the per-cell tensor is attached separately if wanted)."""
    return {
        "alpha": report.alpha,
        "target": 1.0 - report.alpha,
        "mean_coverage": report.mean_coverage,
        "tightness": report.tightness,
        "n_infinite_cells": report.n_infinite_cells,
        "n_val": report.n_val,
        "n_cal": report.n_cal,
        "method": report.method_tag,
        "beta": {
            "a": report.beta.a,
            "b": report.beta.b,
            "mean": report.beta.mean,
            "lo": report.beta.interval[0],
            "hi": report.beta.interval[1],
            "mass": report.beta.mass,
        },
    }


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepRow:
    alpha: float
    target: float      # 1 - alpha
    empirical: float   # mean empirical coverage
    tightness: float
    beta_lo: float
    beta_hi: float


SWEEP_COLUMNS = ("alpha", "target", "empirical", "tightness", "beta_lo", "beta_hi")


def validation_sweep(
    scores: ScoreTensor,
    truths: np.ndarray,
    alphas: Sequence[float],
    mass: float = 0.99,
    **outputs: np.ndarray,
) -> list[SweepRow]:
    """Calibrate once, re-quantile per alpha, and report coverage rows.

    outputs are the model arrays build_band expects for the score's method
    (pred= / mu=,sigma= / lo=,hi=).  The alpha grid must be strictly
    increasing inside (0,1).
    """
    grid = [float(a) for a in alphas]
    if not grid:
        raise ConfigError("alpha grid is empty")
    if any(not 0.0 < a < 1.0 for a in grid):
        raise ConfigError(f"alpha grid must lie strictly inside (0,1): {grid}")
    if any(a2 <= a1 for a1, a2 in zip(grid, grid[1:])):
        raise ConfigError(f"alpha grid must be strictly increasing: {grid}")
    rows = []
    for a in grid:
        qf = conformal_quantile(scores, a)
        band = build_band(qf, **outputs)
        rep = empirical_coverage(band, truths, mass)
        rows.append(
            SweepRow(
                alpha=a,
                target=1.0 - a,
                empirical=rep.mean_coverage,
                tightness=rep.tightness,
                beta_lo=rep.beta.interval[0],
                beta_hi=rep.beta.interval[1],
            )
        )
    return rows


def sweep_to_csv(rows: Sequence[SweepRow], path) -> None:
    """Write sweep rows as CSV; floats via repr so re-reads are bit-exact."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_COLUMNS)
        for r in rows:
            w.writerow(
                [repr(float(getattr(r, c))) for c in SWEEP_COLUMNS]
            )


def read_sweep_csv(path) -> list[SweepRow]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != list(SWEEP_COLUMNS):
            raise DataError(f"unexpected sweep CSV header: {header}")
        rows = []
        for line in reader:
            if len(line) != len(SWEEP_COLUMNS):
                raise DataError(f"malformed sweep CSV row: {line}")
            vals = [float(v) for v in line]
            rows.append(SweepRow(*vals))
    return rows
