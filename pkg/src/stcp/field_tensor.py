"""Dense rank-4 field tensors and their binary serialization.

A field tensor holds one spatio-temporal field (or a stack of them) with
axes [time, x, y, variable], stored row-major as float64.  Degenerate axes
use extent 1, so a 1D steady field is [1, nx, 1, 1] and a 1D trajectory is
[t, nx, 1, 1].

The on-disk format ("CPT1") is: magic bytes b"CPT1", one u8 rank byte
(always 4), four little-endian u32 extents, then the payload as
little-endian float64 in row-major order.  Round trips are bit-exact,
including signed zeros.  Files use the .cpt extension and may carry a
JSON sidecar <name>.json with axis labels and provenance.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, Iterable

import numpy as np

from .errors import DataError, FormatError, ShapeError

MAGIC = b"CPT1"
RANK = 4

_HEADER = struct.Struct("<4sB4I")


@dataclass(frozen=True)
class TensorStats:
    """Summary statistics of a tensor's elements."""

    mean: float
    min: float
    max: float
    l2norm: float


@dataclass(frozen=True)
class FieldTensor:
    """Immutable rank-4 float64 tensor.

    ``allow_inf`` marks tensors that may legally contain +Inf (conformal
    quantile fields when the calibration rank overflows).  Everything else
    must be finite.
    """

    data: np.ndarray
    allow_inf: bool = False

    def __post_init__(self) -> None:
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim != RANK:
            raise ShapeError(f"field tensor must be rank {RANK}, got rank {arr.ndim}")
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)
        _validate_payload(arr, self.allow_inf)

    @property
    def dims(self) -> tuple[int, int, int, int]:
        return self.data.shape  # type: ignore[return-value]

    @property
    def size(self) -> int:
        return self.data.size

    def item(self, t: int, x: int, y: int, v: int) -> float:
        return float(self.data[t, x, y, v])

    def __getitem__(self, key):
        return self.data[key]

    def flat(self) -> np.ndarray:
        """Row-major flat view; element (t,x,y,v) sits at ((t*nx+x)*ny+y)*nvar+v."""
        return self.data.reshape(-1)

    def add(self, other: "FieldTensor") -> "FieldTensor":
        self._check_same_dims(other)
        return FieldTensor(self.data + other.data, self.allow_inf or other.allow_inf)

    def sub(self, other: "FieldTensor") -> "FieldTensor":
        self._check_same_dims(other)
        return FieldTensor(self.data - other.data, self.allow_inf or other.allow_inf)

    def abs(self) -> "FieldTensor":
        return FieldTensor(np.abs(self.data), self.allow_inf)

    def scale(self, factor: float) -> "FieldTensor":
        if not math.isfinite(factor):
            raise DataError("scale factor must be finite")
        return FieldTensor(self.data * factor, self.allow_inf)

    def stats(self) -> TensorStats:
        if self.size == 0:
            raise DataError("stats of an empty tensor are undefined")
        flat = self.flat()
        return TensorStats(
            mean=float(flat.mean()),
            min=float(flat.min()),
            max=float(flat.max()),
            l2norm=float(np.sqrt(np.sum(flat * flat))),
        )

    def _check_same_dims(self, other: "FieldTensor") -> None:
        if self.dims != other.dims:
            raise ShapeError(f"dimension mismatch: {self.dims} vs {other.dims}")


def _validate_payload(arr: np.ndarray, allow_inf: bool) -> None:
    if allow_inf:
        # +Inf is legal (overflowed quantiles); NaN and -Inf never are.
        if np.isnan(arr).any() or (arr == -np.inf).any():
            raise DataError("tensor contains NaN or -Inf")
    elif not np.isfinite(arr).all():
        raise DataError("tensor contains non-finite elements")


def make_tensor(dims: Iterable[int], data: Iterable[float], allow_inf: bool = False) -> FieldTensor:
    """Build a tensor from explicit extents and a flat row-major payload."""
    dims = tuple(int(d) for d in dims)
    if len(dims) != RANK:
        raise ShapeError(f"expected {RANK} extents, got {len(dims)}")
    if any(d < 0 for d in dims):
        raise ShapeError(f"extents must be non-negative, got {dims}")
    flat = np.asarray(list(data) if not isinstance(data, np.ndarray) else data, dtype=np.float64)
    expected = int(np.prod(dims, dtype=np.int64)) if dims else 0
    if flat.size != expected:
        raise ShapeError(f"payload has {flat.size} elements, dims {dims} need {expected}")
    return FieldTensor(flat.reshape(dims), allow_inf)


def from_array(arr: np.ndarray, allow_inf: bool = False) -> FieldTensor:
    """Wrap an array, right-padding with unit axes up to rank 4."""
    arr = np.asarray(arr, dtype=np.float64)
    if arr.ndim > RANK:
        raise ShapeError(f"array rank {arr.ndim} exceeds {RANK}")
    shape = arr.shape + (1,) * (RANK - arr.ndim)
    return FieldTensor(arr.reshape(shape), allow_inf)


def write_tensor(tensor: FieldTensor, sink: BinaryIO) -> int:
    """Serialize to the CPT1 layout; returns the number of bytes written."""
    header = _HEADER.pack(MAGIC, RANK, *tensor.dims)
    payload = np.ascontiguousarray(tensor.data, dtype="<f8").tobytes()
    sink.write(header)
    sink.write(payload)
    return len(header) + len(payload)


def read_tensor(source: BinaryIO, allow_inf: bool = False) -> FieldTensor:
    """Deserialize a CPT1 stream, validating magic, rank, and payload length."""
    head = source.read(_HEADER.size)
    if len(head) < _HEADER.size:
        raise FormatError("truncated header")
    magic, rank, *dims = _HEADER.unpack(head)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    if rank != RANK:
        raise FormatError(f"unsupported rank {rank}")
    count = int(np.prod(dims, dtype=np.int64))
    payload = source.read(8 * count)
    if len(payload) != 8 * count:
        raise FormatError(f"truncated payload: expected {8 * count} bytes, got {len(payload)}")
    arr = np.frombuffer(payload, dtype="<f8").astype(np.float64).reshape(dims)
    return FieldTensor(arr, allow_inf)


def write_tensor_file(
    path: str | Path,
    tensor: FieldTensor,
    labels: dict[str, str] | None = None,
    provenance: dict | None = None,
) -> Path:
    """Write <path>.cpt plus a JSON sidecar <path>.json describing it."""
    path = Path(path)
    if path.suffix != ".cpt":
        path = path.with_suffix(".cpt")
    with open(path, "wb") as fh:
        write_tensor(tensor, fh)
    sidecar = {
        "dims": list(tensor.dims),
        "axes": labels or {"0": "time", "1": "x", "2": "y", "3": "variable"},
        "allow_inf": tensor.allow_inf,
        "provenance": provenance or {},
    }
    path.with_suffix(".json").write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    return path


def read_tensor_file(path: str | Path, allow_inf: bool | None = None) -> FieldTensor:
    """Read a .cpt file; the sidecar's allow_inf flag is honored when present."""
    path = Path(path)
    if allow_inf is None:
        sidecar = path.with_suffix(".json")
        allow_inf = False
        if sidecar.exists():
            try:
                allow_inf = bool(json.loads(sidecar.read_text()).get("allow_inf", False))
            except (json.JSONDecodeError, OSError):
                allow_inf = False
    with open(path, "rb") as fh:
        return read_tensor(fh, allow_inf=allow_inf)
