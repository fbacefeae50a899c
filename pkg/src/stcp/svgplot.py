"""Static SVG emission for coverage diagonals, band slices and overlays.

Deliberately minimal: fixed canvas, linear axes, polylines, markers and
text, assembled by pure string formatting with fixed precision — identical
inputs give byte-identical files.  Non-finite values (overflowed bands)
are clamped to the frame edge so the rest of the curve stays visible.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path

from .errors import DataError

WIDTH, HEIGHT = 640, 480
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 74, 24, 42, 58

# shared series palette
BLACK = "#000000"
BLUE = "#1f77b4"
RED = "#d62728"
GREEN = "#2ca02c"
ORANGE = "#ff7f0e"
PURPLE = "#9467bd"
GRAY = "#888888"

_SIZE_COLORS = (BLUE, ORANGE, GREEN, RED, PURPLE)


def _fmt(v: float) -> str:
    return format(v, ".2f")


class Frame:
    """Maps data coordinates into the fixed pixel frame."""

    def __init__(self, x_lo, x_hi, y_lo, y_hi):
        if not (x_hi > x_lo and y_hi > y_lo):
            raise DataError(f"degenerate plot range: x [{x_lo},{x_hi}] y [{y_lo},{y_hi}]")
        self.x_lo, self.x_hi = x_lo, x_hi
        self.y_lo, self.y_hi = y_lo, y_hi
        self.px_lo = MARGIN_L
        self.px_hi = WIDTH - MARGIN_R
        self.py_lo = HEIGHT - MARGIN_B
        self.py_hi = MARGIN_T

    def x(self, v: float) -> float:
        v = min(max(v, self.x_lo), self.x_hi)
        t = (v - self.x_lo) / (self.x_hi - self.x_lo)
        return self.px_lo + t * (self.px_hi - self.px_lo)

    def y(self, v: float) -> float:
        if not math.isfinite(v):
            v = self.y_hi if v > 0 else self.y_lo
        v = min(max(v, self.y_lo), self.y_hi)
        t = (v - self.y_lo) / (self.y_hi - self.y_lo)
        return self.py_lo + t * (self.py_hi - self.py_lo)


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    return [lo + (hi - lo) * i / (n - 1) for i in range(n)]


def _tick_label(v: float) -> str:
    return format(v, "g") if abs(v) >= 1e-4 or v == 0 else format(v, ".1e")


class Canvas:
    def __init__(self, title: str, frame: Frame, x_label: str, y_label: str):
        self.frame = frame
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}">',
            f'<rect width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>',
            f'<text x="{WIDTH / 2:.0f}" y="24" font-family="sans-serif" font-size="15" '
            f'text-anchor="middle">{_escape(title)}</text>',
        ]
        self._axes(x_label, y_label)

    def _axes(self, x_label: str, y_label: str) -> None:
        f = self.frame
        self.parts.append(
            f'<rect x="{f.px_lo}" y="{f.py_hi}" width="{f.px_hi - f.px_lo}" '
            f'height="{f.py_lo - f.py_hi}" fill="none" stroke="{BLACK}" stroke-width="1"/>'
        )
        for v in _ticks(f.x_lo, f.x_hi):
            px = f.x(v)
            self.parts.append(
                f'<line x1="{_fmt(px)}" y1="{f.py_lo}" x2="{_fmt(px)}" y2="{f.py_lo + 5}" '
                f'stroke="{BLACK}" stroke-width="1"/>'
            )
            self.parts.append(
                f'<text x="{_fmt(px)}" y="{f.py_lo + 20}" font-family="sans-serif" '
                f'font-size="11" text-anchor="middle">{_tick_label(v)}</text>'
            )
        for v in _ticks(f.y_lo, f.y_hi):
            py = f.y(v)
            self.parts.append(
                f'<line x1="{f.px_lo - 5}" y1="{_fmt(py)}" x2="{f.px_lo}" y2="{_fmt(py)}" '
                f'stroke="{BLACK}" stroke-width="1"/>'
            )
            self.parts.append(
                f'<text x="{f.px_lo - 9}" y="{_fmt(py + 4)}" font-family="sans-serif" '
                f'font-size="11" text-anchor="end">{_tick_label(v)}</text>'
            )
        self.parts.append(
            f'<text x="{(f.px_lo + f.px_hi) / 2:.0f}" y="{HEIGHT - 14}" '
            f'font-family="sans-serif" font-size="13" text-anchor="middle">{_escape(x_label)}</text>'
        )
        self.parts.append(
            f'<text x="20" y="{(f.py_lo + f.py_hi) / 2:.0f}" font-family="sans-serif" '
            f'font-size="13" text-anchor="middle" '
            f'transform="rotate(-90 20 {(f.py_lo + f.py_hi) / 2:.0f})">{_escape(y_label)}</text>'
        )

    def _points(self, xs, ys) -> str:
        f = self.frame
        return " ".join(f"{_fmt(f.x(x))},{_fmt(f.y(y))}" for x, y in zip(xs, ys))

    def polyline(self, xs, ys, color, width=1.5, dash=None):
        extra = f' stroke-dasharray="{dash}"' if dash else ""
        self.parts.append(
            f'<polyline points="{self._points(xs, ys)}" fill="none" '
            f'stroke="{color}" stroke-width="{width}"{extra}/>'
        )

    def polygon(self, xs, ys, color, opacity=0.25):
        self.parts.append(
            f'<polygon points="{self._points(xs, ys)}" fill="{color}" '
            f'fill-opacity="{opacity}" stroke="none"/>'
        )

    def markers(self, xs, ys, color, radius=3.0):
        f = self.frame
        for x, y in zip(xs, ys):
            self.parts.append(
                f'<circle cx="{_fmt(f.x(x))}" cy="{_fmt(f.y(y))}" r="{radius}" '
                f'fill="{color}"/>'
            )

    def legend(self, entries):
        """entries: (label, color, dash|None) drawn top-left inside the frame."""
        f = self.frame
        x0, y0 = f.px_lo + 12, f.py_hi + 16
        for i, (label, color, dash) in enumerate(entries):
            y = y0 + 17 * i
            extra = f' stroke-dasharray="{dash}"' if dash else ""
            self.parts.append(
                f'<line x1="{x0}" y1="{y}" x2="{x0 + 26}" y2="{y}" stroke="{color}" '
                f'stroke-width="2"{extra}/>'
            )
            self.parts.append(
                f'<text x="{x0 + 32}" y="{y + 4}" font-family="sans-serif" '
                f'font-size="11">{_escape(label)}</text>'
            )

    def write(self, path: str | Path) -> Path:
        path = Path(path)
        self.parts.append("</svg>")
        path.write_text("\n".join(self.parts) + "\n")
        return path


def _escape(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


# ---------------------------------------------------------------------------
# figure builders
# ---------------------------------------------------------------------------


def coverage_plot(rows, title: str, path: str | Path) -> Path:
    """Empirical coverage vs target with the diagonal and the Beta band."""
    if not rows:
        raise DataError("coverage plot needs at least one sweep row")
    targets = [r.target for r in rows]
    frame = Frame(0.0, 1.0, 0.0, 1.0)
    c = Canvas(title, frame, "target coverage (1 - alpha)", "empirical coverage")
    c.polyline([0.0, 1.0], [0.0, 1.0], GRAY, width=1.0, dash="4,3")
    c.polyline(targets, [r.beta_lo for r in rows], RED, width=1.0, dash="5,3")
    c.polyline(targets, [r.beta_hi for r in rows], RED, width=1.0, dash="5,3")
    c.polyline(targets, [r.empirical for r in rows], BLUE, width=1.8)
    c.markers(targets, [r.empirical for r in rows], BLUE)
    c.legend(
        [
            ("empirical", BLUE, None),
            ("beta 99% bounds", RED, "5,3"),
            ("target", GRAY, "4,3"),
        ]
    )
    return c.write(path)


def read_slice_csv(path: str | Path):
    """Load a band slice CSV into a plain dict of float lists."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or len(header) != 5:
            raise DataError(f"unexpected slice CSV header in {path}: {header}")
        data = {name: [] for name in header}
        for line in reader:
            for name, v in zip(header, line):
                data[name].append(float(v))
    data["axis"] = header[0]
    return data


def slice_plot(slices: dict, title: str, path: str | Path) -> Path:
    """Band slices at several alphas over one sample; truth and prediction.

    slices maps alpha -> read_slice_csv output; wider (small-alpha) bands
    are drawn first so the nested narrower ones stay visible.
    """
    if not slices:
        raise DataError("slice plot needs at least one alpha")
    alphas = sorted(slices)
    first = slices[alphas[0]]
    axis = first["axis"]
    xs = first[axis]
    finite = [
        v
        for d in slices.values()
        for key in ("truth", "pred", "lower", "upper")
        for v in d[key]
        if math.isfinite(v)
    ]
    lo, hi = min(finite), max(finite)
    pad = 0.08 * (hi - lo) if hi > lo else 1.0
    frame = Frame(min(xs), max(xs), lo - pad, hi + pad)
    c = Canvas(title, frame, axis, "field value")
    band_colors = {a: _SIZE_COLORS[i % len(_SIZE_COLORS)] for i, a in enumerate(alphas)}
    legend = []
    for a in alphas:
        d = slices[a]
        color = band_colors[a]
        c.polygon(xs + xs[::-1], d["lower"] + d["upper"][::-1], color)
        c.polyline(xs, d["lower"], color, width=1.0)
        c.polyline(xs, d["upper"], color, width=1.0)
        legend.append((f"band alpha={a:g}", color, None))
    c.polyline(xs, first["pred"], PURPLE, width=1.5, dash="6,3")
    c.polyline(xs, first["truth"], BLACK, width=1.5)
    legend += [("prediction", PURPLE, "6,3"), ("truth", BLACK, None)]
    c.legend(legend)
    return c.write(path)


def ncal_overlay_plot(overlay: dict, title: str, path: str | Path) -> Path:
    """Coverage diagonals for several calibration sizes on one frame."""
    if not overlay:
        raise DataError("overlay plot needs at least one size")
    frame = Frame(0.0, 1.0, 0.0, 1.0)
    c = Canvas(title, frame, "target coverage (1 - alpha)", "empirical coverage")
    c.polyline([0.0, 1.0], [0.0, 1.0], GRAY, width=1.0, dash="4,3")
    legend = [("target", GRAY, "4,3")]
    for i, size in enumerate(sorted(overlay)):
        rows = overlay[size]
        color = _SIZE_COLORS[i % len(_SIZE_COLORS)]
        targets = [r.target for r in rows]
        c.polyline(targets, [r.empirical for r in rows], color, width=1.6)
        c.markers(targets, [r.empirical for r in rows], color, radius=2.5)
        legend.append((f"n_cal={size}", color, None))
    c.legend(legend)
    return c.write(path)
