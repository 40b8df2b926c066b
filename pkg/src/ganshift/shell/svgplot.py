"""Minimal standalone SVG plotter: line charts and bar charts.

Just enough to look at spectra, fraction series and accuracy tables without
pulling in a plotting stack. Output is deterministic for fixed input.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..errors import ContractViolation

__all__ = ["line_plot", "bar_plot"]

_W, _H = 640, 420
_LEFT, _RIGHT, _TOP, _BOTTOM = 64, 24, 36, 48
_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _esc(text: str) -> str:
    return str(text).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def _fmt(v: float) -> str:
    return format(float(v), ".2f")


def _tick_label(v: float) -> str:
    return format(float(v), ".4g")


def _open_svg(title: str) -> list[str]:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}" font-family="sans-serif" font-size="12">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W / 2:.0f}" y="20" text-anchor="middle" font-size="14">{_esc(title)}</text>',
    ]


def _axes(xlabel: str, ylabel: str) -> list[str]:
    x0, y0 = _LEFT, _H - _BOTTOM
    x1, y1 = _W - _RIGHT, _TOP
    return [
        f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>',
        f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>',
        f'<text x="{(x0 + x1) / 2:.0f}" y="{_H - 10}" text-anchor="middle">{_esc(xlabel)}</text>',
        f'<text x="16" y="{(y0 + y1) / 2:.0f}" text-anchor="middle" '
        f'transform="rotate(-90 16 {(y0 + y1) / 2:.0f})">{_esc(ylabel)}</text>',
    ]


def _range(lo: float, hi: float) -> tuple[float, float]:
    if not (np.isfinite(lo) and np.isfinite(hi)):
        raise ContractViolation("plot: non-finite data range")
    if hi <= lo:
        pad = 1.0 if lo == 0.0 else abs(lo) * 0.1
        return lo - pad, lo + pad
    return lo, hi


def _ticks(lo: float, hi: float, n: int = 5) -> np.ndarray:
    return np.linspace(lo, hi, n)


def line_plot(title: str, xlabel: str, ylabel: str, series, path=None) -> str:
    """Polyline chart. ``series`` is a list of (label, xs, ys) triples."""
    if not series:
        raise ContractViolation("line_plot: no series given")
    clean = []
    for label, xs, ys in series:
        xs = np.asarray(xs, dtype=np.float64)
        ys = np.asarray(ys, dtype=np.float64)
        if xs.ndim != 1 or xs.shape != ys.shape or xs.size < 1:
            raise ContractViolation(f"line_plot: series {label!r} must be equal-length vectors")
        clean.append((str(label), xs, ys))

    xlo, xhi = _range(min(s[1].min() for s in clean), max(s[1].max() for s in clean))
    ylo, yhi = _range(min(s[2].min() for s in clean), max(s[2].max() for s in clean))

    def px(x):
        return _LEFT + (x - xlo) / (xhi - xlo) * (_W - _LEFT - _RIGHT)

    def py(y):
        return (_H - _BOTTOM) - (y - ylo) / (yhi - ylo) * (_H - _TOP - _BOTTOM)

    parts = _open_svg(title) + _axes(xlabel, ylabel)
    for t in _ticks(xlo, xhi):
        parts.append(
            f'<line x1="{_fmt(px(t))}" y1="{_H - _BOTTOM}" x2="{_fmt(px(t))}" '
            f'y2="{_H - _BOTTOM + 4}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{_fmt(px(t))}" y="{_H - _BOTTOM + 18}" '
            f'text-anchor="middle">{_tick_label(t)}</text>'
        )
    for t in _ticks(ylo, yhi):
        parts.append(
            f'<line x1="{_LEFT - 4}" y1="{_fmt(py(t))}" x2="{_LEFT}" '
            f'y2="{_fmt(py(t))}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{_LEFT - 8}" y="{_fmt(py(t) + 4)}" '
            f'text-anchor="end">{_tick_label(t)}</text>'
        )
    for i, (label, xs, ys) in enumerate(clean):
        color = _PALETTE[i % len(_PALETTE)]
        points = " ".join(f"{_fmt(px(x))},{_fmt(py(y))}" for x, y in zip(xs, ys))
        parts.append(f'<polyline points="{points}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        ly = _TOP + 14 * i
        parts.append(
            f'<line x1="{_W - _RIGHT - 130}" y1="{ly}" x2="{_W - _RIGHT - 110}" '
            f'y2="{ly}" stroke="{color}" stroke-width="1.5"/>'
        )
        parts.append(f'<text x="{_W - _RIGHT - 104}" y="{ly + 4}">{_esc(label)}</text>')
    parts.append("</svg>")
    text = "\n".join(parts) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


def bar_plot(title: str, xlabel: str, ylabel: str, labels, values, path=None) -> str:
    """Bar chart with one labeled bar per value."""
    values = np.asarray(values, dtype=np.float64)
    labels = [str(l) for l in labels]
    if values.ndim != 1 or values.size < 1 or len(labels) != values.size:
        raise ContractViolation("bar_plot: labels and values must match and be nonempty")
    ylo, yhi = _range(min(0.0, float(values.min())), max(0.0, float(values.max())))

    def py(y):
        return (_H - _BOTTOM) - (y - ylo) / (yhi - ylo) * (_H - _TOP - _BOTTOM)

    span = _W - _LEFT - _RIGHT
    slot = span / values.size
    width = slot * 0.7

    parts = _open_svg(title) + _axes(xlabel, ylabel)
    for t in _ticks(ylo, yhi):
        parts.append(
            f'<line x1="{_LEFT - 4}" y1="{_fmt(py(t))}" x2="{_LEFT}" '
            f'y2="{_fmt(py(t))}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{_LEFT - 8}" y="{_fmt(py(t) + 4)}" '
            f'text-anchor="end">{_tick_label(t)}</text>'
        )
    base = py(0.0)
    for i, (label, v) in enumerate(zip(labels, values)):
        x = _LEFT + slot * i + (slot - width) / 2
        top = py(v)
        y = min(top, base)
        h = abs(base - top)
        color = _PALETTE[0] if v >= 0 else _PALETTE[1]
        parts.append(
            f'<rect x="{_fmt(x)}" y="{_fmt(y)}" width="{_fmt(width)}" '
            f'height="{_fmt(h)}" fill="{color}"/>'
        )
        parts.append(
            f'<text x="{_fmt(x + width / 2)}" y="{_H - _BOTTOM + 18}" '
            f'text-anchor="middle">{_esc(label)}</text>'
        )
    parts.append("</svg>")
    text = "\n".join(parts) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text
