"""Small self-contained SVG writers for heatmaps and line plots.

Numbers are printed with fixed precision so that identical inputs give
identical files.
"""
from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

# a few anchors of a perceptually ordered dark-to-light ramp
_RAMP = np.array([
    [68, 1, 84], [59, 82, 139], [33, 145, 140], [94, 201, 98], [253, 231, 37],
], dtype=float)

_W, _H = 640, 480
_LEFT, _RIGHT, _TOP, _BOTTOM = 70, 90, 30, 60


def _f(x):
    return format(float(x), ".6g")


def colour(t):
    """Hex colour for ``t`` in [0, 1]."""
    t = min(max(float(t), 0.0), 1.0) * (len(_RAMP) - 1)
    i = min(int(t), len(_RAMP) - 2)
    c = _RAMP[i] + (t - i) * (_RAMP[i + 1] - _RAMP[i])
    return "#%02x%02x%02x" % tuple(int(round(v)) for v in c)


def _ticks(lo, hi, n=5):
    return [lo + (hi - lo) * k / (n - 1) for k in range(n)]


def _frame(title, xlabel, ylabel, xr, yr, body, extra=""):
    pw, ph = _W - _LEFT - _RIGHT, _H - _TOP - _BOTTOM
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
           f'viewBox="0 0 {_W} {_H}" font-family="sans-serif" font-size="12">',
           f'<rect width="{_W}" height="{_H}" fill="white"/>',
           f'<text x="{_W / 2}" y="18" text-anchor="middle" font-size="14">{escape(title)}</text>']
    out += body
    out.append(f'<rect x="{_LEFT}" y="{_TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
    for v in _ticks(*xr):
        x = _LEFT + (v - xr[0]) / (xr[1] - xr[0]) * pw
        out.append(f'<line x1="{_f(x)}" y1="{_TOP + ph}" x2="{_f(x)}" y2="{_TOP + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{_f(x)}" y="{_TOP + ph + 18}" text-anchor="middle">{_f(v)}</text>')
    for v in _ticks(*yr):
        y = _TOP + ph - (v - yr[0]) / (yr[1] - yr[0]) * ph
        out.append(f'<line x1="{_LEFT - 5}" y1="{_f(y)}" x2="{_LEFT}" y2="{_f(y)}" stroke="black"/>')
        out.append(f'<text x="{_LEFT - 8}" y="{_f(y + 4)}" text-anchor="end">{_f(v)}</text>')
    out.append(f'<text x="{_LEFT + pw / 2}" y="{_H - 15}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="18" y="{_TOP + ph / 2}" text-anchor="middle" '
               f'transform="rotate(-90 18 {_TOP + ph / 2})">{escape(ylabel)}</text>')
    if extra:
        out.append(extra)
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _span(a):
    lo, hi = float(np.min(a)), float(np.max(a))
    if hi - lo < 1e-12 * max(1.0, abs(lo)):
        lo, hi = lo - 0.5, hi + 0.5
    return lo, hi


def heatmap(path, xs, ys, values, title, xlabel="Re λ", ylabel="Im λ", label=""):
    """Cell plot of ``values[i_y, i_x]`` over the tensor grid ``xs`` by ``ys``."""
    xs, ys = np.asarray(xs, float), np.asarray(ys, float)
    vals = np.asarray(values, float)
    xr, yr = _span(xs), _span(ys)
    finite = vals[np.isfinite(vals)]
    vlo, vhi = _span(finite) if finite.size else (0.0, 1.0)
    pw, ph = _W - _LEFT - _RIGHT, _H - _TOP - _BOTTOM
    cw = pw / len(xs)
    chh = ph / len(ys)
    body = []
    for iy in range(len(ys)):
        for ix in range(len(xs)):
            v = vals[iy, ix]
            c = colour((v - vlo) / (vhi - vlo)) if np.isfinite(v) else "#000000"
            x = _LEFT + ix * cw
            y = _TOP + ph - (iy + 1) * chh
            body.append(f'<rect x="{_f(x)}" y="{_f(y)}" width="{_f(cw + 0.3)}" '
                        f'height="{_f(chh + 0.3)}" fill="{c}"/>')
    # cell centres sit inside the frame; the tick labels follow them
    xr = (xs[0], xs[-1]) if len(xs) > 1 else xr
    yr = (ys[0], ys[-1]) if len(ys) > 1 else yr
    bar = []
    bx = _W - _RIGHT + 20
    for k in range(50):
        y = _TOP + ph - (k + 1) * ph / 50
        bar.append(f'<rect x="{bx}" y="{_f(y)}" width="14" height="{_f(ph / 50 + 0.3)}" '
                   f'fill="{colour(k / 49)}"/>')
    bar.append(f'<text x="{bx + 7}" y="{_TOP - 6}" text-anchor="middle">{_f(vhi)}</text>')
    bar.append(f'<text x="{bx + 7}" y="{_TOP + ph + 14}" text-anchor="middle">{_f(vlo)}</text>')
    if label:
        bar.append(f'<text x="{bx + 7}" y="{_TOP + ph + 30}" text-anchor="middle">{escape(label)}</text>')
    _write(path, _frame(title, xlabel, ylabel, _pad(xr), _pad(yr), body, "\n".join(bar)))


def _pad(r):
    lo, hi = r
    if hi <= lo:
        return lo - 0.5, hi + 0.5
    return lo, hi


def line_plot(path, series, title, xlabel, ylabel):
    """``series`` is a list of ``(label, xs, ys)``."""
    allx = np.concatenate([np.asarray(s[1], float) for s in series])
    ally = np.concatenate([np.asarray(s[2], float) for s in series])
    ally = ally[np.isfinite(ally)]
    xr, yr = _span(allx), _span(ally if ally.size else np.zeros(1))
    pw, ph = _W - _LEFT - _RIGHT, _H - _TOP - _BOTTOM
    body = []
    for k, (label, xs, ys) in enumerate(series):
        c = colour(k / max(1, len(series) - 1)) if len(series) > 1 else "#1f4e9c"
        pts = []
        for x, y in zip(xs, ys):
            if not np.isfinite(y):
                continue
            px = _LEFT + (x - xr[0]) / (xr[1] - xr[0]) * pw
            py = _TOP + ph - (y - yr[0]) / (yr[1] - yr[0]) * ph
            pts.append(f"{_f(px)},{_f(py)}")
        body.append(f'<polyline fill="none" stroke="{c}" stroke-width="1.5" points="{" ".join(pts)}"/>')
        body.append(f'<text x="{_W - _RIGHT + 6}" y="{_TOP + 14 + 16 * k}" fill="{c}">{escape(str(label))}</text>')
    _write(path, _frame(title, xlabel, ylabel, xr, yr, body))


def _write(path, text):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
