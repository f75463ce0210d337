"""Static SVG rendering of an error trace on log-scale axes.

Only the standard library is used: the chart is a handful of ``polyline``
elements inside an ``svg`` root built with :mod:`xml.etree.ElementTree`.
"""

from __future__ import annotations

import math
import xml.etree.ElementTree as ET
from pathlib import Path

import numpy as np

SVG_NS = "http://www.w3.org/2000/svg"
SERIES = (
    ("att_err_rad", "#1f77b4"),
    ("omega_err", "#d62728"),
    ("lyapunov", "#2ca02c"),
)
# Values are clipped from below so that exact zeros stay on a log axis.
LOG_FLOOR = 1e-16
MAX_POINTS = 2000

WIDTH, HEIGHT = 800, 480
LEFT, RIGHT, TOP, BOTTOM = 80, 170, 30, 50


def _downsample(n: int, max_points: int = MAX_POINTS) -> np.ndarray:
    if n <= max_points:
        return np.arange(n)
    idx = np.unique(np.linspace(0, n - 1, max_points).round().astype(int))
    return idx


def _decade_range(values: np.ndarray) -> tuple[int, int]:
    lo = math.floor(math.log10(float(values.min())))
    hi = math.ceil(math.log10(float(values.max())))
    if hi == lo:
        hi = lo + 1
    return lo, hi


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def render_svg(t, series: dict[str, np.ndarray]) -> ET.Element:
    """Build the SVG element tree for ``series`` (name -> values) against ``t``."""
    t = np.asarray(t, dtype=float)
    if t.size == 0:
        raise ValueError("cannot plot an empty trace")
    idx = _downsample(t.size)
    ts = t[idx]
    ys = {name: np.maximum(np.asarray(v, float)[idx], LOG_FLOOR) for name, v in series.items()}
    lo, hi = _decade_range(np.concatenate(list(ys.values())))
    t0, t1 = float(ts[0]), float(ts[-1])
    if t1 <= t0:
        t1 = t0 + 1.0

    pw, ph = WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM

    def sx(tv):
        return LEFT + (tv - t0) / (t1 - t0) * pw

    def sy(yv):
        return TOP + (hi - np.log10(yv)) / (hi - lo) * ph

    ET.register_namespace("", SVG_NS)
    root = ET.Element(
        f"{{{SVG_NS}}}svg",
        {"width": str(WIDTH), "height": str(HEIGHT), "viewBox": f"0 0 {WIDTH} {HEIGHT}"},
    )
    ET.SubElement(root, f"{{{SVG_NS}}}rect",
                  {"x": "0", "y": "0", "width": str(WIDTH), "height": str(HEIGHT), "fill": "white"})
    axes = ET.SubElement(root, f"{{{SVG_NS}}}g", {"id": "axes", "stroke": "#444", "font-size": "11"})
    ET.SubElement(axes, f"{{{SVG_NS}}}rect", {
        "x": str(LEFT), "y": str(TOP), "width": str(pw), "height": str(ph), "fill": "none",
    })
    for d in range(lo, hi + 1):
        y = _fmt(sy(10.0 ** d))
        ET.SubElement(axes, f"{{{SVG_NS}}}line", {
            "x1": str(LEFT), "x2": str(LEFT + pw), "y1": y, "y2": y,
            "stroke": "#ddd", "stroke-width": "0.5",
        })
        label = ET.SubElement(axes, f"{{{SVG_NS}}}text", {
            "x": str(LEFT - 6), "y": y, "text-anchor": "end", "stroke": "none",
            "dominant-baseline": "middle",
        })
        label.text = f"1e{d}"
    for tv in np.linspace(t0, t1, 7):
        label = ET.SubElement(axes, f"{{{SVG_NS}}}text", {
            "x": _fmt(sx(tv)), "y": str(TOP + ph + 16), "text-anchor": "middle", "stroke": "none",
        })
        label.text = f"{tv:g}"
    xlabel = ET.SubElement(axes, f"{{{SVG_NS}}}text", {
        "x": _fmt(LEFT + pw / 2), "y": str(HEIGHT - 10), "text-anchor": "middle", "stroke": "none",
    })
    xlabel.text = "t [s]"

    for k, (name, color) in enumerate(SERIES):
        if name not in ys:
            continue
        pts = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in zip(sx(ts), sy(ys[name])))
        ET.SubElement(root, f"{{{SVG_NS}}}polyline", {
            "id": name, "points": pts, "fill": "none", "stroke": color, "stroke-width": "1.2",
        })
        ly = TOP + 12 + 18 * k
        ET.SubElement(root, f"{{{SVG_NS}}}line", {
            "x1": str(LEFT + pw + 12), "x2": str(LEFT + pw + 36), "y1": str(ly), "y2": str(ly),
            "stroke": color, "stroke-width": "2",
        })
        text = ET.SubElement(root, f"{{{SVG_NS}}}text", {
            "x": str(LEFT + pw + 42), "y": str(ly + 4), "font-size": "12",
        })
        text.text = name
    return root


def write_plot_svg(trace, path) -> Path:
    """Write log-scale charts of ``att_err_rad``, ``omega_err`` and ``lyapunov`` vs ``t``.

    ``trace`` is anything with ``t`` and the three named array attributes,
    e.g. :class:`gyrofree.sim.Trace`.
    """
    path = Path(path)
    root = render_svg(trace.t, {name: getattr(trace, name) for name, _ in SERIES})
    tree = ET.ElementTree(root)
    try:
        tree.write(path, encoding="utf-8", xml_declaration=True)
    except OSError as exc:
        raise OSError(f"cannot write plot {path}: {exc}") from exc
    return path
