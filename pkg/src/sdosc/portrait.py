"""Phase portraits as standalone SVG documents.

Coordinates are drawn in the window's own units: the viewBox is the window,
and y is reflected inside it so that up is +y.  Polylines are cut where an
orbit leaves the window, so every vertex lies inside the viewBox.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from xml.sax.saxutils import escape

import numpy as np

from .model import SD, Params

STYLE = """
.orbit { fill: none; stroke: #555; stroke-width: %(w)s; }
.cycle { fill: none; stroke: #c0392b; stroke-width: %(w2)s; }
.stable { }
.unstable { stroke-dasharray: %(d1)s %(d1)s; }
.semi_stable_ext_stable, .semi_stable_ext_unstable { stroke-dasharray: %(d1)s %(d2)s %(d2)s %(d2)s; }
.axis { stroke: #999; stroke-width: %(w)s; }
.switching { stroke: #2c7fb8; stroke-width: %(w)s; stroke-dasharray: %(d2)s %(d2)s; }
.nullcline { fill: none; stroke: #31a354; stroke-width: %(w)s; }
.equilibrium { fill: #000; }
"""


@dataclass(frozen=True)
class PortraitSpec:
    window: tuple  # (xmin, xmax, ymin, ymax)
    seeds: tuple = ()
    chart: str = SD
    nullcline: bool = True
    switching_line: bool = True
    cycles: bool = True
    equilibrium: bool = True
    width_px: int = 640

    def __post_init__(self):
        x0, x1, y0, y1 = map(float, self.window)
        if not all(map(math.isfinite, (x0, x1, y0, y1))) or x1 <= x0 or y1 <= y0:
            raise ValueError(f"window must be finite and nondegenerate, got {self.window}")


def _runs(pts, win):
    x0, x1, y0, y1 = win
    inside = (pts[:, 0] >= x0) & (pts[:, 0] <= x1) & (pts[:, 1] >= y0) & (pts[:, 1] <= y1)
    runs, cur = [], []
    for ok, p in zip(inside, pts):
        if ok:
            cur.append(p)
        elif cur:
            runs.append(np.array(cur))
            cur = []
    if cur:
        runs.append(np.array(cur))
    return runs, bool(inside.all())


def _path_pts(pts, win):
    y0, y1 = win[2], win[3]
    return " ".join(f"{x:.6g},{y0 + y1 - y:.6g}" for x, y in pts)


def emit_portrait_svg(spec: PortraitSpec, params: Params, cycles=(), trajectories=()):
    win = tuple(map(float, spec.window))
    x0, x1, y0, y1 = win
    w, h = x1 - x0, y1 - y0
    unit = max(w, h) / 400.0
    style = STYLE % {"w": f"{unit:.4g}", "w2": f"{2 * unit:.4g}",
                     "d1": f"{4 * unit:.4g}", "d2": f"{1.5 * unit:.4g}"}
    height_px = max(1, int(round(spec.width_px * h / w)))
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="{x0:.17g} {y0:.17g} {w:.17g} {h:.17g}" '
           f'width="{spec.width_px}" height="{height_px}" preserveAspectRatio="none">',
           f"<style>{style}</style>",
           f"<title>{escape(f'a={params.a:g} b={params.b:g} delta={params.delta:g}')}</title>"]
    fy = lambda y: y0 + y1 - y
    if y0 <= 0.0 <= y1:
        out.append(f'<line class="axis" x1="{x0:.6g}" y1="{fy(0):.6g}" x2="{x1:.6g}" y2="{fy(0):.6g}"/>')
    if spec.switching_line and x0 <= 0.0 <= x1:
        out.append(f'<line class="switching" x1="0" y1="{y0:.6g}" x2="0" y2="{y1:.6g}"/>')
    if spec.nullcline:
        xs = np.linspace(x0, x1, 400)
        if spec.chart == SD:
            ys = params.delta * (xs ** 3 / 3.0 + params.b * xs)
        else:
            ys = np.zeros_like(xs)
        for run in _runs(np.column_stack([xs, ys]), win)[0]:
            if len(run) > 1:
                out.append(f'<polyline class="nullcline" points="{_path_pts(run, win)}"/>')
    for tr in trajectories:
        for run in _runs(tr.points(spec.chart), win)[0]:
            if len(run) > 1:
                out.append(f'<polyline class="orbit" points="{_path_pts(run, win)}"/>')
    if spec.cycles:
        for cy in cycles:
            pts = np.asarray(cy.points)
            if spec.chart == SD:
                pts = np.column_stack([pts[:, 0], pts[:, 1] + params.delta
                                       * (pts[:, 0] ** 3 / 3.0 + params.b * pts[:, 0])])
            runs, whole = _runs(pts, win)
            cls = f"cycle {cy.stability or ''}".strip()
            data = f'data-kind="{cy.kind}" data-stability="{cy.stability}"'
            if whole:
                out.append(f'<polygon class="{cls}" {data} points="{_path_pts(pts, win)}"/>')
            else:
                for run in runs:
                    if len(run) > 1:
                        out.append(f'<polyline class="{cls}" {data} points="{_path_pts(run, win)}"/>')
    if spec.equilibrium:
        ex = params.a + 1.0
        ey = params.delta * (ex ** 3 / 3.0 + params.b * ex) if spec.chart == SD else 0.0
        if x0 <= ex <= x1 and y0 <= ey <= y1:
            out.append(f'<circle class="equilibrium" cx="{ex:.6g}" cy="{fy(ey):.6g}" r="{3 * unit:.4g}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def auto_window(params: Params, cycles=(), trajectories=(), chart=SD, pad=0.08):
    """Bounding box of everything drawn, padded; falls back to the equilibrium scale."""
    boxes = []
    for cy in cycles:
        p = np.asarray(cy.points)
        if chart == SD:
            p = np.column_stack([p[:, 0], p[:, 1] + params.delta * (p[:, 0] ** 3 / 3 + params.b * p[:, 0])])
        boxes.append(p)
    for tr in trajectories:
        boxes.append(tr.points(chart))
    boxes.append(np.array([[0.0, 0.0], [params.a + 1.0, 0.0]]))
    allp = np.vstack(boxes)
    allp = allp[np.all(np.isfinite(allp), axis=1)]
    lo, hi = allp.min(axis=0), allp.max(axis=0)
    span = np.maximum(hi - lo, 1.0)
    lo, hi = lo - pad * span, hi + pad * span
    return (float(lo[0]), float(hi[0]), float(lo[1]), float(hi[1]))
