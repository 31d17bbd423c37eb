"""Shooting maps and limit-cycle detection in the Lienard chart.

From (c, 0) with c <= 0 the forward orbit first meets the positive x-axis at
x_plus and the backward orbit at x_minus; d(c) = x_plus - x_minus vanishes
exactly on crossing cycles.  The backward orbit can run off to infinity
along the cubic branch (forward contraction is strong there), in which case
the shot has no return and d is treated as -inf, the limit of x_minus
growing without bound.

Small cycles (entirely in x > 0) are fixed points of the first-return map
on {y = 0, 0 < x < a+1}; the flow is clockwise, so that segment is crossed
upward.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from . import _kernels as K
from .errors import DomainError, ScanInsufficient
from .integrator import (DEFAULT_CTRL, EventSpec, IntegratorCtrl, flow,
                         negative_x_axis, positive_x_axis)
from .model import LIENARD, Params, PhasePoint

_STATUS = {K.HIT: "ok", K.TMAX: "t_max_reached", K.ESCAPED: "escaped",
           K.TRAPPED: "equilibrium_trapped", K.UNDERFLOW: "step_underflow",
           K.NONFINITE: "non_finite"}


@dataclass(frozen=True)
class ShootResult:
    c: float
    x_plus: float | None
    x_minus: float | None
    displacement: float | None
    plus_status: str = "ok"
    minus_status: str = "ok"

    @property
    def ok(self):
        return self.displacement is not None


@dataclass(frozen=True)
class ScanCtrl:
    n_grid: int = 400
    c_span: float | None = None  # None: 3*max(sqrt(-3b), a+1+sqrt(-b))
    bracket_width: float = 1e-8
    double_tol: float = 1e-7
    graze_tol: float = 1e-7
    small_grid: int = 90
    stab_rel: float = 1e-6
    semi_offset: float = 1e-5

    def span(self, params: Params):
        if self.c_span is not None:
            return self.c_span
        nb = max(-params.b, 0.0)
        return 3.0 * max(math.sqrt(3 * nb), params.a + 1 + math.sqrt(nb))


DEFAULT_SCAN = ScanCtrl()


@dataclass
class CycleRecord:
    kind: str  # crossing | small | grazing
    c_left: float | None
    x_right: float
    period: float
    div_integral: float
    stability: str | None = None
    points: np.ndarray = field(default=None, repr=False)
    x_min: float = 0.0
    x_left: float | None = None  # left crossing of y = 0 for small cycles

    def to_dict(self, with_points=False):
        d = {"kind": self.kind, "c_left": self.c_left, "x_right": self.x_right,
             "period": self.period, "div_integral": self.div_integral,
             "stability": self.stability, "x_min": self.x_min}
        if self.x_left is not None:
            d["x_left"] = self.x_left
        if with_points and self.points is not None:
            d["points"] = self.points.tolist()
        return d


# -- shooting ---------------------------------------------------------------

def _shoot_raw(cs, params: Params, ctrl: IntegratorCtrl):
    cs = np.ascontiguousarray(np.atleast_1d(np.asarray(cs, dtype=float)))
    if np.any(cs > 0):
        raise DomainError("shooting abscissae must be <= 0")
    return K.shoot_batch(cs, params.a, params.b, params.delta, ctrl.rel_tol,
                         ctrl.abs_tol, ctrl.event_time_tol, ctrl.max_step,
                         ctrl.t_max, ctrl.radius(params))


def displacement_values(cs, params: Params, ctrl: IntegratorCtrl = None):
    """d(c) as an array.

    A backward orbit that escapes has x- -> inf, so d = -inf there.  Any other
    failure to return (trapped at the equilibrium, t_max) gives nan: x- stays
    bounded near such a band edge and d has no sign change across it.
    """
    out = _shoot_raw(cs, params, ctrl or DEFAULT_CTRL)
    d = out[:, 0] - out[:, 1]
    d[(out[:, 3] == K.ESCAPED) & ~np.isnan(out[:, 0])] = -np.inf
    return d


def displacement(c, params: Params, ctrl: IntegratorCtrl = None):
    return float(displacement_values([c], params, ctrl)[0])


def shoot(c, params: Params, ctrl: IntegratorCtrl = None) -> ShootResult:
    return displacement_profile(params, [c], ctrl)[0]


def displacement_profile(params: Params, c_grid, ctrl: IntegratorCtrl = None):
    out = _shoot_raw(c_grid, params, ctrl or DEFAULT_CTRL)
    res = []
    for c, row in zip(np.atleast_1d(c_grid), out):
        xp = None if np.isnan(row[0]) else float(row[0])
        xm = None if np.isnan(row[1]) else float(row[1])
        d = xp - xm if (xp is not None and xm is not None) else None
        res.append(ShootResult(float(c), xp, xm, d, _STATUS[int(row[2])],
                               _STATUS[int(row[3])]))
    return res


# -- small-cycle return map ---------------------------------------------------

def _small_section(params):
    return EventSpec("custom_section", "down_up", True, (0.0, 0.0), (0.0, 1.0),
                     (-math.inf, params.a + 1.0, -math.inf, math.inf), "section")


def small_return(x0, params: Params, ctrl: IntegratorCtrl = None):
    """Next upward crossing of y = 0 left of E_r, starting from (x0, 0).

    The value may be <= 0 when the orbit has crossed the switching line;
    None when the orbit never comes back (trapped at E_r or t_max).
    """
    tr = flow(PhasePoint(x0, 0.0), params, [_small_section(params)],
              ctrl or DEFAULT_CTRL, store="none")
    ev = tr.terminal_event()
    return None if ev is None else ev.point.x


# -- root scanning ------------------------------------------------------------

def _sgn(v):
    return int(v > 0) - int(v < 0)


def _root(f, lo, hi, flo, fhi, xtol):
    # shrink until both ends are finite, then Brent
    it = 0
    while not (math.isfinite(flo) and math.isfinite(fhi)) and hi - lo > xtol and it < 200:
        m = 0.5 * (lo + hi)
        fm = f(m)
        if fm == 0:
            return m
        if _sgn(fm) == _sgn(flo):
            lo, flo = m, fm
        else:
            hi, fhi = m, fm
        it += 1
    if not (math.isfinite(flo) and math.isfinite(fhi)):
        if math.isnan(flo) or math.isnan(fhi):
            return None
        return 0.5 * (lo + hi)  # d drops to -inf inside an xtol-wide bracket
    return brentq(f, lo, hi, xtol=xtol, rtol=1e-13, maxiter=200)


def _scan(f, xs, vs, double_tol, xtol):
    """Roots of a sampled scalar function with multiplicity 1 or 2.

    Local extrema of the samples are refined; an extremum whose value is
    within double_tol of zero is a double root, one that overshoots zero
    splits its neighbourhood into two simple roots.
    """
    xs = list(map(float, xs))
    vs = list(map(float, vs))
    ext = []
    for i in range(1, len(xs) - 1):
        a, b, c = vs[i - 1], vs[i], vs[i + 1]
        if not all(map(math.isfinite, (a, b, c))):
            continue
        if b >= a and b >= c and (b > a or b > c):
            sign = -1.0  # maximum
        elif b <= a and b <= c and (b < a or b < c):
            sign = 1.0
        else:
            continue
        r = minimize_scalar(lambda x: sign * f(x), bounds=(xs[i - 1], xs[i + 1]),
                            method="bounded", options={"xatol": max(xtol, 1e-12)})
        xe, ve = float(r.x), sign * float(r.fun)
        if sign * ve > sign * b:  # no better than the sample itself
            xe, ve = xs[i], b
        ext.append((xe, ve))
    doubles = []
    for xe, ve in ext:
        if abs(ve) < double_tol:
            doubles.append(xe)
            ve = 0.0
        xs.append(xe)
        vs.append(ve)
    order = np.argsort(xs, kind="stable")
    xs = [xs[i] for i in order]
    vs = [vs[i] for i in order]
    roots = []
    for i in range(len(xs)):
        if vs[i] == 0.0:
            mult = 2 if any(abs(xs[i] - x) <= 1e-15 for x in doubles) else 1
            roots.append((xs[i], mult))
    for i in range(len(xs) - 1):
        v0, v1 = vs[i], vs[i + 1]
        if v0 == 0.0 or v1 == 0.0 or _sgn(v0) == _sgn(v1) or xs[i] == xs[i + 1]:
            continue
        if math.isnan(v0) or math.isnan(v1):
            continue
        r = _root(f, xs[i], xs[i + 1], v0, v1, xtol)
        if r is not None:
            roots.append((r, 1))
    roots.sort()
    for (r0, _), (r1, _) in zip(roots, roots[1:]):
        if r1 - r0 <= xtol:
            raise ScanInsufficient(f"roots collide near {r0:.17g}; refine the grid")
    return roots


def _bisect_edge(f, good, bad, rel=1e-10):
    # shrink [good, bad] onto the edge of the region where f is finite
    for _ in range(80):
        if abs(good - bad) <= rel * max(abs(good), abs(bad), 1e-300):
            break
        m = 0.5 * (good + bad)
        if math.isfinite(f(m)):
            good = m
        else:
            bad = m
    return good, bad


def band_samples(params, ctrl=None, scan=None):
    """Sample d(c) over the band of c where both shots return.

    Returns (f, grid, values, edges): f evaluates d at one c, grid/values
    cover the band with clustering at both ends, and edges are the nearest
    sampled points outside it (where d is -inf or nan).
    """
    ctrl = ctrl or DEFAULT_CTRL
    scan = scan or DEFAULT_SCAN
    span = scan.span(params)
    fvec = lambda cs: displacement_values(cs, params, ctrl)
    f = lambda c: float(fvec([min(c, 0.0)])[0])
    coarse = np.unique(np.concatenate([
        np.linspace(-span, 0.0, 80), -span * np.geomspace(1e-12, 1e-2, 40)]))
    vals = fvec(coarse)
    fin = np.isfinite(vals)
    if not fin.any():
        return f, np.empty(0), np.empty(0), []
    i0 = int(np.argmax(fin))
    i1 = len(fin) - 1 - int(np.argmax(fin[::-1]))
    edges = []
    if i0 == 0:
        lo = coarse[0]
    else:
        lo, bad = _bisect_edge(f, coarse[i0], coarse[i0 - 1])
        edges.append(bad)
    if i1 == len(fin) - 1:
        hi = coarse[-1]
    else:
        hi, bad = _bisect_edge(f, coarse[i1], coarse[i1 + 1])
        edges.append(bad)
    w = hi - lo
    n = max(scan.n_grid, 40)
    if w > 0:
        grid = np.concatenate([
            np.linspace(lo, hi, n - 2 * (n // 5)),
            lo + w * np.geomspace(1e-9, 2e-2, n // 5),
            hi - w * np.geomspace(1e-10, 2e-2, n // 5),
        ])
        grid = np.unique(np.clip(grid, lo, hi))
    else:
        grid = np.array([lo])
    return f, grid, fvec(grid), edges


def displacement_extrema(params, ctrl=None, scan=None):
    """Interior local extrema of d(c) as (c, d, "max" | "min"), left to right."""
    f, xs, vs, _ = band_samples(params, ctrl, scan)
    out = []
    for i in range(1, len(xs) - 1):
        a, b, c = vs[i - 1], vs[i], vs[i + 1]
        if not (math.isfinite(a) and math.isfinite(b) and math.isfinite(c)):
            continue
        if b >= a and b >= c and (b > a or b > c):
            sign = -1.0
        elif b <= a and b <= c and (b < a or b < c):
            sign = 1.0
        else:
            continue
        r = minimize_scalar(lambda x: sign * f(x), bounds=(xs[i - 1], xs[i + 1]),
                            method="bounded", options={"xatol": 1e-12})
        xe, ve = float(r.x), sign * float(r.fun)
        if sign * ve > sign * b:
            xe, ve = float(xs[i]), float(b)
        out.append((xe, ve, "max" if sign < 0 else "min"))
    return out


def _crossing_roots(params, ctrl, scan):
    f, grid, gv, edges = band_samples(params, ctrl, scan)
    if len(grid) == 0:
        return [], None
    d0 = float(gv[-1]) if grid[-1] == 0.0 else None
    if d0 is not None and abs(d0) <= scan.graze_tol:
        gv[-1] = 0.0
    if edges:
        grid = np.concatenate([grid, edges])
        gv = np.concatenate([gv, displacement_values(edges, params, ctrl)])
        order = np.argsort(grid)
        grid, gv = grid[order], gv[order]
    xtol = 1e-14
    roots = _scan(f, grid, gv, scan.double_tol, xtol) if len(grid) > 2 else []
    return roots, d0


def _small_roots(params, ctrl, scan):
    xe = params.a + 1.0
    n = scan.small_grid
    u = np.concatenate([np.geomspace(1e-7, 0.5, n // 2), 1.0 - np.geomspace(1e-10, 0.5, n - n // 2)])
    x0s = np.unique(xe * (1.0 - u))
    x0s = x0s[(x0s > 0) & (x0s < xe)]

    def s(x0):
        r = small_return(x0, params, ctrl)
        return -math.inf if r is None else r - x0

    vals = np.array([s(x) for x in x0s])
    out = []
    for i in range(len(x0s) - 1):
        v0, v1 = vals[i], vals[i + 1]
        if math.isfinite(v0) and math.isfinite(v1) and _sgn(v0) * _sgn(v1) < 0:
            out.append(brentq(s, x0s[i], x0s[i + 1], xtol=1e-14, rtol=1e-13))
        elif v0 == 0.0:
            out.append(x0s[i])
    return out


# -- cycle records ------------------------------------------------------------

def _orbit_record(kind, start, stop, params, ctrl):
    tr = flow(start, params, [stop, positive_x_axis(terminal=False)], ctrl)
    if tr.outcome != "hit_terminal":
        return None
    right = [e.point.x for e in tr.events_of("positive_x_axis")]
    pts = tr.points(LIENARD)
    rec = CycleRecord(kind, None, right[0] if right else float(np.max(pts[:, 0])),
                      float(tr.t[-1]), float(tr.q[-1]), None, pts,
                      float(np.min(pts[:, 0])))
    return rec


def crossing_cycle(c, params, ctrl=None):
    ctrl = ctrl or DEFAULT_CTRL
    if c >= 0:
        stop = EventSpec("custom_section", "down_up", True, (0.0, 0.0), (0.0, 1.0),
                         (-1.0, params.a + 1.0, -math.inf, math.inf), "return")
        rec = _orbit_record("grazing", PhasePoint(0.0, 0.0), stop, params, ctrl)
        if rec is not None:
            rec.c_left = 0.0
        return rec
    rec = _orbit_record("crossing", PhasePoint(c, 0.0), negative_x_axis(), params, ctrl)
    if rec is not None:
        rec.c_left = float(c)
    return rec


def small_cycle(x0, params, ctrl=None):
    rec = _orbit_record("small", PhasePoint(x0, 0.0), _small_section(params),
                        params, ctrl or DEFAULT_CTRL)
    if rec is not None:
        rec.x_left = float(x0)
    return rec


def classify_cycle(cycle: CycleRecord, params: Params, ctrl: IntegratorCtrl = None,
                   scan: ScanCtrl = DEFAULT_SCAN) -> CycleRecord:
    """Stability from the divergence integral, or one-sided slopes if it is ~0."""
    ctrl = ctrl or DEFAULT_CTRL
    tol = scan.stab_rel * cycle.period
    div = cycle.div_integral
    if div < -tol:
        st = "stable"
    elif div > tol:
        st = "unstable"
    else:
        off = scan.semi_offset
        if cycle.kind == "small":
            x0 = cycle.x_left
            vals = []
            for x in (x0 + off, x0 - off):  # inside, outside
                r = small_return(x, params, ctrl)
                vals.append(-math.inf if r is None else r - x)
            inside, outside = vals
            # inward drift from inside means the cycle repels inward
            inside = -inside
        else:
            c = cycle.c_left
            inside = displacement(min(c + off, 0.0), params, ctrl)
            outside = displacement(c - off, params, ctrl)
        if inside <= 0 and outside <= 0:
            st = "semi_stable_ext_stable"
        elif inside >= 0 and outside >= 0:
            st = "semi_stable_ext_unstable"
        else:
            st = "stable" if inside > 0 else "unstable"
    return replace(cycle, stability=st)


def find_cycles(params: Params, ctrl: IntegratorCtrl = None,
                scan: ScanCtrl = DEFAULT_SCAN):
    """All limit cycles, innermost first."""
    ctrl = ctrl or DEFAULT_CTRL
    roots, d0 = _crossing_roots(params, ctrl, scan)
    cycles = []
    grazing = d0 is not None and abs(d0) <= scan.graze_tol
    if grazing:
        rec = crossing_cycle(0.0, params, ctrl)
        if rec is not None:
            cycles.append(rec)
        else:
            grazing = False
    if not grazing:
        for x0 in _small_roots(params, ctrl, scan):
            rec = small_cycle(x0, params, ctrl)
            if rec is None:
                continue
            if rec.x_min < scan.graze_tol:
                continue  # the grazing loop seen from the small side
            cycles.append(rec)
    for c, _mult in sorted(roots, key=lambda r: -r[0]):
        if c > -scan.graze_tol:
            continue
        rec = crossing_cycle(c, params, ctrl)
        if rec is not None:
            cycles.append(rec)
    return [classify_cycle(r, params, ctrl, scan) for r in cycles]


def _inside(px, py, pts):
    # even-odd ray cast
    x, y = pts[:, 0], pts[:, 1]
    x2, y2 = np.roll(x, -1), np.roll(y, -1)
    cross = (y > py) != (y2 > py)
    with np.errstate(divide="ignore", invalid="ignore"):
        xi = x + (py - y) * (x2 - x) / (y2 - y)
    return bool(np.count_nonzero(cross & (xi > px)) % 2)


def verify_surround(cycle: CycleRecord, params: Params) -> bool:
    """Does the crossing cycle enclose (sqrt(-3b), 0)?

    F vanishes at sqrt(-3b), so the point is the same in both charts.
    """
    if cycle.kind != "crossing":
        raise DomainError("verify_surround needs a crossing cycle")
    if params.b >= -(params.a + 1.0) ** 2:
        raise DomainError("verify_surround needs b < -(a+1)^2")
    return _inside(math.sqrt(-3.0 * params.b), 0.0, cycle.points)


def count_by_kind(cycles):
    out = {"crossing": 0, "small": 0, "grazing": 0}
    for c in cycles:
        out[c.kind] += 1
    return out
