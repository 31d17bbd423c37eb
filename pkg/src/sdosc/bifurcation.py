"""Bifurcation curves of the oscillator at fixed delta, found by shooting.

Four curves split the (a, b) plane for a given delta:

* Hopf, b = -(a+1)^2 (closed form);
* grazing, b = phi1(a): the orbit leaving the origin comes back to it;
* dl1, b = rho1(a): the outer pair of crossing cycles is born in a fold,
  where a local maximum ("hump") of the displacement d(c) touches zero;
* dl2, b = rho2(a): the inner pair dies in a fold, where the local minimum
  ("dip") that follows the hump touches zero.

d(c) decreases strictly in b for every c, so each defining function is
monotone in b and a bracketing root finder applies.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import BracketError, DomainError, OutOfCoverage, RootNotBracketed
from .integrator import DEFAULT_CTRL, EventSpec, IntegratorCtrl, flow
from .melnikov import CurveSample
from .model import Params, PhasePoint, make_params
from .poincare import ScanCtrl, displacement_extrema

FOLD_SCAN = ScanCtrl(n_grid=160)
B_XTOL = 1e-12
GRAZE_RES_TOL = 1e-6
SNAP = 1e-6


def hopf_b(a):
    if not a > 1.0:
        raise DomainError(f"a must exceed 1, got {a}")
    return -(a + 1.0) ** 2


# -- grazing -------------------------------------------------------------------

def origin_return(params: Params, ctrl: IntegratorCtrl = None):
    """Abscissa of the first upward crossing of y = 0 left of E_r by the orbit
    leaving the origin.  It is 0 on the grazing loop, negative when the orbit
    has crossed the switching line (b below phi1) and positive otherwise.
    """
    sec = EventSpec("custom_section", "down_up", True, (0.0, 0.0), (0.0, 1.0),
                    (-math.inf, params.a + 1.0, -math.inf, math.inf), "return")
    tr = flow(PhasePoint(0.0, 0.0), params, [sec], ctrl or DEFAULT_CTRL,
              store="none", side=1)
    ev = tr.terminal_event()
    if ev is None:
        raise BracketError(f"orbit from the origin did not return ({tr.outcome})")
    return ev.point.x


def grazing_b(a, delta, ctrl=None, xtol=B_XTOL):
    """phi1(a, delta), bracketed by -4(a+1)^2/3 and -(a+1)^2.

    The root is taken on the forward return of the origin orbit rather than
    on d(0): the backward shot is exponentially sensitive to b for large a,
    the forward one is not.  Both vanish together.
    """
    lo, hi = -4.0 * (a + 1.0) ** 2 / 3.0, -(a + 1.0) ** 2
    g = lambda b: origin_return(make_params(a, b, delta), ctrl)
    glo, ghi = g(lo), g(hi)
    if glo * ghi > 0:
        raise BracketError(f"no grazing loop between b={lo:g} and b={hi:g} at a={a:g}")
    return brentq(g, lo, hi, xtol=xtol, rtol=1e-15, maxiter=200)


def trace_grazing(a_grid, delta, tol=B_XTOL, ctrl=None, res_tol=GRAZE_RES_TOL):
    """phi1 on a grid of a.

    The residual is how far the origin orbit returns from the origin at the
    located b.  |d(0)| would need the backward shot, which loses all accuracy
    for large a.
    """
    out = []
    for a in a_grid:
        a = float(a)
        try:
            b = grazing_b(a, delta, ctrl, xtol=tol)
        except BracketError:
            out.append(CurveSample(a, math.nan, delta, "grazing", math.nan, False))
            continue
        res = abs(origin_return(make_params(a, b, delta), ctrl))
        out.append(CurveSample(a, b, delta, "grazing", res, bool(res <= res_tol)))
    return out


# -- folds of crossing cycles ----------------------------------------------------

def fold_pair(params: Params, ctrl=None, scan=FOLD_SCAN, ref_c=None):
    """The hump and the dip right after it, as (c_max, d_max, c_min, d_min).

    With several candidate pairs the one nearest ref_c (or the leftmost)
    is returned; None when d(c) has no such pair.
    """
    ext = displacement_extrema(params, ctrl, scan)
    pairs = [(e0[0], e0[1], e1[0], e1[1]) for e0, e1 in zip(ext, ext[1:])
             if e0[2] == "max" and e1[2] == "min"]
    if not pairs:
        return None
    if ref_c is None:
        return pairs[0]
    return min(pairs, key=lambda p: abs(0.5 * (p[0] + p[2]) - ref_c))


class _Fold:
    """b -> hump or dip value at fixed (a, delta), remembering the pair position."""

    def __init__(self, kind, a, delta, ctrl, scan, ref_c):
        self.k = 1 if kind == "dl1" else 3
        self.a, self.delta, self.ctrl, self.scan = a, delta, ctrl, scan
        self.ref_c = ref_c

    def __call__(self, b):
        p = fold_pair(make_params(self.a, b, self.delta), self.ctrl, self.scan, self.ref_c)
        if p is None:
            return None
        self.ref_c = 0.5 * (p[0] + p[2])
        return p[self.k]


def fold_b(kind, a, delta, b_start=None, ctrl=None, scan=FOLD_SCAN, ref_c=None,
           xtol=B_XTOL, max_width=None):
    """rho1 (kind "dl1") or rho2 (kind "dl2") at one a.

    Starts at b_start (default phi1), finds a b with a hump/dip pair, then
    walks in the direction that moves the extremal value towards zero with
    doubling steps until it changes sign.  Returns (b, |value|, c_mid).
    """
    if kind not in ("dl1", "dl2"):
        raise ValueError(f"unknown fold {kind!r}")
    scale = (a + 1.0) ** 2
    if b_start is None:
        b_start = grazing_b(a, delta, ctrl)
    max_width = max_width or 0.1 * scale
    fn = _Fold(kind, a, delta, ctrl, scan, ref_c)
    b0, v0 = b_start, fn(b_start)
    if v0 is None:
        # look for the pair on both sides of the start
        for w in 0.25 * scale * 1e-3 * 2.0 ** np.arange(0, 9):
            if w > max_width:
                break
            for bb in (b_start - w, b_start + w):
                v = fn(bb)
                if v is not None:
                    b0, v0 = bb, v
                    break
            if v0 is not None:
                break
    if v0 is None:
        raise RootNotBracketed(f"no hump/dip pair near b={b_start:g} at a={a:g}")
    if v0 == 0.0:
        return b0, 0.0, fn.ref_c
    step = 1e-3 * scale * (1.0 if v0 > 0 else -1.0)  # values fall as b grows
    b1 = b0
    while True:
        b1 = b1 + step
        v1 = fn(b1)
        if v1 is None:
            raise RootNotBracketed(f"{kind} pair vanished before changing sign at a={a:g}")
        if (v1 > 0) != (v0 > 0) or v1 == 0.0:
            break
        b0, v0 = b1, v1
        step *= 2.0
        if abs(b1 - b_start) > max_width:
            raise RootNotBracketed(f"{kind} value keeps its sign at a={a:g}")

    def g(b):
        v = fn(b)
        if v is None:
            raise RootNotBracketed(f"{kind} pair lost inside the bracket at a={a:g}")
        return v

    lo, hi = sorted((b0, b1))
    b = brentq(g, lo, hi, xtol=xtol, rtol=1e-15, maxiter=200)
    return b, abs(g(b)), fn.ref_c


def trace_double_cycle(kind, a_grid, delta, tol=B_XTOL, ctrl=None, scan=FOLD_SCAN,
                       res_tol=1e-7):
    """rho1 or rho2 on a grid of a, each point warm-started from the previous one."""
    out = []
    ref_c = None
    for a in a_grid:
        a = float(a)
        try:
            b, res, ref_c = fold_b(kind, a, delta, None, ctrl, scan, ref_c, xtol=tol)
            out.append(CurveSample(a, b, delta, kind, res, bool(res <= res_tol)))
        except (RootNotBracketed, BracketError):
            out.append(CurveSample(a, math.nan, delta, kind, math.nan, False))
    return out


def window_exists(a, delta, ctrl=None, scan=FOLD_SCAN):
    """True when rho2 < rho1 at this a, i.e. three crossing cycles coexist for some b."""
    try:
        b1, _, ref = fold_b("dl1", a, delta, None, ctrl, scan)
    except (RootNotBracketed, BracketError):
        return False
    p = fold_pair(make_params(a, b1, delta), ctrl, scan, ref)
    return p is not None and p[3] < 0.0


def estimate_a0(delta, tol=1e-3, a_lo=1.05, a_hi=5.0, ctrl=None, scan=FOLD_SCAN):
    """The a where the three-crossing-cycle window closes, by bisection.

    Returns (a0, bracket history).  If the window is open at a_hi or closed at
    a_lo the corresponding end is returned and the history has one entry.
    """
    ok_lo = window_exists(a_lo, delta, ctrl, scan)
    ok_hi = window_exists(a_hi, delta, ctrl, scan)
    hist = [(a_lo, a_hi)]
    if not ok_lo:
        return a_lo, hist
    if ok_hi:
        return a_hi, hist
    while a_hi - a_lo > tol:
        m = 0.5 * (a_lo + a_hi)
        if window_exists(m, delta, ctrl, scan):
            a_lo = m
        else:
            a_hi = m
        hist.append((a_lo, a_hi))
    return 0.5 * (a_lo + a_hi), hist


# -- slices and classification ----------------------------------------------------

@dataclass
class DiagramSlice:
    delta: float
    a_grid: np.ndarray
    hopf: list
    grazing: list
    dl1: list
    dl2: list
    a0_estimate: float
    P: list = field(default_factory=list)  # (a, b) where phi1 = rho1
    Q: list = field(default_factory=list)  # (a, b) where rho1 = rho2

    def curves(self):
        return {"hopf": self.hopf, "grazing": self.grazing, "dl1": self.dl1, "dl2": self.dl2}

    def curve_at(self, kind, a):
        """Piecewise-linear value of a curve at a; None outside its valid samples."""
        pts = [(s.a, s.b) for s in self.curves()[kind] if s.valid]
        if not pts:
            return None
        xs, ys = zip(*sorted(pts))
        if a < xs[0] - 1e-12 or a > xs[-1] + 1e-12:
            return None
        return float(np.interp(a, xs, ys))


def default_a_grid(n=60):
    return np.geomspace(1.02, 5.0, n)


def _crossings(xs, d, tol):
    # roots of a piecewise-linear curve difference, refined by bisection on the interpolant
    out = []
    for i in range(len(xs) - 1):
        d0, d1 = d[i], d[i + 1]
        if not (math.isfinite(d0) and math.isfinite(d1)) or d0 * d1 > 0 or d0 == d1:
            continue
        lo, hi = xs[i], xs[i + 1]
        f = lambda x: np.interp(x, [xs[i], xs[i + 1]], [d0, d1])
        while hi - lo > tol:
            m = 0.5 * (lo + hi)
            if (f(m) > 0) == (d0 > 0):
                lo = m
            else:
                hi = m
        out.append(0.5 * (lo + hi))
    return out


def diagram_slice(delta, a_grid=None, tol=B_XTOL, ctrl=None, a0_tol=1e-3):
    """All four curves at one delta, the a0 estimate, and the points P and Q."""
    a_grid = np.asarray(default_a_grid() if a_grid is None else a_grid, dtype=float)
    hopf = [CurveSample(float(a), hopf_b(a), delta, "hopf", 0.0, True) for a in a_grid]
    # curves are independent of each other; each runs in its own task
    with ThreadPoolExecutor(max_workers=2) as ex:
        g_job = ex.submit(trace_grazing, a_grid, delta, tol, ctrl)
        a0, _ = estimate_a0(delta, a0_tol, ctrl=ctrl)
        inside = a_grid[a_grid < a0]
        d_job = ex.submit(trace_double_cycle, "dl2", inside, delta, tol, ctrl)
        dl1 = trace_double_cycle("dl1", inside, delta, tol, ctrl)
        grazing, dl2 = g_job.result(), d_job.result()
    sl = DiagramSlice(delta, a_grid, hopf, grazing, dl1, dl2, a0)
    xs = [s.a for s in dl1]
    phi = np.array([sl.curve_at("grazing", x) or math.nan for x in xs], dtype=float)
    r1 = np.array([s.b if s.valid else math.nan for s in dl1])
    r2 = np.array([s.b if s.valid else math.nan for s in dl2])
    for x in _crossings(xs, phi - r1, 1e-6):
        sl.P.append((x, sl.curve_at("grazing", x)))
    for x in _crossings(xs, r1 - r2, 1e-6):
        sl.Q.append((x, sl.curve_at("dl1", x)))
    return sl


REGION_INVENTORY = {
    "I": {"small": 0, "crossing": 0},
    "II": {"small": 1, "crossing": 0},
    "III": {"small": 1, "crossing": 2},
    "IV": {"small": 0, "crossing": 3},
    "V": {"small": 0, "crossing": 1},
}


def classify_global(a, b, delta, slice_: DiagramSlice, snap=SNAP):
    """Region of (a, b) at the slice's delta.

    Open regions I-V; on a curve (within ``snap`` in b) the curve's label:
    H, G1/G2 (grazing below/above the dl1 curve), DL11/DL12 (dl1 below/above
    grazing), DL2, and P or Q where two curves meet.
    """
    if abs(delta - slice_.delta) > 1e-12 * max(1.0, delta):
        raise DomainError("slice was computed for a different delta")
    ag = slice_.a_grid
    if not (ag[0] - 1e-12 <= a <= ag[-1] + 1e-12):
        raise OutOfCoverage(f"a={a} outside the slice grid [{ag[0]}, {ag[-1]}]")
    h = hopf_b(a)
    phi = slice_.curve_at("grazing", a)
    if phi is None:
        raise OutOfCoverage(f"no grazing samples around a={a}")
    in_window = a < slice_.a0_estimate
    r1 = slice_.curve_at("dl1", a) if in_window else None
    r2 = slice_.curve_at("dl2", a) if in_window else None
    if r1 is None or r2 is None:
        in_window = False
    near = lambda c: c is not None and abs(b - c) <= snap
    on = [n for n, c in (("H", h), ("G", phi), ("DL1", r1), ("DL2", r2)) if near(c)]
    if "G" in on and "DL1" in on:
        return "P"
    if "DL1" in on and "DL2" in on:
        return "Q"
    if on:
        n = on[0]
        if n == "G":
            return "G1" if (in_window and phi < r1) else "G2"
        if n == "DL1":
            return "DL11" if phi > r1 else "DL12"
        return n
    if b > h:
        return "I"
    if not in_window:
        return "II" if b > phi else "V"
    if b > max(phi, r1):
        return "II"
    if phi < b < r1:
        return "III"
    if r2 < b < min(phi, r1):
        return "IV"
    return "V"


def local_slice(a, delta, tol=B_XTOL, ctrl=None):
    """A one-column slice at a, enough to classify points with this a.

    a0 is not estimated: a0_estimate is +inf when the three-cycle window is
    open at a and equal to a otherwise, so only the comparison a < a0 is
    meaningful.
    """
    grid = np.array([float(a)])
    hopf = [CurveSample(float(a), hopf_b(a), delta, "hopf", 0.0, True)]
    grazing = trace_grazing(grid, delta, tol, ctrl)
    dl1 = trace_double_cycle("dl1", grid, delta, tol, ctrl)
    dl2 = trace_double_cycle("dl2", grid, delta, tol, ctrl)
    open_ = dl1[0].valid and dl2[0].valid and dl2[0].b < dl1[0].b
    return DiagramSlice(delta, grid, hopf, grazing, dl1, dl2,
                        math.inf if open_ else float(a))
