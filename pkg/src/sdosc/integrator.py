"""Event-located integration of the piecewise-smooth flow.

Steps never straddle the switching line x = 0: a step that would cross it is
cut at the crossing (located on the dense output) and integration restarts
there with the other one-sided vector field.  Backward time is handled by
negating the vector field, so a backward trajectory is parameterised by the
reversed time tau = -t >= 0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels as K
from .errors import BracketError, NonFiniteError, StepSizeUnderflow
from .model import LIENARD, SD, Params, PhasePoint, escape_radius

GRAZE_TOL = 1e-9

OUTCOMES = {
    K.HIT: "hit_terminal",
    K.TMAX: "t_max_reached",
    K.ESCAPED: "escaped",
    K.TRAPPED: "equilibrium_trapped",
}

_DIRS = {"up_down": -1, "down_up": 1, "any": 0}
_INF = math.inf


@dataclass(frozen=True)
class EventSpec:
    """A section to watch.

    ``direction`` refers to the sign change of the section function in
    physical (forward) time: for the x-axis sections the function is y, for
    the switching line it is x, for a custom section it is normal.(p - point).
    """
    kind: str
    direction: str = "any"
    terminal: bool = True
    point: tuple = (0.0, 0.0)
    normal: tuple = (0.0, 1.0)
    box: tuple = (-_INF, _INF, -_INF, _INF)
    name: str = ""

    def __post_init__(self):
        if self.kind not in ("switching_line", "positive_x_axis",
                             "negative_x_axis", "custom_section"):
            raise ValueError(f"unknown event kind {self.kind!r}")
        if self.direction not in _DIRS:
            raise ValueError(f"unknown direction {self.direction!r}")

    @property
    def label(self):
        return self.name or self.kind

    def line(self):
        """(normal, point, box) of the section in the Lienard chart."""
        if self.kind == "positive_x_axis":
            return (0.0, 1.0), (0.0, 0.0), (0.0, _INF, -_INF, _INF)
        if self.kind == "negative_x_axis":
            return (0.0, 1.0), (0.0, 0.0), (-_INF, 0.0, -_INF, _INF)
        if self.kind == "switching_line":
            return (1.0, 0.0), (0.0, 0.0), (-_INF, _INF, -_INF, _INF)
        return tuple(self.normal), tuple(self.point), tuple(self.box)

    def value(self, p: PhasePoint):
        (nx, ny), (px, py), _ = self.line()
        return nx * (p.x - px) + ny * (p.y - py)


def positive_x_axis(terminal=True):
    """y = 0, x > 0, crossed from y > 0 to y < 0 (the only way across for x > a+1)."""
    return EventSpec("positive_x_axis", "up_down", terminal)


def negative_x_axis(terminal=True):
    return EventSpec("negative_x_axis", "down_up", terminal)


@dataclass(frozen=True)
class IntegratorCtrl:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    event_time_tol: float = 1e-12
    max_step: float = 0.1
    t_max: float = 1000.0
    escape_radius: float | None = None  # None: 1e3*(a+1+sqrt(max(1,-b)))

    def __post_init__(self):
        for k in ("rel_tol", "abs_tol", "event_time_tol", "max_step", "t_max"):
            v = getattr(self, k)
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"{k} must be positive, got {v}")
        if self.escape_radius is not None and not self.escape_radius > 0:
            raise ValueError("escape_radius must be positive")

    def radius(self, params: Params):
        return self.escape_radius or escape_radius(params)

    def with_(self, **kw):
        return replace(self, **kw)


DEFAULT_CTRL = IntegratorCtrl()


@dataclass(frozen=True)
class Event:
    t: float
    point: PhasePoint
    kind: str  # event label, "switch" or "graze"
    q: float = 0.0


@dataclass
class Trajectory:
    """Samples in the Lienard chart plus located events.

    ``q`` is the running integral of -f(x) (the divergence) in physical time.
    ``side`` is the branch of sgn(x) in force after each sample.
    """
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    q: np.ndarray
    side: np.ndarray
    events: list
    outcome: str
    params: Params
    direction: str = "forward"
    dense: np.ndarray | None = field(default=None, repr=False)

    @property
    def end(self):
        return PhasePoint(float(self.x[-1]), float(self.y[-1]), LIENARD)

    def terminal_event(self):
        if self.outcome != "hit_terminal" or not self.events:
            return None
        return self.events[-1]

    def events_of(self, kind):
        return [e for e in self.events if e.kind == kind]

    def points(self, chart=LIENARD):
        """(n, 2) array of sample points in the requested chart."""
        y = self.y
        if chart == SD:
            p = self.params
            y = y + p.delta * (self.x**3 / 3.0 + p.b * self.x)
        return np.column_stack([self.x, y])

    def segments(self):
        """Dense-output segments as (t0, h, theta_end, z0, Q) tuples."""
        if self.dense is None:
            return []
        out = []
        for row in self.dense:
            out.append((row[0], row[1], row[2], row[3:6], row[6:].reshape(3, 4)))
        return out

    def interpolate(self, t):
        """State (x, y) at integration time t from the dense output."""
        if self.dense is None:
            raise ValueError("trajectory was integrated without dense output")
        d = self.dense
        i = int(np.searchsorted(d[:, 0], t, side="right")) - 1
        i = min(max(i, 0), len(d) - 1)
        t0, h, _, z0, Q = self.segments()[i]
        th = (t - t0) / h
        return tuple(K.poly_eval(z0[c], Q[c, 0], Q[c, 1], Q[c, 2], Q[c, 3], th)
                     for c in range(2))


def _event_arrays(stop):
    lines = [e for e in stop if e.kind != "switching_line"]
    sw = [e for e in stop if e.kind == "switching_line"]
    m = len(lines)
    ev_n = np.zeros((m, 2))
    ev_p = np.zeros((m, 2))
    ev_box = np.zeros((m, 4))
    ev_dir = np.zeros(m, dtype=np.int64)
    ev_term = np.zeros(m, dtype=np.bool_)
    for k, e in enumerate(lines):
        n, p, box = e.line()
        if n[0] == 0 and n[1] == 0:
            raise ValueError("section normal must be nonzero")
        ev_n[k] = n
        ev_p[k] = p
        ev_box[k] = box
        ev_dir[k] = _DIRS[e.direction]
        ev_term[k] = e.terminal
    sw_code, sw_dir, sw_term = -1, 0, False
    if sw:
        sw_code, sw_dir, sw_term = m, _DIRS[sw[0].direction], sw[0].terminal
    return lines + sw[:1], (ev_n, ev_p, ev_box, ev_dir, ev_term, sw_code,
                            sw_dir, sw_term)


def flow(start: PhasePoint, params: Params, stop=(), ctrl: IntegratorCtrl = None,
         time_direction="forward", store="steps", side=0) -> Trajectory:
    """Integrate from ``start`` until a terminal event, t_max, escape or trap.

    store: "none" (end point only), "steps" (every accepted step) or "dense"
    (steps plus the dense-output polynomials).
    """
    ctrl = ctrl or DEFAULT_CTRL
    if not (math.isfinite(start.x) and math.isfinite(start.y)):
        raise NonFiniteError("start point is not finite")
    if time_direction not in ("forward", "backward"):
        raise ValueError("time_direction must be 'forward' or 'backward'")
    p = start.to(LIENARD, params)
    labels, arrs = _event_arrays(list(stop))
    dirn = 1.0 if time_direction == "forward" else -1.0
    mode = {"none": 0, "steps": 1, "dense": 2}[store]
    res = K.integrate(p.x, p.y, side, dirn, params.a, params.b, params.delta,
                      ctrl.rel_tol, ctrl.abs_tol, ctrl.event_time_tol,
                      ctrl.max_step, ctrl.t_max, ctrl.radius(params), *arrs,
                      mode, GRAZE_TOL)
    status, t_end, z, s_end, samp, ns, evs, ne, dense, nd = res
    if status == K.UNDERFLOW:
        raise StepSizeUnderflow(f"step size underflow at t={t_end:g}")
    if status == K.NONFINITE:
        raise NonFiniteError(f"state became non-finite near t={t_end:g}")
    if ns:
        samp = samp[:ns]
    else:
        samp = np.array([[0.0, p.x, p.y, 0.0, s_end], [t_end, z[0], z[1], z[2], s_end]])
    events = []
    for row in evs[:ne]:
        code = int(row[4])
        kind = "switch" if code == K.EV_SWITCH else "graze" if code == K.EV_GRAZE \
            else labels[code].label
        events.append(Event(float(row[0]), PhasePoint(float(row[1]), float(row[2]), LIENARD),
                            kind, float(row[3])))
    return Trajectory(samp[:, 0].copy(), samp[:, 1].copy(), samp[:, 2].copy(),
                      samp[:, 3].copy(), samp[:, 4].copy(), events,
                      OUTCOMES[status], params, time_direction,
                      dense[:nd].copy() if mode == 2 else None)


def locate_event(t_lo, p_lo: PhasePoint, t_hi, p_hi: PhasePoint, event: EventSpec,
                 params: Params, ctrl: IntegratorCtrl = None):
    """Locate the crossing of ``event`` between two states on one orbit.

    The bracket is checked by the sign of the section function; the crossing
    itself is found on the dense output of a re-integration from p_lo.
    """
    ctrl = ctrl or DEFAULT_CTRL
    p_lo = p_lo.to(LIENARD, params)
    p_hi = p_hi.to(LIENARD, params)
    v_lo, v_hi = event.value(p_lo), event.value(p_hi)
    if v_lo * v_hi > 0 or (v_lo == 0 and v_hi == 0):
        raise BracketError("event function has no sign change on the bracket")
    if v_lo == 0:
        return t_lo, p_lo
    span = t_hi - t_lo
    direction = "forward" if span >= 0 else "backward"
    ev = replace(event, terminal=True, direction="any")
    tr = flow(p_lo, params, [ev], ctrl.with_(t_max=abs(span) * (1 + 1e-9) + 1e-12),
              direction, store="none")
    hit = tr.terminal_event()
    if hit is None:
        raise BracketError("no crossing found between the bracketing states")
    tt = t_lo + (hit.t if span >= 0 else -hit.t)
    return tt, hit.point
