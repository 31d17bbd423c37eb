import math

import numpy as np
import pytest

from sdosc import _kernels as K
from sdosc.acceptance import _energy_gap
from sdosc.errors import BracketError, NonFiniteError
from sdosc.integrator import (IntegratorCtrl, flow, locate_event, negative_x_axis,
                              positive_x_axis)
from sdosc.model import LIENARD, PhasePoint, make_params

P1 = make_params(4.0, -24.9, 0.1)


def test_start_at_equilibrium_is_trapped():
    assert flow(PhasePoint(5.0, 0.0), P1, []).outcome == "equilibrium_trapped"


def test_spiral_to_positive_axis():
    tr = flow(PhasePoint(-1.0, 0.0), P1, [positive_x_axis()], store="dense")
    assert tr.outcome == "hit_terminal"
    ev = tr.terminal_event()
    assert ev.point.y == 0.0
    assert 0.0 < ev.point.x < 5.0 + math.sqrt(24.9)
    assert _energy_gap(P1) < 1e-8


def test_samples_increase_and_are_finite():
    tr = flow(PhasePoint(-2.0, 1.0), make_params(1.2, -5.93, 0.1), [], IntegratorCtrl(t_max=60))
    assert np.all(np.diff(tr.t) > 0)
    assert np.all(np.isfinite(tr.x)) and np.all(np.isfinite(tr.y))


def test_sign_constant_inside_each_dense_segment():
    p = make_params(1.2, -5.93, 0.1)
    tr = flow(PhasePoint(-2.0, 1.0), p, [], IntegratorCtrl(t_max=60), store="dense")
    segs = tr.segments()
    assert len(segs) > 50
    th = np.linspace(0.05, 0.95, 10)
    for t0, h, th_end, z0, Q in segs:
        x = z0[0] + (th * th_end) * (Q[0, 0] + (th * th_end) * (Q[0, 1] + (th * th_end) * (Q[0, 2] + (th * th_end) * Q[0, 3])))
        s = np.sign(x[np.abs(x) > 1e-12])
        assert len(set(s.tolist())) <= 1


def test_switching_events_recorded():
    tr = flow(PhasePoint(-1.0, 0.0), P1, [positive_x_axis()])
    assert len(tr.events_of("switch")) >= 1
    for e in tr.events_of("switch"):
        assert e.point.x == 0.0


def test_orbits_from_far_away_stay_bounded():
    rng = np.random.default_rng(11)
    R = 10 * (5.0 + math.sqrt(24.9))
    for _ in range(20):
        th = rng.uniform(0, 2 * math.pi)
        tr = flow(PhasePoint(R * math.cos(th), R * math.sin(th)), P1, [],
                  IntegratorCtrl(t_max=400), store="none")
        assert tr.outcome != "escaped"


def test_reversibility():
    p = make_params(1.2, -5.93, 0.1)
    for y0 in (-0.3, -1.0, -2.5):
        start = PhasePoint(0.0, y0)
        fw = flow(start, p, [positive_x_axis()])
        ev = fw.terminal_event()
        back = flow(ev.point, p, [], IntegratorCtrl(t_max=ev.t), time_direction="backward")
        assert back.outcome == "t_max_reached"
        assert abs(back.end.x - start.x) < 1e-6 and abs(back.end.y - start.y) < 1e-6


def test_determinism():
    p = make_params(2.0, -10.0, 0.2)
    a = flow(PhasePoint(-1.0, 0.5), p, [negative_x_axis()])
    b = flow(PhasePoint(-1.0, 0.5), p, [negative_x_axis()])
    assert np.array_equal(a.x, b.x) and np.array_equal(a.t, b.t)
    assert a.events == b.events


def test_convergence_under_tolerance_halving():
    p = make_params(1.2, -5.93, 0.1)
    hits = []
    for tol in (1e-8, 5e-9, 1e-10):
        tr = flow(PhasePoint(0.0, -1.0), p, [positive_x_axis()], IntegratorCtrl(rel_tol=tol))
        hits.append(tr.terminal_event().point.x)
    assert abs(hits[0] - hits[1]) < 10 * 1e-8 * abs(hits[0])
    assert abs(hits[1] - hits[2]) < 10 * 5e-9 * abs(hits[1])


def test_backward_time_field_negation():
    p = make_params(1.5, -7.0, 0.1)
    tr = flow(PhasePoint(1.0, -1.0), p, [], IntegratorCtrl(t_max=0.5), time_direction="backward")
    assert tr.direction == "backward"
    fw = flow(tr.end, p, [], IntegratorCtrl(t_max=0.5))
    assert fw.end.x == pytest.approx(1.0, abs=1e-8) and fw.end.y == pytest.approx(-1.0, abs=1e-8)


def test_nonfinite_start_rejected():
    with pytest.raises(NonFiniteError):
        flow(PhasePoint(math.nan, 0.0), P1, [])


def test_bad_ctrl_rejected():
    with pytest.raises(ValueError):
        IntegratorCtrl(rel_tol=-1.0)


def test_locate_event_matches_recorded_hit():
    p = make_params(1.2, -5.93, 0.1)
    tr = flow(PhasePoint(0.0, -1.0), p, [positive_x_axis(terminal=False)], IntegratorCtrl(t_max=20))
    ev = tr.events_of("positive_x_axis")[0]
    i = int(np.searchsorted(tr.t, ev.t)) - 1
    lo = PhasePoint(float(tr.x[i]), float(tr.y[i]), LIENARD)
    hi = PhasePoint(float(tr.x[i + 1]), float(tr.y[i + 1]), LIENARD)
    t, q = locate_event(tr.t[i], lo, tr.t[i + 1], hi, positive_x_axis(), p)
    assert t == pytest.approx(ev.t, abs=1e-10)
    assert q.x == pytest.approx(ev.point.x, abs=1e-9) and q.y == 0.0


def test_locate_event_without_sign_change():
    p = make_params(1.2, -5.93, 0.1)
    with pytest.raises(BracketError):
        locate_event(0.0, PhasePoint(1.0, 0.5), 0.1, PhasePoint(1.05, 0.4), positive_x_axis(), p)


def test_linear_crossing_located_at_midpoint():
    # straight segment x(t) = -1 + 2t crossing 0 at t = 1/2
    r = K.poly_root(-1.0, 2.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1e-15)
    assert r == pytest.approx(0.5, abs=1e-12)


def test_planted_root_of_dense_polynomial():
    # (th - 0.3)(th^2 + 1)(th + 2) expanded
    r0 = 0.3
    c = np.polynomial.polynomial.polyfromroots([r0, -2.0, 1j, -1j]).real
    r = K.poly_root(*c, 0.0, 1.0, 1e-15)
    assert r == pytest.approx(r0, abs=1e-12)


def test_poly_root_needs_sign_change():
    assert math.isnan(K.poly_root(1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1e-15))
