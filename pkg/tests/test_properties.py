import math

from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from sdosc import melnikov as mk
from sdosc.model import LIENARD, SD, PhasePoint, lienard_data, make_params, vector_field
from sdosc.poincare import count_by_kind, find_cycles, verify_surround

A = st.floats(1.02, 8.0)
REL = st.floats(-3.0, 0.5)  # b in units of (a+1)^2
COORD = st.floats(-50, 50)
SLOW = settings(max_examples=12, deadline=None, suppress_health_check=[HealthCheck.too_slow])


@given(A, REL, st.floats(0.01, 2.0), COORD, COORD)
def test_chart_round_trip(a, r, d, x, y):
    p = make_params(a, r * (a + 1) ** 2, d)
    q = PhasePoint(x, y, SD).to(LIENARD, p).to(SD, p)
    assert q.x == x and math.isclose(q.y, y, rel_tol=1e-14, abs_tol=1e-14 * (1 + abs(lienard_data(x, p)["F"])))


@given(A, REL, st.floats(0.01, 2.0), COORD, COORD)
def test_pushforward(a, r, d, x, y):
    p = make_params(a, r * (a + 1) ** 2, d)
    dx_s, dy_s = vector_field(PhasePoint(x, y, SD), p)
    dx_l, dy_l = vector_field(PhasePoint(x, y, SD).to(LIENARD, p), p)
    f = lienard_data(x, p)["f"]
    scale = abs(dy_s) + abs(f * dx_s) + 1
    assert math.isclose(dx_l, dx_s, rel_tol=1e-12, abs_tol=1e-12 * (1 + abs(dx_s)))
    assert abs(dy_l - (dy_s - f * dx_s)) <= 1e-12 * scale


@given(st.floats(1e-4, 20.0), A, st.floats(-3.0, 0.0))
@settings(max_examples=60, deadline=None)
def test_closed_form_matches_quadrature(h, a, r):
    b = r * (a + 1) ** 2
    m = mk.melnikov(h, a, b)
    assert abs(m - mk.melnikov_oracle(h, a, b)) <= 1e-8 * (1 + abs(m))


@given(st.floats(1e-3, 20.0), A, st.floats(-3.0, 0.0), st.floats(0.01, 1.0))
def test_melnikov_derivative_in_b_is_negative(h, a, r, step):
    b = r * (a + 1) ** 2
    assert mk.melnikov_deriv(h, a, b - step) > mk.melnikov_deriv(h, a, b)


@given(st.floats(1.05, 6.0), st.floats(-2.9, -0.02))
@settings(max_examples=80, deadline=None)
def test_zero_count_matches_region(a, r):
    b = r * (a + 1) ** 2
    if b >= mk.b_hopf(a):
        return
    reg = mk.classify_region_D(a, b)
    z = mk.melnikov_zeros(a, b)
    if not reg["boundaries"]:
        assert z.total_with_multiplicity == reg["zeros"]


@given(st.floats(1.05, 4.0), st.floats(-1.5, 0.3), st.floats(0.02, 0.4))
@SLOW
def test_cycle_inventory_bounds(a, r, d):
    s = (a + 1) ** 2
    p = make_params(a, r * s, d)
    cyc = find_cycles(p)
    k = count_by_kind(cyc)
    assert len(cyc) <= 3 and k["small"] <= 1
    if r >= -1.0:
        assert cyc == []
    if r <= -4.0 / 3.0:
        assert k["small"] == 0
    for c in cyc:
        if c.kind == "crossing":
            assert verify_surround(c, p)
