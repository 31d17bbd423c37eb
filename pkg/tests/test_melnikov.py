import math

import numpy as np
import pytest

from sdosc import melnikov as mk
from sdosc.acceptance import oracle_battery
from sdosc.errors import DomainError
from sdosc.model import SD, PhasePoint, energy, make_params

PI = math.pi


def test_golden_value_of_M():
    want = (-505 - 219 * PI + 219 * math.atan(5 / 11) + 897 * math.atan(5)) / 150
    got = mk.melnikov(0.5, 1.2, -6.05)
    assert got == pytest.approx(want, rel=1e-13)
    assert abs(got - 0.882421) <= 1e-5


def test_golden_value_of_M1():
    want = (-30 * math.sqrt(10) - 82 * PI + 82 * math.atan(math.sqrt(2.5) / 6)
            + 338 * math.atan(math.sqrt(2.5))) / 25
    got = mk.melnikov_deriv(0.2, 1.4, -7.2, 1)
    assert got == pytest.approx(want, rel=1e-13)
    assert abs(got - 0.358647) <= 1e-5


@pytest.mark.parametrize("a", [1.01, 1.2, 2.0, 5.0, 40.0])
def test_limits_at_zero_energy(a):
    b = -1.1 * (a + 1) ** 2
    assert mk.melnikov(0.0, a, b) == pytest.approx(-0.25 * PI * (a + 1) ** 2 * (5 * a * a + 10 * a + 4 * b + 5), rel=1e-13)
    assert mk.melnikov_deriv(0.0, a, b, 1) == pytest.approx(-(3 + 6 * a + 3 * a * a + 2 * b) * PI, rel=1e-13)
    assert mk.melnikov(0.0, a, mk.b_m0(a)) == 0.0
    assert mk.melnikov_deriv(0.0, a, mk.b_m1(a), 1) == 0.0


@pytest.mark.parametrize("a", [1.2, 3.0])
def test_closed_form_is_continuous_at_small_h(a):
    b = -1.3 * (a + 1) ** 2
    m0 = mk.melnikov(0.0, a, b)
    assert mk.melnikov(1e-9, a, b) == pytest.approx(m0, rel=1e-3, abs=1e-3)


def test_oracle_battery():
    for h, a, b in oracle_battery():
        m = mk.melnikov(h, a, b)
        assert abs(m - mk.melnikov_oracle(h, a, b)) <= 1e-8 * (1 + abs(m))


def test_oval_geometry():
    # the unperturbed level set through (0, +-sqrt(2h)) and the right extreme
    for a, h in ((1.2, 0.5), (3.0, 2.0)):
        p = make_params(a, -1.0, 1.0)
        assert energy(PhasePoint(0.0, math.sqrt(2 * h), SD), p) == pytest.approx(h)
        xr = a + 1 + math.sqrt(2 * h + (a + 1) ** 2)
        assert energy(PhasePoint(xr, 0.0, SD), p) == pytest.approx(h)


def test_derivatives_match_finite_differences():
    a, b = 1.6, -9.0
    for h in (0.3, 1.0, 4.0):
        e = 1e-5
        for k in (1, 2, 3):
            lo = mk.melnikov(h - e, a, b) if k == 1 else mk.melnikov_deriv(h - e, a, b, k - 1)
            hi = mk.melnikov(h + e, a, b) if k == 1 else mk.melnikov_deriv(h + e, a, b, k - 1)
            assert mk.melnikov_deriv(h, a, b, k) == pytest.approx((hi - lo) / (2 * e), rel=1e-6, abs=1e-7)


def test_bad_order_and_domain():
    with pytest.raises(ValueError):
        mk.melnikov_deriv(0.5, 2.0, -9.0, 4)
    with pytest.raises(DomainError):
        mk.melnikov(0.5, 1.0, -9.0)
    with pytest.raises(DomainError):
        mk.melnikov(-0.1, 2.0, -9.0)
    with pytest.raises(DomainError):
        mk.melnikov_deriv(0.0, 2.0, -9.0, 2)


def test_second_derivative_negative_beyond_half_a2_minus_1():
    for a in np.linspace(1.05, 10, 15):
        for b in (-0.1, -(a + 1) ** 2, -3 * (a + 1) ** 2):
            assert mk.melnikov_deriv((a * a - 1) / 2, a, b, 2) < 0


def test_partials_signs_and_S1_at_zero():
    for a in (1.2, 2.0, 6.0):
        for h in (0.0, 0.4, 3.0):
            part = mk.melnikov_partials(h, a, -1.2 * (a + 1) ** 2)
            assert part["dM1_db"] < 0
            r = math.sqrt(2 * h)
            assert part["dM1_db"] == pytest.approx(
                -2 * (math.atan(r / (a - 1)) - math.atan(r / (a + 1)) + PI), rel=1e-14)
        assert mk.melnikov_partials(0.0, a, -9.0)["S1"] == pytest.approx(-PI ** 2 * (a + 1) ** 3, rel=1e-12)


def test_partials_match_finite_differences():
    rng = np.random.default_rng(5)
    for _ in range(30):
        a = rng.uniform(1.1, 5)
        b = rng.uniform(-2, -0.5) * (a + 1) ** 2
        h = rng.uniform(0.05, 5)
        part = mk.melnikov_partials(h, a, b)
        e = 1e-6
        fd = {
            "dM_db": (mk.melnikov(h, a, b + e) - mk.melnikov(h, a, b - e)) / (2 * e),
            "dM_da": (mk.melnikov(h, a + e, b) - mk.melnikov(h, a - e, b)) / (2 * e),
            "dM1_db": (mk.melnikov_deriv(h, a, b + e) - mk.melnikov_deriv(h, a, b - e)) / (2 * e),
            "dM1_da": (mk.melnikov_deriv(h, a + e, b) - mk.melnikov_deriv(h, a - e, b)) / (2 * e),
        }
        for k, v in fd.items():
            assert part[k] == pytest.approx(v, rel=1e-6, abs=1e-6), k


def test_shape_h2_range():
    rng = np.random.default_rng(2)
    for _ in range(40):
        a = rng.uniform(1.05, 8)
        b = rng.uniform(-1.5, -1.0) * (a + 1) ** 2
        sh = mk.melnikov_shape(a, b)
        assert 0 < sh.h2 < (a * a - 1) / 2
        if sh.h11 is not None and sh.h12 is not None:
            assert sh.h11 < sh.h2 < sh.h12
            for h in (sh.h11, sh.h12):
                if h > 0:
                    assert abs(mk.melnikov_deriv(h, a, b)) < 1e-8 * (a + 1) ** 2


def test_shape_between_lines_has_small_h2():
    for a in (1.1, 1.5, 3.0, 9.0):
        for t in (0.1, 0.5, 0.9):
            b = mk.b_m1(a) + t * (mk.b_m0(a) - mk.b_m1(a))
            assert mk.melnikov_shape(a, b).h2 < 0.8


def test_shape_on_the_minus_three_halves_line():
    a = 1.3
    sh = mk.melnikov_shape(a, mk.b_m1(a))
    assert sh.h11 == 0.0 and sh.h12 is not None and sh.h12 > sh.h2


def test_shape_without_interior_critical_points():
    sh = mk.melnikov_shape(3.0, -22.0)
    assert sh.M1_at_h2 < 0 and sh.h11 is None and sh.h12 is None


def test_single_zero_below_minus_three_halves():
    for a in (1.1, 1.5, 4.0):
        z = mk.melnikov_zeros(a, mk.b_m1(a) - 0.1)
        assert z.total_with_multiplicity == 1 and z.zeros[0][1] == 1
    assert mk.melnikov_zeros(1.5, -1.5 * 2.5 ** 2 - 0.1).total_with_multiplicity == 1


@pytest.mark.parametrize("a,b,label,n", [(3.0, -22.0, "D2", 1), (2.0, -9.05, "D1", 0)])
def test_region_examples(a, b, label, n):
    r = mk.classify_region_D(a, b)
    assert r["label"] == label and r["zeros"] == n
    assert mk.melnikov_zeros(a, b).total_with_multiplicity == n


def test_D4_has_three_simple_zeros():
    a = 1.3
    b = 0.5 * (mk.b2_curve(a) + min(mk.b_m0(a), mk.b3_curve(a)))
    z = mk.melnikov_zeros(a, b)
    assert [m for _, m in z.zeros] == [1, 1, 1]
    assert mk.classify_region_D(a, b)["label"] == "D4"


def test_region_needs_b_below_hopf():
    with pytest.raises(DomainError):
        mk.classify_region_D(2.0, -8.0)


def test_boundary_tags():
    a = 1.3
    assert "b2" in mk.classify_region_D(a, mk.b2_curve(a))["boundaries"]
    assert "-5/4" in mk.classify_region_D(a, mk.b_m0(a))["boundaries"]


def test_special_points():
    sp = mk.special_points()
    assert 1.4 < sp.a_star < 2
    assert abs(mk.melnikov_deriv(mk.h2_of(sp.a_star, mk.b_m0(sp.a_star)), sp.a_star, mk.b_m0(sp.a_star))) < 1e-8
    assert 1.2 < sp.a3 < sp.a_star
    assert sp.a_double_star > sp.a_star
    z = mk.melnikov_zeros(*sp.B)
    assert z.zeros[0][1] == 3
    assert sp.A == (sp.a_star, mk.b_m0(sp.a_star)) and sp.C == (sp.a3, mk.b_m0(sp.a3))


def test_special_points_frozen():
    sp = mk.special_points()
    assert sp.a_star == pytest.approx(1.428128157, abs=1e-8)
    assert sp.a_double_star == pytest.approx(1.437897334, abs=1e-8)
    assert sp.a3 == pytest.approx(1.362354031, abs=1e-8)


def test_curve_b1_inside_band_and_decreasing():
    grid = np.linspace(1.05, 6, 30)
    s = mk.trace_melnikov_curve("b1", grid)
    assert all(x.valid for x in s)
    for x in s:
        assert -1.5 * (x.a + 1) ** 2 < x.b < -(x.a + 1) ** 2
    assert np.all(np.diff([x.b for x in s]) < 0)


def test_curves_b2_b3_order_and_coverage():
    sp = mk.special_points()
    grid = np.linspace(1.05, 1.6, 23)
    s2 = mk.trace_melnikov_curve("b2", grid)
    s3 = mk.trace_melnikov_curve("b3", grid)
    s1 = mk.trace_melnikov_curve("b1", grid)
    for x1, x2, x3 in zip(s1, s2, s3):
        if x1.a < sp.a_double_star:
            assert x2.valid and x3.valid
            assert x2.b < x3.b < x1.b
        else:
            assert not x2.valid and not x3.valid


def test_frozen_curve_values():
    assert mk.b2_curve(1.25) == pytest.approx(-6.3316094, abs=1e-6)
    assert mk.b3_curve(1.25) == pytest.approx(-6.2971376, abs=1e-6)
    assert mk.b2_curve(1.3) == pytest.approx(-6.6179572, abs=1e-6)
    assert mk.b3_curve(1.3) == pytest.approx(-6.5960884, abs=1e-6)


def test_s1_sign_structure():
    assert mk.s1_sign_structure(12.0)["num_sign_changes_of_dS1"] == 0
    assert mk.s1_sign_structure(1.5)["num_sign_changes_of_dS1"] <= 1
    for a in (1.5, 3.0, 8.0):
        assert mk.s1_sign_structure(a)["max_S1"] < 0


def test_s1_bar_sign_matches_S1_slope():
    for a in (1.5, 3.0):
        for h in (0.1, 0.4, 0.7):
            e = 1e-6
            slope = (mk.melnikov_partials(h + e, a, 0.0)["S1"] - mk.melnikov_partials(h - e, a, 0.0)["S1"]) / (2 * e)
            assert np.sign(mk.s1_bar(h, a)) == np.sign(slope)
