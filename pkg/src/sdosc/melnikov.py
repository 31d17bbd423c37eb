"""First-order Melnikov function of the oscillator about its piecewise ovals.

The unperturbed system x' = y, y' = -x + sgn(x) + a has the period annulus
Gamma_h made of two circle arcs, H^-(x, y) = h on x < 0 and H^+(x, y) = h on
x > 0 with H^{-/+} = y^2/2 + x^2/2 - (a -/+ 1) x.  M(h) is the clockwise line
integral of (x^3/3 + b x) dy along Gamma_h.  Its zeros (for small delta)
predict crossing limit cycles.

Everything here is closed form except :func:`melnikov_oracle`, which
integrates the arcs numerically and serves as an independent check.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate, optimize

from .errors import DomainError, QuadratureFailure, RootNotBracketed

PI = math.pi
SQ2 = math.sqrt(2.0)

H_SMALL = 1e-12       # below this M and M' use their h -> 0 limits
MULT_TOL = 1e-8       # |M| at a critical point that counts as a double zero
H_TOL = 1e-10
B_TOL = 1e-8
A_TOL = 1e-8
MAX_ITER = 200


def h_cap(a):
    """Stand-in for h = +inf; M(h_cap) < 0 is checked before use."""
    return 100.0 * (a + 1.0) ** 2


def b_hopf(a):
    return -(a + 1.0) ** 2


def b_m0(a):
    """M(0) = 0 on this line."""
    return -1.25 * (a + 1.0) ** 2


def b_m1(a):
    """M'(0) = 0 on this line."""
    return -1.5 * (a + 1.0) ** 2


def _check(h, a):
    if not (math.isfinite(h) and math.isfinite(a)):
        raise DomainError("h and a must be finite")
    if a <= 1.0:
        raise DomainError(f"a must exceed 1, got {a}")
    if h < 0.0:
        raise DomainError(f"h must be nonnegative, got {h}")


def _atans(h, a):
    r = math.sqrt(2.0 * h)
    return r, math.atan(r / (a - 1.0)), math.atan(r / (a + 1.0))


def melnikov(h, a, b):
    """M(h) in closed form; M(0) by its limit."""
    _check(h, a)
    s = (a + 1.0) ** 2
    if h < H_SMALL:
        return -0.25 * PI * s * (5.0 * s + 4.0 * b)
    r, am, ap = _atans(h, a)
    sh = math.sqrt(h)
    return (-0.25 * PI * s * (5.0 * s + 4.0 * b)
            - (15.0 * a * a + 4.0 * b + 5.0) * sh / SQ2
            - (3.0 * s + 2.0 * b) * PI * h
            - 13.0 / 3.0 * SQ2 * h * sh
            - PI * h * h
            - 0.25 * ((a - 1.0) ** 2 + 2.0 * h) * (5.0 * (a - 1.0) ** 2 + 4.0 * b + 2.0 * h) * am
            + 0.25 * (s + 2.0 * h) * (5.0 * s + 4.0 * b + 2.0 * h) * ap)


def _m1(h, a, b):
    s = (a + 1.0) ** 2
    if h < H_SMALL:
        return -(3.0 * s + 2.0 * b) * PI
    r, am, ap = _atans(h, a)
    pm, pp = (a - 1.0) ** 2 + 2.0 * h, s + 2.0 * h
    qm, qp = 5.0 * (a - 1.0) ** 2 + 4.0 * b + 2.0 * h, 5.0 * s + 4.0 * b + 2.0 * h
    return (-(3.0 * s + 2.0 * b) * PI - 6.0 * r - 2.0 * PI * h
            - 0.5 * (pm + qm) * am + 0.5 * (pp + qp) * ap)


def _dens(h, a):
    return (a * a - 2.0 * a + 2.0 * h + 1.0), (a * a + 2.0 * a + 2.0 * h + 1.0)


def _m2(h, a, b):
    r, am, ap = _atans(h, a)
    sh = math.sqrt(h)
    dm, dp = _dens(h, a)
    m20 = 2.0 * SQ2 * b * (2.0 * h - a * a + 1.0) / (sh * dm * dp)
    num = ((a * a - SQ2 * sh - 1.0) ** 2 + (4.0 * PI * (a * a + 1.0) - 2.0) * h
           + (PI - 1.0) * (a * a - 1.0) ** 2 + 4.0 * SQ2 * h * sh + 4.0 * PI * h * h)
    m21 = -2.0 * num / (dm * dp) - 2.0 * am + 2.0 * ap
    return m20 + m21


def _m3(h, a, b):
    sh = math.sqrt(h)
    dm, dp = _dens(h, a)
    d2 = (dm * dp) ** 2
    m30 = 8.0 * SQ2 * sh * ((1.0 - a * a + 2.0 * h) ** 2 - 4.0 * a * a * (a * a - 1.0)) / d2
    fh = (-(a * a - 1.0) ** 3 + (-14.0 * a ** 4 + 4.0 * a * a + 10.0) * h
          + (28.0 - 12.0 * a * a) * h * h + 24.0 * h ** 3)
    m31 = -SQ2 * b * fh / (h * sh * d2)
    return m30 + m31


def melnikov_deriv(h, a, b, order=1):
    """d^k M / dh^k for k = 1, 2, 3.  Order 1 accepts h = 0 (limit value)."""
    _check(h, a)
    if order == 1:
        return _m1(h, a, b)
    if order not in (2, 3):
        raise ValueError("order must be 1, 2 or 3")
    if h <= 0.0:
        raise DomainError("second and third derivatives blow up at h = 0")
    return _m2(h, a, b) if order == 2 else _m3(h, a, b)


def melnikov_partials(h, a, b):
    """Partial derivatives of M and M' in a and b, and the combination S1.

    S1 = dM/da * dM'/db - dM/db * dM'/da, evaluated on b = -5/4 (a+1)^2
    whatever b is passed.
    """
    _check(h, a)

    def parts(b):
        r, am, ap = _atans(h, a)
        sh = math.sqrt(h)
        s = (a + 1.0) ** 2
        dm, dp = _dens(h, a)
        dmb = -PI * s - 2.0 * SQ2 * sh - 2.0 * PI * h - dm * am + dp * ap
        dm1b = -2.0 * (am - ap + PI)
        w1 = (a - 1.0) * am - (a + 1.0) * ap + PI * (a + 1.0)
        dma = (-2.0 * b * w1 - 5.0 * PI * a ** 3 - 15.0 * PI * a * a
               - a * (6.0 * PI * h + 20.0 * SQ2 * sh + 15.0 * PI) - PI * (6.0 * h + 5.0)
               - (a - 1.0) * (5.0 * a * a - 10.0 * a + 6.0 * h + 5.0) * am
               + (a + 1.0) * (5.0 * a * a + 10.0 * a + 6.0 * h + 5.0) * ap)
        dm1a = (8.0 * r * a * (b - 2.0 * h) / (dm * dp) + 6.0 * (a + 1.0) * ap
                + 6.0 * (1.0 - a) * am - 6.0 * PI * (a + 1.0))
        return dmb, dma, dm1b, dm1a

    dmb, dma, dm1b, dm1a = parts(b)
    qb, qa, q1b, q1a = parts(b_m0(a))
    return {"dM_db": dmb, "dM_da": dma, "dM1_db": dm1b, "dM1_da": dm1a,
            "S1": qa * q1b - qb * q1a}


def melnikov_oracle(h, a, b, tol=1e-12):
    """M(h) by adaptive quadrature over the circle arcs of Gamma_h.

    Each arc is parametrised by the polar angle about its circle centre,
    which keeps the integrand smooth up to the switching line.
    """
    _check(h, a)
    if h <= 0.0:
        raise DomainError("the oracle needs h > 0")

    def arc(c, lo, hi):
        R = math.sqrt(2.0 * h + c * c)

        def fn(th):
            x = c + R * math.cos(th)
            return (x ** 3 / 3.0 + b * x) * R * math.cos(th)

        scale = R * (abs(c) + R) ** 3 * (1.0 + abs(b))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            val, err = integrate.quad(fn, lo, hi, epsabs=tol * scale, epsrel=tol, limit=200)
        if not math.isfinite(val) or abs(err) > 1e-10 * scale:
            raise QuadratureFailure(f"arc quadrature did not converge (err={err:g})")
        return val

    # left arc, x < 0: y runs from -sqrt(2h) up to sqrt(2h)
    cm = a - 1.0
    al = math.asin(math.sqrt(2.0 * h) / math.sqrt(2.0 * h + cm * cm))
    left = arc(cm, PI + al, PI - al)
    # right arc, x > 0: clockwise from (0, sqrt(2h)) over the top and back
    cp = a + 1.0
    be = math.asin(math.sqrt(2.0 * h) / math.sqrt(2.0 * h + cp * cp))
    right = arc(cp, PI - be, be - PI)
    return left + right


# ---------------------------------------------------------------- shape

@dataclass(frozen=True)
class MelnikovShape:
    a: float
    b: float
    h2: float
    h11: float | None
    h12: float | None
    M_at: dict = field(default_factory=dict)
    M1_at_h2: float = 0.0


def _brent(f, lo, hi, xtol):
    try:
        return optimize.brentq(f, lo, hi, xtol=xtol, rtol=1e-15, maxiter=MAX_ITER)
    except ValueError as e:
        raise RootNotBracketed(str(e)) from None


def h2_of(a, b):
    """The unique zero of M'' (M' is largest there)."""
    hi = 0.5 * (a * a - 1.0)
    lo = hi * 1e-14
    while _m2(lo, a, b) <= 0.0 and lo > 1e-300:
        lo *= 1e-4
    return _brent(lambda h: _m2(h, a, b), lo, hi, 1e-15)


def melnikov_shape(a, b):
    """Critical points of M: h2 and, when M'(h2) > 0, the zeros h11 < h2 < h12 of M'."""
    _check(0.0, a)
    h2 = h2_of(a, b)
    m1h2 = _m1(h2, a, b)
    h11 = h12 = None
    if m1h2 > 0.0:
        m10 = _m1(0.0, a, b)
        if m10 < 0.0:
            h11 = _brent(lambda h: _m1(h, a, b), 0.0, h2, 1e-15)
        elif m10 == 0.0:
            h11 = 0.0
        hc = h_cap(a)
        if _m1(hc, a, b) >= 0.0:
            raise RootNotBracketed("M' is still positive at h_cap")
        h12 = _brent(lambda h: _m1(h, a, b), h2, hc, 1e-13)
    M_at = {"0": melnikov(0.0, a, b), "h2": melnikov(h2, a, b)}
    if h11 is not None:
        M_at["h11"] = melnikov(h11, a, b)
    if h12 is not None:
        M_at["h12"] = melnikov(h12, a, b)
    return MelnikovShape(a, b, h2, h11, h12, M_at, m1h2)


# ---------------------------------------------------------------- zeros

@dataclass(frozen=True)
class ZeroReport:
    zeros: list  # (h, multiplicity), ascending
    total_with_multiplicity: int

    def to_dict(self):
        return {"zeros": [{"h": h, "multiplicity": m} for h, m in self.zeros],
                "total_with_multiplicity": self.total_with_multiplicity}


def melnikov_zeros(a, b, mult_tol=MULT_TOL):
    """Zeros of M on (0, +inf) with multiplicity.

    M is monotone between consecutive zeros of M', so each piece holds at most
    one simple zero.  A critical value below mult_tol is a double zero, and a
    double zero at h2 with M'(h2) ~ 0 is triple.
    """
    hc = h_cap(a)
    if melnikov(hc, a, b) >= 0.0:
        raise RootNotBracketed("M(h_cap) is not negative")
    sh = melnikov_shape(a, b)
    if abs(sh.M1_at_h2) < mult_tol and abs(sh.M_at["h2"]) < mult_tol:
        return ZeroReport([(sh.h2, 3)], 3)
    knots = [0.0] + [h for h in (sh.h11, sh.h12) if h is not None and h > 0.0] + [hc]
    vals = []
    for k, h in enumerate(knots):
        v = melnikov(h, a, b)
        if k == 0 and abs(v) < mult_tol:
            # M(0) = 0 is not a zero on (0, inf); use the side M leaves it on
            v = math.copysign(0.0, _m1(0.0, a, b)) if _m1(0.0, a, b) != 0.0 else 0.0
        elif 0 < k < len(knots) - 1 and abs(v) < mult_tol:
            v = 0.0
        vals.append(v)
    zeros = []
    for k in range(1, len(knots) - 1):
        if vals[k] == 0.0:
            zeros.append((knots[k], 2))
    for k in range(len(knots) - 1):
        v0, v1 = vals[k], vals[k + 1]
        if v0 == 0.0 or v1 == 0.0:
            continue
        if (v0 > 0) != (v1 > 0):
            z = _brent(lambda h: melnikov(h, a, b), knots[k], knots[k + 1], H_TOL * 1e-3)
            zeros.append((z, 1))
    zeros.sort()
    return ZeroReport(zeros, sum(m for _, m in zeros))


# ---------------------------------------------------------------- curves

def _b1_fn(a, b):
    return _m1(h2_of(a, b), a, b)


def b1_curve(a, xtol=1e-13):
    """b1(a): M'(h2) = 0, inside (-3/2 (a+1)^2, -(a+1)^2)."""
    return _brent(lambda b: _b1_fn(a, b), b_m1(a), b_hopf(a), xtol)


def _h11_value(a, b):
    if b <= b_m1(a):
        return melnikov(0.0, a, b)
    sh = melnikov_shape(a, b)
    if sh.h11 is None:
        raise RootNotBracketed("h11 does not exist here")
    return sh.M_at["h11"]


def _h12_value(a, b):
    sh = melnikov_shape(a, b)
    if sh.h12 is None:
        raise RootNotBracketed("h12 does not exist here")
    return sh.M_at["h12"]


def _inner(b1, lo, frac=1e-12):
    # just below b1, where h11 and h12 still exist
    return b1 - frac * max(1.0, abs(b1))


def b2_curve(a, xtol=1e-13):
    """b2(a): M(h11) = 0, bracketed by -3/2 (a+1)^2 (h11 = 0) and b1(a)."""
    b1 = b1_curve(a)
    hi = _inner(b1, b_m1(a))
    return _brent(lambda b: _h11_value(a, b), b_m1(a), hi, xtol)


def b3_curve(a, xtol=1e-13):
    """b3(a): M(h12) = 0, bracketed by b2(a) and b1(a)."""
    b1 = b1_curve(a)
    b2 = b2_curve(a)
    hi = _inner(b1, b2)
    return _brent(lambda b: _h12_value(a, b), b2, hi, xtol)


_CURVES = {"b1": b1_curve, "b2": b2_curve, "b3": b3_curve}
_RESID = {"b1": _b1_fn, "b2": _h11_value, "b3": _h12_value}


@dataclass(frozen=True)
class CurveSample:
    a: float
    b: float
    delta: float
    kind: str
    residual: float
    valid: bool

    def to_dict(self):
        return {"kind": self.kind, "a": self.a, "b": self.b, "delta": self.delta,
                "residual": self.residual, "valid": self.valid}


def trace_melnikov_curve(kind, a_grid, tol=B_TOL):
    """Sample b1, b2 or b3 on a grid of a.  Points off the curve are marked invalid."""
    if kind not in _CURVES:
        raise ValueError(f"unknown curve {kind!r}")
    out = []
    for a in a_grid:
        a = float(a)
        try:
            b = _CURVES[kind](a, xtol=min(tol, 1e-13))
            res = abs(_RESID[kind](a, b))
            out.append(CurveSample(a, b, 0.0, kind, res, res <= tol))
        except (RootNotBracketed, DomainError):
            out.append(CurveSample(a, math.nan, 0.0, kind, math.nan, False))
    return out


# ---------------------------------------------------------------- special points

@dataclass(frozen=True)
class SpecialPoints:
    a_star: float
    a_double_star: float
    a3: float
    A: tuple
    B: tuple
    C: tuple

    def to_dict(self):
        return {"a_star": self.a_star, "a_double_star": self.a_double_star,
                "a3": self.a3, "A": list(self.A), "B": list(self.B), "C": list(self.C)}


def _a_star_fn(a):
    b = b_m0(a)
    return _m1(h2_of(a, b), a, b)


def _a2_fn(a):
    # b2 meets b1 where M(h2) = 0 on b1
    b = b1_curve(a)
    return melnikov(h2_of(a, b), a, b)


def _a3_fn(a):
    return _h12_value(a, b_m0(a))


@lru_cache(maxsize=8)
def special_points(tol=A_TOL):
    """a*, a**, a3 and the points A, B, C of the zero-count diagram."""
    xt = min(tol, 1e-13)
    a_star = _brent(_a_star_fn, 1.4, 2.0, xt)
    hi = 2.0
    while _a2_fn(hi) < 0.0:
        hi *= 2.0
        if hi > 1e3:
            raise RootNotBracketed("no sign change of M(h2) along b1")
    a_ss = _brent(_a2_fn, a_star, hi, xt)
    a3 = _brent(_a3_fn, 1.2, a_star - 1e-9, xt)
    return SpecialPoints(a_star, a_ss, a3, (a_star, b_m0(a_star)),
                         (a_ss, b1_curve(a_ss)), (a3, b_m0(a3)))


# ---------------------------------------------------------------- regions

REGION_ZEROS = {"D0": 1, "D1": 0, "D2": 1, "D3": 0, "D4": 3, "D5": 2,
                "D6": 1, "D7": 1, "D8": 1}


def classify_region_D(a, b, tol=1e-9):
    """Zero-count region of (a, b) below the Hopf line.

    Returns a dict with the region label, the boundary tags (b1, b2, b3,
    -5/4, -3/2, A, B, C) the point lies on within ``tol``, and the zero count
    the region prescribes.  "D0" is the part b <= -3/2 (a+1)^2, where M has a
    single zero.
    """
    _check(0.0, a)
    if b >= b_hopf(a):
        raise DomainError("need b < -(a+1)^2")
    tags = []
    scale = (a + 1.0) ** 2
    if abs(b - b_m0(a)) <= tol * scale:
        tags.append("-5/4")
    if abs(b - b_m1(a)) <= tol * scale:
        tags.append("-3/2")
    m0 = melnikov(0.0, a, b)
    if b <= b_m1(a):
        label = "D0"
    else:
        sh = melnikov_shape(a, b)
        if abs(sh.M1_at_h2) <= tol * scale:
            tags.append("b1")
        if sh.M1_at_h2 <= 0.0:
            label = "D1" if m0 <= 0.0 else "D2"
        else:
            m11 = sh.M_at.get("h11", m0)
            m12 = sh.M_at["h12"]
            if abs(m11) <= tol * scale:
                tags.append("b2")
            if abs(m12) <= tol * scale:
                tags.append("b3")
            if m11 > 0.0:
                label = "D7" if a < special_points().a_double_star else "D6"
            elif m12 > 0.0:
                label = "D4" if m0 > 0.0 else "D5"
            else:
                label = "D8" if m0 > 0.0 else "D3"
    sp = special_points()
    for name, (pa, pb) in (("A", sp.A), ("B", sp.B), ("C", sp.C)):
        if abs(a - pa) <= 1e-6 and abs(b - pb) <= 1e-6 * scale:
            tags.append(name)
    return {"label": label, "boundaries": tags, "zeros": REGION_ZEROS[label]}


# ----------------------------------------------------------------- sign of S1 check

def s1_bar(h, a):
    """Numerator of dS1/dh; dS1/dh = sqrt(2) s1_bar / (sqrt(h) (a^2-2a+2h+1)^2 (a^2+2a+2h+1)^2)."""
    x = math.sqrt(h)
    _, am, ap = _atans(h, a)
    r2 = SQ2
    p = (-5 * PI * a ** 8 + a ** 7 * (32 * PI * h + 30 * r2 * x - 20 * PI)
         + 2 * a ** 6 * (51 * PI * h - 10 * r2 * x - 10 * PI)
         + 2 * a ** 5 * (60 * r2 * h * x + 84 * PI * h ** 2 + 82 * PI * h - 55 * r2 * x + 10 * PI)
         + a ** 4 * (80 * r2 * h * x + 412 * PI * h ** 2 + 234 * PI * h + 40 * r2 * x + 50 * PI)
         + 2 * a ** 3 * (44 * r2 * h ** 2 * x + 120 * r2 * h * x + 144 * PI * h ** 3
                         + 248 * PI * h ** 2 + 108 * PI * h + 65 * r2 * x + 10 * PI)
         + 2 * a ** 2 * (2 * h + 1) * (60 * r2 * h * x + 82 * PI * h ** 2 + 33 * PI * h
                                       - 10 * r2 * x - 10 * PI)
         + 2 * a * (2 * h + 1) * (-16 * r2 * h ** 2 * x - 50 * r2 * h * x + 40 * PI * h ** 3
                                  + 8 * PI * h ** 2 - 26 * PI * h - 25 * r2 * x - 10 * PI)
         - PI * (2 * h + 1) ** 3 * (12 * h + 5))
    cm = (-35 * a ** 8 + 8 * a ** 7 * (4 * h + 5) - 2 * a ** 6 * (51 * h - 50)
          + 4 * a ** 5 * (42 * h ** 2 + 11 * h - 30) + a ** 4 * (68 * h ** 2 - 74 * h - 90)
          + 8 * a ** 3 * (36 * h ** 3 - 8 * h ** 2 + 17 * h + 15)
          + 2 * a ** 2 * (156 * h ** 3 + 172 * h ** 2 + 67 * h + 10)
          + 4 * a * (2 * h + 1) ** 2 * (10 * h ** 2 - 13 * h - 10) + (2 * h + 1) ** 3 * (12 * h + 5))
    cp = (5 * a ** 8 - 4 * a ** 7 * (8 * h - 5) + a ** 6 * (20 - 102 * h)
          - 4 * a ** 5 * (42 * h ** 2 + 41 * h + 5) - 2 * a ** 4 * (206 * h ** 2 + 117 * h + 25)
          - 4 * a ** 3 * (72 * h ** 3 + 124 * h ** 2 + 54 * h + 5)
          - 2 * a ** 2 * (164 * h ** 3 + 148 * h ** 2 + 13 * h - 10)
          - 4 * a * (2 * h + 1) ** 2 * (10 * h ** 2 - 3 * h - 5) + (2 * h + 1) ** 3 * (12 * h + 5))
    return p + cm * am + cp * ap


def s1_sign_structure(a, h_grid=None):
    """Sign changes of dS1/dh over a grid in (0, 4/5), plus the largest S1 seen."""
    if a <= 1.4:
        raise DomainError("the sign structure is stated for a > 7/5")
    if h_grid is None:
        h_grid = np.linspace(0.0, 0.8, 802)[1:-1]
    h_grid = np.asarray(h_grid, dtype=float)
    if np.any(h_grid <= 0.0) or np.any(h_grid >= 0.8):
        raise DomainError("grid must lie inside (0, 4/5)")
    signs = np.sign([s1_bar(h, a) for h in h_grid])
    signs = signs[signs != 0]
    changes = int(np.count_nonzero(signs[1:] != signs[:-1]))
    s1 = [melnikov_partials(h, a, b_m0(a))["S1"] for h in h_grid]
    return {"num_sign_changes_of_dS1": changes, "max_S1": float(max(s1))}
