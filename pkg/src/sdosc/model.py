"""The discontinuous archetypal oscillator with constant excitation.

Two charts are used throughout:

* ``SD``:      x' = y - F(x),  y' = -g(x)
* ``LIENARD``: x' = y,  y' = -(x - sgn(x) - a) - delta*x**2*y - b_tilde*y

with F(x) = delta*(x**3/3 + b*x), f = F', g(x) = x - sgn(x) - a and
y_lienard = y_sd - F(x).  sgn(0) is taken as 0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError, NonFiniteError

SD = "SD"
LIENARD = "LIENARD"
CHARTS = (SD, LIENARD)

# |trace| below this multiple of delta*(a+1)^2 counts as zero
TRACE_TIE = 1e-12


def _finite(*vals):
    for v in vals:
        if not math.isfinite(v):
            raise NonFiniteError(f"non-finite value {v!r}")


def sgn(x):
    return (x > 0) - (x < 0)


@dataclass(frozen=True)
class Params:
    a: float
    b: float
    delta: float

    @property
    def b_tilde(self):
        return self.delta * self.b

    def __iter__(self):
        return iter((self.a, self.b, self.delta))


def make_params(a, b, delta) -> Params:
    a, b, delta = float(a), float(b), float(delta)
    _finite(a, b, delta)
    if not a > 1:
        raise DomainError(f"need a > 1, got a={a}")
    if not delta > 0:
        raise DomainError(f"need delta > 0, got delta={delta}")
    return Params(a, b, delta)


@dataclass(frozen=True)
class PhasePoint:
    x: float
    y: float
    chart: str = LIENARD

    def to(self, chart: str, params: Params) -> "PhasePoint":
        """Same point expressed in another chart."""
        if chart not in CHARTS:
            raise ValueError(f"unknown chart {chart!r}")
        if chart == self.chart:
            return self
        F = params.delta * (self.x**3 / 3.0 + params.b * self.x)
        if chart == LIENARD:
            return PhasePoint(self.x, self.y - F, LIENARD)
        return PhasePoint(self.x, self.y + F, SD)


def lienard_data(x, params: Params):
    """F, f and g at x."""
    _finite(x)
    d, b = params.delta, params.b
    return {
        "F": d * (x**3 / 3.0 + b * x),
        "f": d * (x * x + b),
        "g": x - sgn(x) - params.a,
    }


def vector_field(p: PhasePoint, params: Params):
    _finite(p.x, p.y)
    x, y = p.x, p.y
    g = x - sgn(x) - params.a
    if p.chart == SD:
        F = params.delta * (x**3 / 3.0 + params.b * x)
        return (y - F, -g)
    return (y, -g - params.delta * x * x * y - params.b_tilde * y)


@dataclass(frozen=True)
class EquilibriumReport:
    location: PhasePoint
    jacobian_trace: float
    jacobian_det: float
    classification: str
    focal_value: float | None


def equilibrium_report(params: Params, chart: str = SD) -> EquilibriumReport:
    """The unique equilibrium E_r = (a+1, .) and its linear type.

    A vanishing trace gives a stable weak focus of order one; the focal
    value pi*delta/4 is reported in that case.
    """
    a, b, d = params
    xe = a + 1.0
    loc = PhasePoint(xe, 0.0, LIENARD).to(chart, params)
    tr = -d * (xe * xe + b)
    if abs(tr) <= TRACE_TIE * d * xe * xe:
        return EquilibriumReport(loc, 0.0, 1.0, "weak_focus_stable_order1",
                                 math.pi * d / 4.0)
    kind = "source" if tr > 0 else "sink"
    return EquilibriumReport(loc, tr, 1.0, kind, None)


def energy(p: PhasePoint, params: Params) -> float:
    """E(x, y) = int_0^x g + y^2/2 in the SD chart.

    Along orbits dE/dt = -F(x) g(x).
    """
    if p.chart != SD:
        p = p.to(SD, params)
    x, y = p.x, p.y
    return 0.5 * x * x - (sgn(x) + params.a) * x + 0.5 * y * y


def energy_rate(x, params: Params) -> float:
    dat = lienard_data(x, params)
    return -dat["F"] * dat["g"]


def escape_radius(params: Params) -> float:
    return 1e3 * (params.a + 1.0 + math.sqrt(max(1.0, -params.b)))
