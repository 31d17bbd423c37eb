"""Limit cycles of the SD-type oscillator x'' + delta (x^2 + b) x' + x - sgn(x) - a = 0.

Set SDOSC_NO_NUMBA=1 before import to run the integrator as plain Python.
"""
from .errors import (BracketError, DomainError, NonFiniteError, NumericalError, OutOfCoverage,
                     QuadratureFailure, RootNotBracketed, ScanInsufficient, SdoscError,
                     StepSizeUnderflow)
from .model import (LIENARD, SD, Params, PhasePoint, energy, energy_rate, equilibrium_report,
                    lienard_data, make_params, vector_field)
from .integrator import IntegratorCtrl, EventSpec, Trajectory, flow
from .poincare import (CycleRecord, ScanCtrl, displacement, find_cycles, shoot, small_return,
                       verify_surround)
# the function melnikov stays in its module so it does not shadow sdosc.melnikov
from .melnikov import (classify_region_D, melnikov_deriv, melnikov_oracle, melnikov_zeros,
                       special_points)
from .bifurcation import (classify_global, diagram_slice, estimate_a0, fold_b, grazing_b,
                          local_slice)
from .portrait import PortraitSpec, emit_portrait_svg

__version__ = "0.1.0"
