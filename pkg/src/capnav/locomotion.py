"""Reduced models for the two contact locomotion modes.

All values are SI. Rolling along the floor under a rotating field is a
slip-scaled kinematic law; holding position against flow with a pulling
gradient is a quasi-static force balance for a capsule resting on the
lower wall.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.optimize import brentq

from .dynamics import CapsuleSpec, relaxation_time
from .errors import InvalidParameterError
from .flowfield import FluidProperties, make_flow
from .geometry import build_tube
from .magnetics import MagnetizationCurve

# Bench calibration: 0.37 cm/s forward speed at 5 Hz for the fabricated
# 1.69 mm capsule rolling in the 6.3 mm tube.
CAL_PEAK_SPEED = 0.0037
CAL_FREQUENCY = 5.0
CAL_DIAMETER = 1.69e-3
ROLLING_TUBE_DIAMETER = 6.3e-3


@dataclass(frozen=True)
class RollingModel:
    """Rolling speed law v = slip_factor * pi * d * f with a bounce band.

    Inside (f_low, f_high] the capsule bounces and only a fraction
    bounce_efficiency of the kinematic speed survives; above
    step_out_frequency the capsule no longer follows the field and the
    speed is zero. Frequencies satisfy f_low < f_high <= step-out.
    """

    slip_factor: float
    bounce_low: float = 5.0
    bounce_high: float = 7.0
    bounce_efficiency: float = 0.6
    step_out_frequency: float = 12.0

    def __post_init__(self):
        if not 0.0 < self.slip_factor <= 1.0:
            raise InvalidParameterError("slip_factor must lie in (0, 1]")
        if not 0.0 <= self.bounce_low < self.bounce_high <= self.step_out_frequency:
            raise InvalidParameterError("need bounce_low < bounce_high <= step_out_frequency")
        if not 0.0 < self.bounce_efficiency <= 1.0:
            raise InvalidParameterError("bounce_efficiency must lie in (0, 1]")

    @staticmethod
    def calibrated() -> "RollingModel":
        """Slip factor fitted to the bench peak (0.37 cm/s at 5 Hz, 1.69 mm)."""
        slip = CAL_PEAK_SPEED / (math.pi * CAL_DIAMETER * CAL_FREQUENCY)
        return RollingModel(slip_factor=slip)


def rolling_velocity(model: RollingModel, diameter: float, frequency: float) -> float:
    """Forward rolling speed at a field rotation frequency [m/s]."""
    if diameter <= 0.0:
        raise InvalidParameterError("diameter must be positive")
    if frequency < 0.0:
        raise InvalidParameterError("frequency must be >= 0")
    if frequency > model.step_out_frequency:
        return 0.0
    v = model.slip_factor * math.pi * diameter * frequency
    if model.bounce_low < frequency <= model.bounce_high:
        v *= model.bounce_efficiency
    return v


def max_counterflow(
    spec: CapsuleSpec,
    fluid: FluidProperties,
    curve: MagnetizationCurve,
    gradient_tpm: float,
    field_t: float = 0.030,
    tube_diameter: float = ROLLING_TUBE_DIAMETER,
) -> float:
    """Largest tube mean velocity the magnetic pull can hold against.

    The capsule rests on the lower wall with its centre one radius above
    the floor; the local flow there drags it downstream while the
    gradient pulls upstream. The returned mean velocity is the
    equilibrium point of that axial force balance, found by bisection.
    Zero gradient gives zero.
    """
    if gradient_tpm < 0.0:
        raise InvalidParameterError("gradient_tpm must be >= 0")
    if field_t < 0.0:
        raise InvalidParameterError("field_t must be >= 0")
    if spec.diameter >= tube_diameter:
        raise InvalidParameterError("capsule does not fit the tube")
    pull = curve.moment_at(field_t) * gradient_tpm
    if pull <= 0.0:
        return 0.0

    tube = build_tube(tube_diameter, 0.1)
    sample_point = (0.05, 0.0, -(tube.radius - spec.radius))

    def net_upstream(mean_velocity: float) -> float:
        flow = make_flow(tube, fluid, mean_velocity)
        u_local = float(flow.velocity_at(sample_point)[0])
        tau = relaxation_time(spec, fluid, u_local)
        drag = spec.mass * u_local / tau
        return pull - drag

    hi = 0.01
    while net_upstream(hi) > 0.0:
        hi *= 2.0
        if hi > 1.0e3:
            raise InvalidParameterError("no holding limit below 1000 m/s; check inputs")
    return float(brentq(net_upstream, 0.0, hi, xtol=1e-9))
