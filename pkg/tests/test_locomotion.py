import math

import numpy as np
import pytest

from capnav.dynamics import CapsuleSpec
from capnav.errors import InvalidParameterError
from capnav.locomotion import (
    CAL_DIAMETER,
    ROLLING_TUBE_DIAMETER,
    RollingModel,
    max_counterflow,
    rolling_velocity,
)


class TestRollingModel:
    def test_calibration_recovers_bench_peak(self):
        model = RollingModel.calibrated()
        assert model.slip_factor == pytest.approx(0.1393782933585829, rel=1e-15)
        v = rolling_velocity(model, CAL_DIAMETER, 5.0)
        assert v == pytest.approx(0.0037, rel=1e-12)

    def test_zero_frequency_means_rest(self):
        model = RollingModel.calibrated()
        assert rolling_velocity(model, CAL_DIAMETER, 0.0) == 0.0

    def test_monotone_up_to_calibration_peak(self):
        model = RollingModel.calibrated()
        freqs = np.linspace(0.0, 5.0, 21)
        speeds = [rolling_velocity(model, CAL_DIAMETER, float(f)) for f in freqs]
        assert all(b > a for a, b in zip(speeds, speeds[1:]))

    def test_bounce_band_attenuates(self):
        model = RollingModel.calibrated()
        kinematic = lambda f: model.slip_factor * math.pi * CAL_DIAMETER * f  # noqa: E731
        assert rolling_velocity(model, CAL_DIAMETER, 5.0) == pytest.approx(kinematic(5.0))
        assert rolling_velocity(model, CAL_DIAMETER, 6.0) == pytest.approx(
            0.6 * kinematic(6.0)
        )
        assert rolling_velocity(model, CAL_DIAMETER, 7.0) == pytest.approx(
            0.6 * kinematic(7.0)
        )
        assert rolling_velocity(model, CAL_DIAMETER, 8.0) == pytest.approx(kinematic(8.0))

    def test_step_out_cuts_motion(self):
        model = RollingModel.calibrated()
        assert rolling_velocity(model, CAL_DIAMETER, 12.0) > 0.0
        assert rolling_velocity(model, CAL_DIAMETER, 12.5) == 0.0
        assert rolling_velocity(model, CAL_DIAMETER, 40.0) == 0.0

    def test_speed_scales_with_diameter(self):
        model = RollingModel.calibrated()
        v1 = rolling_velocity(model, 1.0e-3, 3.0)
        v2 = rolling_velocity(model, 2.0e-3, 3.0)
        assert v2 == pytest.approx(2.0 * v1, rel=1e-15)

    def test_validation(self):
        model = RollingModel.calibrated()
        with pytest.raises(InvalidParameterError):
            rolling_velocity(model, 0.0, 5.0)
        with pytest.raises(InvalidParameterError):
            rolling_velocity(model, 1e-3, -1.0)
        with pytest.raises(InvalidParameterError):
            RollingModel(slip_factor=0.0)
        with pytest.raises(InvalidParameterError):
            RollingModel(slip_factor=0.1, bounce_low=8.0, bounce_high=7.0)
        with pytest.raises(InvalidParameterError):
            RollingModel(slip_factor=0.1, bounce_high=15.0, step_out_frequency=12.0)


class TestMaxCounterflow:
    def test_zero_gradient_holds_nothing(self, water, capsule, curve):
        assert max_counterflow(capsule, water, curve, 0.0) == 0.0
        assert max_counterflow(capsule, water, curve, 0.5, field_t=0.0) == 0.0

    def test_reference_points(self, water, capsule, curve):
        # Regression anchors for the calibrated capsule in the 6.3 mm tube.
        assert max_counterflow(capsule, water, curve, 0.1) == pytest.approx(
            0.12641678536369508, rel=1e-9
        )
        assert max_counterflow(capsule, water, curve, 0.5) == pytest.approx(
            0.34743946159599204, rel=1e-9
        )

    def test_monotone_in_gradient(self, water, capsule, curve):
        grads = [0.1, 0.2, 0.3, 0.4, 0.5]
        vals = [max_counterflow(capsule, water, curve, g) for g in grads]
        assert all(b > a for a, b in zip(vals, vals[1:]))

    def test_equilibrium_balances_forces(self, water, capsule, curve):
        # At the returned mean velocity the local drag equals the pull.
        from capnav.dynamics import relaxation_time
        from capnav.flowfield import make_flow
        from capnav.geometry import build_tube

        g = 0.3
        v_hold = max_counterflow(capsule, water, curve, g)
        tube = build_tube(ROLLING_TUBE_DIAMETER, 0.1)
        flow = make_flow(tube, water, v_hold)
        u = float(flow.velocity_at([0.05, 0.0, -(tube.radius - capsule.radius)])[0])
        drag = capsule.mass * u / relaxation_time(capsule, water, u)
        pull = curve.moment_at(0.030) * g
        assert drag == pytest.approx(pull, rel=1e-6)

    def test_validation(self, water, capsule, curve):
        with pytest.raises(InvalidParameterError):
            max_counterflow(capsule, water, curve, -0.1)
        with pytest.raises(InvalidParameterError):
            max_counterflow(capsule, water, curve, 0.3, field_t=-0.01)
        big = CapsuleSpec(diameter=7e-3)
        with pytest.raises(InvalidParameterError):
            max_counterflow(big, water, curve, 0.3)
