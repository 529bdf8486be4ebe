"""End-to-end gates over the bench characterization claims.

Every test prints one [PASS]/[FAIL] line before asserting, so the
transcript of this module doubles as the release checklist. The
factorial sweeps are the expensive part and run once at module scope;
the dt-robustness and reproducibility gates reuse them.
"""

import json
import math
import time

import numpy as np
import pytest

from capnav.cli import main
from capnav.dynamics import (
    STANDARD_GRAVITY,
    CapsuleSpec,
    CapsuleState,
    StepControl,
    reflect_collision,
    relaxation_time,
    step,
)
from capnav.flowfield import (
    cross_section_flux,
    friction_factor_blasius,
    friction_factor_from_pressure,
    make_flow,
    reynolds,
)
from capnav.geometry import build_tube, classify_region, signed_distance, signed_distance_and_normal
from capnav.hyperthermia import (
    SPECIFIC_HEAT_WATER,
    default_dissolution,
    simulate_dissolution,
    slp_from_curve,
)
from capnav.locomotion import CAL_DIAMETER, RollingModel, max_counterflow, rolling_velocity
from capnav.magnetics import CapabilityEnvelope, uniform_command
from capnav.sweep import (
    default_design,
    run_factorial,
    success_trend_by_gradient,
    success_trend_by_velocity,
)


def report(capsys, ok: bool, label: str, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] {label}: {detail}"
    with capsys.disabled():
        print(line)
    assert ok, line


class ConstantFlow:
    def __init__(self, velocity):
        self.velocity = np.asarray(velocity, dtype=float)

    def velocity_at(self, point):
        return self.velocity.copy()


@pytest.fixture(scope="module")
def base_sweep():
    t0 = time.perf_counter()
    result = run_factorial(default_design())
    return result, time.perf_counter() - t0


@pytest.fixture(scope="module")
def repeat_sweep():
    return run_factorial(default_design())


@pytest.fixture(scope="module")
def threaded_sweep():
    return run_factorial(default_design(), workers=4)


@pytest.fixture(scope="module")
def halved_sweep():
    return run_factorial(default_design(), control=StepControl(dt_constant=5.0e-6))


def test_pressure_drop_friction_factor(capsys, water):
    measured = friction_factor_from_pressure(279.03, 0.005, 0.096, 998.3, 0.85)
    re = reynolds(water, 0.85, 0.005)
    blasius = friction_factor_blasius(re)
    gap = abs(blasius - 0.0403) / 0.0403
    ok = abs(measured - 0.0403) <= 1.0e-4 and gap <= 0.05
    report(
        capsys,
        ok,
        "friction factor",
        f"measured={measured:.5f} blasius={blasius:.5f} gap={gap * 100:.1f}%",
    )


def test_levitation_gradient_inside_envelope(capsys, capsule, water, curve):
    moment = curve.moment_at(0.030)
    gradient = (
        (capsule.density - water.density) * capsule.volume * STANDARD_GRAVITY / moment
    )
    limit = CapabilityEnvelope().max_gradient_tpm
    ok = abs(gradient - 0.43) <= 0.01 and gradient <= limit
    report(
        capsys,
        ok,
        "levitation gradient",
        f"required={gradient:.4f} T/m against a {limit:g} T/m envelope",
    )


def test_slip_relaxation_time_constant(capsys, water, curve):
    # Neutral buoyancy removes gravity and a zero field removes the
    # magnetic pull, leaving pure drag against a uniform carrier. The
    # carrier speed and initial slip are exact binary fractions so the
    # residual slip comes out of the subtraction unrounded.
    spec = CapsuleSpec(density=water.density, drag_law="stokes")
    tau = relaxation_time(spec, water)
    tube = build_tube(0.005, 0.1)
    flow = ConstantFlow([0.125, 0.0, 0.0])
    sampler = uniform_command([1.0, 0.0, 0.0], 0.0, [0.0, 0.0, 0.0])
    slip0 = 2.0**-5
    position = np.array([0.01, 0.0, 0.0])
    state = CapsuleState(
        time=0.0,
        position=position,
        velocity=np.array([0.125 + slip0, 0.0, 0.0]),
        region=classify_region(tube, position),
    )
    n_steps = 1000
    dt = tau / n_steps
    for _ in range(n_steps):
        state, _, _ = step(tube, flow, sampler, curve, spec, water, state, dt)
    slip = abs(float(state.velocity[0]) - 0.125)
    error = abs(slip / slip0 - math.exp(-1.0)) / math.exp(-1.0)
    ok = error < 1.0e-6
    report(
        capsys,
        ok,
        "drag relaxation",
        f"slip ratio at t=tau off e^-1 by {error:.2e} (need < 1e-6)",
    )


def test_collision_energy_and_geometry(capsys, tube, junction, rng):
    r = 0.0007
    worst_speed = 0.0
    worst_normal = 0.0
    worst_distance = 0.0
    cases = 0
    for geom, lo, hi, quota in (
        (tube, [0.01, -0.0026, -0.0026], [0.09, 0.0026, 0.0026], 500),
        (junction, [0.0, -0.03, -0.0026], [0.13, 0.03, 0.0026], 1000),
    ):
        while cases < quota:
            p = rng.uniform(lo, hi)
            d, n = signed_distance_and_normal(geom, p)
            if n is None or not 1.0e-5 < d < r - 1.0e-5:
                continue
            v = rng.normal(size=3)
            if float(v @ n) > 0.0:
                v = v - 2.0 * float(v @ n) * n
            p2, v2, collided, on_medial = reflect_collision(geom, p, v, r)
            assert collided and not on_medial
            speed = float(np.linalg.norm(v))
            worst_speed = max(worst_speed, abs(float(np.linalg.norm(v2)) - speed) / speed)
            worst_distance = max(worst_distance, abs(signed_distance(geom, p2) - r))
            _, n2 = signed_distance_and_normal(geom, p2)
            vn_in = float(v @ n2)
            vn_out = float(v2 @ n2)
            worst_normal = max(worst_normal, abs(vn_out + vn_in) / max(abs(vn_in), 1e-300))
            cases += 1
    ok = cases == 1000 and worst_speed <= 1.0e-12 and worst_normal <= 1.0e-12 and worst_distance <= 1.0e-9
    report(
        capsys,
        ok,
        "collision invariants",
        f"1000 impacts, speed err {worst_speed:.1e}, normal err {worst_normal:.1e},"
        f" contact err {worst_distance:.1e} m",
    )


def test_factorial_sweep_trends(capsys, base_sweep, repeat_sweep, threaded_sweep):
    result, elapsed = base_sweep
    design = result.design
    trends_v = success_trend_by_velocity(result)
    trends_g = success_trend_by_gradient(result)
    strong = [t for g, t in zip(design.gradients_tpm, trends_g) if g >= 0.25]
    gi = design.gradients_tpm.index(0.45)
    vi = design.velocities.index(0.65)
    anchor = result.success_ratio(gi, vi)
    same_again = np.array_equal(result.outcomes, repeat_sweep.outcomes) and np.array_equal(
        result.transit_times, repeat_sweep.transit_times
    )
    same_threaded = np.array_equal(result.outcomes, threaded_sweep.outcomes) and np.array_equal(
        result.transit_times, threaded_sweep.transit_times
    )
    ok = (
        min(trends_v) >= 0.8
        and max(strong) <= 0.0
        and anchor >= 0.9
        and same_again
        and same_threaded
        and elapsed < 60.0
    )
    report(
        capsys,
        ok,
        "factorial sweep",
        f"gradient trend >= {min(trends_v):.2f}, velocity trend <= {max(strong):.2f},"
        f" success(0.45 T/m, 0.65 m/s)={anchor:.2f},"
        f" rerun/threads bitwise={same_again and same_threaded}, {elapsed:.1f} s",
    )


def test_outcomes_stable_under_dt_halving(capsys, base_sweep, halved_sweep):
    result, _ = base_sweep
    flips = (result.outcomes != halved_sweep.outcomes).sum(axis=2)
    ok = int(flips.max()) <= 1
    report(
        capsys,
        ok,
        "dt robustness",
        f"halving the step constant flips at most {int(flips.max())} of"
        f" {result.design.entrance_count} outcomes per cell",
    )


def test_counterflow_holding_scales_linearly(capsys, capsule, water, curve):
    gradients = np.array([0.1, 0.2, 0.3, 0.4, 0.5])
    holds = np.array(
        [max_counterflow(capsule, water, curve, float(g)) for g in gradients]
    )
    monotone = bool(np.all(np.diff(holds) > 0.0))
    slope, intercept = np.polyfit(gradients, holds, 1)
    pred = slope * gradients + intercept
    ss_res = float(np.sum((holds - pred) ** 2))
    ss_tot = float(np.sum((holds - holds.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot
    top = float(holds[-1])
    ok = monotone and r2 >= 0.95 and 0.212 / 2.0 <= top <= 0.212 * 2.0
    report(
        capsys,
        ok,
        "counterflow holding",
        f"monotone={monotone} R^2={r2:.4f} hold(0.5 T/m)={top:.3f} m/s",
    )


def test_rolling_speed_curve(capsys):
    model = RollingModel.calibrated()
    at_rest = rolling_velocity(model, CAL_DIAMETER, 0.0)
    ramp = [rolling_velocity(model, CAL_DIAMETER, f) for f in np.linspace(0.0, 5.0, 11)]
    peak = rolling_velocity(model, CAL_DIAMETER, 5.0)
    beyond = [rolling_velocity(model, CAL_DIAMETER, f) for f in (12.5, 20.0, 40.0)]
    ok = (
        at_rest == 0.0
        and all(b > a for a, b in zip(ramp, ramp[1:]))
        and peak == pytest.approx(0.0037, rel=1e-9)
        and all(v == 0.0 for v in beyond)
    )
    report(
        capsys,
        ok,
        "rolling speed",
        f"v(0)=0, monotone ramp, peak {peak * 100:.2f} cm/s at 5 Hz, zero past step-out",
    )


def test_heating_slope_and_dissolution_time(capsys):
    concentration = 0.005
    times = np.linspace(0.0, 30.0, 121)
    temps = 20.0 + (190.0 * concentration / SPECIFIC_HEAT_WATER) * times
    slp = slp_from_curve(times, temps, concentration)
    outcome = simulate_dissolution(default_dissolution(), True, 60.0)
    finished = outcome.dissolution_time_s
    ok = abs(slp - 190.0) <= 2.0 and finished is not None and abs(finished - 40.0) <= 5.0
    report(
        capsys,
        ok,
        "heating and dissolution",
        f"SLP recovered {slp:.1f} W/g, capsule dissolved at {finished:.1f} s",
    )


def test_junction_flux_conservation(capsys, junction, water):
    worst = 0.0
    for mean, profile in ((0.40, "parabolic"), (0.85, "power_law")):
        flow = make_flow(junction, water, mean, profile=profile)
        q_in = cross_section_flux(flow, [0.02, 0.0, 0.0], [1.0, 0.0, 0.0], junction.radius)
        jp = junction.junction_point
        q_a = cross_section_flux(
            flow, jp + 0.02 * junction.branch_dir_a, junction.branch_dir_a, junction.radius
        )
        q_b = cross_section_flux(
            flow, jp + 0.02 * junction.branch_dir_b, junction.branch_dir_b, junction.radius
        )
        worst = max(worst, abs(q_in - q_a - q_b) / q_in)
    ok = worst < 1.0e-3
    report(
        capsys,
        ok,
        "flux conservation",
        f"worst inlet/outlet imbalance {worst:.1e} across both profiles",
    )


def test_scripted_session_replay(capsys, tmp_path):
    script = tmp_path / "steer.jsonl"
    script.write_text(
        '{"kind": "command", "t": 0.0, "field_magnitude_t": 0.03,'
        ' "field_direction": [1, 0, 0], "gradient_tpm": [0, 0.45, 0]}\n'
        '{"kind": "advance_mode", "t": 0.05, "mode": "paused"}\n'
        '{"kind": "advance_mode", "t": 0.08, "mode": "running"}\n'
    )
    argv = [
        "serve",
        "--script",
        str(script),
        "--until",
        "3.0",
        "--set",
        "session.time_dilation=1",
    ]
    t0 = time.perf_counter()
    assert main(list(argv)) == 0
    first = capsys.readouterr().out
    assert main(list(argv)) == 0
    second = capsys.readouterr().out
    elapsed = time.perf_counter() - t0
    terminal = json.loads(first.strip().splitlines()[-1])
    ok = (
        first == second
        and terminal["kind"] == "state"
        and terminal["status"] == "finished"
        and elapsed < 5.0
    )
    report(
        capsys,
        ok,
        "session determinism",
        f"two scripted replays bitwise identical, status={terminal['status']},"
        f" {elapsed:.2f} s",
    )
