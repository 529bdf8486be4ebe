"""Lagrangian capsule tracking with one-way flow coupling.

The capsule is a rigid sphere carried by the sampled fluid velocity,
relaxing toward it with a drag time constant tau_p, and accelerated by
buoyancy-corrected gravity and the magnetic gradient force. Velocities
update with a semi-implicit exponential step that is exact for constant
coefficients, positions with the updated velocity, and wall hits resolve
afterward as specular reflections one capsule radius from the wall.

All values are SI; gravity acts along -z.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .errors import InvalidParameterError, NumericalFailureError
from .flowfield import FlowField, FluidProperties
from .geometry import (
    Geometry,
    REGION_EXITED_A,
    REGION_EXITED_B,
    classify_region,
    signed_distance_and_normal,
)
from .magnetics import MagnetizationCurve, UniformCommand, magnetic_force

STANDARD_GRAVITY = 9.81

DRAG_STOKES = "stokes"
DRAG_SCHILLER_NAUMANN = "schiller_naumann"

OUTCOME_STALLED = "stalled"
OUTCOME_EXITED_A = "exited_A"
OUTCOME_EXITED_B = "exited_B"
OUTCOME_DISSOLVED = "dissolved"


@dataclass(frozen=True)
class CapsuleSpec:
    """Geometric and material description of one capsule.

    Attributes:
        diameter: sphere diameter [m].
        density: bulk density [kg m^-3].
        drag_law: "stokes" or "schiller_naumann" (finite-Re correction).
    """

    diameter: float = 1.4e-3
    density: float = 3187.74
    drag_law: str = DRAG_SCHILLER_NAUMANN

    def __post_init__(self):
        if self.diameter <= 0.0 or self.density <= 0.0:
            raise InvalidParameterError("diameter and density must be positive")
        if self.drag_law not in (DRAG_STOKES, DRAG_SCHILLER_NAUMANN):
            raise InvalidParameterError(f"unknown drag law {self.drag_law!r}")

    @property
    def radius(self) -> float:
        return 0.5 * self.diameter

    @property
    def volume(self) -> float:
        return (np.pi / 6.0) * self.diameter**3

    @property
    def mass(self) -> float:
        return self.density * self.volume


@dataclass
class CapsuleState:
    """Instantaneous capsule state along a trajectory."""

    time: float
    position: NDArray[np.floating]
    velocity: NDArray[np.floating]
    region: str
    dissolved_fraction: float = 0.0

    def copy(self) -> "CapsuleState":
        return CapsuleState(
            self.time,
            self.position.copy(),
            self.velocity.copy(),
            self.region,
            self.dissolved_fraction,
        )


@dataclass(frozen=True)
class TrajectoryLimits:
    max_time: float = 5.0
    max_steps: int = 5_000_000


@dataclass(frozen=True)
class StepControl:
    """Adaptive time-step rule dt = dt_constant / (|u_p| + |u_f|), clamped."""

    dt_constant: float = 1.0e-5
    dt_min: float = 1.0e-7
    dt_max: float = 1.0e-3
    restitution: float = 1.0

    def __post_init__(self):
        if self.dt_constant <= 0.0 or self.dt_min <= 0.0 or self.dt_max < self.dt_min:
            raise InvalidParameterError("need dt_constant > 0 and 0 < dt_min <= dt_max")
        if not 0.0 <= self.restitution <= 1.0:
            raise InvalidParameterError("restitution must lie in [0, 1]")


def relaxation_time(spec: CapsuleSpec, fluid: FluidProperties, slip_speed: float = 0.0) -> float:
    """Velocity relaxation time tau_p.

    The Stokes value rho_p d^2 / (18 mu) is divided by the
    Schiller-Naumann factor 1 + 0.15 Re_p^0.687 when the spec selects the
    finite-Reynolds drag law; at zero slip the two laws agree.
    """
    if slip_speed < 0.0:
        raise InvalidParameterError("slip_speed must be >= 0")
    tau = spec.density * spec.diameter**2 / (18.0 * fluid.viscosity)
    if spec.drag_law == DRAG_SCHILLER_NAUMANN:
        re = particle_reynolds(spec, fluid, slip_speed)
        tau = tau / (1.0 + 0.15 * re**0.687)
    return tau


def particle_reynolds(spec: CapsuleSpec, fluid: FluidProperties, slip_speed: float) -> float:
    return fluid.density * slip_speed * spec.diameter / fluid.viscosity


def gravity_buoyancy_acceleration(
    spec: CapsuleSpec, fluid: FluidProperties, gravity: float = STANDARD_GRAVITY
) -> NDArray[np.floating]:
    """Acceleration from weight minus buoyancy, along -z for a dense capsule."""
    return np.array([0.0, 0.0, -gravity * (spec.density - fluid.density) / spec.density])


def net_force(
    spec: CapsuleSpec,
    fluid: FluidProperties,
    curve: MagnetizationCurve,
    sample,
    flow_velocity,
    velocity,
    gravity: float = STANDARD_GRAVITY,
) -> NDArray[np.floating]:
    """Instantaneous force budget: drag + buoyant weight + magnetic pull."""
    u_f = np.asarray(flow_velocity, dtype=float)
    v = np.asarray(velocity, dtype=float)
    slip_vec = u_f - v
    slip = float(np.linalg.norm(slip_vec))
    tau = relaxation_time(spec, fluid, slip)
    drag = spec.mass * slip_vec / tau
    weight = spec.mass * gravity_buoyancy_acceleration(spec, fluid, gravity)
    return drag + weight + magnetic_force(curve, sample)


def adaptive_dt(particle_speed: float, fluid_speed: float, control: StepControl) -> float:
    """Time step shrinking with the motion scale, clamped to the control band."""
    total = particle_speed + fluid_speed
    dt = control.dt_constant / total if total > 0.0 else control.dt_max
    return min(control.dt_max, max(control.dt_min, dt))


def reflect_collision(
    geom: Geometry, position, velocity, capsule_radius: float, restitution: float = 1.0
):
    """Push an overlapping capsule back to one radius and reflect it.

    Returns:
        (position, velocity, collided, on_medial). The position is
        projected along the inward normal until the signed distance
        matches the capsule radius (iterating where the wall blends);
        the normal velocity component is reversed scaled by the
        restitution, leaving the tangential part untouched. A centre
        exactly on the medial axis has no defined direction: the state
        passes through unchanged with on_medial=True.
    """
    p = np.asarray(position, dtype=float).copy()
    v = np.asarray(velocity, dtype=float).copy()
    d, n = signed_distance_and_normal(geom, p)
    if d >= capsule_radius:
        return p, v, False, False
    if n is None:
        return p, v, False, True
    for _ in range(12):
        p = p + (capsule_radius - d) * n
        d, n_next = signed_distance_and_normal(geom, p)
        if n_next is None:
            break
        n = n_next
        if abs(d - capsule_radius) <= 1.0e-12:
            break
    v_n = float(v @ n)
    if v_n < 0.0:
        v = v - (1.0 + restitution) * v_n * n
    return p, v, True, False


def step(
    geom: Geometry,
    flow,
    sampler,
    curve: MagnetizationCurve,
    spec: CapsuleSpec,
    fluid: FluidProperties,
    state: CapsuleState,
    dt: float,
    control: StepControl = StepControl(),
):
    """One integration step of length dt; collisions resolved afterward.

    Returns:
        (new_state, collided, on_medial). Raises NumericalFailureError
        carrying the last valid state if the update produces non-finite
        values.
    """
    if dt < 0.0:
        raise InvalidParameterError("dt must be >= 0")
    if dt == 0.0:
        return state.copy(), False, False

    p = state.position
    v = state.velocity
    u_f = np.asarray(flow.velocity_at(p), dtype=float)
    slip = float(np.linalg.norm(u_f - v))
    tau = relaxation_time(spec, fluid, slip)
    sample = sampler.sample(p)
    accel = gravity_buoyancy_acceleration(spec, fluid) + magnetic_force(curve, sample) / spec.mass

    decay = math.exp(-dt / tau)
    gain = tau * (1.0 - decay)
    v_new = u_f + (v - u_f) * decay + accel * gain
    p_new = p + v_new * dt

    p_new, v_new, collided, on_medial = reflect_collision(
        geom, p_new, v_new, spec.radius, control.restitution
    )
    if not (np.all(np.isfinite(p_new)) and np.all(np.isfinite(v_new))):
        raise NumericalFailureError("non-finite state after step", last_state=state.copy())

    new_state = CapsuleState(
        time=state.time + dt,
        position=p_new,
        velocity=v_new,
        region=classify_region(geom, p_new),
        dissolved_fraction=state.dissolved_fraction,
    )
    return new_state, collided, on_medial


@dataclass
class Trajectory:
    """Recorded capsule path with its termination bookkeeping.

    times/positions/velocities hold a decimated recording (the first and
    last states always included); outcome is one of "exited_A",
    "exited_B", "stalled".
    """

    times: NDArray[np.floating]
    positions: NDArray[np.floating]
    velocities: NDArray[np.floating]
    regions: list[str]
    outcome: str
    wall_contacts: int
    medial_skips: int
    final_state: CapsuleState

    @property
    def transit_time(self) -> float:
        return float(self.times[-1])

    def to_csv(self, path: str) -> None:
        """Write the recording: header t,x,y,z,vx,vy,vz,region, 9 significant digits."""
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("t,x,y,z,vx,vy,vz,region\n")
            for i in range(len(self.times)):
                nums = [self.times[i], *self.positions[i], *self.velocities[i]]
                fh.write(",".join(f"{v:.9g}" for v in nums) + f",{self.regions[i]}\n")


def _outcome_from_region(region: str) -> str | None:
    if region == REGION_EXITED_A:
        return OUTCOME_EXITED_A
    if region == REGION_EXITED_B:
        return OUTCOME_EXITED_B
    return None


def simulate_trajectory(
    geom: Geometry,
    flow,
    sampler,
    curve: MagnetizationCurve,
    spec: CapsuleSpec,
    fluid: FluidProperties,
    start_position,
    start_velocity=None,
    limits: TrajectoryLimits = TrajectoryLimits(),
    control: StepControl = StepControl(),
    record_max: int = 4000,
) -> Trajectory:
    """Integrate one capsule from release to exit, stall, or failure.

    The capsule seeds with the local fluid velocity unless
    start_velocity is given. Analytic flow plus a uniform field command
    dispatches to the compiled fast path; any other sampler combination
    runs the identical update in Python.

    Results are deterministic: the same inputs give bit-identical
    trajectories on every run.
    """
    p0 = np.asarray(start_position, dtype=float)
    u0 = np.asarray(flow.velocity_at(p0), dtype=float)
    v0 = u0 if start_velocity is None else np.asarray(start_velocity, dtype=float)

    fast = (
        isinstance(flow, FlowField)
        and isinstance(sampler, UniformCommand)
        and flow.geometry is geom
    )
    if fast:
        return _simulate_kernel(
            geom, flow, sampler, curve, spec, fluid, p0, v0, limits, control, record_max
        )
    return _simulate_python(
        geom, flow, sampler, curve, spec, fluid, p0, v0, limits, control, record_max
    )


def _simulate_python(
    geom, flow, sampler, curve, spec, fluid, p0, v0, limits, control, record_max
) -> Trajectory:
    state = CapsuleState(0.0, p0.copy(), v0.copy(), classify_region(geom, p0))
    stride = max(1, limits.max_steps // max(2, record_max))
    rec_t = [state.time]
    rec_p = [state.position.copy()]
    rec_v = [state.velocity.copy()]
    rec_r = [state.region]
    contacts = 0
    medial = 0
    outcome = OUTCOME_STALLED

    for n_steps in range(1, limits.max_steps + 1):
        u_f = np.asarray(flow.velocity_at(state.position), dtype=float)
        dt = adaptive_dt(
            float(np.linalg.norm(state.velocity)), float(np.linalg.norm(u_f)), control
        )
        if state.time + dt > limits.max_time:
            dt = limits.max_time - state.time
            if dt <= 0.0:
                break
        state, collided, on_medial = step(
            geom, flow, sampler, curve, spec, fluid, state, dt, control
        )
        if collided:
            contacts += 1
        elif on_medial:
            medial += 1
        exit_label = _outcome_from_region(state.region)
        if n_steps % stride == 0 or exit_label is not None:
            rec_t.append(state.time)
            rec_p.append(state.position.copy())
            rec_v.append(state.velocity.copy())
            rec_r.append(state.region)
        if exit_label is not None:
            outcome = exit_label
            break
        if state.time >= limits.max_time:
            break

    if rec_t[-1] != state.time:
        rec_t.append(state.time)
        rec_p.append(state.position.copy())
        rec_v.append(state.velocity.copy())
        rec_r.append(state.region)
    return Trajectory(
        times=np.asarray(rec_t),
        positions=np.asarray(rec_p),
        velocities=np.asarray(rec_v),
        regions=rec_r,
        outcome=outcome,
        wall_contacts=contacts,
        medial_skips=medial,
        final_state=state,
    )


def _simulate_kernel(
    geom, flow, sampler, curve, spec, fluid, p0, v0, limits, control, record_max
) -> Trajectory:
    from . import kernels

    gp = kernels.pack_geometry(geom)
    fl = kernels.pack_flow(flow)
    a_ext = kernels.external_acceleration(spec, fluid, sampler, curve)
    cp = kernels.pack_capsule(spec, fluid)
    ct = kernels.pack_control(control)

    state = np.array([0.0, p0[0], p0[1], p0[2], v0[0], v0[1], v0[2]])
    n_rec = max(2, record_max)
    stride = max(1, limits.max_steps // n_rec)
    rec_t = np.empty(n_rec + 2)
    rec_pv = np.empty((n_rec + 2, 6))

    code, contacts, medial, n_written, _ = kernels.advance(
        gp, fl, a_ext, cp, ct, limits.max_time, limits.max_steps, state, rec_t, rec_pv, stride
    )
    if code == kernels.OUT_FAILED:
        last = CapsuleState(
            state[0], state[1:4].copy(), state[4:7].copy(), classify_region(geom, state[1:4])
        )
        raise NumericalFailureError("non-finite state during trajectory", last_state=last)

    times = np.concatenate([[0.0], rec_t[:n_written], [state[0]]])
    pos = np.concatenate([[p0], rec_pv[:n_written, :3], [state[1:4].copy()]])
    vel = np.concatenate([[v0], rec_pv[:n_written, 3:], [state[4:7].copy()]])
    keep = np.concatenate([[True], np.diff(times) > 0.0])
    times, pos, vel = times[keep], pos[keep], vel[keep]
    regions = [classify_region(geom, q) for q in pos]

    outcome = {
        kernels.OUT_A: OUTCOME_EXITED_A,
        kernels.OUT_B: OUTCOME_EXITED_B,
    }.get(code, OUTCOME_STALLED)
    final = CapsuleState(
        state[0], state[1:4].copy(), state[4:7].copy(), regions[-1]
    )
    return Trajectory(
        times=times,
        positions=pos,
        velocities=vel,
        regions=regions,
        outcome=outcome,
        wall_contacts=int(contacts),
        medial_skips=int(medial),
        final_state=final,
    )
