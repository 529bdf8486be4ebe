"""Compiled fast path for trajectory integration.

These kernels mirror the reference implementations in geometry,
flowfield, and dynamics operation for operation; a parity test keeps the
two paths aligned. Only the analytic flow profiles and uniform field
commands are compiled, which covers the factorial sweeps and interactive
sessions; gridded samplers take the Python path.

Everything here is deterministic: no threading inside a trajectory, no
fastmath reassociation.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from .dynamics import DRAG_SCHILLER_NAUMANN, gravity_buoyancy_acceleration
from .flowfield import PROFILE_PARABOLIC
from .magnetics import magnetic_force

OUT_NONE = 0
OUT_A = 1
OUT_B = 2
OUT_FAILED = -1

_KIND_TUBE = 0.0
_KIND_JUNCTION = 1.0

_MEDIAL_EPS = 1e-12


def pack_geometry(geom) -> np.ndarray:
    """[kind, R, main_length, branch_length, cos, sin, fillet, inlet_x, diameter]"""
    half = 0.5 * geom.branch_angle
    kind = _KIND_TUBE if geom.kind == "tube" else _KIND_JUNCTION
    return np.array(
        [
            kind,
            geom.radius,
            geom.main_length,
            geom.branch_length,
            math.cos(half),
            math.sin(half),
            geom.fillet_radius,
            geom.inlet_x if geom.kind == "y_junction" else 0.0,
            geom.diameter,
        ]
    )


def pack_flow(flow) -> np.ndarray:
    """[profile_flag, power_exponent, mean_velocity, split_fraction]"""
    flag = 0.0 if flow.profile == PROFILE_PARABOLIC else 1.0
    return np.array([flag, flow.power_exponent, flow.mean_velocity, flow.split_fraction])


def pack_capsule(spec, fluid) -> np.ndarray:
    """[radius, mass, tau_stokes, re_coefficient, schiller_naumann_flag]"""
    tau_stokes = spec.density * spec.diameter**2 / (18.0 * fluid.viscosity)
    re_coef = fluid.density * spec.diameter / fluid.viscosity
    sn = 1.0 if spec.drag_law == DRAG_SCHILLER_NAUMANN else 0.0
    return np.array([spec.radius, spec.mass, tau_stokes, re_coef, sn])


def pack_control(control) -> np.ndarray:
    """[dt_constant, dt_min, dt_max, restitution]"""
    return np.array([control.dt_constant, control.dt_min, control.dt_max, control.restitution])


def external_acceleration(spec, fluid, sampler, curve) -> np.ndarray:
    """Constant gravity-buoyancy plus magnetic acceleration for a uniform command."""
    f_mag = magnetic_force(curve, sampler.sample(None))
    return gravity_buoyancy_acceleration(spec, fluid) + f_mag / spec.mass


@njit(cache=True, nogil=True)
def _profile_speed(radial, radius, mean, profile_flag, n):
    xi = radial / radius
    if xi >= 1.0:
        return 0.0
    if profile_flag == 0.0:
        return 2.0 * mean * (1.0 - xi * xi)
    peak = (n + 1.0) * (2.0 * n + 1.0) / (2.0 * n * n)
    return mean * peak * (1.0 - xi) ** (1.0 / n)


@njit(cache=True, nogil=True)
def flow_at(gp, fl, x, y, z):
    radius = gp[1]
    xj = gp[2]
    ca = gp[4]
    sa = gp[5]
    dia = gp[8]
    profile_flag = fl[0]
    n = fl[1]
    mean = fl[2]
    split = fl[3]

    if gp[0] == _KIND_TUBE or x < xj - dia:
        radial = math.sqrt(y * y + z * z)
        return _profile_speed(radial, radius, mean, profile_flag, n), 0.0, 0.0

    relx = x - xj
    # Branch A along (ca, sa, 0), branch B mirrored in y.
    s_a = relx * ca + y * sa
    pax = relx - s_a * ca
    pay = y - s_a * sa
    r_a = math.sqrt(pax * pax + pay * pay + z * z)
    s_b = relx * ca - y * sa
    pbx = relx - s_b * ca
    pby = y + s_b * sa
    r_b = math.sqrt(pbx * pbx + pby * pby + z * z)

    ux = 0.0
    uy = 0.0
    wsum = 0.0
    depth_a = radius - r_a
    if depth_a > 0.0:
        speed = _profile_speed(r_a, radius, split * mean, profile_flag, n)
        w = depth_a * depth_a
        ux += w * speed * ca
        uy += w * speed * sa
        wsum += w
    depth_b = radius - r_b
    if depth_b > 0.0:
        speed = _profile_speed(r_b, radius, (1.0 - split) * mean, profile_flag, n)
        w = depth_b * depth_b
        ux += w * speed * ca
        uy += w * speed * (-sa)
        wsum += w
    if wsum > 0.0:
        ux /= wsum
        uy /= wsum

    if x >= xj:
        return ux, uy, 0.0
    radial = math.sqrt(y * y + z * z)
    u_main = _profile_speed(radial, radius, mean, profile_flag, n)
    t = (x - (xj - dia)) / dia
    if t < 0.0:
        t = 0.0
    elif t > 1.0:
        t = 1.0
    w = t * t * (3.0 - 2.0 * t)
    return (1.0 - w) * u_main + w * ux, w * uy, 0.0


@njit(cache=True, nogil=True)
def sd_normal(gp, x, y, z):
    """Signed distance and inward unit normal; flag 0 on the medial axis."""
    radius = gp[1]
    xj = gp[2]

    if gp[0] == _KIND_TUBE:
        fx = x
        if fx < 0.0:
            fx = 0.0
        elif fx > xj:
            fx = xj
        dx = fx - x
        gap = math.sqrt(dx * dx + y * y + z * z)
        d = radius - gap
        if gap < _MEDIAL_EPS:
            return d, 0.0, 0.0, 0.0, 0
        inv = 1.0 / gap
        return d, dx * inv, -y * inv, -z * inv, 1

    lb = gp[3]
    ca = gp[4]
    sa = gp[5]
    fillet = gp[6]
    x_in = gp[7]

    # Main run, axis from (x_in, 0, 0) to (xj, 0, 0).
    fx = x
    if fx < x_in:
        fx = x_in
    elif fx > xj:
        fx = xj
    dmx = fx - x
    gap_m = math.sqrt(dmx * dmx + y * y + z * z)
    d_m = radius - gap_m

    relx = x - xj
    # Branch A.
    s = relx * ca + y * sa
    if s < 0.0:
        s = 0.0
    elif s > lb:
        s = lb
    dax = (xj + s * ca) - x
    day = s * sa - y
    gap_a = math.sqrt(dax * dax + day * day + z * z)
    d_a = radius - gap_a
    # Branch B.
    s = relx * ca - y * sa
    if s < 0.0:
        s = 0.0
    elif s > lb:
        s = lb
    dbx = (xj + s * ca) - x
    dby = -s * sa - y
    gap_b = math.sqrt(dbx * dbx + dby * dby + z * z)
    d_b = radius - gap_b

    if fillet <= 0.0:
        if d_a >= d_b:
            d_br, h = d_a, 1.0
        else:
            d_br, h = d_b, 0.0
    else:
        h = 0.5 + 0.5 * (d_a - d_b) / fillet
        if h < 0.0:
            h = 0.0
        elif h > 1.0:
            h = 1.0
        d_br = d_a * h + d_b * (1.0 - h) + fillet * h * (1.0 - h)

    if d_m >= d_br:
        if gap_m < _MEDIAL_EPS:
            return d_m, 0.0, 0.0, 0.0, 0
        inv = 1.0 / gap_m
        return d_m, dmx * inv, -y * inv, -z * inv, 1

    if gap_a < _MEDIAL_EPS or gap_b < _MEDIAL_EPS:
        if gap_a >= gap_b:
            if gap_a < _MEDIAL_EPS:
                return d_br, 0.0, 0.0, 0.0, 0
            inv = 1.0 / gap_a
            return d_br, dax * inv, day * inv, -z * inv, 1
        inv = 1.0 / gap_b
        return d_br, dbx * inv, dby * inv, -z * inv, 1

    inv_a = 1.0 / gap_a
    inv_b = 1.0 / gap_b
    gx = h * dax * inv_a + (1.0 - h) * dbx * inv_b
    gy = h * day * inv_a + (1.0 - h) * dby * inv_b
    gz = h * (-z) * inv_a + (1.0 - h) * (-z) * inv_b
    norm = math.sqrt(gx * gx + gy * gy + gz * gz)
    if norm < _MEDIAL_EPS:
        return d_br, 0.0, 0.0, 0.0, 0
    inv = 1.0 / norm
    return d_br, gx * inv, gy * inv, gz * inv, 1


@njit(cache=True, nogil=True)
def advance(gp, fl, a_ext, cp, ct, t_end, max_steps, state, rec_t, rec_pv, stride):
    """March one capsule until exit, t_end, max_steps, or a numeric failure.

    state = [t, x, y, z, vx, vy, vz], updated in place. Recording writes
    every stride-th step into rec_t/rec_pv when stride > 0. Returns
    (outcome, wall_contacts, medial_skips, records_written, steps).
    """
    t = state[0]
    x = state[1]
    y = state[2]
    z = state[3]
    vx = state[4]
    vy = state[5]
    vz = state[6]

    r_cap = cp[0]
    tau_stokes = cp[2]
    re_coef = cp[3]
    use_sn = cp[4] != 0.0
    dt_const = ct[0]
    dt_min = ct[1]
    dt_max = ct[2]
    restitution = ct[3]
    xj = gp[2]
    lb = gp[3]
    ca = gp[4]
    sa = gp[5]
    is_tube = gp[0] == _KIND_TUBE

    outcome = OUT_NONE
    contacts = 0
    medial = 0
    nrec = 0
    steps = 0

    while steps < max_steps:
        if t >= t_end:
            break
        ux, uy, uz = flow_at(gp, fl, x, y, z)
        speed_p = math.sqrt(vx * vx + vy * vy + vz * vz)
        speed_f = math.sqrt(ux * ux + uy * uy + uz * uz)
        total = speed_p + speed_f
        dt = dt_const / total if total > 0.0 else dt_max
        if dt < dt_min:
            dt = dt_min
        elif dt > dt_max:
            dt = dt_max
        if t + dt > t_end:
            dt = t_end - t
            if dt <= 0.0:
                break

        sx = ux - vx
        sy = uy - vy
        sz = uz - vz
        slip = math.sqrt(sx * sx + sy * sy + sz * sz)
        tau = tau_stokes
        if use_sn:
            tau = tau / (1.0 + 0.15 * (re_coef * slip) ** 0.687)
        decay = math.exp(-dt / tau)
        gain = tau * (1.0 - decay)
        vx = ux + (vx - ux) * decay + a_ext[0] * gain
        vy = uy + (vy - uy) * decay + a_ext[1] * gain
        vz = uz + (vz - uz) * decay + a_ext[2] * gain
        x += vx * dt
        y += vy * dt
        z += vz * dt
        t += dt
        steps += 1

        d, nx, ny, nz, ok = sd_normal(gp, x, y, z)
        if d < r_cap:
            if ok == 0:
                medial += 1
            else:
                for _ in range(12):
                    push = r_cap - d
                    x += push * nx
                    y += push * ny
                    z += push * nz
                    d, nx2, ny2, nz2, ok2 = sd_normal(gp, x, y, z)
                    if ok2 == 0:
                        break
                    nx = nx2
                    ny = ny2
                    nz = nz2
                    if abs(d - r_cap) <= 1.0e-12:
                        break
                vn = vx * nx + vy * ny + vz * nz
                if vn < 0.0:
                    f = (1.0 + restitution) * vn
                    vx -= f * nx
                    vy -= f * ny
                    vz -= f * nz
                contacts += 1

        if not (
            math.isfinite(x)
            and math.isfinite(y)
            and math.isfinite(z)
            and math.isfinite(vx)
            and math.isfinite(vy)
            and math.isfinite(vz)
        ):
            outcome = OUT_FAILED
            break

        if is_tube:
            if x >= xj:
                outcome = OUT_A
                break
        else:
            relx = x - xj
            s_a = relx * ca + y * sa
            s_b = relx * ca - y * sa
            if s_a >= lb:
                outcome = OUT_A
                break
            if s_b >= lb:
                outcome = OUT_B
                break

        if stride > 0 and steps % stride == 0 and nrec < rec_t.shape[0]:
            rec_t[nrec] = t
            rec_pv[nrec, 0] = x
            rec_pv[nrec, 1] = y
            rec_pv[nrec, 2] = z
            rec_pv[nrec, 3] = vx
            rec_pv[nrec, 4] = vy
            rec_pv[nrec, 5] = vz
            nrec += 1

    state[0] = t
    state[1] = x
    state[2] = y
    state[3] = z
    state[4] = vx
    state[5] = vy
    state[6] = vz
    return outcome, contacts, medial, nrec, steps
