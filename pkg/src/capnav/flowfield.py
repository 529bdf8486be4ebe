"""Channel flow sampling: analytic developed profiles and gridded fields.

All values are SI. Analytic profiles assume fully developed flow at the
inlet (the bench loop conditions the flow upstream), so the same radial
shape applies along each straight run. Near the bifurcation crotch the
main-channel profile is blended into the daughter profiles over one
diameter; daughter flow rates follow the configured split so that the
inlet flux equals the sum of the outlet fluxes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .errors import FileFormatError, InvalidParameterError, OutOfDomainError
from .geometry import Geometry

RE_TRANSITION = 2300.0
BLASIUS_RE_MIN = 3000.0
BLASIUS_RE_MAX = 1.0e5
DEFAULT_POWER_EXPONENT = 7.0

PROFILE_PARABOLIC = "parabolic"
PROFILE_POWER_LAW = "power_law"


@dataclass(frozen=True)
class FluidProperties:
    """Newtonian carrier fluid.

    Attributes:
        density: [kg m^-3]
        viscosity: dynamic viscosity [Pa s]
    """

    density: float
    viscosity: float

    def __post_init__(self):
        if self.density <= 0.0 or self.viscosity <= 0.0:
            raise InvalidParameterError("density and viscosity must be positive")

    @staticmethod
    def water() -> "FluidProperties":
        """Bench water at room temperature."""
        return FluidProperties(density=998.3, viscosity=0.001)


def reynolds(fluid: FluidProperties, mean_velocity: float, diameter: float) -> float:
    """Bulk Reynolds number rho*u*D/mu."""
    if diameter <= 0.0:
        raise InvalidParameterError("diameter must be positive")
    if mean_velocity < 0.0:
        raise InvalidParameterError("mean_velocity must be >= 0")
    return fluid.density * mean_velocity * diameter / fluid.viscosity


def friction_factor_from_pressure(
    pressure_drop: float,
    diameter: float,
    length: float,
    density: float,
    mean_velocity: float,
) -> float:
    """Darcy friction factor from a measured pressure drop."""
    if min(diameter, length, density) <= 0.0 or mean_velocity <= 0.0:
        raise InvalidParameterError("diameter, length, density, mean_velocity must be positive")
    return pressure_drop * diameter / (0.5 * density * mean_velocity**2 * length)


def friction_factor_blasius(re: float) -> float:
    """Smooth-pipe Blasius correlation, valid for 3000 <= Re <= 1e5."""
    if not BLASIUS_RE_MIN <= re <= BLASIUS_RE_MAX:
        raise OutOfDomainError(f"Blasius correlation not valid at Re={re:g}")
    return 0.316 / re**0.25


def power_law_peak_factor(n: float) -> float:
    """Centreline/mean velocity ratio of the 1/n power-law profile."""
    return (n + 1.0) * (2.0 * n + 1.0) / (2.0 * n * n)


def _smoothstep(t: float) -> float:
    t = min(1.0, max(0.0, t))
    return t * t * (3.0 - 2.0 * t)


@dataclass(frozen=True)
class FlowField:
    """Analytic developed flow bound to a geometry.

    profile is "parabolic" (laminar) or "power_law" (turbulent, exponent
    power_exponent). split_fraction is the share of the inlet flow that
    leaves through branch A.
    """

    geometry: Geometry
    fluid: FluidProperties
    mean_velocity: float
    profile: str
    power_exponent: float = DEFAULT_POWER_EXPONENT
    split_fraction: float = 0.5

    def __post_init__(self):
        if self.mean_velocity < 0.0:
            raise InvalidParameterError("mean_velocity must be >= 0")
        if self.profile not in (PROFILE_PARABOLIC, PROFILE_POWER_LAW):
            raise InvalidParameterError(f"unknown profile {self.profile!r}")
        if self.power_exponent <= 0.0:
            raise InvalidParameterError("power_exponent must be positive")
        if not 0.0 <= self.split_fraction <= 1.0:
            raise InvalidParameterError("split_fraction must lie in [0, 1]")

    def _axial_speed(self, radial: float, mean: float) -> float:
        """Profile speed at distance radial from the local axis; 0 at/past the wall."""
        xi = radial / self.geometry.radius
        if xi >= 1.0:
            return 0.0
        if self.profile == PROFILE_PARABOLIC:
            return 2.0 * mean * (1.0 - xi * xi)
        n = self.power_exponent
        return mean * power_law_peak_factor(n) * (1.0 - xi) ** (1.0 / n)

    def velocity_at(self, point) -> NDArray[np.floating]:
        """Fluid velocity vector at a point, zero at and beyond the walls."""
        p = np.asarray(point, dtype=float)
        geom = self.geometry

        if geom.kind == "tube":
            radial = float(np.hypot(p[1], p[2]))
            return np.array([self._axial_speed(radial, self.mean_velocity), 0.0, 0.0])

        xj = geom.main_length
        dia = geom.diameter
        if p[0] < xj - dia:
            radial = float(np.hypot(p[1], p[2]))
            return np.array([self._axial_speed(radial, self.mean_velocity), 0.0, 0.0])

        # Daughter contributions, depth-weighted so the field stays smooth
        # through the overlap and exactly zero on every wall.
        rel = p - geom.junction_point
        u_branch = np.zeros(3)
        weight_sum = 0.0
        for direction, share in (
            (geom.branch_dir_a, self.split_fraction),
            (geom.branch_dir_b, 1.0 - self.split_fraction),
        ):
            s = float(rel @ direction)
            perp = rel - s * direction
            radial = float(np.linalg.norm(perp))
            depth = geom.radius - radial
            if depth <= 0.0:
                continue
            speed = self._axial_speed(radial, share * self.mean_velocity)
            w = depth * depth
            u_branch += w * speed * direction
            weight_sum += w
        if weight_sum > 0.0:
            u_branch /= weight_sum

        if p[0] >= xj:
            return u_branch
        radial = float(np.hypot(p[1], p[2]))
        u_main = np.array([self._axial_speed(radial, self.mean_velocity), 0.0, 0.0])
        w = _smoothstep((p[0] - (xj - dia)) / dia)
        return (1.0 - w) * u_main + w * u_branch


def make_flow(
    geometry: Geometry,
    fluid: FluidProperties,
    mean_velocity: float,
    split_fraction: float = 0.5,
    profile: str = "auto",
    power_exponent: float = DEFAULT_POWER_EXPONENT,
) -> FlowField:
    """Build a FlowField, picking the profile from Re when profile="auto"."""
    if profile == "auto":
        re = reynolds(fluid, mean_velocity, geometry.diameter)
        profile = PROFILE_PARABOLIC if re < RE_TRANSITION else PROFILE_POWER_LAW
    return FlowField(
        geometry=geometry,
        fluid=fluid,
        mean_velocity=mean_velocity,
        profile=profile,
        power_exponent=power_exponent,
        split_fraction=split_fraction,
    )


def cross_section_flux(
    field, center, axis, radius: float, samples: int = 64
) -> float:
    """Volume flux through a disk, midpoint rule on a samples x samples grid.

    field is anything with velocity_at (FlowField or GridVectorField).
    """
    center = np.asarray(center, dtype=float)
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    helper = np.array([0.0, 0.0, 1.0]) if abs(axis[2]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = np.cross(axis, helper)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(axis, e1)

    h = 2.0 * radius / samples
    offsets = -radius + h * (np.arange(samples) + 0.5)
    flux = 0.0
    for a in offsets:
        for b in offsets:
            if a * a + b * b > radius * radius:
                continue
            u = field.velocity_at(center + a * e1 + b * e2)
            flux += float(u @ axis) * h * h
    return flux


def _validate_grid(origin, spacing, values, components: int):
    origin = np.asarray(origin, dtype=float)
    spacing = np.asarray(spacing, dtype=float)
    values = np.asarray(values, dtype=float)
    if origin.shape != (3,) or spacing.shape != (3,):
        raise InvalidParameterError("origin and spacing must be 3-vectors")
    if np.any(spacing <= 0.0):
        raise InvalidParameterError("spacing must be positive")
    if values.ndim != 4 or values.shape[3] != components:
        raise InvalidParameterError(f"values must have shape (nx, ny, nz, {components})")
    if any(n < 2 for n in values.shape[:3]):
        raise InvalidParameterError("grid needs at least 2 nodes per axis")
    if not np.all(np.isfinite(values)):
        raise InvalidParameterError("grid values must be finite")
    return origin, spacing, values


def trilinear_sample(origin, spacing, values, point) -> NDArray[np.floating]:
    """Trilinear interpolation on a regular grid of any component count.

    Queries landing within 1e-9 cells of a node snap to it, so node
    queries return the stored values bit for bit. Points outside the
    grid bounds raise OutOfDomainError.
    """
    p = np.asarray(point, dtype=float)
    rel = (p - origin) / spacing
    dims = values.shape[:3]
    snapped = np.rint(rel)
    near = np.abs(rel - snapped) < 1e-9
    rel = np.where(near, snapped, rel)
    if np.any(rel < 0.0) or np.any(rel > np.array(dims) - 1.0):
        raise OutOfDomainError(f"point {p.tolist()} outside grid bounds")
    idx = np.minimum(rel.astype(int), np.array(dims) - 2)
    frac = rel - idx
    i, j, k = idx
    fx, fy, fz = frac
    out = np.zeros(values.shape[3])
    for di, wx in ((0, 1.0 - fx), (1, fx)):
        for dj, wy in ((0, 1.0 - fy), (1, fy)):
            for dk, wz in ((0, 1.0 - fz), (1, fz)):
                w = wx * wy * wz
                if w != 0.0:
                    out += w * values[i + di, j + dj, k + dk]
    return out


class GridVectorField:
    """Velocity vectors on a regular grid with trilinear interpolation.

    values has shape (nx, ny, nz, 3); node (i, j, k) sits at
    origin + (i*dx, j*dy, k*dz).
    """

    def __init__(self, origin, spacing, values):
        self.origin, self.spacing, self.values = _validate_grid(origin, spacing, values, 3)

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.values.shape[:3]

    def velocity_at(self, point) -> NDArray[np.floating]:
        return self.sample(point)

    def sample(self, point) -> NDArray[np.floating]:
        return trilinear_sample(self.origin, self.spacing, self.values, point)


_VFIELD_MAGIC = "VFIELD v1"


def _parse_grid_text(path: str, magic: str, per_node: int):
    """Shared reader for the grid formats: header then one node per line."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.readlines()

    lineno = 0
    body_start = None
    for idx, raw in enumerate(lines):
        stripped = raw.strip()
        if stripped.startswith("#") or stripped == "":
            continue
        lineno = idx + 1
        if stripped != magic:
            raise FileFormatError(f"expected header {magic!r}, got {stripped!r}", path, lineno)
        body_start = idx + 1
        break
    if body_start is None:
        raise FileFormatError("empty file", path, None)

    def fields(idx: int, name: str, count: int):
        if idx >= len(lines):
            raise FileFormatError(f"missing {name} line", path, len(lines))
        parts = lines[idx].split()
        if len(parts) != count + 1 or parts[0] != name:
            raise FileFormatError(f"malformed {name} line", path, idx + 1)
        return parts[1:]

    try:
        dims = tuple(int(v) for v in fields(body_start, "dims", 3))
    except ValueError:
        raise FileFormatError("dims must be integers", path, body_start + 1) from None
    if any(n < 2 for n in dims):
        raise FileFormatError("dims must each be >= 2", path, body_start + 1)
    try:
        origin = [float(v) for v in fields(body_start + 1, "origin", 3)]
        spacing = [float(v) for v in fields(body_start + 2, "spacing", 3)]
    except ValueError:
        raise FileFormatError("origin/spacing must be numbers", path, body_start + 2) from None

    n_nodes = dims[0] * dims[1] * dims[2]
    first_value_line = body_start + 3
    data = np.empty((n_nodes, per_node), dtype=float)
    row = 0
    for idx in range(first_value_line, len(lines)):
        stripped = lines[idx].strip()
        if stripped == "":
            continue
        if stripped.startswith("#"):
            raise FileFormatError("comments are only allowed before the header", path, idx + 1)
        parts = stripped.split()
        if len(parts) != per_node:
            raise FileFormatError(
                f"expected {per_node} values per node, got {len(parts)}", path, idx + 1
            )
        if row >= n_nodes:
            raise FileFormatError(f"more than {n_nodes} node lines", path, idx + 1)
        try:
            data[row] = [float(v) for v in parts]
        except ValueError:
            raise FileFormatError("non-numeric value", path, idx + 1) from None
        if not np.all(np.isfinite(data[row])):
            raise FileFormatError("non-finite value", path, idx + 1)
        row += 1
    if row != n_nodes:
        raise FileFormatError(f"expected {n_nodes} node lines, found {row}", path, len(lines))

    # x varies fastest in the file; unpack to (nx, ny, nz, per_node).
    nx, ny, nz = dims
    grid = data.reshape(nz, ny, nx, per_node).transpose(2, 1, 0, 3)
    return origin, spacing, grid


def _write_grid_text(path: str, magic: str, origin, spacing, grid) -> None:
    nx, ny, nz = grid.shape[:3]
    flat = grid.transpose(2, 1, 0, 3).reshape(nx * ny * nz, grid.shape[3])
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(magic + "\n")
        fh.write(f"dims {nx} {ny} {nz}\n")
        fh.write("origin " + " ".join(repr(float(v)) for v in origin) + "\n")
        fh.write("spacing " + " ".join(repr(float(v)) for v in spacing) + "\n")
        for row in flat:
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")


def load_vfield(path: str) -> GridVectorField:
    """Read a VFIELD v1 file (velocity vectors on a regular grid)."""
    origin, spacing, grid = _parse_grid_text(path, _VFIELD_MAGIC, 3)
    return GridVectorField(origin, spacing, grid)


def save_vfield(path: str, field: GridVectorField) -> None:
    """Write a GridVectorField as VFIELD v1; floats round-trip bit-exactly."""
    _write_grid_text(path, _VFIELD_MAGIC, field.origin, field.spacing, field.values)
