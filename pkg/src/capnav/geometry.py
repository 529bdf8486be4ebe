"""Parametric channel geometries with signed-distance queries.

Two shapes cover the bench scenarios: a straight tube and a planar
Y-junction whose main channel runs along +x with the two daughter
branches splitting symmetrically in the x-y plane. Gravity in the
dynamics module acts along -z, perpendicular to the junction plane.

All lengths are in metres. The signed distance is positive inside the
lumen, zero on the wall, negative outside, and is built from the lateral
surfaces only; the open inlet and outlet ends are transit planes, not
walls.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .errors import InvalidParameterError

# Region labels used by trajectory bookkeeping and exported files.
REGION_INLET = "inlet"
REGION_MAIN = "main"
REGION_JUNCTION = "junction"
REGION_BRANCH_A = "branch_A"
REGION_BRANCH_B = "branch_B"
REGION_EXITED_A = "exited_A"
REGION_EXITED_B = "exited_B"

_MEDIAL_EPS = 1e-12


@dataclass(frozen=True, eq=False)
class Geometry:
    """A channel network queried through signed distances.

    Attributes:
        kind: "tube" or "y_junction".
        diameter: channel bore, identical for main and branches [m].
        main_length: inlet plane to bifurcation point (tube: full length) [m].
        branch_length: bifurcation point to each outlet plane [m].
        branch_angle: full angle between the two daughter branches [rad].
        fillet_radius: rounding radius of the crotch apex [m]; only
            signed-distance queries near the apex feel it.
        inlet_extrusion: straight extension upstream of the inlet plane [m].
    """

    kind: str
    diameter: float
    main_length: float
    branch_length: float = 0.0
    branch_angle: float = 0.0
    fillet_radius: float = 0.0
    inlet_extrusion: float = 0.0
    # Cached axis data; derived in __post_init__.
    _junction: NDArray[np.floating] = field(repr=False, default=None)
    _dir_a: NDArray[np.floating] = field(repr=False, default=None)
    _dir_b: NDArray[np.floating] = field(repr=False, default=None)

    def __post_init__(self):
        if self.kind not in ("tube", "y_junction"):
            raise InvalidParameterError(f"unknown geometry kind {self.kind!r}")
        if self.diameter <= 0.0 or self.main_length <= 0.0:
            raise InvalidParameterError("diameter and main_length must be positive")
        if self.inlet_extrusion < 0.0:
            raise InvalidParameterError("inlet_extrusion must be >= 0")
        if self.kind == "y_junction":
            if self.branch_length <= 0.0:
                raise InvalidParameterError("branch_length must be positive")
            if not 0.0 < self.branch_angle < np.pi:
                raise InvalidParameterError("branch_angle must lie in (0, pi)")
            if self.fillet_radius < 0.0:
                raise InvalidParameterError("fillet_radius must be >= 0")
        half = 0.5 * self.branch_angle
        object.__setattr__(self, "_junction", np.array([self.main_length, 0.0, 0.0]))
        object.__setattr__(self, "_dir_a", np.array([np.cos(half), np.sin(half), 0.0]))
        object.__setattr__(self, "_dir_b", np.array([np.cos(half), -np.sin(half), 0.0]))

    @property
    def radius(self) -> float:
        return 0.5 * self.diameter

    @property
    def junction_point(self) -> NDArray[np.floating]:
        """Bifurcation point on the main axis (tube: the outlet centre)."""
        return self._junction.copy()

    @property
    def branch_dir_a(self) -> NDArray[np.floating]:
        return self._dir_a.copy()

    @property
    def branch_dir_b(self) -> NDArray[np.floating]:
        return self._dir_b.copy()

    @property
    def inlet_x(self) -> float:
        return -self.inlet_extrusion


def build_tube(diameter: float, length: float) -> Geometry:
    """A straight tube along +x from x = 0 to x = length."""
    return Geometry(kind="tube", diameter=diameter, main_length=length)


def build_y_junction(
    diameter: float = 0.005,
    main_length: float = 0.096,
    branch_length: float = 0.046,
    branch_angle: float = 0.5 * np.pi,
    fillet_radius: float = 0.0005,
    inlet_extrusion: float = 0.0,
) -> Geometry:
    """The bench bifurcation: 5 mm bore, 96 mm main run, 46 mm branches.

    The default branch_angle of pi/2 splits the daughters at +-45 degrees
    from the main axis, in the x-y plane.
    """
    return Geometry(
        kind="y_junction",
        diameter=diameter,
        main_length=main_length,
        branch_length=branch_length,
        branch_angle=branch_angle,
        fillet_radius=fillet_radius,
        inlet_extrusion=inlet_extrusion,
    )


def _segment_foot(p: NDArray, a: NDArray, b: NDArray) -> NDArray:
    """Closest point to p on segment a-b."""
    ab = b - a
    denom = float(ab @ ab)
    t = float((p - a) @ ab) / denom if denom > 0.0 else 0.0
    t = min(1.0, max(0.0, t))
    return a + t * ab


def _member_distance(p: NDArray, a: NDArray, b: NDArray, radius: float):
    """Signed distance and raw inward direction for one channel segment.

    Returns (distance, direction, foot_gap). direction points from p
    toward the axis and is not normalized when foot_gap is ~0 (medial
    axis); callers must check foot_gap before trusting it.
    """
    q = _segment_foot(p, a, b)
    delta = q - p
    gap = float(np.sqrt(delta @ delta))
    d = radius - gap
    return d, delta, gap


def _smooth_max(a: float, b: float, k: float) -> tuple[float, float]:
    """Polynomial smooth maximum and the weight of the first argument.

    For k = 0 this degenerates to a hard max. The returned weight h is
    exactly the blend factor of the gradients, since the extra bump term
    k*h*(1-h) has zero net gradient contribution for this blend.
    """
    if k <= 0.0:
        return (a, 1.0) if a >= b else (b, 0.0)
    h = 0.5 + 0.5 * (a - b) / k
    h = min(1.0, max(0.0, h))
    return a * h + b * (1.0 - h) + k * h * (1.0 - h), h


def signed_distance(geom: Geometry, point) -> float:
    """Distance to the nearest wall, positive inside the lumen."""
    d, _, _ = _distance_and_direction(geom, np.asarray(point, dtype=float))
    return d


def signed_distance_and_normal(geom: Geometry, point):
    """Signed distance plus the inward unit normal.

    Returns:
        (distance, normal) where normal is a unit vector pointing from
        the nearest wall into the lumen, or None when the query point
        sits on the medial axis and the direction is undefined.
    """
    p = np.asarray(point, dtype=float)
    d, direction, gap = _distance_and_direction(geom, p)
    if gap < _MEDIAL_EPS:
        return d, None
    n = direction / np.linalg.norm(direction)
    return d, n


def _distance_and_direction(geom: Geometry, p: NDArray):
    """Shared core: distance, unnormalized inward direction, min foot gap."""
    r = geom.radius
    if geom.kind == "tube":
        a = np.zeros(3)
        b = np.array([geom.main_length, 0.0, 0.0])
        return _member_distance(p, a, b, r)

    j = geom._junction
    a0 = np.array([geom.inlet_x, 0.0, 0.0])
    d_main, dir_main, gap_main = _member_distance(p, a0, j, r)
    d_a, dir_a, gap_a = _member_distance(p, j, j + geom.branch_length * geom._dir_a, r)
    d_b, dir_b, gap_b = _member_distance(p, j, j + geom.branch_length * geom._dir_b, r)

    d_br, h = _smooth_max(d_a, d_b, geom.fillet_radius)
    if gap_a < _MEDIAL_EPS or gap_b < _MEDIAL_EPS:
        dir_br = dir_a if gap_a >= gap_b else dir_b
        gap_br = max(gap_a, gap_b)
    else:
        dir_br = h * (dir_a / gap_a) + (1.0 - h) * (dir_b / gap_b)
        gap_br = min(gap_a, gap_b) if 0.0 < h < 1.0 else (gap_a if h == 1.0 else gap_b)

    if d_main >= d_br:
        return d_main, dir_main, gap_main
    return d_br, dir_br, gap_br


def classify_region(geom: Geometry, point) -> str:
    """Coarse label of where a capsule centre sits in the network.

    Branch/exit labels look at the axial progress along each daughter
    axis; the junction label covers one diameter around the crotch.
    """
    p = np.asarray(point, dtype=float)
    if geom.kind == "tube":
        if p[0] <= 0.0:
            return REGION_INLET
        if p[0] >= geom.main_length:
            return REGION_EXITED_A
        return REGION_MAIN

    rel = p - geom._junction
    s_a = float(rel @ geom._dir_a)
    s_b = float(rel @ geom._dir_b)
    if s_a >= geom.branch_length:
        return REGION_EXITED_A
    if s_b >= geom.branch_length:
        return REGION_EXITED_B
    if p[0] <= geom.inlet_x:
        return REGION_INLET
    if p[0] < geom.main_length - geom.diameter:
        return REGION_MAIN
    if max(s_a, s_b) > geom.diameter:
        return REGION_BRANCH_A if s_a > s_b else REGION_BRANCH_B
    return REGION_JUNCTION


def _ring_counts(count: int) -> list[int]:
    """Split count into a centre point plus ring populations.

    Rings hold multiples-of-six capacities (hexagonal packing); a small
    remainder is absorbed by the outermost ring rather than opening a
    sparse extra ring, which reproduces the 1+6+13 layout for 20.
    """
    counts = [1]
    remaining = count - 1
    i = 1
    while remaining > 0:
        cap = 6 * i
        if remaining <= cap or remaining - cap < 3 * (i + 1):
            counts.append(remaining)
            remaining = 0
        else:
            counts.append(cap)
            remaining -= cap
        i += 1
    return counts


def entrance_positions(
    geom: Geometry, count: int, capsule_radius: float
) -> NDArray[np.floating]:
    """Deterministic release points on the inlet plane.

    One centre point plus concentric rings fills the admissible disk of
    radius diameter/2 - capsule_radius, so every capsule starts at least
    one radius clear of the wall.

    Args:
        geom: channel network; points lie on its inlet plane.
        count: number of positions, >= 1.
        capsule_radius: capsule radius used to shrink the disk [m].

    Returns:
        (count, 3) array, identical between calls.
    """
    if count < 1:
        raise InvalidParameterError("count must be >= 1")
    if capsule_radius < 0.0 or capsule_radius >= geom.radius:
        raise InvalidParameterError("capsule_radius must lie in [0, diameter/2)")
    admissible = geom.radius - capsule_radius
    x0 = geom.inlet_x if geom.kind == "y_junction" else 0.0

    counts = _ring_counts(count)
    n_rings = len(counts) - 1
    if n_rings > 0 and admissible <= 0.0:
        raise InvalidParameterError("admissible disk is empty for this capsule")

    points = [np.array([x0, 0.0, 0.0])]
    for ring, m in enumerate(counts[1:], start=1):
        rho = admissible * ring / n_rings
        theta = 2.0 * np.pi * np.arange(m) / m
        for th in theta:
            points.append(np.array([x0, rho * np.cos(th), rho * np.sin(th)]))
    return np.array(points[:count])
