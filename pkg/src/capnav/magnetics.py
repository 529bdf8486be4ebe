"""Magnetic actuation: capsule magnetization, field samplers, and forces.

The electromagnet array is abstracted into samplers that report the flux
density B and its spatial gradient tensor at a point. Two samplers are
provided: a uniform command (constant B and gradient over the workspace,
the usual operating mode) and a gridded workspace map for measured or
precomputed fields.

The capsule is superparamagnetic: its moment follows the local field
direction with a magnitude given by a saturating magnetization curve, and
the force is the gradient tensor acting on that moment,

    F_i = sum_j dB_i/dx_j * m_j.

Torque is ignored; the moment is assumed to track B instantaneously.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from scipy.optimize import brentq

from .errors import InvalidParameterError
from .flowfield import _parse_grid_text, _validate_grid, _write_grid_text, trilinear_sample

_BFIELD_MAGIC = "BFIELD v1"

# Moment of the fabricated capsule at the navigation field strength,
# measured by vibrating-sample magnetometry: 72 memu at 30 mT.
ANCHOR_FIELD_T = 0.030
ANCHOR_MOMENT_AM2 = 7.2e-5
SATURATION_RATIO = 1.6


@dataclass(frozen=True)
class MagneticSample:
    """Field and gradient at one point.

    Attributes:
        b: flux density vector [T].
        grad_b: gradient tensor with entry (i, j) = dB_i/dx_j [T m^-1].
    """

    b: NDArray[np.floating]
    grad_b: NDArray[np.floating]

    def __post_init__(self):
        b = np.asarray(self.b, dtype=float)
        g = np.asarray(self.grad_b, dtype=float)
        if b.shape != (3,) or g.shape != (3, 3):
            raise InvalidParameterError("sample needs b (3,) and grad_b (3, 3)")
        if not (np.all(np.isfinite(b)) and np.all(np.isfinite(g))):
            raise InvalidParameterError("sample values must be finite")
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "grad_b", g)


class MagnetizationCurve:
    """Piecewise-linear capsule moment versus field strength.

    Samples are given for B >= 0 with the moment in A m^2 for the whole
    capsule. Queries interpolate linearly, extend oddly to negative B,
    and clamp at the last sample (saturation).
    """

    def __init__(self, fields_t, moments_am2):
        fields = np.asarray(fields_t, dtype=float)
        moments = np.asarray(moments_am2, dtype=float)
        if fields.ndim != 1 or fields.shape != moments.shape or fields.size < 2:
            raise InvalidParameterError("curve needs matching 1-d arrays, >= 2 samples")
        if fields[0] != 0.0 or moments[0] != 0.0:
            raise InvalidParameterError("curve must start at (0, 0)")
        if np.any(np.diff(fields) <= 0.0):
            raise InvalidParameterError("field samples must be strictly increasing")
        if np.any(np.diff(moments) < 0.0):
            raise InvalidParameterError("moments must be non-decreasing")
        if not (np.all(np.isfinite(fields)) and np.all(np.isfinite(moments))):
            raise InvalidParameterError("curve samples must be finite")
        self.fields_t = fields
        self.moments_am2 = moments

    def moment_at(self, field_t: float) -> float:
        """Capsule moment magnitude at a (signed) field strength [A m^2]."""
        mag = float(np.interp(abs(field_t), self.fields_t, self.moments_am2))
        return -mag if field_t < 0.0 else mag

    @property
    def saturation_am2(self) -> float:
        return float(self.moments_am2[-1])


def _langevin(x):
    """Langevin function coth(x) - 1/x with a series fallback near zero."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    small = np.abs(x) < 1e-4
    xs = x[small]
    out[small] = xs / 3.0 - xs**3 / 45.0
    xl = x[~small]
    out[~small] = 1.0 / np.tanh(xl) - 1.0 / xl
    return out


def default_capsule_curve() -> MagnetizationCurve:
    """Langevin-shaped curve anchored at the measured capsule moment.

    The shape parameter is solved so the curve passes exactly through
    (30 mT, 7.2e-5 A m^2); saturation is 1.6x the anchor. Node spacing
    is 2 mT up to 120 mT, placing a node exactly on the anchor field.
    """
    saturation = SATURATION_RATIO * ANCHOR_MOMENT_AM2
    target = ANCHOR_MOMENT_AM2 / saturation
    x_anchor = brentq(lambda x: float(_langevin(x)) - target, 1e-6, 50.0, xtol=1e-14)
    scale_t = ANCHOR_FIELD_T / x_anchor

    fields = np.arange(61) / 500.0  # 0, 2 mT, ..., 120 mT
    moments = saturation * _langevin(fields / scale_t)
    anchor_idx = int(np.nonzero(fields == ANCHOR_FIELD_T)[0][0])
    moments[anchor_idx] = ANCHOR_MOMENT_AM2
    moments[0] = 0.0
    return MagnetizationCurve(fields, moments)


def load_magnetization_curve(path: str) -> MagnetizationCurve:
    """Read a two-column text file: field [T] and moment [A m^2], ascending."""
    from .errors import FileFormatError

    fields = []
    moments = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            stripped = raw.strip()
            if stripped == "" or stripped.startswith("#"):
                continue
            parts = stripped.split()
            if len(parts) != 2:
                raise FileFormatError("expected two columns", path, lineno)
            try:
                fields.append(float(parts[0]))
                moments.append(float(parts[1]))
            except ValueError:
                raise FileFormatError("non-numeric value", path, lineno) from None
    try:
        return MagnetizationCurve(fields, moments)
    except InvalidParameterError as exc:
        raise FileFormatError(str(exc), path, None) from exc


def save_magnetization_curve(path: str, curve: MagnetizationCurve) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# field_tesla moment_am2\n")
        for b, m in zip(curve.fields_t, curve.moments_am2):
            fh.write(f"{float(b)!r} {float(m)!r}\n")


def magnetic_force(curve: MagnetizationCurve, sample: MagneticSample) -> NDArray[np.floating]:
    """Gradient force on a capsule whose moment is aligned with B.

    Args:
        curve: capsule magnetization curve.
        sample: local field and gradient.

    Returns:
        Force vector [N]; zero when the field vanishes.
    """
    b = sample.b
    b_mag = float(np.linalg.norm(b))
    if b_mag == 0.0:
        return np.zeros(3)
    moment = curve.moment_at(b_mag) / b_mag * b
    return sample.grad_b @ moment


@dataclass(frozen=True)
class CapabilityEnvelope:
    """What the coil array can actually deliver anywhere in the workspace."""

    max_field_t: float = 0.030
    max_gradient_tpm: float = 1.0

    def __post_init__(self):
        if self.max_field_t <= 0.0 or self.max_gradient_tpm <= 0.0:
            raise InvalidParameterError("envelope limits must be positive")


def clamp_command(
    envelope: CapabilityEnvelope, field_magnitude: float, gradient_vector
):
    """Scale a command onto the capability envelope, keeping directions.

    Returns:
        (field_magnitude, gradient_vector) with magnitudes clamped to the
        envelope. Applying the clamp twice changes nothing.
    """
    if field_magnitude < 0.0:
        raise InvalidParameterError("field_magnitude must be >= 0")
    g = np.asarray(gradient_vector, dtype=float)
    if g.shape != (3,) or not np.all(np.isfinite(g)):
        raise InvalidParameterError("gradient_vector must be a finite 3-vector")
    field = min(field_magnitude, envelope.max_field_t)
    g_mag = float(np.linalg.norm(g))
    # Rescale until the norm is inside the limit so a second clamp is a
    # bitwise no-op; rounding can leave one pass an ulp outside.
    while g_mag > envelope.max_gradient_tpm:
        factor = envelope.max_gradient_tpm / g_mag
        if factor >= 1.0:
            break
        g = g * factor
        g_mag = float(np.linalg.norm(g))
    return field, g


class UniformCommand:
    """Spatially uniform field plus gradient, the routine operating mode.

    The gradient tensor is built from the commanded pull vector g and the
    field direction b as grad_b = outer(g, b_hat), then made trace-free.
    With the pull commanded perpendicular to the field (the navigation
    layout) the force on an aligned moment is exactly moment * g.
    """

    def __init__(self, field_direction, field_magnitude: float, gradient_vector):
        if field_magnitude < 0.0:
            raise InvalidParameterError("field_magnitude must be >= 0")
        direction = np.asarray(field_direction, dtype=float)
        if direction.shape != (3,) or not np.all(np.isfinite(direction)):
            raise InvalidParameterError("field_direction must be a finite 3-vector")
        norm = float(np.linalg.norm(direction))
        if field_magnitude > 0.0 and norm == 0.0:
            raise InvalidParameterError("field_direction must be nonzero")
        gradient = np.asarray(gradient_vector, dtype=float)
        if gradient.shape != (3,) or not np.all(np.isfinite(gradient)):
            raise InvalidParameterError("gradient_vector must be a finite 3-vector")

        b_hat = direction / norm if norm > 0.0 else np.zeros(3)
        self.b = field_magnitude * b_hat
        grad = np.outer(gradient, b_hat)
        grad -= (np.trace(grad) / 3.0) * np.eye(3)
        self.grad_b = grad
        self.gradient_vector = gradient.copy()

    def sample(self, point=None) -> MagneticSample:
        return MagneticSample(self.b.copy(), self.grad_b.copy())


def uniform_command(
    field_direction, field_magnitude: float, gradient_vector
) -> UniformCommand:
    """Sampler for a constant field/gradient command over the workspace."""
    return UniformCommand(field_direction, field_magnitude, gradient_vector)


class WorkspaceMap:
    """Field map on a regular grid, trilinearly interpolated per component.

    b_values has shape (nx, ny, nz, 3) and grad_values (nx, ny, nz, 3, 3),
    with node (i, j, k) at origin + (i*dx, j*dy, k*dz).
    """

    def __init__(self, origin, spacing, b_values, grad_values):
        b = np.asarray(b_values, dtype=float)
        g = np.asarray(grad_values, dtype=float)
        if b.ndim != 4 or g.shape != b.shape[:3] + (3, 3):
            raise InvalidParameterError(
                "need b_values (nx, ny, nz, 3) and grad_values (nx, ny, nz, 3, 3)"
            )
        packed = np.concatenate([b, g.reshape(g.shape[:3] + (9,))], axis=3)
        self.origin, self.spacing, self._packed = _validate_grid(origin, spacing, packed, 12)

    @property
    def dims(self) -> tuple[int, int, int]:
        return self._packed.shape[:3]

    @property
    def b_values(self) -> NDArray[np.floating]:
        return self._packed[..., :3]

    @property
    def grad_values(self) -> NDArray[np.floating]:
        return self._packed[..., 3:].reshape(self._packed.shape[:3] + (3, 3))

    def sample(self, point) -> MagneticSample:
        packed = trilinear_sample(self.origin, self.spacing, self._packed, point)
        return MagneticSample(packed[:3], packed[3:].reshape(3, 3))


def sample_workspace(sampler, point) -> MagneticSample:
    """Uniform-interface sampling of any field source."""
    return sampler.sample(point)


def load_bfield(path: str) -> WorkspaceMap:
    """Read a BFIELD v1 file: 12 values per node (B then grad_b row-major)."""
    origin, spacing, grid = _parse_grid_text(path, _BFIELD_MAGIC, 12)
    b = grid[..., :3]
    g = grid[..., 3:].reshape(grid.shape[:3] + (3, 3))
    return WorkspaceMap(origin, spacing, b, g)


def save_bfield(path: str, wmap: WorkspaceMap) -> None:
    _write_grid_text(path, _BFIELD_MAGIC, wmap.origin, wmap.spacing, wmap._packed)
