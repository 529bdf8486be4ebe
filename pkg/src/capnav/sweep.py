"""Full factorial navigation sweeps over mean velocity and pull gradient.

Each cell of the design releases one capsule per entrance position into
the bifurcation with a constant field along the main channel and a
constant gradient pulling toward the target branch, then tabulates the
fraction that exits through the target. Results are deterministic and
bit-identical for any worker count: every trajectory is an independent
integration whose inputs do not depend on scheduling.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray
from scipy.stats import spearmanr

from . import kernels
from .dynamics import CapsuleSpec, StepControl, TrajectoryLimits
from .errors import FileFormatError, InvalidParameterError
from .flowfield import FluidProperties, make_flow
from .geometry import Geometry, build_y_junction, entrance_positions
from .magnetics import MagnetizationCurve, default_capsule_curve, uniform_command

OUTCOME_LABELS = {
    kernels.OUT_NONE: "stalled",
    kernels.OUT_A: "exited_A",
    kernels.OUT_B: "exited_B",
    kernels.OUT_FAILED: "failed",
}
_LABEL_CODES = {label: code for code, label in OUTCOME_LABELS.items()}


@dataclass(frozen=True)
class FactorialDesign:
    """The swept factors: mean velocities [m/s] and gradients [T/m].

    target_branch selects which daughter the gradient pulls toward; the
    field of field_magnitude_t points along field_direction (the main
    channel by default, perpendicular to the pull so the commanded
    gradient is exactly the force per unit moment).
    """

    velocities: tuple[float, ...]
    gradients_tpm: tuple[float, ...]
    entrance_count: int = 20
    target_branch: str = "A"
    field_magnitude_t: float = 0.030
    field_direction: tuple[float, float, float] = (1.0, 0.0, 0.0)

    def __post_init__(self):
        if len(self.velocities) == 0 or len(self.gradients_tpm) == 0:
            raise InvalidParameterError("design needs at least one velocity and gradient")
        if any(v <= 0.0 for v in self.velocities):
            raise InvalidParameterError("velocities must be positive")
        if any(g < 0.0 for g in self.gradients_tpm):
            raise InvalidParameterError("gradients must be >= 0")
        if self.entrance_count < 1:
            raise InvalidParameterError("entrance_count must be >= 1")
        if self.target_branch not in ("A", "B"):
            raise InvalidParameterError("target_branch must be 'A' or 'B'")

    @property
    def cells(self) -> int:
        return len(self.velocities) * len(self.gradients_tpm)

    @property
    def trajectories(self) -> int:
        return self.cells * self.entrance_count


def default_design() -> FactorialDesign:
    """The bench characterization: 5 velocities x 10 gradients x 20 entrances."""
    return FactorialDesign(
        velocities=(0.65, 0.70, 0.75, 0.80, 0.85),
        gradients_tpm=tuple(0.05 * i for i in range(10)),
    )


@dataclass
class SweepResult:
    """Per-trajectory outcomes plus the aggregated success matrix."""

    design: FactorialDesign
    outcomes: NDArray[np.int64]  # (n_gradients, n_velocities, n_entrances)
    transit_times: NDArray[np.floating]
    wall_contacts: NDArray[np.int64]
    entrances: NDArray[np.floating]
    target_code: int = field(init=False)

    def __post_init__(self):
        self.target_code = kernels.OUT_A if self.design.target_branch == "A" else kernels.OUT_B

    @property
    def success_matrix(self) -> NDArray[np.floating]:
        """Fraction of entrances reaching the target, shape (n_gradients, n_velocities)."""
        return (self.outcomes == self.target_code).mean(axis=2)

    def success_ratio(self, gradient_index: int, velocity_index: int) -> float:
        return float(self.success_matrix[gradient_index, velocity_index])


def run_factorial(
    design: FactorialDesign | None = None,
    geometry: Geometry | None = None,
    fluid: FluidProperties | None = None,
    capsule: CapsuleSpec | None = None,
    curve: MagnetizationCurve | None = None,
    limits: TrajectoryLimits = TrajectoryLimits(),
    control: StepControl = StepControl(),
    split_fraction: float = 0.5,
    workers: int = 1,
) -> SweepResult:
    """Run every (gradient, velocity, entrance) trajectory of the design.

    workers > 1 spreads cells over threads (the integrator releases the
    GIL); the result is bit-identical for any worker count.
    """
    design = design if design is not None else default_design()
    geometry = geometry if geometry is not None else build_y_junction()
    fluid = fluid if fluid is not None else FluidProperties.water()
    capsule = capsule if capsule is not None else CapsuleSpec()
    curve = curve if curve is not None else default_capsule_curve()
    if workers < 1:
        raise InvalidParameterError("workers must be >= 1")

    entrances = entrance_positions(geometry, design.entrance_count, capsule.radius)
    n_g = len(design.gradients_tpm)
    n_v = len(design.velocities)
    n_e = design.entrance_count
    outcomes = np.zeros((n_g, n_v, n_e), dtype=np.int64)
    transit = np.zeros((n_g, n_v, n_e))
    contacts = np.zeros((n_g, n_v, n_e), dtype=np.int64)

    gp = kernels.pack_geometry(geometry)
    cp = kernels.pack_capsule(capsule, fluid)
    ct = kernels.pack_control(control)
    pull_sign = 1.0 if design.target_branch == "A" else -1.0
    no_rec_t = np.empty(0)
    no_rec_pv = np.empty((0, 6))

    def run_cell(cell):
        gi, vi = cell
        gradient = design.gradients_tpm[gi]
        velocity = design.velocities[vi]
        flow = make_flow(geometry, fluid, velocity, split_fraction=split_fraction)
        command = uniform_command(
            design.field_direction,
            design.field_magnitude_t,
            (0.0, pull_sign * gradient, 0.0),
        )
        fl = kernels.pack_flow(flow)
        a_ext = kernels.external_acceleration(capsule, fluid, command, curve)
        for ei in range(n_e):
            p0 = entrances[ei]
            u0 = flow.velocity_at(p0)
            state = np.array([0.0, p0[0], p0[1], p0[2], u0[0], u0[1], u0[2]])
            code, n_contacts, _, _, _ = kernels.advance(
                gp, fl, a_ext, cp, ct,
                limits.max_time, limits.max_steps, state, no_rec_t, no_rec_pv, 0,
            )
            outcomes[gi, vi, ei] = code
            transit[gi, vi, ei] = state[0]
            contacts[gi, vi, ei] = n_contacts

    cell_list = [(gi, vi) for gi in range(n_g) for vi in range(n_v)]
    if workers == 1:
        for cell in cell_list:
            run_cell(cell)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run_cell, cell_list))

    return SweepResult(
        design=design,
        outcomes=outcomes,
        transit_times=transit,
        wall_contacts=contacts,
        entrances=entrances,
    )


def spearman_trend(x, y) -> float:
    """Spearman rank correlation with constant inputs mapped to 0.0.

    An all-tied success row or column has no trend; reporting 0 keeps
    "non-increasing" checks meaningful where the coefficient is
    undefined.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.all(x == x[0]) or np.all(y == y[0]):
        return 0.0
    return float(spearmanr(x, y).statistic)


def success_trend_by_velocity(result: SweepResult) -> list[float]:
    """Spearman(gradient, success) per velocity column."""
    matrix = result.success_matrix
    gradients = np.asarray(result.design.gradients_tpm)
    return [spearman_trend(gradients, matrix[:, vi]) for vi in range(matrix.shape[1])]


def success_trend_by_gradient(result: SweepResult) -> list[float]:
    """Spearman(velocity, success) per gradient row."""
    matrix = result.success_matrix
    velocities = np.asarray(result.design.velocities)
    return [spearman_trend(velocities, matrix[gi, :]) for gi in range(matrix.shape[0])]


def export_matrix_csv(result: SweepResult, path: str) -> None:
    """Success-ratio matrix: gradients as rows (ascending), velocities as columns."""
    matrix = result.success_matrix
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(
            "gradient_tpm," + ",".join(repr(float(v)) for v in result.design.velocities) + "\n"
        )
        for gi, gradient in enumerate(result.design.gradients_tpm):
            row = ",".join(f"{matrix[gi, vi]:.3f}" for vi in range(matrix.shape[1]))
            fh.write(f"{float(gradient)!r},{row}\n")


def load_matrix_csv(path: str):
    """Round-trip loader: (gradients, velocities, success matrix)."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        if header[0] != "gradient_tpm" or len(header) < 2:
            raise FileFormatError("expected header gradient_tpm,<velocities>", path, 1)
        try:
            velocities = [float(v) for v in header[1:]]
        except ValueError:
            raise FileFormatError("non-numeric velocity in header", path, 1) from None
        gradients = []
        rows = []
        for lineno, raw in enumerate(fh, start=2):
            stripped = raw.strip()
            if stripped == "":
                continue
            parts = stripped.split(",")
            if len(parts) != len(velocities) + 1:
                raise FileFormatError("row width does not match header", path, lineno)
            try:
                gradients.append(float(parts[0]))
                rows.append([float(v) for v in parts[1:]])
            except ValueError:
                raise FileFormatError("non-numeric value", path, lineno) from None
    return np.asarray(gradients), np.asarray(velocities), np.asarray(rows)


def export_longform_csv(result: SweepResult, path: str) -> None:
    """One row per trajectory: velocity,gradient,entrance_index,outcome,transit_time_s,wall_contacts."""
    design = result.design
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("velocity,gradient,entrance_index,outcome,transit_time_s,wall_contacts\n")
        for gi, gradient in enumerate(design.gradients_tpm):
            for vi, velocity in enumerate(design.velocities):
                for ei in range(design.entrance_count):
                    label = OUTCOME_LABELS[int(result.outcomes[gi, vi, ei])]
                    fh.write(
                        f"{float(velocity)!r},{float(gradient)!r},{ei},{label},"
                        f"{float(result.transit_times[gi, vi, ei])!r},"
                        f"{int(result.wall_contacts[gi, vi, ei])}\n"
                    )


def load_longform_csv(path: str):
    """Round-trip loader returning a dict of column arrays."""
    expected = "velocity,gradient,entrance_index,outcome,transit_time_s,wall_contacts"
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != expected:
            raise FileFormatError(f"expected header {expected}", path, 1)
        cols = {name: [] for name in expected.split(",")}
        for lineno, raw in enumerate(fh, start=2):
            stripped = raw.strip()
            if stripped == "":
                continue
            parts = stripped.split(",")
            if len(parts) != 6:
                raise FileFormatError("expected six columns", path, lineno)
            if parts[3] not in _LABEL_CODES:
                raise FileFormatError(f"unknown outcome {parts[3]!r}", path, lineno)
            try:
                cols["velocity"].append(float(parts[0]))
                cols["gradient"].append(float(parts[1]))
                cols["entrance_index"].append(int(parts[2]))
                cols["outcome"].append(parts[3])
                cols["transit_time_s"].append(float(parts[4]))
                cols["wall_contacts"].append(int(parts[5]))
            except ValueError:
                raise FileFormatError("malformed value", path, lineno) from None
    return {
        "velocity": np.asarray(cols["velocity"]),
        "gradient": np.asarray(cols["gradient"]),
        "entrance_index": np.asarray(cols["entrance_index"]),
        "outcome": np.asarray(cols["outcome"]),
        "transit_time_s": np.asarray(cols["transit_time_s"]),
        "wall_contacts": np.asarray(cols["wall_contacts"]),
    }
