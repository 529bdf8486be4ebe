"""Flat key=value run configuration shared by the command line tools.

Every setting lives in one namespace of dotted keys with SI values.
Unknown keys are rejected by name. The effective configuration (defaults
merged with file and command line overrides) renders back to text that
parses to bit-identical values, so an echoed config reproduces a run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .dynamics import (
    DRAG_SCHILLER_NAUMANN,
    DRAG_STOKES,
    CapsuleSpec,
    StepControl,
    TrajectoryLimits,
)
from .errors import ConfigError
from .flowfield import (
    PROFILE_PARABOLIC,
    PROFILE_POWER_LAW,
    FlowField,
    FluidProperties,
    make_flow,
)
from .geometry import Geometry, build_tube, build_y_junction
from .magnetics import UniformCommand, uniform_command
from .sweep import FactorialDesign


def _parse_float(text: str) -> float:
    value = float(text)
    if not math.isfinite(value):
        raise ValueError("must be finite")
    return value


def _parse_int(text: str) -> int:
    return int(text, 10)


def _parse_floats(text: str) -> tuple[float, ...]:
    parts = [p.strip() for p in text.split(",") if p.strip() != ""]
    if not parts:
        raise ValueError("expected a comma-separated list of numbers")
    return tuple(_parse_float(p) for p in parts)


def _parse_vector3(text: str) -> tuple[float, float, float]:
    values = _parse_floats(text)
    if len(values) != 3:
        raise ValueError("expected exactly three comma-separated numbers")
    return values


def _choice(*options: str) -> Callable[[str], str]:
    def parse(text: str) -> str:
        if text not in options:
            raise ValueError(f"must be one of {', '.join(options)}")
        return text

    return parse


def _render(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ",".join(repr(float(v)) for v in value)
    raise TypeError(f"unrenderable config value {value!r}")


_SCHEMA: dict[str, tuple[object, Callable[[str], object]]] = {
    "geometry.kind": ("y_junction", _choice("y_junction", "tube")),
    "geometry.diameter": (0.005, _parse_float),
    "geometry.main_length": (0.096, _parse_float),
    "geometry.branch_length": (0.046, _parse_float),
    "geometry.branch_angle": (math.pi / 2.0, _parse_float),
    "geometry.fillet_radius": (0.0005, _parse_float),
    "geometry.inlet_extrusion": (0.0, _parse_float),
    "fluid.density": (998.3, _parse_float),
    "fluid.viscosity": (0.001, _parse_float),
    "capsule.diameter": (0.0014, _parse_float),
    "capsule.density": (3187.74, _parse_float),
    "capsule.drag_law": (DRAG_SCHILLER_NAUMANN, _choice(DRAG_SCHILLER_NAUMANN, DRAG_STOKES)),
    "flow.mean_velocity": (0.65, _parse_float),
    "flow.profile": ("auto", _choice("auto", PROFILE_PARABOLIC, PROFILE_POWER_LAW)),
    "flow.power_exponent": (7.0, _parse_float),
    "flow.split_fraction": (0.5, _parse_float),
    "field.magnitude_t": (0.030, _parse_float),
    "field.direction": ((1.0, 0.0, 0.0), _parse_vector3),
    "gradient.tpm": ((0.0, 0.45, 0.0), _parse_vector3),
    "design.velocities": ((0.65, 0.70, 0.75, 0.80, 0.85), _parse_floats),
    "design.gradients_tpm": (tuple(0.05 * i for i in range(10)), _parse_floats),
    "design.entrance_count": (20, _parse_int),
    "design.target_branch": ("A", _choice("A", "B")),
    "limits.max_time": (5.0, _parse_float),
    "limits.max_steps": (5_000_000, _parse_int),
    "step.dt_constant": (1.0e-5, _parse_float),
    "step.dt_min": (1.0e-7, _parse_float),
    "step.dt_max": (1.0e-3, _parse_float),
    "step.restitution": (1.0, _parse_float),
    "simulate.entrance_index": (0, _parse_int),
    "rolling.diameter": (1.69e-3, _parse_float),
    "rolling.frequencies": (tuple(0.5 * i for i in range(31)), _parse_floats),
    "counterflow.gradients_tpm": (tuple(0.05 * i for i in range(1, 11)), _parse_floats),
    "counterflow.field_t": (0.030, _parse_float),
    "counterflow.tube_diameter": (6.3e-3, _parse_float),
    "slp.concentration_g_per_ml": (0.001, _parse_float),
    "slp.window_s": (10.0, _parse_float),
    "session.host": ("127.0.0.1", str),
    "session.port": (8765, _parse_int),
    "session.time_dilation": (100.0, _parse_float),
    "session.mode": ("inflow", _choice("inflow", "rolling")),
    "session.entrance_index": (0, _parse_int),
    "session.snapshot_hz": (30.0, _parse_float),
}


@dataclass
class RunConfig:
    """Parsed settings plus builders for the simulation objects they name."""

    values: dict[str, object]

    def __getitem__(self, key: str):
        if key not in self.values:
            raise ConfigError(f"unknown config key {key!r}")
        return self.values[key]

    def set_text(self, key: str, text: str) -> None:
        if key not in _SCHEMA:
            raise ConfigError(f"unknown config key {key!r}")
        parse = _SCHEMA[key][1]
        try:
            self.values[key] = parse(text)
        except ValueError as exc:
            raise ConfigError(f"bad value for config key {key!r}: {exc}") from None

    def geometry(self) -> Geometry:
        if self["geometry.kind"] == "tube":
            return build_tube(self["geometry.diameter"], self["geometry.main_length"])
        return build_y_junction(
            diameter=self["geometry.diameter"],
            main_length=self["geometry.main_length"],
            branch_length=self["geometry.branch_length"],
            branch_angle=self["geometry.branch_angle"],
            fillet_radius=self["geometry.fillet_radius"],
            inlet_extrusion=self["geometry.inlet_extrusion"],
        )

    def fluid(self) -> FluidProperties:
        return FluidProperties(self["fluid.density"], self["fluid.viscosity"])

    def capsule(self) -> CapsuleSpec:
        return CapsuleSpec(
            diameter=self["capsule.diameter"],
            density=self["capsule.density"],
            drag_law=self["capsule.drag_law"],
        )

    def flow(self, geometry: Geometry, fluid: FluidProperties) -> FlowField:
        return make_flow(
            geometry,
            fluid,
            self["flow.mean_velocity"],
            profile=self["flow.profile"],
            power_exponent=self["flow.power_exponent"],
            split_fraction=self["flow.split_fraction"],
        )

    def command(self) -> UniformCommand:
        return uniform_command(
            self["field.direction"], self["field.magnitude_t"], self["gradient.tpm"]
        )

    def design(self) -> FactorialDesign:
        return FactorialDesign(
            velocities=self["design.velocities"],
            gradients_tpm=self["design.gradients_tpm"],
            entrance_count=self["design.entrance_count"],
            target_branch=self["design.target_branch"],
            field_magnitude_t=self["field.magnitude_t"],
            field_direction=self["field.direction"],
        )

    def limits(self) -> TrajectoryLimits:
        return TrajectoryLimits(self["limits.max_time"], self["limits.max_steps"])

    def control(self) -> StepControl:
        return StepControl(
            dt_constant=self["step.dt_constant"],
            dt_min=self["step.dt_min"],
            dt_max=self["step.dt_max"],
            restitution=self["step.restitution"],
        )

    def effective_text(self) -> str:
        """All keys, sorted, rendered so reparsing gives identical values."""
        lines = [f"{key} = {_render(self.values[key])}" for key in sorted(self.values)]
        return "\n".join(lines) + "\n"


def default_config() -> RunConfig:
    return RunConfig({key: default for key, (default, _) in _SCHEMA.items()})


def load_config(path: str, config: RunConfig | None = None) -> RunConfig:
    """Apply "key = value" lines from a file over the defaults."""
    config = config if config is not None else default_config()
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror}") from None
    for lineno, raw in enumerate(lines, start=1):
        stripped = raw.strip()
        if stripped == "" or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}: expected key = value (line {lineno})")
        key, _, text = stripped.partition("=")
        try:
            config.set_text(key.strip(), text.strip())
        except ConfigError as exc:
            raise ConfigError(f"{path}: {exc} (line {lineno})") from None
    return config


def apply_overrides(config: RunConfig, assignments: list[str]) -> RunConfig:
    """Apply command line "key=value" strings in order."""
    for assignment in assignments:
        if "=" not in assignment:
            raise ConfigError(f"override {assignment!r} is not of the form key=value")
        key, _, text = assignment.partition("=")
        config.set_text(key.strip(), text.strip())
    return config


def write_effective(config: RunConfig, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(config.effective_text())


def entrance_ring_positions(config: RunConfig, count: int | None = None) -> np.ndarray:
    """Release positions for the configured geometry and capsule."""
    from .geometry import entrance_positions

    geometry = config.geometry()
    capsule = config.capsule()
    n = count if count is not None else config["design.entrance_count"]
    return entrance_positions(geometry, n, capsule.radius)
