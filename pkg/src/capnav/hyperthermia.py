"""Induction heating and capsule dissolution under an alternating field.

The heating power of the embedded nanoparticles is summarized by the
specific loss power (SLP), extracted from a calorimetric temperature
ramp. Capsule melting is a lumped first-order thermal model: SLP heats
an effective thermal mass, losses leak to ambient, and the gelatin
matrix dissolves once the melt temperature has been held long enough.

Temperatures in degrees Celsius, times in seconds, masses in grams.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.typing import NDArray
from scipy.optimize import brentq

from .dynamics import CapsuleSpec
from .errors import FileFormatError, InvalidParameterError

# Volumetric heat capacity of the calorimetry medium (water), J K^-1 mL^-1.
SPECIFIC_HEAT_WATER = 4.184

DISSOLUTION_DT = 0.010


@dataclass(frozen=True)
class CapsuleComposition:
    """Mass fractions of the capsule recipe (remainder is water)."""

    gelatin: float
    iron_oxide: float
    tantalum: float
    water: float

    def __post_init__(self):
        for name, value in (
            ("gelatin", self.gelatin),
            ("iron_oxide", self.iron_oxide),
            ("tantalum", self.tantalum),
            ("water", self.water),
        ):
            if not 0.0 <= value <= 1.0:
                raise InvalidParameterError(f"{name} fraction must lie in [0, 1]")


def methods_composition() -> CapsuleComposition:
    """Fabrication recipe: 5 wt% gelatin, 37 wt% iron oxide, 16 wt% tantalum."""
    return CapsuleComposition(gelatin=0.05, iron_oxide=0.37, tantalum=0.16, water=0.42)


def cytotoxicity_composition() -> CapsuleComposition:
    """Composition quoted with the cytotoxicity assay.

    The printed fractions (water 49, iron oxide 32, tantalum 28,
    gelatin 5 wt%) add up to 114% and are kept verbatim rather than
    renormalized; prefer methods_composition() for simulation work.
    """
    return CapsuleComposition(gelatin=0.05, iron_oxide=0.32, tantalum=0.28, water=0.49)


def slp_from_curve(
    times_s,
    temps_c,
    concentration_g_per_ml: float,
    specific_heat: float = SPECIFIC_HEAT_WATER,
    window_s: float = 10.0,
) -> float:
    """Specific loss power (C/m) dT/dt from a calorimetric heating curve.

    The slope is a least-squares fit over the initial window, where heat
    losses are still negligible.

    Args:
        times_s: sample times, strictly increasing, starting within the window.
        temps_c: temperatures at those times.
        concentration_g_per_ml: nanoparticle concentration m [g/mL].
        specific_heat: volumetric heat capacity C [J K^-1 mL^-1].
        window_s: fit window from the first sample [s].

    Returns:
        SLP in W per gram of nanoparticles.
    """
    t = np.asarray(times_s, dtype=float)
    temp = np.asarray(temps_c, dtype=float)
    if t.ndim != 1 or t.shape != temp.shape or t.size < 2:
        raise InvalidParameterError("need matching 1-d arrays with >= 2 samples")
    if np.any(np.diff(t) <= 0.0):
        raise InvalidParameterError("times must be strictly increasing")
    if concentration_g_per_ml <= 0.0:
        raise InvalidParameterError("concentration must be positive")
    mask = t <= t[0] + window_s
    if np.count_nonzero(mask) < 2:
        raise InvalidParameterError("fewer than 2 samples inside the fit window")
    tw = t[mask]
    yw = temp[mask]
    slope = float(np.polyfit(tw, yw, 1)[0])
    return specific_heat / concentration_g_per_ml * slope


def load_heating_csv(path: str):
    """Read a heating curve CSV with header t_seconds,temp_celsius."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "t_seconds,temp_celsius":
            raise FileFormatError("expected header t_seconds,temp_celsius", path, 1)
        times = []
        temps = []
        for lineno, raw in enumerate(fh, start=2):
            stripped = raw.strip()
            if stripped == "":
                continue
            parts = stripped.split(",")
            if len(parts) != 2:
                raise FileFormatError("expected two columns", path, lineno)
            try:
                times.append(float(parts[0]))
                temps.append(float(parts[1]))
            except ValueError:
                raise FileFormatError("non-numeric value", path, lineno) from None
    return np.asarray(times), np.asarray(temps)


def save_heating_csv(path: str, times_s, temps_c) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("t_seconds,temp_celsius\n")
        for t, temp in zip(times_s, temps_c):
            fh.write(f"{t:.9g},{temp:.9g}\n")


@dataclass(frozen=True)
class DissolutionModel:
    """Lumped thermal model of one capsule under the alternating field.

    dT/dt = (slp * particle_mass - loss * (T - ambient)) / thermal_mass
    with the heating term active only while the field is on. The capsule
    dissolves after the temperature has spent hold_s seconds (cumulative)
    at or above melt_c; the dissolved fraction ramps linearly over that
    hold.
    """

    slp_w_per_g: float
    particle_mass_g: float
    thermal_mass_j_per_k: float
    loss_w_per_k: float
    ambient_c: float = 20.0
    melt_c: float = 37.5
    hold_s: float = 5.0

    def __post_init__(self):
        if min(self.slp_w_per_g, self.particle_mass_g, self.thermal_mass_j_per_k) <= 0.0:
            raise InvalidParameterError("slp, particle_mass, thermal_mass must be positive")
        if self.loss_w_per_k < 0.0 or self.hold_s <= 0.0:
            raise InvalidParameterError("loss must be >= 0 and hold_s > 0")
        if self.melt_c <= self.ambient_c:
            raise InvalidParameterError("melt_c must exceed ambient_c")

    @property
    def heating_power_w(self) -> float:
        return self.slp_w_per_g * self.particle_mass_g

    @property
    def steady_state_c(self) -> float:
        if self.loss_w_per_k == 0.0:
            return float("inf")
        return self.ambient_c + self.heating_power_w / self.loss_w_per_k


@dataclass
class DissolutionResult:
    times_s: NDArray[np.floating]
    temps_c: NDArray[np.floating]
    dissolved_fraction: NDArray[np.floating]
    dissolution_time_s: float | None


def calibrate_loss_coefficient(
    heating_power_w: float,
    thermal_mass_j_per_k: float,
    temp_rise_k: float,
    reach_time_s: float,
) -> float:
    """Loss coefficient making the step response reach temp_rise at reach_time.

    Solves (P/h)(1 - exp(-h t/C)) = dT for h on the first-order response.
    Requires the lossless ramp P t / C to overshoot dT, otherwise no loss
    coefficient can slow the rise into the target.
    """
    if heating_power_w * reach_time_s / thermal_mass_j_per_k <= temp_rise_k:
        raise InvalidParameterError("target not reachable: lossless ramp is already too slow")

    def residual(h: float) -> float:
        return (heating_power_w / h) * (
            -np.expm1(-h * reach_time_s / thermal_mass_j_per_k)
        ) - temp_rise_k

    lo = 1e-12
    hi = heating_power_w / temp_rise_k
    return float(brentq(residual, lo, hi, xtol=1e-15))


def default_dissolution(
    capsule: CapsuleSpec | None = None,
    composition: CapsuleComposition | None = None,
    slp_w_per_g: float = 190.0,
    thermal_mass_j_per_k: float = 0.5,
    dissolution_target_s: float = 40.0,
) -> DissolutionModel:
    """Reference scenario: the fabricated capsule dissolving in 40 s.

    The nanoparticle mass comes from the capsule mass and recipe; the
    loss coefficient is calibrated so melting completes exactly at the
    target (reach melt at target - hold, then hold).
    """
    capsule = capsule if capsule is not None else CapsuleSpec()
    composition = composition if composition is not None else methods_composition()
    particle_mass_g = composition.iron_oxide * capsule.mass * 1000.0
    ambient, melt, hold = 20.0, 37.5, 5.0
    loss = calibrate_loss_coefficient(
        heating_power_w=slp_w_per_g * particle_mass_g,
        thermal_mass_j_per_k=thermal_mass_j_per_k,
        temp_rise_k=melt - ambient,
        reach_time_s=dissolution_target_s - hold,
    )
    return DissolutionModel(
        slp_w_per_g=slp_w_per_g,
        particle_mass_g=particle_mass_g,
        thermal_mass_j_per_k=thermal_mass_j_per_k,
        loss_w_per_k=loss,
        ambient_c=ambient,
        melt_c=melt,
        hold_s=hold,
    )


def simulate_dissolution(
    model: DissolutionModel,
    field_on: Callable[[float], bool] | bool,
    duration_s: float,
    dt_s: float = DISSOLUTION_DT,
) -> DissolutionResult:
    """Integrate the thermal model with fixed steps.

    Args:
        model: thermal/dissolution parameters.
        field_on: bool, or a callable of time returning whether the
            alternating field is on.
        duration_s: simulated span.
        dt_s: fixed step (explicit Euler; the thermal time constant is
            orders of magnitude longer).

    Returns:
        DissolutionResult with the temperature trace, the dissolved
        fraction trace (non-decreasing), and the completion time or None.
    """
    if duration_s <= 0.0 or dt_s <= 0.0:
        raise InvalidParameterError("duration_s and dt_s must be positive")
    if isinstance(field_on, bool):
        on_value = field_on
        field_on = lambda t: on_value  # noqa: E731

    n = int(np.ceil(duration_s / dt_s)) + 1
    times = np.empty(n)
    temps = np.empty(n)
    fractions = np.empty(n)
    temp = model.ambient_c
    fraction = 0.0
    dissolution_time = None

    for i in range(n):
        t = i * dt_s
        times[i] = min(t, duration_s)
        temps[i] = temp
        fractions[i] = fraction
        if i == n - 1:
            break
        step_dt = min(dt_s, duration_s - t)
        heat = model.heating_power_w if field_on(t) else 0.0
        dT = (heat - model.loss_w_per_k * (temp - model.ambient_c)) / model.thermal_mass_j_per_k
        temp += dT * step_dt
        if temp >= model.melt_c and fraction < 1.0:
            fraction = min(1.0, fraction + step_dt / model.hold_s)
            if fraction >= 1.0 and dissolution_time is None:
                dissolution_time = t + step_dt
    return DissolutionResult(times, temps, fractions, dissolution_time)
