"""Discrete-time lumped hemodynamic dynamics.

The generator tracks a small dynamical core -- total blood volume,
arteriolar resistance, heart rate -- and derives the remaining output
channels algebraically from it plus the hidden baseline inputs:

* blood volume relaxes toward its baseline and absorbs fluid boluses;
* resistance relaxes toward its baseline, is raised by vasopressors and
  crushed multiplicatively by sepsis events;
* stroke volume follows a saturating curve of stressed volume
  (volume above the zero-pressure filling volume);
* cardiac output = heart rate x stroke volume; mean arterial pressure =
  cardiac output x resistance;
* heart rate relaxes toward a baroreflex target that rises when
  pressure falls below the clinical target;
* venous pressure is affine in stressed volume; systolic/diastolic
  pressures sit a pulse-pressure (stroke volume / arterial compliance)
  apart, split so the mean-pressure identity map = (2*dbp + sbp)/3
  holds exactly.

Auxiliary channels (ventricular pressures/flows, volumes, tone, ...)
are smooth functions of the core and the hidden inputs with small
additive process noise; the hidden inputs therefore shape every channel
but are never emitted.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from ..channels import CHANNELS, ChannelSchema
from .config import ConfigError, SimConfig
from .disease import DiseaseEvent
from .policies import Action


class StateCorruptionError(RuntimeError):
    """The pressure pair violates sbp >= dbp >= 0."""


class SimulationDiverged(RuntimeError):
    def __init__(self, step: int):
        super().__init__(f"non-finite simulator state at step {step}")
        self.step = step


@dataclass(frozen=True)
class LatentInputs:
    """Hidden baseline inputs drawn once per trajectory.

    These parameterize the dynamics (relaxation targets, compliances,
    resistances) and are never serialized into a dataset.
    """

    total_blood_volume: float
    nominal_heart_rate: float
    total_peripheral_resistance: float
    arterial_compliance: float
    pulmonary_arterial_compliance: float
    total_zero_pressure_filling_volume: float
    pulmonary_venous_compliance: float
    pulmonary_microcirculation_resistance: float


LATENT_FIELDS = [f.name for f in fields(LatentInputs)]


def sample_baseline(rng: np.random.Generator, config: SimConfig) -> LatentInputs:
    """Draw hidden inputs uniformly from their configured ranges."""
    values = {}
    for name in LATENT_FIELDS:
        try:
            lo, hi = config.input_ranges[name]
        except KeyError:
            raise ConfigError(f"missing input range for {name}") from None
        if lo > hi:
            raise ConfigError(f"input range for {name} must have lo <= hi, got [{lo}, {hi}]")
        values[name] = lo + (hi - lo) * rng.uniform()
    return LatentInputs(**values)


def derive_pressures(sbp: float, dbp: float) -> tuple[float, float, float]:
    """Mean arterial pressure from the systolic/diastolic pair."""
    if not (sbp >= dbp >= 0.0):
        raise StateCorruptionError(f"require sbp >= dbp >= 0, got sbp={sbp}, dbp={dbp}")
    return sbp, dbp, (2.0 * dbp + sbp) / 3.0


# Channel order of the emitted row; the per-step noise vector has one
# slot per continuous channel, in channel order.
CHANNEL_NAMES = [c.name for c in CHANNELS]
_CONT_IDX = {c.name: i for i, c in enumerate(c for c in CHANNELS if c.kind == "continuous")}
_NOISE_SCALES = np.array([abs(c.scale) for c in CHANNELS if c.kind == "continuous"])


@dataclass
class SimState:
    """Full generator state at one step: dynamical core + emitted row."""

    t: int
    tbv: float
    ar: float
    hr: float
    row: np.ndarray  # (n_channels,) in schema order
    dbp: float  # kept for identity checks; not an emitted channel

    def value(self, name: str) -> float:
        return float(self.row[CHANNEL_NAMES.index(name)])

    def observation(self) -> dict[str, float]:
        return {"map": self.value("map"), "cvp": self.value("cvp"),
                "sbp": self.value("sbp"), "hr": self.value("hr")}


def _derive_row(
    tbv: float,
    ar: float,
    hr: float,
    latents: LatentInputs,
    config: SimConfig,
    noise: np.ndarray,
    sick: float,
) -> tuple[np.ndarray, float]:
    """Assemble an emitted covariate row from the dynamical core."""
    dyn = config.dynamics
    eps = noise * _NOISE_SCALES * config.process_noise_frac
    n = {name: eps[i] for name, i in _CONT_IDX.items()}

    stressed = max(tbv - latents.total_zero_pressure_filling_volume, 0.0)
    sv = dyn.stroke_volume_max * -np.expm1(-stressed / dyn.stroke_volume_scale)
    co = hr / 60.0 * sv
    map_v = max(co * ar + n["map"], dyn.map_floor)
    pulse = dyn.pulse_fraction * sv / latents.arterial_compliance + n["sbp"]
    pulse = min(max(pulse, 0.0), 2.9 * map_v)
    sbp = map_v + 2.0 / 3.0 * pulse
    dbp = map_v - pulse / 3.0
    cvp = max(dyn.cvp_intercept + dyn.cvp_per_ml * stressed + n["cvp"], 0.0)

    lvc = 5.0 * latents.nominal_heart_rate / 100.0 + 0.01 * (map_v - 85.0) + n["lvc"]
    values = {
        "sick": sick,
        "map": map_v,
        "sbp": sbp,
        "cvp": cvp,
        "hr": hr,
        "tbv": tbv,
        "ar": ar,
        "ap": map_v + 0.10 * pulse + n["ap"],
        "aq": co + n["aq"],
        "av": latents.arterial_compliance * (map_v + 0.3 * pulse)
        + 2.0 * latents.pulmonary_arterial_compliance + n["av"],
        "pvv": 30.0 * latents.pulmonary_venous_compliance + 2.5 * cvp + n["pvv"],
        "lvp": 1.05 * sbp + n["lvp"],
        "lvq": 0.98 * co + n["lvq"],
        "lvc": lvc,
        "rvp": sbp * (0.12 + 0.15 * latents.pulmonary_microcirculation_resistance) + n["rvp"],
        "rvq": 0.95 * co + n["rvq"],
        "rvc": 0.25 * lvc + n["rvc"],
        "vt": 10.0 + 6.0 * ar + n["vt"],
        "pth": -4.0 + 0.05 * (cvp - 8.0) + n["pth"],
    }
    row = np.array([values[name] for name in CHANNEL_NAMES])
    return row, dbp


def initial_state(latents: LatentInputs, config: SimConfig, noise: np.ndarray) -> SimState:
    dyn = config.dynamics
    tbv = latents.total_blood_volume
    ar = latents.total_peripheral_resistance
    # Settle the heart rate onto its baroreflex equilibrium so the
    # baseline row is not a transient of the raw input draw.
    hr = latents.nominal_heart_rate
    stressed = max(tbv - latents.total_zero_pressure_filling_volume, 0.0)
    sv = dyn.stroke_volume_max * -np.expm1(-stressed / dyn.stroke_volume_scale)
    for _ in range(dyn.init_settle_steps):
        map_v = max(hr / 60.0 * sv * ar, dyn.map_floor)
        target = latents.nominal_heart_rate * (
            1.0 + dyn.baroreflex_gain * (config.map_target - map_v)
        )
        hr = hr + dyn.heart_rate_relax * (target - hr)
        hr = min(max(hr, dyn.hr_floor), dyn.hr_ceil)
    row, dbp = _derive_row(tbv=tbv, ar=ar, hr=hr, latents=latents, config=config,
                           noise=noise, sick=0.0)
    return SimState(t=0, tbv=tbv, ar=ar, hr=hr, row=row, dbp=dbp)


def step_state(
    state: SimState,
    action: Action,
    event: DiseaseEvent,
    latents: LatentInputs,
    config: SimConfig,
    noise: np.ndarray,
) -> SimState:
    """Advance the core one step under the previous action and a
    disease event, then re-derive the emitted row. Overflow surfaces as
    a SimulationDiverged error rather than a warning."""
    dyn = config.dynamics
    with np.errstate(over="ignore", invalid="ignore"):
        eps = noise * _NOISE_SCALES * config.process_noise_frac

        tbv = event.volume_multiplier * (
            state.tbv + action.fluid
            - dyn.blood_volume_relax * (state.tbv - latents.total_blood_volume)
        ) + eps[_CONT_IDX["tbv"]]
        tbv = max(tbv, 200.0)

        ar = event.resistance_multiplier * (
            state.ar + dyn.vaso_resistance_gain * action.vaso
            - dyn.resistance_relax * (state.ar - latents.total_peripheral_resistance)
        ) + eps[_CONT_IDX["ar"]]
        ar = max(ar, 0.05)

        hr_target = latents.nominal_heart_rate * (
            1.0 + dyn.baroreflex_gain * (config.map_target - state.value("map"))
        )
        hr = state.hr + dyn.heart_rate_relax * (hr_target - state.hr) + eps[_CONT_IDX["hr"]]
        hr = min(max(hr, dyn.hr_floor), dyn.hr_ceil)

        row, dbp = _derive_row(tbv, ar, hr, latents, config, noise,
                               sick=1.0 if event.occurred else 0.0)
    if not np.all(np.isfinite(row)):
        raise SimulationDiverged(state.t + 1)
    return SimState(t=state.t + 1, tbv=tbv, ar=ar, hr=hr, row=row, dbp=dbp)


def schema() -> ChannelSchema:
    return ChannelSchema()
