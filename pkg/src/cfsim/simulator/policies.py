"""Treatment policies of the ground-truth generator.

Three regimes are built in:

* observational -- stochastic: treat with probability
  sigmoid(0.06*d_map + 0.24*d_cvp + 0.02), pick fluids vs vasopressor
  with a fair coin, and draw a noisy dose (fluids mL:
  max(0, 10*d_map + 60*d_cvp + N(1500, 1000)); vasopressor units:
  max(0, 0.1*d_map + 0.15*d_cvp + N(0, 1))).
* threshold (post-divergence counterfactual #1) -- deterministic gate:
  treat iff SBP <= 100 and HR/SBP <= 0.8, with the noiseless dose
  formulas. The <= 0.8 gate on the heart-rate/systolic ratio reads
  inverted relative to the usual clinical shock-index convention (a
  high ratio indicates shock); it is implemented exactly as stated.
  The fluids-vs-vasopressor coin comes from the per-(seed, step) stream
  so the policy is reproducible.
* withhold (counterfactual #2) -- never treats.

Every policy consumes the same four draws from the step's policy stream
(gate, arm, fluid noise, vaso noise) whether or not it uses them; this
keeps coupled regimes aligned on shared streams.

At most one dose is nonzero in any step, and doses are never negative.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import SimConfig


@dataclass(frozen=True)
class Action:
    fluid: float = 0.0  # mL
    vaso: float = 0.0  # dose units

    def __post_init__(self) -> None:
        if self.fluid < 0 or self.vaso < 0:
            raise ValueError(f"doses must be >= 0, got {self}")
        if self.fluid > 0 and self.vaso > 0:
            raise ValueError("fluids and vasopressors are never given in the same step")

    @property
    def any(self) -> bool:
        return self.fluid > 0 or self.vaso > 0


ZERO_ACTION = Action(0.0, 0.0)


def sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + np.exp(-x))
    e = np.exp(x)
    return e / (1.0 + e)


def treat_probability(map_value: float, cvp_value: float, config: SimConfig) -> float:
    d_map = config.map_target - map_value
    d_cvp = config.cvp_target - cvp_value
    return sigmoid(config.treat_map_coef * d_map + config.treat_cvp_coef * d_cvp + config.treat_intercept)


def fluid_dose(map_value: float, cvp_value: float, config: SimConfig, noise: float = 0.0) -> float:
    d_map = config.map_target - map_value
    d_cvp = config.cvp_target - cvp_value
    return max(0.0, config.fluid_map_coef * d_map + config.fluid_cvp_coef * d_cvp + noise)

def vaso_dose(map_value: float, cvp_value: float, config: SimConfig, noise: float = 0.0) -> float:
    d_map = config.map_target - map_value
    d_cvp = config.cvp_target - cvp_value
    return max(0.0, config.vaso_map_coef * d_map + config.vaso_cvp_coef * d_cvp + noise)


class PolicyDraws:
    """The fixed per-step draw tuple shared by all built-in policies."""

    __slots__ = ("gate", "arm", "fluid_noise", "vaso_noise")

    def __init__(self, rng: np.random.Generator, config: SimConfig):
        self.gate, self.arm = rng.uniform(size=2)
        self.fluid_noise = config.fluid_noise_mean + config.fluid_noise_sd * rng.standard_normal()
        self.vaso_noise = config.vaso_noise_mean + config.vaso_noise_sd * rng.standard_normal()


class TreatmentStrategy:
    """Maps (current covariates, per-step draws) to an action."""

    name: str = "base"

    def action(self, obs: dict[str, float], draws: PolicyDraws, config: SimConfig) -> Action:
        raise NotImplementedError


class ObservationalPolicy(TreatmentStrategy):
    name = "observational"

    def gate_passes(self, obs: dict[str, float], draws: PolicyDraws, config: SimConfig) -> bool:
        return draws.gate < treat_probability(obs["map"], obs["cvp"], config)

    def action(self, obs: dict[str, float], draws: PolicyDraws, config: SimConfig) -> Action:
        # a passed gate can still yield a zero dose once the noisy dose
        # is clipped at zero
        if not self.gate_passes(obs, draws, config):
            return ZERO_ACTION
        if draws.arm < 0.5:
            return Action(fluid=fluid_dose(obs["map"], obs["cvp"], config, draws.fluid_noise))
        return Action(vaso=vaso_dose(obs["map"], obs["cvp"], config, draws.vaso_noise))


class ThresholdPolicy(TreatmentStrategy):
    """Deterministic gate on systolic pressure and the HR/SBP ratio."""

    name = "threshold"
    sbp_max = 100.0
    ratio_max = 0.8

    def action(self, obs: dict[str, float], draws: PolicyDraws, config: SimConfig) -> Action:
        sbp = obs["sbp"]
        if sbp <= 0 or sbp > self.sbp_max or obs["hr"] / sbp > self.ratio_max:
            return ZERO_ACTION
        if draws.arm < 0.5:
            return Action(fluid=fluid_dose(obs["map"], obs["cvp"], config))
        return Action(vaso=vaso_dose(obs["map"], obs["cvp"], config))


class WithholdPolicy(TreatmentStrategy):
    name = "withhold"

    def action(self, obs: dict[str, float], draws: PolicyDraws, config: SimConfig) -> Action:
        return ZERO_ACTION


REGIME_POLICIES: dict[str, TreatmentStrategy] = {
    "o": ObservationalPolicy(),
    "c1": ThresholdPolicy(),
    "c2": WithholdPolicy(),
}


def policy_for(regime: str) -> TreatmentStrategy:
    try:
        return REGIME_POLICIES[regime]
    except KeyError:
        raise ValueError(f"unknown regime {regime!r}, expected one of {sorted(REGIME_POLICIES)}") from None
