"""Generator configuration.

All tunable constants of the ground-truth generator live here: baseline
input ranges, disease probabilities, treatment-policy coefficients, and
the surrogate-dynamics constants. Defaults reproduce the standard
protocol (10,000 observational trajectories of length 64, divergence at
step 34).
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict


class ConfigError(ValueError):
    """Invalid generator or experiment configuration."""


# Baseline input ranges: each hidden input is drawn uniformly from its
# range at t=0. These inputs parameterize the dynamics but are never
# exposed to estimators.
DEFAULT_INPUT_RANGES: dict[str, tuple[float, float]] = {
    "total_blood_volume": (1500.0, 6000.0),
    "nominal_heart_rate": (40.0, 160.0),
    "total_peripheral_resistance": (0.1, 1.4),
    "arterial_compliance": (0.4, 1.1),
    "pulmonary_arterial_compliance": (0.1, 19.9),
    "total_zero_pressure_filling_volume": (500.0, 3500.0),
    "pulmonary_venous_compliance": (2.0, 3.4),
    "pulmonary_microcirculation_resistance": (0.4, 1.0),
}


@dataclass
class DynamicsParams:
    """Constants of the discrete-time lumped hemodynamic model.

    Chosen so that the unperturbed system is stable (states relax toward
    their baseline values) and so that a fluid bolus or vasopressor dose
    raises arterial pressure within 1-3 steps.
    """

    blood_volume_relax: float = 0.03  # pull of TBV toward its baseline per step
    resistance_relax: float = 0.03  # pull of arteriolar resistance toward baseline
    vaso_resistance_gain: float = 0.05  # resistance increase per vasopressor dose unit
    stroke_volume_max: float = 105.0  # mL, saturation of the stressed-volume curve
    stroke_volume_scale: float = 1400.0  # mL, curvature of the stressed-volume curve
    pulse_fraction: float = 0.30  # pulse pressure per (stroke volume / compliance)
    baroreflex_gain: float = 0.008  # fractional heart-rate target shift per mmHg
    heart_rate_relax: float = 0.4  # relaxation of HR toward its baroreflex target
    cvp_intercept: float = 1.0  # mmHg
    cvp_per_ml: float = 0.0015  # mmHg per mL of stressed volume
    hr_floor: float = 25.0
    hr_ceil: float = 210.0
    map_floor: float = 5.0
    init_settle_steps: int = 8  # baroreflex iterations settling HR before t=0


@dataclass
class SimConfig:
    n_trajectories: int = 10000
    horizon: int = 64  # K: last time index; trajectories have K+1 covariate rows
    divergence_step: int = 34  # m: first step governed by the post-divergence strategy
    master_seed: int = 0
    # Counterfactual cohorts are generated from a disjoint block of
    # trajectory streams so their shared-history prefixes never appear
    # in the training data.
    trajectory_seed_offset: int = 0

    input_ranges: dict[str, tuple[float, float]] = field(
        default_factory=lambda: dict(DEFAULT_INPUT_RANGES)
    )

    # Disease process
    disease_prob: float = 0.05
    sepsis_given_disease: float = 0.5
    sepsis_alpha_max: float = 0.7
    blood_loss_alpha_max: float = 0.95

    # Observational treatment policy: treat with probability
    # sigmoid(map_coef*d_map + cvp_coef*d_cvp + intercept) where
    # d_map = map_target - map and d_cvp = cvp_target - cvp.
    treat_intercept: float = 0.02
    treat_map_coef: float = 0.06
    treat_cvp_coef: float = 0.24
    map_target: float = 65.0
    cvp_target: float = 10.0

    # Dose models (shared by the observational and threshold policies;
    # the observational policy adds Gaussian noise).
    fluid_map_coef: float = 10.0
    fluid_cvp_coef: float = 60.0
    vaso_map_coef: float = 0.1
    vaso_cvp_coef: float = 0.15
    fluid_noise_mean: float = 1500.0
    fluid_noise_sd: float = 1000.0
    vaso_noise_mean: float = 0.0
    vaso_noise_sd: float = 1.0

    process_noise_frac: float = 0.015  # per-channel noise sd as a fraction of channel scale
    dynamics: DynamicsParams = field(default_factory=DynamicsParams)

    def validate(self) -> None:
        if self.n_trajectories <= 0:
            raise ConfigError("n_trajectories must be positive")
        if self.horizon < 0:
            raise ConfigError("horizon must be >= 0")
        if not 0 <= self.divergence_step <= self.horizon:
            raise ConfigError(
                f"divergence_step must lie in [0, horizon], got "
                f"{self.divergence_step} with horizon {self.horizon}"
            )
        for p in (self.disease_prob, self.sepsis_given_disease):
            if not 0.0 <= p <= 1.0:
                raise ConfigError(f"probability out of [0,1]: {p}")
        for name, (lo, hi) in self.input_ranges.items():
            # zero-width ranges are allowed and pin the input to that value
            if lo > hi:
                raise ConfigError(f"input range for {name} must have lo <= hi, got [{lo}, {hi}]")
        if self.process_noise_frac < 0:
            raise ConfigError("process_noise_frac must be >= 0")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["input_ranges"] = {k: list(v) for k, v in self.input_ranges.items()}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SimConfig":
        d = dict(d)
        if "dynamics" in d and isinstance(d["dynamics"], dict):
            d["dynamics"] = DynamicsParams(**d["dynamics"])
        if "input_ranges" in d:
            d["input_ranges"] = {k: (float(v[0]), float(v[1])) for k, v in d["input_ranges"].items()}
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown SimConfig fields: {sorted(unknown)}")
        cfg = cls(**d)
        cfg.validate()
        return cfg
