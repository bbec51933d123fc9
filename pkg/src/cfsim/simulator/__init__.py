from .config import ConfigError, DynamicsParams, SimConfig
from .disease import DiseaseEvent, draw_disease
from .dynamics import (
    LatentInputs,
    SimState,
    SimulationDiverged,
    StateCorruptionError,
    derive_pressures,
    initial_state,
    sample_baseline,
    step_state,
)
from .generate import generate_dataset, generate_trajectory, simulate_trajectory
from .policies import (
    Action,
    ObservationalPolicy,
    PolicyDraws,
    ThresholdPolicy,
    TreatmentStrategy,
    WithholdPolicy,
    fluid_dose,
    policy_for,
    treat_probability,
    vaso_dose,
)

__all__ = [
    "Action",
    "ConfigError",
    "DiseaseEvent",
    "DynamicsParams",
    "LatentInputs",
    "ObservationalPolicy",
    "PolicyDraws",
    "SimConfig",
    "SimState",
    "SimulationDiverged",
    "StateCorruptionError",
    "ThresholdPolicy",
    "TreatmentStrategy",
    "WithholdPolicy",
    "derive_pressures",
    "draw_disease",
    "fluid_dose",
    "generate_dataset",
    "generate_trajectory",
    "initial_state",
    "policy_for",
    "sample_baseline",
    "simulate_trajectory",
    "step_state",
    "treat_probability",
    "vaso_dose",
]
