from .engine import McResult, SimulationFailure, g_compute, simulate_one
from .history import PatientHistory, history_from_trajectory
from .natural import NaturalCourseResult, natural_course
from .oracle import oracle_g_compute
from .positivity import PositivityReport, positivity_check
from .strategies import (
    LearnedTreatmentSim,
    ObservationalSim,
    SimStrategy,
    StrategyContext,
    StrategyDraws,
    StrategySpec,
    ThresholdGateSim,
    ThresholdRuleSim,
    WithholdSim,
)

__all__ = [
    "LearnedTreatmentSim",
    "McResult",
    "NaturalCourseResult",
    "ObservationalSim",
    "PatientHistory",
    "PositivityReport",
    "SimStrategy",
    "SimulationFailure",
    "StrategyContext",
    "StrategyDraws",
    "StrategySpec",
    "ThresholdGateSim",
    "ThresholdRuleSim",
    "WithholdSim",
    "g_compute",
    "history_from_trajectory",
    "natural_course",
    "oracle_g_compute",
    "positivity_check",
    "simulate_one",
]
