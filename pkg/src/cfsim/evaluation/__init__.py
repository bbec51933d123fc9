from .metrics import (
    EvaluationError,
    MetricTable,
    calibration,
    mse,
    population_average,
    treatment_effect,
)
from .report import (
    plot_calibration_curves,
    plot_curve_pair,
    plot_mse_curves,
    plot_patient_draws,
    write_calibration,
    write_curve,
    write_mse,
)

__all__ = [
    "EvaluationError",
    "MetricTable",
    "calibration",
    "mse",
    "plot_calibration_curves",
    "plot_curve_pair",
    "plot_mse_curves",
    "plot_patient_draws",
    "population_average",
    "treatment_effect",
    "write_calibration",
    "write_curve",
    "write_mse",
]
