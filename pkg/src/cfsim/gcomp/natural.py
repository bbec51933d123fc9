"""Natural-course predictive check.

Simulate every patient forward from baseline with treatments drawn from
the model's own (learned) treatment process, then compare simulated and
observed population-average trajectories channel by channel. Close
agreement is a necessary sanity check before trusting counterfactual
output.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..simulator.config import ConfigError, SimConfig
from ..trajectories import Dataset
from .engine import McResult, g_compute
from .history import PatientHistory
from .strategies import LearnedTreatmentSim, SimStrategy


@dataclass
class NaturalCourseResult:
    times: np.ndarray  # 0..w
    channels: list[str]
    simulated_mean: np.ndarray  # (w+1, n_channels) population mean of point predictions
    observed_mean: np.ndarray  # (w+1, n_channels)
    per_patient: list[McResult]

    def mean_abs_gap(self) -> dict[str, float]:
        gap = np.abs(self.simulated_mean - self.observed_mean).mean(axis=0)
        return {name: float(gap[i]) for i, name in enumerate(self.channels)}


def natural_course(
    model,
    bank,
    dataset: Dataset,
    horizon: int,
    M: int,
    seed: int = 0,
    strategy: SimStrategy | None = None,
    sim_config: SimConfig | None = None,
) -> NaturalCourseResult:
    """Simulate ``horizon`` steps from baseline under the observational
    treatment process (the model's treatment head unless an explicit
    strategy is supplied)."""
    if strategy is None:
        if not model.config.include_treatment_head:
            raise ConfigError(
                "natural course needs a model trained with a treatment head "
                "(or an explicit strategy)"
            )
        strategy = LearnedTreatmentSim()
    if horizon < 0 or horizon > dataset.K:
        raise ConfigError(f"horizon must lie in [0, {dataset.K}], got {horizon}")
    if len(dataset) == 0:
        raise ConfigError("empty dataset")

    results = []
    for traj in dataset.trajectories:
        history = PatientHistory(patient_id=traj.id, L=traj.L[:1].copy(), A=np.zeros((0, 2)))
        results.append(
            g_compute(
                model, bank, history, strategy, K=horizon, M=M, seed=seed,
                sim_config=sim_config,
            )
        )
    simulated = np.stack([r.point for r in results]).mean(axis=0)
    observed = dataset.stack_covariates()[:, : horizon + 1, :].mean(axis=0)
    return NaturalCourseResult(
        times=np.arange(horizon + 1),
        channels=dataset.schema.names,
        simulated_mean=simulated,
        observed_mean=observed,
        per_patient=results,
    )
