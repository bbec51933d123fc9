"""Positivity diagnostics.

A counterfactual strategy is only estimable from observational data if
histories where it prescribes an action had nonzero probability of
actually receiving that action. This check replays the strategy over
the observed histories and reports, per time step, the fraction of
patients whose recorded action is within tolerance of the strategy's
prescription; steps with fraction zero are flagged.

For the built-in stochastic policies the replay reuses the logged
per-(trajectory, step) policy noise, so the observational regime
replayed against its own data scores 1.0 everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import rng as rngmod
from ..simulator.config import SimConfig
from ..trajectories import Dataset
from .strategies import StrategyContext, StrategyDraws, StrategySpec


@dataclass
class PositivityReport:
    times: np.ndarray
    fractions: np.ndarray  # fraction of patients matching per step
    flagged: list[int]  # steps with zero matches
    tolerance: float

    @property
    def overall(self) -> float:
        return float(self.fractions.mean())


def positivity_check(
    dataset: Dataset,
    spec: StrategySpec,
    tolerance: float = 1e-6,
    sim_config: SimConfig | None = None,
) -> PositivityReport:
    if len(dataset) == 0:
        raise ValueError("empty dataset")
    cfg = sim_config or (
        SimConfig.from_dict(dataset.config) if dataset.config else SimConfig()
    )
    strategy = spec.build()
    schema = dataset.schema
    L = dataset.stack_covariates()  # (n, K+1, n_l)
    A = dataset.stack_actions()
    n, T1, _ = L.shape
    fractions = np.empty(T1)
    ctx = StrategyContext(config=cfg)
    for t in range(T1):
        u = np.zeros((n, 4))
        z = np.zeros((n, 2))
        # replay the logged per-step policy noise so stochastic
        # strategies reproduce the recorded coin flips
        for i, traj in enumerate(dataset.trajectories):
            key = rngmod.trajectory_key(dataset.master_seed, traj.seed)
            stream = rngmod.step_stream(key, t, rngmod.PURPOSE_POLICY)
            gate, arm = stream.uniform(size=2)
            fluid_noise = cfg.fluid_noise_mean + cfg.fluid_noise_sd * stream.standard_normal()
            vaso_noise = cfg.vaso_noise_mean + cfg.vaso_noise_sd * stream.standard_normal()
            u[i, 0], u[i, 1] = gate, arm
            z[i, 0] = (fluid_noise - cfg.fluid_noise_mean) / cfg.fluid_noise_sd
            z[i, 1] = (vaso_noise - cfg.vaso_noise_mean) / cfg.vaso_noise_sd
        prescribed = strategy.actions(L[:, t], schema, t, StrategyDraws(u=u, z=z), ctx)
        match = np.all(np.abs(prescribed - A[:, t]) <= tolerance, axis=1)
        fractions[t] = match.mean()
    flagged = [int(t) for t in range(T1) if fractions[t] == 0.0]
    return PositivityReport(
        times=np.arange(T1), fractions=fractions, flagged=flagged, tolerance=tolerance
    )
