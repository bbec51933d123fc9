"""Ground-truth Monte-Carlo sampler.

Replaces the trained model with the generator itself: draws for a given
trajectory reproduce its history through the divergence step exactly
(same keyed streams) and then resimulate with fresh branch noise. The
realized continuation is exchangeable with the draws, which gives exact
reference distributions for calibration and the oracle baselines in the
acceptance checks.
"""

from __future__ import annotations

import numpy as np

from ..simulator.config import SimConfig
from ..simulator.generate import generate_trajectory
from .engine import McResult


def oracle_g_compute(
    config: SimConfig,
    index: int,
    regime: str,
    M: int,
    alphas: tuple[float, float] = (0.25, 0.75),
) -> McResult:
    """M resimulated continuations of trajectory ``index`` from the
    divergence step onward under the named regime."""
    if M < 1:
        raise ValueError(f"need at least one draw, got M={M}")
    m = config.divergence_step
    K = config.horizon
    rows = []
    for k in range(M):
        traj = generate_trajectory(index, regime, config, branch_from=m, branch=k + 1)
        rows.append(traj.L[m:])
    draws = np.stack(rows)
    from ..channels import default_schema

    return McResult(
        patient_id=index,
        m=m,
        times=np.arange(m, K + 1),
        channels=default_schema().names,
        draws=draws,
        point=draws.mean(axis=0),
        q_low=np.quantile(draws, alphas[0], axis=0),
        q_high=np.quantile(draws, alphas[1], axis=0),
        alphas=alphas,
        n_excluded=0,
        actions_mean=np.zeros((K - m, 2)),
    )
