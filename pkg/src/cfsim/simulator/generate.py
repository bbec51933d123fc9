"""Trajectory and dataset generation.

Per-step randomness is addressed by (trajectory key, step, purpose)
counter-based streams, so two runs that share a trajectory seed and
differ only in the post-divergence treatment strategy produce bitwise
identical covariates and actions for every step before the divergence.
The per-step order is: disease draw, covariate update, pressure
derivation, action.

``branch_from``/``branch`` rekey the streams from a given step onward,
which is how ground-truth resimulation draws fresh post-divergence
noise while reproducing the shared history exactly.
"""

from __future__ import annotations

import numpy as np

from .. import rng as rngmod
from ..channels import default_schema
from ..trajectories import Dataset, Trajectory
from .config import SimConfig
from .disease import draw_disease
from .dynamics import LatentInputs, initial_state, sample_baseline, step_state
from .policies import PolicyDraws, TreatmentStrategy, policy_for

N_CONTINUOUS = 18  # per-step noise vector length


def simulate_trajectory(
    latents: LatentInputs,
    pre_strategy: TreatmentStrategy,
    post_strategy: TreatmentStrategy,
    K: int,
    m: int,
    key: np.ndarray,
    config: SimConfig,
    branch_from: int | None = None,
    branch: int = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """Simulate one trajectory; returns (L, A) with K+1 rows each.

    Steps t < m follow ``pre_strategy``, steps t >= m follow
    ``post_strategy``. When ``branch_from`` is set, streams are rekeyed
    with the ``branch`` id for everything *not* determined by the
    history through branch_from: the policy stream from branch_from on
    (the first fresh quantity is the action there), the noise and
    disease streams from branch_from + 1 on.
    """
    if not 0 <= m <= K:
        raise ValueError(f"divergence step must lie in [0, K], got m={m}, K={K}")

    def stream(t: int, purpose: int) -> np.random.Generator:
        b = 0
        if branch_from is not None:
            first = branch_from if purpose == rngmod.PURPOSE_POLICY else branch_from + 1
            if t >= first:
                b = branch
        return rngmod.step_stream(key, t, purpose, branch=b)

    L = np.empty((K + 1, len(default_schema().channels)))
    A = np.zeros((K + 1, 2))

    state = initial_state(latents, config, noise=stream(0, rngmod.PURPOSE_NOISE).normal(size=N_CONTINUOUS))
    for t in range(K + 1):
        if t > 0:
            event = draw_disease(stream(t, rngmod.PURPOSE_DISEASE), config)
            state = step_state(
                state,
                action,
                event,
                latents,
                config,
                noise=stream(t, rngmod.PURPOSE_NOISE).normal(size=N_CONTINUOUS),
            )
        L[t] = state.row
        strategy = pre_strategy if t < m else post_strategy
        draws = PolicyDraws(stream(t, rngmod.PURPOSE_POLICY), config)
        action = strategy.action(state.observation(), draws, config)
        A[t, 0] = action.fluid
        A[t, 1] = action.vaso
    return L, A


def generate_trajectory(
    index: int,
    regime: str,
    config: SimConfig,
    branch_from: int | None = None,
    branch: int = 0,
) -> Trajectory:
    """Generate trajectory ``index`` of a dataset under a named regime."""
    seed_index = index + config.trajectory_seed_offset
    key = rngmod.trajectory_key(config.master_seed, seed_index)
    latents = sample_baseline(
        rngmod.step_stream(key, 0, rngmod.PURPOSE_BASELINE), config
    )
    # The observational regime is "divergence to itself": pre and post
    # strategies coincide, so all three regimes share the t < m prefix
    # for a given seed.
    pre = policy_for("o")
    post = policy_for(regime)
    L, A = simulate_trajectory(
        latents,
        pre,
        post,
        K=config.horizon,
        m=config.divergence_step,
        key=key,
        config=config,
        branch_from=branch_from,
        branch=branch,
    )
    return Trajectory(
        id=index,
        regime=regime,
        seed=seed_index,
        K=config.horizon,
        m=config.divergence_step,
        L=L,
        A=A,
    )


def generate_dataset(config: SimConfig, regime: str) -> Dataset:
    """Generate a full dataset under a regime ("o", "c1" or "c2")."""
    config.validate()
    if regime not in ("o", "c1", "c2"):
        raise ValueError(f"unknown regime {regime!r}")
    trajectories = [generate_trajectory(i, regime, config) for i in range(config.n_trajectories)]
    return Dataset(
        schema=default_schema(),
        trajectories=trajectories,
        regime=regime,
        K=config.horizon,
        m=config.divergence_step,
        master_seed=config.master_seed,
        config=config.to_dict(),
    )
