"""Trajectory and dataset containers.

A trajectory holds the covariate matrix L (K+1 rows, one per time step)
and the action matrix A (K+1 rows: fluid and vasopressor doses; the
action at the final step is recorded for completeness even though no
later covariates observe it). Hidden generator inputs are deliberately
not representable here -- estimators only ever see these containers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channels import ChannelSchema, default_schema


@dataclass
class Trajectory:
    id: int
    regime: str
    seed: int  # trajectory stream index under the dataset master seed
    K: int
    m: int
    L: np.ndarray  # (K+1, n_channels) float64, channel order = schema order
    A: np.ndarray  # (K+1, 2) float64, columns (fluid, vaso)

    def covariate(self, schema: ChannelSchema, name: str) -> np.ndarray:
        return self.L[:, schema.index(name)]


@dataclass
class Dataset:
    schema: ChannelSchema
    trajectories: list[Trajectory]
    regime: str
    K: int
    m: int
    master_seed: int
    config: dict = field(default_factory=dict)  # generator configuration echo

    def __len__(self) -> int:
        return len(self.trajectories)

    def stack_covariates(self) -> np.ndarray:
        """(n, K+1, n_channels) array of all trajectories."""
        return np.stack([t.L for t in self.trajectories])

    def stack_actions(self) -> np.ndarray:
        """(n, K+1, 2) array of all trajectories."""
        return np.stack([t.A for t in self.trajectories])

    def subset(self, index: slice | list[int]) -> "Dataset":
        picked = (
            self.trajectories[index]
            if isinstance(index, slice)
            else [self.trajectories[i] for i in index]
        )
        return Dataset(
            schema=self.schema,
            trajectories=list(picked),
            regime=self.regime,
            K=self.K,
            m=self.m,
            master_seed=self.master_seed,
            config=self.config,
        )

    def split(self, train_frac: float) -> tuple["Dataset", "Dataset"]:
        """Deterministic leading/trailing split by trajectory index."""
        if not 0.0 < train_frac < 1.0:
            raise ValueError(f"train_frac must be in (0,1), got {train_frac}")
        cut = int(round(len(self.trajectories) * train_frac))
        cut = min(max(cut, 1), len(self.trajectories) - 1)
        return self.subset(slice(None, cut)), self.subset(slice(cut, None))


def empty_like(dataset: Dataset) -> Dataset:
    return Dataset(
        schema=dataset.schema,
        trajectories=[],
        regime=dataset.regime,
        K=dataset.K,
        m=dataset.m,
        master_seed=dataset.master_seed,
        config=dataset.config,
    )


def make_dataset(
    trajectories: list[Trajectory],
    regime: str,
    K: int,
    m: int,
    master_seed: int,
    schema: ChannelSchema | None = None,
    config: dict | None = None,
) -> Dataset:
    return Dataset(
        schema=schema or default_schema(),
        trajectories=trajectories,
        regime=regime,
        K=K,
        m=m,
        master_seed=master_seed,
        config=config or {},
    )
