"""Shared toy constructions: exactly-known models and processes used as
independent oracles for the engine and metric tests."""

from __future__ import annotations

import numpy as np

from cfsim.channels import Channel, ChannelSchema
from cfsim.model import CovariateModel, ModelConfig, NormStats, ResidualBank
from cfsim.trajectories import Dataset, Trajectory


def scalar_schema() -> ChannelSchema:
    return ChannelSchema(channels=[Channel("l", "continuous", 0, 1.0, outcome=True)])


def identity_norm(schema: ChannelSchema) -> NormStats:
    n = schema.n_channels
    return NormStats(np.zeros(n), np.ones(n), np.zeros(2), np.ones(2))


def linear_gaussian_model(rho: float = 0.5, fluid_coef: float = 1.0) -> CovariateModel:
    """Exact model of the process L_{t+1} = rho*L_t + fluid_t (+ noise).

    Input layout is [l, treated, fluid, vaso] with identity normalization,
    so the linear head can encode the transition exactly.
    """
    schema = scalar_schema()
    model = CovariateModel.build(ModelConfig(seed=0, representation="identity", head="linear"), schema)
    model.norm = identity_norm(schema)
    model.params["head0.Wo"] = np.array([[rho, 0.0, fluid_coef, 0.0]])
    model.params["head0.bo"] = np.zeros(1)
    return model


def constant_model(value: float) -> CovariateModel:
    """Model predicting L_{t+1} = value + fluid_t regardless of history."""
    schema = scalar_schema()
    model = CovariateModel.build(ModelConfig(seed=0, representation="identity", head="linear"), schema)
    model.norm = identity_norm(schema)
    model.params["head0.Wo"] = np.array([[0.0, 0.0, 1.0, 0.0]])
    model.params["head0.bo"] = np.array([value])
    return model


def gaussian_bank(sigma: float, size: int = 20_000, seed: int = 0) -> ResidualBank:
    """Empirical pool standing in for exactly-N(0, sigma^2) noise.

    The pool is centered: a finite pool's nonzero mean would be a
    systematic offset shared by every draw (not Monte-Carlo noise), and
    the oracle tests supply the *true* mean-zero distribution.
    """
    if sigma > 0:
        pool = np.random.default_rng(seed).normal(0.0, sigma, size=size)
        pool -= pool.mean()
    else:
        pool = np.zeros(size)
    return ResidualBank(residuals={"l": pool})


def zero_bank() -> ResidualBank:
    return ResidualBank(residuals={"l": np.zeros(4)})


def scalar_dataset(L: np.ndarray, A: np.ndarray | None = None, m: int | None = None) -> Dataset:
    schema = scalar_schema()
    n, T1 = L.shape
    if A is None:
        A = np.zeros((n, T1, 2))
    m = T1 - 1 if m is None else m
    trajs = [
        Trajectory(id=i, regime="o", seed=i, K=T1 - 1, m=m, L=L[i][:, None], A=A[i])
        for i in range(n)
    ]
    return Dataset(schema=schema, trajectories=trajs, regime="o", K=T1 - 1, m=m, master_seed=0)
