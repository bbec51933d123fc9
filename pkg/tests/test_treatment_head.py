"""End-to-end natural-course check with a learned treatment head on
simulator data: train a small model that also fits the treatment
process, simulate the population from baseline under it, and require
the simulated population means to track the observed ones."""

import numpy as np
import pytest

from cfsim.gcomp import natural_course
from cfsim.model import CovariateModel, collect_residuals, preset, train
from cfsim.simulator import SimConfig, generate_dataset


@pytest.fixture(scope="module")
def fitted():
    sim = SimConfig(n_trajectories=600, horizon=16, divergence_step=8, master_seed=4)
    d_o = generate_dataset(sim, "o")
    cfg = preset("ident_lstm", seed=21, epochs=30, learning_rate=0.2,
                 group_hidden={0: 5, 1: 32}, include_treatment_head=True)
    model = CovariateModel.build(cfg, d_o.schema)
    model, _ = train(model, d_o)
    bank = collect_residuals(model, d_o.split(0.8)[1])
    return sim, d_o, model, bank


def test_dose_residual_pools_populated(fitted):
    _, _, model, bank = fitted
    assert bank.dose_residuals["fluid"].size > 50
    assert bank.dose_residuals["vaso"].size > 50


def test_learned_head_treat_probability_tracks_covariates(fitted):
    sim, d_o, model, bank = fitted
    from cfsim.model.training import encode_dataset

    Ln, _ = encode_dataset(d_o, model.norm)
    state = model.init_state(Ln.shape[0])
    out = model.treatment_outputs(state, Ln[:, 0])
    p = 1.0 / (1.0 + np.exp(-out[:, 0]))
    # empirically treated fraction at baseline should be matched in level
    treated_frac = (d_o.stack_actions()[:, 0].sum(axis=1) > 0).mean()
    assert abs(p.mean() - treated_frac) < 0.1
    # propensity should fall with arterial pressure, as the generating
    # policy's does
    maps = d_o.stack_covariates()[:, 0, d_o.schema.index("map")]
    assert np.corrcoef(maps, p)[0, 1] < -0.2


def test_natural_course_population_tracks_observed(fitted):
    sim, d_o, model, bank = fitted
    holdout = d_o.subset(slice(500, 600))
    res = natural_course(model, bank, holdout, horizon=12, M=30, seed=9, sim_config=sim)
    assert res.simulated_mean.shape == (13, d_o.schema.n_channels)
    assert np.all(np.isfinite(res.simulated_mean))
    for ch in ("map", "cvp", "tbv"):
        i = res.channels.index(ch)
        sim_c, obs_c = res.simulated_mean[:, i], res.observed_mean[:, i]
        rel = np.abs(sim_c - obs_c) / np.maximum(np.abs(obs_c), 1.0)
        assert rel.max() < 0.25, f"{ch}: relative gap {rel.max():.2f}"
