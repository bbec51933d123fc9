import numpy as np
import pytest

from cfsim import rng
from cfsim.channels import Channel, ChannelSchema
from cfsim.model import (
    ContractViolation,
    CovariateModel,
    ModelConfig,
    NormStats,
    load_model,
    preset,
    sample_masks,
    save_model,
)
from cfsim.simulator.config import ConfigError
from cfsim.trajectories import Dataset, Trajectory


def two_group_schema() -> ChannelSchema:
    return ChannelSchema(
        channels=[
            Channel("flag", "binary", 0, 1.0),
            Channel("a", "continuous", 1, 1.0, outcome=True),
            Channel("b", "continuous", 1, 1.0),
        ]
    )


def synthetic_dataset(L: np.ndarray, schema: ChannelSchema, A: np.ndarray | None = None) -> Dataset:
    n, T1, _ = L.shape
    if A is None:
        A = np.zeros((n, T1, 2))
    trajs = [
        Trajectory(id=i, regime="o", seed=i, K=T1 - 1, m=T1 - 1, L=L[i], A=A[i]) for i in range(n)
    ]
    return Dataset(schema=schema, trajectories=trajs, regime="o", K=T1 - 1, m=T1 - 1, master_seed=0)


def identity_norm(schema: ChannelSchema) -> NormStats:
    n = schema.n_channels
    return NormStats(np.zeros(n), np.ones(n), np.zeros(2), np.ones(2))


def test_preset_grid_matches_architecture_cells():
    assert preset("ident_linear").representation == "identity"
    assert preset("ident_linear").head == "linear"
    assert preset("lstm_linear").representation == "recurrent"
    assert preset("ident_lstm").group_hidden == {0: 10, 1: 75}
    assert preset("ident_lstm").learning_rate == 0.005
    assert preset("lstm_lstm").rep_hidden == 30
    assert preset("lstm_lstm").group_hidden == {0: 5, 1: 30}
    assert preset("lstm_lstm").learning_rate == 0.001
    with pytest.raises(ConfigError):
        preset("m5")


def test_unknown_kinds_rejected():
    with pytest.raises(ConfigError):
        ModelConfig(representation="transformer").validate()
    with pytest.raises(ConfigError):
        ModelConfig(head="attention").validate()


def test_build_is_seed_deterministic():
    schema = two_group_schema()
    a = CovariateModel.build(ModelConfig(seed=4, head="recurrent"), schema)
    b = CovariateModel.build(ModelConfig(seed=4, head="recurrent"), schema)
    c = CovariateModel.build(ModelConfig(seed=5, head="recurrent"), schema)
    for k in a.params:
        assert np.array_equal(a.params[k], b.params[k])
    assert any(not np.array_equal(a.params[k], c.params[k]) for k in a.params)


def test_identity_representation_is_passthrough():
    schema = two_group_schema()
    model = CovariateModel.build(ModelConfig(representation="identity", head="linear"), schema)
    model.norm = identity_norm(schema)
    L = np.array([[0.0, 1.5, -2.0]])
    A = np.array([[300.0, 0.0]])
    r = model.represent(L, A)
    assert np.allclose(r[: schema.n_channels], L[0])
    assert r[schema.n_channels] == 1.0  # treated flag
    assert np.allclose(r[schema.n_channels + 1 :], A[0])


def test_recurrent_representation_empty_history_is_zero_state():
    schema = two_group_schema()
    model = CovariateModel.build(
        ModelConfig(representation="recurrent", head="linear", rep_hidden=6), schema
    )
    model.norm = identity_norm(schema)
    r = model.represent(np.empty((0, 3)), np.empty((0, 2)))
    assert np.array_equal(r, np.zeros(6))


def test_recurrent_representation_sensitive_to_early_history():
    schema = two_group_schema()
    model = CovariateModel.build(
        ModelConfig(seed=1, representation="recurrent", head="linear", rep_hidden=6), schema
    )
    model.norm = identity_norm(schema)
    stream = rng.named_stream(3, "hist")
    L = stream.normal(size=(8, 3))
    A = np.abs(stream.normal(size=(8, 2)))
    A[:, 1] = 0.0
    L2 = L.copy()
    L2[3] += 1.0  # perturb five steps before the end
    r1 = model.represent(L, A)
    r2 = model.represent(L2, A)
    assert not np.allclose(r1, r2)


def test_predict_group_contract():
    schema = two_group_schema()
    model = CovariateModel.build(ModelConfig(seed=2, head="linear"), schema)
    rep = np.zeros(model.rep_dim)
    p0 = model.predict_group_means(rep, {})
    assert p0.shape == (1, 1)
    assert 0.0 <= p0[0, 0] <= 1.0  # binary head squashes
    p1 = model.predict_group_means(rep, {0: np.array([1.0])})
    p1_other = model.predict_group_means(rep, {0: np.array([0.0])})
    assert p1.shape == (1, 2)
    assert not np.allclose(p1, p1_other)  # group-0 input feeds group 1
    with pytest.raises(ContractViolation):
        model.predict_group_means(rep, {1: np.array([1.0, 2.0])})
    with pytest.raises(ContractViolation):
        model.predict_group_means(rep, {0: np.array([1.0]), 1: np.array([1.0, 2.0])})


def test_normalization_round_trip():
    schema = two_group_schema()
    stream = rng.named_stream(5, "norm")
    L = stream.normal(loc=50.0, scale=12.0, size=(20, 9, 3))
    L[:, :, 0] = (L[:, :, 0] > 50).astype(float)
    A = np.abs(stream.normal(scale=100.0, size=(20, 9, 2)))
    norm = NormStats.fit(L, A, schema)
    back = norm.denormalize_l(norm.normalize_l(L))
    assert np.max(np.abs(back - L) / np.maximum(np.abs(L), 1.0)) < 1e-10


def test_mask_sampling_contracts():
    schema = two_group_schema()
    model = CovariateModel.build(
        ModelConfig(seed=1, representation="recurrent", head="recurrent", dropout=0.0), schema
    )
    ms = sample_masks(model, rng.named_stream(0, "m"))
    assert all(np.all(m == 1.0) for m in ms.masks.values())  # rate 0 keeps everything

    model.config.dropout = 0.5
    big = sample_masks(model, rng.named_stream(1, "m"), batch=2000)
    total = np.concatenate([m.reshape(-1) for m in big.masks.values()])
    assert total.size > 10_000
    assert abs(total.mean() - 0.5) < 0.02  # keep fraction

    a = sample_masks(model, rng.named_stream(2, "m"))
    b = sample_masks(model, rng.named_stream(3, "m"))
    assert any(not np.array_equal(a.masks[s], b.masks[s]) for s in a.masks)
    assert {s: m.shape for s, m in a.masks.items()} == {s: m.shape for s, m in b.masks.items()}


def test_checkpoint_round_trip(tmp_path):
    schema = two_group_schema()
    model = CovariateModel.build(ModelConfig(seed=8, head="recurrent"), schema)
    model.norm = identity_norm(schema)
    path = save_model(model, tmp_path / "m.ckpt")
    loaded, bank = load_model(path)
    assert bank is None
    assert loaded.config.to_dict() == model.config.to_dict()
    assert loaded.schema == model.schema
    for k in model.params:
        assert np.array_equal(loaded.params[k], model.params[k])
    assert np.array_equal(loaded.norm.l_mean, model.norm.l_mean)


def test_checkpoint_rejects_foreign_files(tmp_path):
    from cfsim.model import CheckpointError

    p = tmp_path / "x.ckpt"
    p.write_text('{"kind": "other"}')
    with pytest.raises(CheckpointError):
        load_model(p)
