import numpy as np

from cfsim import rng


def test_named_stream_deterministic():
    a = rng.named_stream(7, "train", "shuffle", 3).normal(size=5)
    b = rng.named_stream(7, "train", "shuffle", 3).normal(size=5)
    assert np.array_equal(a, b)


def test_named_stream_distinct_paths():
    a = rng.named_stream(7, "train").normal(size=5)
    b = rng.named_stream(7, "validate").normal(size=5)
    c = rng.named_stream(8, "train").normal(size=5)
    assert not np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_step_stream_keyed_by_step_purpose_branch():
    key = rng.trajectory_key(0, 11)
    base = rng.step_stream(key, 5, rng.PURPOSE_NOISE).normal(size=4)
    assert np.array_equal(base, rng.step_stream(key, 5, rng.PURPOSE_NOISE).normal(size=4))
    assert not np.array_equal(base, rng.step_stream(key, 6, rng.PURPOSE_NOISE).normal(size=4))
    assert not np.array_equal(base, rng.step_stream(key, 5, rng.PURPOSE_POLICY).normal(size=4))
    assert not np.array_equal(base, rng.step_stream(key, 5, rng.PURPOSE_NOISE, branch=1).normal(size=4))


def test_step_streams_do_not_alias_under_long_draws():
    # adjacent step slots must stay independent even after many draws
    key = rng.trajectory_key(3, 0)
    a = rng.step_stream(key, 0, rng.PURPOSE_NOISE).normal(size=200_000)
    b = rng.step_stream(key, 1, rng.PURPOSE_NOISE).normal(size=200_000)
    assert abs(np.corrcoef(a, b)[0, 1]) < 0.01
