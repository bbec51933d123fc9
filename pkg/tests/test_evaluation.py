import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cfsim import rng
from cfsim.evaluation import (
    EvaluationError,
    calibration,
    mse,
    population_average,
    treatment_effect,
)
from cfsim.gcomp.engine import McResult
from tests.helpers import identity_norm, scalar_dataset, scalar_schema


def mc_from_draws(pid: int, m: int, draws: np.ndarray, channels=None) -> McResult:
    channels = channels or ["l"]
    return McResult(
        patient_id=pid,
        m=m,
        times=np.arange(m, m + draws.shape[1]),
        channels=channels,
        draws=draws,
        point=draws.mean(axis=0),
        q_low=np.quantile(draws, 0.25, axis=0),
        q_high=np.quantile(draws, 0.75, axis=0),
        alphas=(0.25, 0.75),
        n_excluded=0,
        actions_mean=np.zeros((draws.shape[1] - 1, 2)),
    )


def test_mse_zero_for_perfect_predictions():
    L = np.arange(12, dtype=float).reshape(2, 6)
    truth = scalar_dataset(L, m=2)
    results = [mc_from_draws(i, 2, np.repeat(L[i, 2:][None, :, None], 3, axis=0)) for i in range(2)]
    table = mse(results, truth, m=2, norm=identity_norm(scalar_schema()))
    assert np.all(table.per_time_mse == 0.0)
    assert table.overall_mse == 0.0


def test_mse_hand_example():
    # one patient, one channel, two scored steps, errors (1, 3):
    # pooled MSE = (1 + 9) / 2 = 5
    L = np.array([[0.0, 0.0, 0.0]])
    truth = scalar_dataset(L, m=0)
    draws = np.array([[[0.0], [1.0], [3.0]]])  # base row + two predictions
    table = mse([mc_from_draws(0, 0, draws)], truth, m=0, norm=identity_norm(scalar_schema()))
    assert table.overall_mse == pytest.approx(5.0)
    assert table.per_time_mse.tolist() == [1.0, 9.0]


def brute_force_mse(points, actual, sds):
    total, count = 0.0, 0
    per_time = np.zeros(points.shape[1] - 1)
    per_time_n = np.zeros(points.shape[1] - 1)
    for i in range(points.shape[0]):
        for t in range(1, points.shape[1]):
            for h in range(points.shape[2]):
                e = (points[i, t, h] - actual[i, t, h]) / sds[h]
                total += e * e
                count += 1
                per_time[t - 1] += e * e
                per_time_n[t - 1] += 1
    return per_time / per_time_n, total / count


def test_mse_matches_brute_force_triple_loop():
    stream = rng.named_stream(0, "mse-brute")
    n, S = 7, 5
    L = stream.normal(size=(n, S + 1))
    truth = scalar_dataset(L, m=0)
    results = [mc_from_draws(i, 0, stream.normal(size=(4, S + 1, 1))) for i in range(n)]
    norm = identity_norm(scalar_schema())
    table = mse(results, truth, m=0, norm=norm)
    points = np.stack([r.point for r in results])
    actual = np.stack([t.L for t in truth.trajectories])
    bf_per_time, bf_overall = brute_force_mse(points, actual, norm.l_sd)
    assert np.max(np.abs(table.per_time_mse - bf_per_time)) < 1e-9 * max(1, bf_overall)
    assert abs(table.overall_mse - bf_overall) < 1e-9 * max(1, bf_overall)


def test_mse_invariant_to_patient_order():
    stream = rng.named_stream(1, "mse-perm")
    L = stream.normal(size=(6, 5))
    truth = scalar_dataset(L, m=1)
    results = [mc_from_draws(i, 1, stream.normal(size=(3, 4, 1))) for i in range(6)]
    norm = identity_norm(scalar_schema())
    a = mse(results, truth, m=1, norm=norm).overall_mse
    b = mse(list(reversed(results)), truth, m=1, norm=norm).overall_mse
    assert a == pytest.approx(b, rel=1e-12)


def test_calibration_exchangeable_draws_cover_half():
    stream = rng.named_stream(2, "cal-exch")
    n, S, M = 60, 6, 200
    draws = stream.normal(size=(n, M, S + 1, 1))
    L = stream.normal(size=(n, S + 1))
    truth = scalar_dataset(L, m=0)
    results = [mc_from_draws(i, 0, draws[i]) for i in range(n)]
    _, pooled = calibration(results, truth, m=0, alphas=(0.25, 0.75))
    assert pooled == pytest.approx(0.5, abs=0.04)


def test_calibration_point_mass_covers_with_closed_interval():
    L = np.tile(np.arange(4.0), (2, 1))
    truth = scalar_dataset(L, m=0)
    results = [mc_from_draws(i, 0, np.repeat(L[i][None, :, None], 5, axis=0)) for i in range(2)]
    per_time, pooled = calibration(results, truth, m=0)
    assert pooled == 1.0
    assert np.all(per_time == 1.0)


def test_calibration_detects_outlying_truth():
    stream = rng.named_stream(3, "cal-out")
    draws = stream.uniform(size=(1, 400, 4, 1))
    L = np.full((1, 4), 0.99)
    truth = scalar_dataset(L, m=0)
    _, pooled = calibration([mc_from_draws(0, 0, draws[0])], truth, m=0, alphas=(0.25, 0.75))
    assert pooled == 0.0


def test_calibration_monotone_in_interval_width():
    stream = rng.named_stream(4, "cal-mono")
    n = 30
    draws = stream.normal(size=(n, 50, 5, 1))
    L = stream.normal(size=(n, 5))
    truth = scalar_dataset(L, m=0)
    results = [mc_from_draws(i, 0, draws[i]) for i in range(n)]
    pooled = [
        calibration(results, truth, m=0, alphas=pair)[1]
        for pair in [(0.4, 0.6), (0.25, 0.75), (0.1, 0.9), (0.025, 0.975)]
    ]
    assert all(a <= b + 1e-12 for a, b in zip(pooled, pooled[1:]))


def test_population_average_single_patient_is_identity():
    L = np.array([[1.0, 2.0, 3.0]])
    ds = scalar_dataset(L)
    assert np.array_equal(population_average(ds, "l"), L[0])


def test_population_average_symmetric_pair_cancels():
    c = np.array([1.0, -2.0, 0.5, 4.0])
    ds = scalar_dataset(np.stack([c, -c]))
    assert np.allclose(population_average(ds, "l"), 0.0)


def test_population_average_matches_brute_force():
    stream = rng.named_stream(5, "pop-brute")
    L = stream.normal(size=(9, 7))
    ds = scalar_dataset(L)
    curve = population_average(ds, "l")
    brute = np.array([sum(L[i, t] for i in range(9)) / 9 for t in range(7)])
    assert np.max(np.abs(curve - brute)) < 1e-12


def test_population_average_over_mc_results_means_draws_first():
    stream = rng.named_stream(6, "pop-mc")
    results = [mc_from_draws(i, 0, stream.normal(size=(8, 4, 1))) for i in range(5)]
    curve = population_average(results, "l")
    brute = np.mean([r.draws.mean(axis=0)[:, 0] for r in results], axis=0)
    assert np.allclose(curve, brute)


def test_treatment_effect_null_for_identical_arms():
    stream = rng.named_stream(7, "eff-null")
    results = [mc_from_draws(i, 0, stream.normal(size=(6, 5, 1))) for i in range(4)]
    assert np.all(treatment_effect(results, results, "l") == 0.0)


def test_treatment_effect_is_difference_of_population_averages():
    stream = rng.named_stream(8, "eff-diff")
    a = [mc_from_draws(i, 0, stream.normal(size=(6, 5, 1))) for i in range(4)]
    b = [mc_from_draws(i, 0, stream.normal(size=(6, 5, 1))) for i in range(4)]
    eff = treatment_effect(a, b, "l")
    assert np.array_equal(eff, population_average(a, "l") - population_average(b, "l"))


def test_treatment_effect_paired_difference_on_datasets():
    stream = rng.named_stream(9, "eff-pair")
    La = stream.normal(size=(5, 6))
    Lb = stream.normal(size=(5, 6))
    eff = treatment_effect(scalar_dataset(La), scalar_dataset(Lb), "l")
    assert np.allclose(eff, (La - Lb).mean(axis=0))


def test_treatment_effect_rejects_mismatched_patients():
    stream = rng.named_stream(10, "eff-mis")
    a = [mc_from_draws(0, 0, stream.normal(size=(3, 4, 1)))]
    b = [mc_from_draws(1, 0, stream.normal(size=(3, 4, 1)))]
    with pytest.raises(EvaluationError):
        treatment_effect(a, b, "l")


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=10_000))
def test_mse_brute_force_property(seed):
    stream = rng.named_stream(seed, "mse-prop")
    n, S = int(stream.integers(1, 5)), int(stream.integers(1, 5))
    L = stream.normal(size=(n, S + 1))
    truth = scalar_dataset(L, m=0)
    results = [mc_from_draws(i, 0, stream.normal(size=(3, S + 1, 1))) for i in range(n)]
    norm = identity_norm(scalar_schema())
    table = mse(results, truth, m=0, norm=norm)
    points = np.stack([r.point for r in results])
    actual = np.stack([t.L for t in truth.trajectories])
    _, bf = brute_force_mse(points, actual, norm.l_sd)
    assert table.overall_mse == pytest.approx(bf, rel=1e-9)
