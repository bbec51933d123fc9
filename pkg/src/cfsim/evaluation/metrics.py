"""Counterfactual predictive performance metrics.

All metrics compare Monte-Carlo output against ground-truth trajectories
over the simulated steps t = m+1..K (the row at m belongs to the
observed history):

* mse -- mean squared error of the point predictions, averaged over
  (patient, step, channel) cells; channels are z-scored with the
  training-split statistics before squaring so no single raw unit
  dominates the pool. Raw-unit per-channel MSE is reported alongside.
* calibration -- empirical coverage of the per-(patient, step, channel)
  [q_low, q_high] interval of the draws (closed intervals, linear
  interpolation between order statistics); a well-calibrated model
  covers with frequency about alpha_high - alpha_low.
* population_average -- per-step cross-patient means (draw means first
  for Monte-Carlo output).
* treatment_effect -- difference of population averages between two
  arms over identical patients.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..gcomp.engine import McResult
from ..model.network import NormStats
from ..trajectories import Dataset


class EvaluationError(ValueError):
    pass


@dataclass
class MetricTable:
    label: str
    regime: str
    times: np.ndarray  # scored steps (m+1..K)
    channel_subset: list[str]
    per_time_mse: np.ndarray
    overall_mse: float
    per_channel_mse_raw: dict[str, float]
    per_time_coverage: np.ndarray | None = None
    pooled_coverage: float | None = None
    alphas: tuple[float, float] | None = None
    pop_avg: dict[str, dict[str, np.ndarray]] = field(default_factory=dict)
    effects: dict[str, dict[str, np.ndarray]] = field(default_factory=dict)


def _check_alignment(results: list[McResult], truth: Dataset, m: int) -> np.ndarray:
    if not results:
        raise EvaluationError("no Monte-Carlo results supplied")
    ids = [r.patient_id for r in results]
    by_id = {t.id: t for t in truth.trajectories}
    missing = [i for i in ids if i not in by_id]
    if missing:
        raise EvaluationError(f"truth dataset lacks patients {missing[:5]}")
    S = truth.K - m
    for r in results:
        if r.m != m or r.point.shape[0] != S + 1:
            raise EvaluationError(
                f"patient {r.patient_id}: result window (m={r.m}, rows={r.point.shape[0]}) "
                f"does not match evaluation window (m={m}, rows={S + 1})"
            )
    return np.stack([by_id[i].L[m : truth.K + 1] for i in ids])  # (n, S+1, n_l)


def _channel_columns(results: list[McResult], truth: Dataset, channels: list[str]) -> list[int]:
    for r in results:
        if r.channels != truth.schema.names:
            raise EvaluationError("result channels do not match the truth schema")
    return [truth.schema.index(name) for name in channels]


def mse(
    results: list[McResult],
    truth: Dataset,
    m: int,
    norm: NormStats,
    channels: list[str] | None = None,
) -> MetricTable:
    """Per-time and pooled MSE of the point predictions, z-scored."""
    channels = channels or truth.schema.continuous_names
    cols = _channel_columns(results, truth, channels)
    actual = _check_alignment(results, truth, m)  # (n, S+1, n_l)
    points = np.stack([r.point for r in results])
    err = points[:, 1:, cols] - actual[:, 1:, cols]  # scored steps only
    z = err / norm.l_sd[cols]
    sq = z**2
    per_time = sq.mean(axis=(0, 2))
    raw_by_channel = {
        name: float((err[:, :, k] ** 2).mean()) for k, name in enumerate(channels)
    }
    return MetricTable(
        label="",
        regime=truth.regime,
        times=np.arange(m + 1, truth.K + 1),
        channel_subset=list(channels),
        per_time_mse=per_time,
        overall_mse=float(sq.mean()),
        per_channel_mse_raw=raw_by_channel,
    )


def calibration(
    results: list[McResult],
    truth: Dataset,
    m: int,
    alphas: tuple[float, float] = (0.25, 0.75),
    channels: list[str] | None = None,
) -> tuple[np.ndarray, float]:
    """(per-time coverage, pooled coverage) of the draw quantile band."""
    lo, hi = alphas
    if not (0.0 <= lo < hi <= 1.0):
        raise EvaluationError(f"invalid quantile pair {alphas}")
    channels = channels or truth.schema.continuous_names
    cols = _channel_columns(results, truth, channels)
    actual = _check_alignment(results, truth, m)
    if all(r.n_draws == 0 for r in results):
        # draws were not persisted; the stored band is usable when it
        # was computed at the requested pair
        if any(tuple(r.alphas) != (lo, hi) for r in results):
            raise EvaluationError(
                f"stored quantile band is not at {alphas}; rerun with draws kept"
            )
        q_low = np.stack([r.q_low for r in results])
        q_high = np.stack([r.q_high for r in results])
    else:
        for r in results:
            if r.n_draws < 2:
                raise EvaluationError("calibration needs at least two draws per patient")
        q_low = np.stack([np.quantile(r.draws, lo, axis=0) for r in results])
        q_high = np.stack([np.quantile(r.draws, hi, axis=0) for r in results])
    a = actual[:, 1:, cols]
    inside = (a >= q_low[:, 1:, cols]) & (a <= q_high[:, 1:, cols])
    return inside.mean(axis=(0, 2)), float(inside.mean())


def population_average(source: Dataset | list[McResult], channel: str) -> np.ndarray:
    """Per-time cross-patient mean of one channel. For Monte-Carlo
    results the draw mean is taken first."""
    if isinstance(source, Dataset):
        if len(source) == 0:
            raise EvaluationError("empty dataset")
        col = source.schema.index(channel)
        return source.stack_covariates()[:, :, col].mean(axis=0)
    if not source:
        raise EvaluationError("no Monte-Carlo results supplied")
    col = source[0].channels.index(channel)
    return np.stack([r.point[:, col] for r in source]).mean(axis=0)


def treatment_effect(
    arm_a: Dataset | list[McResult],
    arm_b: Dataset | list[McResult],
    channel: str,
) -> np.ndarray:
    """Per-time difference of population averages (arm_a - arm_b) over
    identical patient sets."""

    def ids(arm):
        return [t.id for t in arm.trajectories] if isinstance(arm, Dataset) else [r.patient_id for r in arm]

    if ids(arm_a) != ids(arm_b):
        raise EvaluationError("treatment effect requires identical patients in both arms")
    a = population_average(arm_a, channel)
    b = population_average(arm_b, channel)
    if a.shape != b.shape:
        raise EvaluationError(f"arms cover different horizons: {a.shape} vs {b.shape}")
    return a - b
