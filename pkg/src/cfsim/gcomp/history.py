"""Observed patient history up to the prediction start."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..trajectories import Trajectory


@dataclass
class PatientHistory:
    patient_id: int
    L: np.ndarray  # (m+1, n_channels) raw covariate rows 0..m
    A: np.ndarray  # (m, 2) raw actions 0..m-1

    def __post_init__(self) -> None:
        if self.L.ndim != 2 or self.A.ndim != 2:
            raise ValueError("history arrays must be 2-d")
        if len(self.L) != len(self.A) + 1:
            raise ValueError(
                f"inconsistent history lengths: {len(self.L)} covariate rows need "
                f"{len(self.L) - 1} action rows, got {len(self.A)}"
            )

    @property
    def m(self) -> int:
        return len(self.L) - 1


def history_from_trajectory(traj: Trajectory, m: int) -> PatientHistory:
    if not 0 <= m <= traj.K:
        raise ValueError(f"m={m} outside trajectory horizon {traj.K}")
    return PatientHistory(patient_id=traj.id, L=traj.L[: m + 1].copy(), A=traj.A[:m].copy())
