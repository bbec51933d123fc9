"""Holdout residual banks.

Continuous-channel simulation noise is drawn from the empirical
distribution of one-step prediction errors on data that never touched
the parameter fit: residual = observed - predicted, pooled over all
steps and holdout patients (the error distribution is treated as
history-independent). Residuals are stored in raw channel units.

When the model carries a treatment head, per-arm dose residuals from
the holdout treated steps are kept as well, for natural-course action
sampling.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..trajectories import Dataset
from .network import CovariateModel
from .training import one_step_predictions


class EmptyHoldoutError(ValueError):
    pass


@dataclass
class ResidualBank:
    residuals: dict[str, np.ndarray]  # continuous channel name -> pooled residuals
    dose_residuals: dict[str, np.ndarray] = field(default_factory=dict)

    def channel(self, name: str) -> np.ndarray:
        arr = self.residuals[name]
        if arr.size == 0:
            raise EmptyHoldoutError(f"residual bank for channel {name!r} is empty")
        return arr

    def matrix(self, names: list[str]) -> np.ndarray:
        """(bank_size, len(names)) column-aligned residual matrix.

        Residuals are pooled per channel; rows do not correspond to a
        common (patient, step), they exist so draws can be vectorized
        with one index per channel.
        """
        return np.column_stack([self.channel(n) for n in names])

    def to_dict(self) -> dict:
        return {
            "residuals": {k: v.tolist() for k, v in self.residuals.items()},
            "dose_residuals": {k: v.tolist() for k, v in self.dose_residuals.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ResidualBank":
        return cls(
            residuals={k: np.asarray(v, dtype=float) for k, v in d["residuals"].items()},
            dose_residuals={k: np.asarray(v, dtype=float) for k, v in d.get("dose_residuals", {}).items()},
        )


def collect_residuals(model: CovariateModel, holdout: Dataset) -> ResidualBank:
    """Pool one-step teacher-forced residuals over the holdout set."""
    if len(holdout) == 0:
        raise EmptyHoldoutError("holdout dataset is empty")
    preds = one_step_predictions(model, holdout)  # (n, K, n_l), raw units
    L = holdout.stack_covariates()
    residuals: dict[str, np.ndarray] = {}
    for i, ch in enumerate(holdout.schema.channels):
        if ch.kind != "continuous":
            continue
        residuals[ch.name] = (L[:, 1:, i] - preds[:, :, i]).reshape(-1)
    bank = ResidualBank(residuals=residuals)
    if model.config.include_treatment_head:
        bank.dose_residuals = _dose_residuals(model, holdout)
    return bank


def _dose_residuals(model: CovariateModel, holdout: Dataset) -> dict[str, np.ndarray]:
    from .training import encode_dataset  # local to avoid cycle at import time

    Ln, Ae = encode_dataset(holdout, model.norm)
    n, T1, _ = Ln.shape
    state = model.init_state(n)
    out: dict[str, list[np.ndarray]] = {"fluid": [], "vaso": []}
    A = holdout.stack_actions()
    for t in range(T1):
        preds = model.treatment_outputs(state, Ln[:, t])  # (n, 4)
        treated = Ae[:, t, 0] > 0
        fluid_arm = treated & (A[:, t, 0] > 0)
        vaso_arm = treated & (A[:, t, 1] > 0)
        mu_fluid = preds[:, 2] * model.norm.a_sd[0] + model.norm.a_mean[0]
        mu_vaso = preds[:, 3] * model.norm.a_sd[1] + model.norm.a_mean[1]
        out["fluid"].append(A[fluid_arm, t, 0] - mu_fluid[fluid_arm])
        out["vaso"].append(A[vaso_arm, t, 1] - mu_vaso[vaso_arm])
        if t < T1 - 1:
            state = model.advance(state, Ln[:, t], Ae[:, t], Ln[:, t + 1])
    return {k: np.concatenate(v) if v else np.empty(0) for k, v in out.items()}
