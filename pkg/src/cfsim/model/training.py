"""Teacher-forced training.

Mini-batch gradient descent on the one-step-ahead loss with global
gradient-norm clipping; normalization statistics come from the training
split only; the parameters from the best validation epoch are retained.
All shuffling and dropout-mask sampling flows from the model seed, so a
rerun reproduces the final loss exactly.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .. import rng as rngmod
from ..trajectories import Dataset
from .masks import sample_masks
from .network import CovariateModel, NormStats

log = logging.getLogger(__name__)


class TrainingDiverged(RuntimeError):
    def __init__(self, epoch: int, loss: float):
        super().__init__(
            f"non-finite training loss at epoch {epoch} (loss={loss}); try a lower learning rate"
        )


@dataclass
class TrainReport:
    train_losses: list[float] = field(default_factory=list)
    val_losses: list[float] = field(default_factory=list)
    best_epoch: int = -1
    best_val: float = float("inf")
    teacher_forced: bool = True  # training consumed observed covariates only

    def to_dict(self) -> dict:
        return {
            "train_losses": self.train_losses,
            "val_losses": self.val_losses,
            "best_epoch": self.best_epoch,
            "best_val": self.best_val,
            "teacher_forced": self.teacher_forced,
        }


def encode_dataset(dataset: Dataset, norm: NormStats) -> tuple[np.ndarray, np.ndarray]:
    """(L_norm, A_enc) tensors for a dataset under given stats."""
    L = dataset.stack_covariates()
    A = dataset.stack_actions()
    return norm.normalize_l(L), norm.encode_actions(A)


def clip_gradients(grads: dict[str, np.ndarray], max_norm: float) -> float:
    total = float(np.sqrt(sum(float(np.sum(g * g)) for g in grads.values())))
    if max_norm > 0 and total > max_norm:
        factor = max_norm / total
        for g in grads.values():
            g *= factor
    return total


def train(
    model: CovariateModel,
    dataset: Dataset,
    train_frac: float = 0.8,
) -> tuple[CovariateModel, TrainReport]:
    """Fit the model on the leading train_frac of the dataset, validate
    on the rest, and keep the best-validation parameters."""
    cfg = model.config
    train_ds, val_ds = dataset.split(train_frac)
    norm = NormStats.fit(train_ds.stack_covariates(), train_ds.stack_actions(), dataset.schema)
    model.norm = norm
    Ltr, Atr = encode_dataset(train_ds, norm)
    Lva, Ava = encode_dataset(val_ds, norm)

    report = TrainReport()
    n = Ltr.shape[0]
    best_params = model.clone_params()
    for epoch in range(cfg.epochs):
        order = rngmod.named_stream(cfg.seed, "train", "shuffle", epoch).permutation(n)
        epoch_loss = 0.0
        n_batches = 0
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            masks = None
            if cfg.dropout > 0.0:
                masks = sample_masks(
                    model,
                    rngmod.named_stream(cfg.seed, "train", "dropout", epoch, n_batches),
                    batch=len(idx),
                )
            loss, grads = model.forward_backward(Ltr[idx], Atr[idx], masks=masks)
            if not np.isfinite(loss):
                raise TrainingDiverged(epoch, loss)
            clip_gradients(grads, cfg.grad_clip)
            for name, g in grads.items():
                model.params[name] -= cfg.learning_rate * g
            epoch_loss += loss
            n_batches += 1
        val_loss, _ = model.forward_backward(Lva, Ava, compute_grad=False)
        if not np.isfinite(val_loss):
            raise TrainingDiverged(epoch, val_loss)
        report.train_losses.append(epoch_loss / max(n_batches, 1))
        report.val_losses.append(val_loss)
        if val_loss < report.best_val:
            report.best_val = val_loss
            report.best_epoch = epoch
            best_params = model.clone_params()
        log.debug("epoch %d train %.5f val %.5f", epoch, report.train_losses[-1], val_loss)
    model.params = best_params
    return model, report


def one_step_predictions(model: CovariateModel, dataset: Dataset) -> np.ndarray:
    """Teacher-forced one-step conditional means, de-normalized.

    For trajectories with K+1 rows, returns (n, K, n_channels): row t
    is the prediction of L_{t+1} given the observed history (and, for
    later groups, the observed earlier-group values at t+1). Binary
    channels carry event probabilities.
    """
    if model.norm is None:
        raise ValueError("model has no normalization stats; train first")
    Ln, Ae = encode_dataset(dataset, model.norm)
    out = model.forward_means(Ln, Ae)
    cont = model.schema.indices_of_kind("continuous")
    out[:, :, cont] = out[:, :, cont] * model.norm.l_sd[cont] + model.norm.l_mean[cont]
    return out
