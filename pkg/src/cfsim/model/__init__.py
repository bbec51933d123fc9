from .checkpoint import CheckpointError, load_model, save_model
from .config import ModelConfig, PRESETS, preset
from .masks import MaskSet, mask_sites, sample_masks, stack_masks
from .network import ContractViolation, CovariateModel, ModelState, NormStats
from .residuals import EmptyHoldoutError, ResidualBank, collect_residuals
from .training import TrainReport, TrainingDiverged, encode_dataset, one_step_predictions, train

__all__ = [
    "CheckpointError",
    "ContractViolation",
    "CovariateModel",
    "EmptyHoldoutError",
    "MaskSet",
    "ModelConfig",
    "ModelState",
    "NormStats",
    "PRESETS",
    "ResidualBank",
    "TrainReport",
    "TrainingDiverged",
    "collect_residuals",
    "encode_dataset",
    "load_model",
    "mask_sites",
    "one_step_predictions",
    "preset",
    "sample_masks",
    "save_model",
    "stack_masks",
    "train",
]
