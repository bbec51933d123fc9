from .experiment import DEFAULT_MODELS, ExperimentConfig, StageError, run_experiment
from .manifest import (
    Manifest,
    ManifestError,
    StageRecord,
    audit_stage_io,
    load_manifest,
    sha256_file,
    verify_manifest,
)

__all__ = [
    "DEFAULT_MODELS",
    "ExperimentConfig",
    "Manifest",
    "ManifestError",
    "StageError",
    "StageRecord",
    "audit_stage_io",
    "load_manifest",
    "run_experiment",
    "sha256_file",
    "verify_manifest",
]
