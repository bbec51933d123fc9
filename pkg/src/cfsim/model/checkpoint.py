"""Model checkpoints: one self-describing JSON file.

Carries a format version, the channel schema, the model configuration,
the normalization statistics, every parameter tensor with its shape,
and optionally the residual bank, so a checkpoint alone is enough to
simulate.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..channels import ChannelSchema
from .config import ModelConfig
from .network import CovariateModel, NormStats
from .residuals import ResidualBank

FORMAT_VERSION = 1
FORMAT_KIND = "cfsim-model"


class CheckpointError(ValueError):
    pass


def save_model(
    model: CovariateModel,
    path: str | Path,
    bank: ResidualBank | None = None,
    extra: dict | None = None,
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "kind": FORMAT_KIND,
        "version": FORMAT_VERSION,
        "schema": model.schema.to_dict(),
        "config": model.config.to_dict(),
        "norm": model.norm.to_dict() if model.norm is not None else None,
        "params": {
            name: {"shape": list(t.shape), "data": t.reshape(-1).tolist()}
            for name, t in sorted(model.params.items())
        },
        "residual_bank": bank.to_dict() if bank is not None else None,
        "extra": extra or {},
    }
    path.write_text(json.dumps(payload, sort_keys=True, separators=(",", ":")), encoding="utf-8")
    return path


def load_model(path: str | Path) -> tuple[CovariateModel, ResidualBank | None]:
    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise CheckpointError(f"{path}: unreadable checkpoint: {e}") from e
    if payload.get("kind") != FORMAT_KIND:
        raise CheckpointError(f"{path}: not a model checkpoint")
    if payload.get("version") != FORMAT_VERSION:
        raise CheckpointError(
            f"{path}: unsupported checkpoint version {payload.get('version')!r}"
        )
    schema = ChannelSchema.from_dict(payload["schema"])
    config = ModelConfig.from_dict(payload["config"])
    params = {
        name: np.asarray(entry["data"], dtype=float).reshape(entry["shape"])
        for name, entry in payload["params"].items()
    }
    norm = NormStats.from_dict(payload["norm"]) if payload.get("norm") else None
    model = CovariateModel(config, schema, params, norm=norm)
    bank = ResidualBank.from_dict(payload["residual_bank"]) if payload.get("residual_bank") else None
    return model, bank
