"""Model configuration and the standard architecture grid.

A model is described by two choices: the history representation
(``identity`` passthrough of the current inputs, or a recurrent
encoder) and the per-group head kind (``linear`` on the current
representation, or a recurrent head with its own state). The four
combinations form the standard comparison grid; hidden sizes and
learning rates below are the tuned values for each cell.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

from ..simulator.config import ConfigError

REPRESENTATION_KINDS = ("identity", "recurrent")
HEAD_KINDS = ("linear", "recurrent")


@dataclass
class ModelConfig:
    representation: str = "identity"
    head: str = "recurrent"
    rep_hidden: int = 30
    group_hidden: dict[int, int] = field(default_factory=lambda: {0: 10, 1: 75})
    learning_rate: float = 0.005
    batch_size: int = 64
    epochs: int = 50
    dropout: float = 0.0  # recurrent-dropout rate; 0 disables dropout
    include_treatment_head: bool = False
    grad_clip: float = 5.0
    init_scale: float = 0.08  # uniform(-s, s) parameter init
    seed: int = 0

    def validate(self) -> None:
        if self.representation not in REPRESENTATION_KINDS:
            raise ConfigError(f"unknown representation kind {self.representation!r}")
        if self.head not in HEAD_KINDS:
            raise ConfigError(f"unknown head kind {self.head!r}")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError(f"dropout rate must lie in [0, 1), got {self.dropout}")
        if self.learning_rate <= 0 or self.batch_size <= 0 or self.epochs <= 0:
            raise ConfigError("learning_rate, batch_size and epochs must be positive")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["group_hidden"] = {str(k): v for k, v in self.group_hidden.items()}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        d = dict(d)
        if "group_hidden" in d:
            d["group_hidden"] = {int(k): int(v) for k, v in d["group_hidden"].items()}
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown ModelConfig fields: {sorted(unknown)}")
        cfg = cls(**d)
        cfg.validate()
        return cfg


# The four-cell grid: (representation, head). Hidden sizes and learning
# rates are the tuned per-cell values; batch size 64 everywhere.
PRESETS: dict[str, dict] = {
    "ident_linear": dict(representation="identity", head="linear", learning_rate=0.005),
    "lstm_linear": dict(
        representation="recurrent", head="linear", rep_hidden=30,
        group_hidden={0: 5, 1: 30}, learning_rate=0.001,
    ),
    "ident_lstm": dict(
        representation="identity", head="recurrent",
        group_hidden={0: 10, 1: 75}, learning_rate=0.005,
    ),
    "lstm_lstm": dict(
        representation="recurrent", head="recurrent",
        rep_hidden=30, group_hidden={0: 5, 1: 30}, learning_rate=0.001,
    ),
}


def preset(name: str, **overrides) -> ModelConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}, expected one of {sorted(PRESETS)}")
    kwargs = dict(PRESETS[name])
    kwargs.update(overrides)
    cfg = ModelConfig(**kwargs)
    cfg.validate()
    return cfg
