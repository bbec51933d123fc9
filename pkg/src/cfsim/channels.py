"""Covariate channel registry and dataset schema.

The simulator emits 18 continuous hemodynamic channels (the selected
output subset of the generator) plus one binary channel flagging a
disease event at that step. Channels carry a model group index: binary
channels form group 0 and are predicted first at each simulated step,
continuous channels form group 1 and are predicted conditionally on the
group-0 values. Mean arterial pressure is the designated outcome
channel.

``scale`` is a typical magnitude used to size process noise and to give
metrics a unit-free fallback; it is not a normalization constant (those
are estimated from training data).
"""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class Channel:
    name: str
    kind: str  # "continuous" | "binary"
    group: int
    scale: float
    outcome: bool = False


# Order matters: serialized trajectories, model inputs and metric tables
# all use this ordering.
CHANNELS: tuple[Channel, ...] = (
    Channel("sick", "binary", 0, 1.0),
    Channel("map", "continuous", 1, 85.0, outcome=True),
    Channel("sbp", "continuous", 1, 115.0),
    Channel("cvp", "continuous", 1, 9.0),
    Channel("hr", "continuous", 1, 95.0),
    Channel("tbv", "continuous", 1, 3750.0),
    Channel("ar", "continuous", 1, 0.75),
    Channel("ap", "continuous", 1, 90.0),
    Channel("aq", "continuous", 1, 90.0),
    Channel("av", "continuous", 1, 80.0),
    Channel("pvv", "continuous", 1, 100.0),
    Channel("lvp", "continuous", 1, 120.0),
    Channel("lvq", "continuous", 1, 90.0),
    Channel("lvc", "continuous", 1, 5.0),
    Channel("rvp", "continuous", 1, 28.0),
    Channel("rvq", "continuous", 1, 88.0),
    Channel("rvc", "continuous", 1, 1.3),
    Channel("vt", "continuous", 1, 15.0),
    Channel("pth", "continuous", 1, -4.0),
)

ACTION_NAMES = ("fluid", "vaso")


class SchemaError(ValueError):
    """Channel layout inconsistent with what an operation expects."""


@dataclass
class ChannelSchema:
    """Named, typed, grouped channel layout shared by datasets and models."""

    channels: list[Channel] = field(default_factory=lambda: list(CHANNELS))
    actions: tuple[str, ...] = ACTION_NAMES

    def __post_init__(self) -> None:
        groups = sorted({c.group for c in self.channels})
        if groups != list(range(len(groups))):
            raise SchemaError(f"group indices must be 0..p-1, got {groups}")
        n_outcomes = sum(c.outcome for c in self.channels)
        if n_outcomes != 1:
            raise SchemaError(f"exactly one outcome channel required, got {n_outcomes}")
        for c in self.channels:
            if c.kind not in ("continuous", "binary"):
                raise SchemaError(f"unknown channel kind {c.kind!r} on {c.name!r}")

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.channels]

    @property
    def n_channels(self) -> int:
        return len(self.channels)

    @property
    def n_groups(self) -> int:
        return max(c.group for c in self.channels) + 1

    def group_indices(self, j: int) -> list[int]:
        """Positions (in channel order) of the channels in group j."""
        return [i for i, c in enumerate(self.channels) if c.group == j]

    def indices_of_kind(self, kind: str) -> list[int]:
        return [i for i, c in enumerate(self.channels) if c.kind == kind]

    @property
    def continuous_names(self) -> list[str]:
        return [c.name for c in self.channels if c.kind == "continuous"]

    @property
    def outcome_name(self) -> str:
        return next(c.name for c in self.channels if c.outcome)

    def index(self, name: str) -> int:
        for i, c in enumerate(self.channels):
            if c.name == name:
                return i
        raise SchemaError(f"unknown channel {name!r}")

    def to_dict(self) -> dict:
        return {
            "channels": [
                {
                    "name": c.name,
                    "kind": c.kind,
                    "group": c.group,
                    "scale": c.scale,
                    "outcome": c.outcome,
                }
                for c in self.channels
            ],
            "actions": list(self.actions),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ChannelSchema":
        channels = [
            Channel(e["name"], e["kind"], int(e["group"]), float(e["scale"]), bool(e.get("outcome", False)))
            for e in d["channels"]
        ]
        return cls(channels=channels, actions=tuple(d.get("actions", ACTION_NAMES)))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ChannelSchema):
            return NotImplemented
        return self.to_dict() == other.to_dict()


def default_schema() -> ChannelSchema:
    return ChannelSchema()
