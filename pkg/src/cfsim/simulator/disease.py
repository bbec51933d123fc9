"""Disease events: random sepsis / blood-loss shocks.

At each step a disease event fires with probability ``disease_prob``
(default 0.05) and is then sepsis or blood loss with equal probability;
the two never co-occur. Sepsis scales the next arteriolar-resistance
value by a U(0, 0.7] multiplier, blood loss scales the next total blood
volume by a U(0, 0.95] multiplier.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import SimConfig

KIND_NONE = "none"
KIND_SEPSIS = "sepsis"
KIND_BLOOD_LOSS = "blood_loss"


@dataclass(frozen=True)
class DiseaseEvent:
    kind: str
    alpha: float  # multiplier applied to the affected channel's next value

    @property
    def resistance_multiplier(self) -> float:
        return self.alpha if self.kind == KIND_SEPSIS else 1.0

    @property
    def volume_multiplier(self) -> float:
        return self.alpha if self.kind == KIND_BLOOD_LOSS else 1.0

    @property
    def occurred(self) -> bool:
        return self.kind != KIND_NONE


def draw_disease(rng: np.random.Generator, config: SimConfig) -> DiseaseEvent:
    """One event draw. Consumes a fixed number of values from ``rng``
    regardless of the outcome so that coupled simulations stay aligned."""
    u_event, u_kind, u_alpha = rng.uniform(size=3)
    if u_event >= config.disease_prob:
        return DiseaseEvent(KIND_NONE, 1.0)
    if u_kind < config.sepsis_given_disease:
        # U(0, alpha_max]: complement the half-open [0, 1) draw
        return DiseaseEvent(KIND_SEPSIS, (1.0 - u_alpha) * config.sepsis_alpha_max)
    return DiseaseEvent(KIND_BLOOD_LOSS, (1.0 - u_alpha) * config.blood_loss_alpha_max)
