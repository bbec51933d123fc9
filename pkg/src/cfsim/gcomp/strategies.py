"""Treatment strategies applied during Monte-Carlo simulation.

A simulation strategy maps the current simulated covariates (raw units)
to an action for every draw row at once. Stochastic strategies consume
the per-draw uniforms/normals handed in by the engine, so results are
reproducible and two arms simulated under one seed share their noise
(common random numbers).

Kinds:

* ``o`` / ``c1`` / ``c2`` -- the generator's built-in policies
  (observational logistic-gate, deterministic threshold gate, withhold);
* ``threshold`` -- simple rules like "500 mL fluids if map < 65",
  parsed from ``fluid:500@map<65``;
* ``learned`` -- draws treat/arm from the model's treatment head and
  doses from its regression plus holdout dose residuals (natural
  course).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from ..channels import ChannelSchema
from ..simulator.config import SimConfig

# per-step draw layout handed to strategies by the engine
N_STRATEGY_UNIFORMS = 4  # gate, arm, dose-residual index x2
N_STRATEGY_NORMALS = 2  # fluid noise, vaso noise


@dataclass
class StrategyDraws:
    u: np.ndarray  # (B, N_STRATEGY_UNIFORMS)
    z: np.ndarray  # (B, N_STRATEGY_NORMALS)


class SimStrategy:
    """Vectorized strategy over a batch of simulated rows."""

    name = "base"
    needs_model = False

    def actions(self, values: np.ndarray, schema: ChannelSchema, t: int,
                draws: StrategyDraws, ctx: "StrategyContext") -> np.ndarray:
        raise NotImplementedError


@dataclass
class StrategyContext:
    """What a strategy may consult: generator policy coefficients and,
    for the learned kind, the live model state of the engine."""

    config: SimConfig
    model: object | None = None
    model_state: object | None = None
    bank: object | None = None
    l_norm: np.ndarray | None = None  # current covariates, normalized
    masks: object | None = None


def _col(values: np.ndarray, schema: ChannelSchema, name: str) -> np.ndarray:
    return values[:, schema.index(name)]


class ObservationalSim(SimStrategy):
    name = "o"

    def actions(self, values, schema, t, draws, ctx):
        cfg = ctx.config
        d_map = cfg.map_target - _col(values, schema, "map")
        d_cvp = cfg.cvp_target - _col(values, schema, "cvp")
        x = cfg.treat_map_coef * d_map + cfg.treat_cvp_coef * d_cvp + cfg.treat_intercept
        p = 1.0 / (1.0 + np.exp(-np.clip(x, -500, 500)))
        treat = draws.u[:, 0] < p
        fluid_arm = draws.u[:, 1] < 0.5
        fluid = np.maximum(
            0.0,
            cfg.fluid_map_coef * d_map + cfg.fluid_cvp_coef * d_cvp
            + cfg.fluid_noise_mean + cfg.fluid_noise_sd * draws.z[:, 0],
        )
        vaso = np.maximum(
            0.0,
            cfg.vaso_map_coef * d_map + cfg.vaso_cvp_coef * d_cvp
            + cfg.vaso_noise_mean + cfg.vaso_noise_sd * draws.z[:, 1],
        )
        out = np.zeros((len(values), 2))
        out[:, 0] = np.where(treat & fluid_arm, fluid, 0.0)
        out[:, 1] = np.where(treat & ~fluid_arm, vaso, 0.0)
        return out


class ThresholdGateSim(SimStrategy):
    """Deterministic gate: treat iff sbp <= 100 and hr/sbp <= 0.8,
    noiseless dose formulas, coin-chosen arm."""

    name = "c1"

    def actions(self, values, schema, t, draws, ctx):
        cfg = ctx.config
        sbp = _col(values, schema, "sbp")
        hr = _col(values, schema, "hr")
        d_map = cfg.map_target - _col(values, schema, "map")
        d_cvp = cfg.cvp_target - _col(values, schema, "cvp")
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(sbp > 0, hr / np.where(sbp > 0, sbp, 1.0), np.inf)
        treat = (sbp > 0) & (sbp <= 100.0) & (ratio <= 0.8)
        fluid_arm = draws.u[:, 1] < 0.5
        fluid = np.maximum(0.0, cfg.fluid_map_coef * d_map + cfg.fluid_cvp_coef * d_cvp)
        vaso = np.maximum(0.0, cfg.vaso_map_coef * d_map + cfg.vaso_cvp_coef * d_cvp)
        out = np.zeros((len(values), 2))
        out[:, 0] = np.where(treat & fluid_arm, fluid, 0.0)
        out[:, 1] = np.where(treat & ~fluid_arm, vaso, 0.0)
        return out


class WithholdSim(SimStrategy):
    name = "c2"

    def actions(self, values, schema, t, draws, ctx):
        return np.zeros((len(values), 2))


@dataclass
class ThresholdRuleSim(SimStrategy):
    """give <dose> of <arm> iff <channel> <op> <value>, e.g. 500 mL
    fluids when map < 65."""

    arm: str  # "fluid" | "vaso"
    dose: float
    channel: str
    op: str  # "<" | "<=" | ">" | ">="
    value: float
    name: str = "threshold"

    _OPS = {
        "<": np.less,
        "<=": np.less_equal,
        ">": np.greater,
        ">=": np.greater_equal,
    }

    def actions(self, values, schema, t, draws, ctx):
        gate = self._OPS[self.op](_col(values, schema, self.channel), self.value)
        out = np.zeros((len(values), 2))
        col = 0 if self.arm == "fluid" else 1
        out[:, col] = np.where(gate, self.dose, 0.0)
        return out


class LearnedTreatmentSim(SimStrategy):
    """Stochastic strategy defined by the model's treatment head."""

    name = "learned"
    needs_model = True

    def actions(self, values, schema, t, draws, ctx):
        model, bank = ctx.model, ctx.bank
        if model is None or not model.config.include_treatment_head:
            raise ValueError("learned strategy requires a model with a treatment head")
        outputs = model.treatment_outputs(ctx.model_state, ctx.l_norm, masks=ctx.masks)
        p_treat = 1.0 / (1.0 + np.exp(-outputs[:, 0]))
        p_fluid = 1.0 / (1.0 + np.exp(-outputs[:, 1]))
        treat = draws.u[:, 0] < p_treat
        fluid_arm = draws.u[:, 1] < p_fluid
        mu_f = outputs[:, 2] * model.norm.a_sd[0] + model.norm.a_mean[0]
        mu_v = outputs[:, 3] * model.norm.a_sd[1] + model.norm.a_mean[1]
        eps_f = np.zeros(len(values))
        eps_v = np.zeros(len(values))
        if bank is not None and bank.dose_residuals.get("fluid", np.empty(0)).size:
            pool = bank.dose_residuals["fluid"]
            eps_f = pool[(draws.u[:, 2] * len(pool)).astype(int).clip(0, len(pool) - 1)]
        if bank is not None and bank.dose_residuals.get("vaso", np.empty(0)).size:
            pool = bank.dose_residuals["vaso"]
            eps_v = pool[(draws.u[:, 3] * len(pool)).astype(int).clip(0, len(pool) - 1)]
        out = np.zeros((len(values), 2))
        out[:, 0] = np.where(treat & fluid_arm, np.maximum(0.0, mu_f + eps_f), 0.0)
        out[:, 1] = np.where(treat & ~fluid_arm, np.maximum(0.0, mu_v + eps_v), 0.0)
        return out


_RULE_RE = re.compile(
    r"^(?P<arm>fluid|vaso):(?P<dose>[0-9.]+)@(?P<channel>[a-z_]+)(?P<op><=|>=|<|>)(?P<value>-?[0-9.]+)$"
)

BUILTIN_STRATEGIES = {
    "o": ObservationalSim,
    "c1": ThresholdGateSim,
    "c2": WithholdSim,
    "learned": LearnedTreatmentSim,
}


@dataclass
class StrategySpec:
    kind: str
    params: dict = field(default_factory=dict)

    @classmethod
    def parse(cls, text: str) -> "StrategySpec":
        text = text.strip()
        if text in BUILTIN_STRATEGIES:
            return cls(kind=text)
        match = _RULE_RE.match(text)
        if match:
            g = match.groupdict()
            return cls(
                kind="threshold",
                params=dict(
                    arm=g["arm"], dose=float(g["dose"]), channel=g["channel"],
                    op=g["op"], value=float(g["value"]),
                ),
            )
        raise ValueError(
            f"cannot parse strategy {text!r}: expected one of {sorted(BUILTIN_STRATEGIES)} "
            "or a rule like fluid:500@map<65"
        )

    def build(self) -> SimStrategy:
        if self.kind in BUILTIN_STRATEGIES:
            return BUILTIN_STRATEGIES[self.kind]()
        if self.kind == "threshold":
            return ThresholdRuleSim(**self.params)
        raise ValueError(f"unknown strategy kind {self.kind!r}")
