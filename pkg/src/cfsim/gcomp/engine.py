"""Monte-Carlo g-computation.

Given observed history through step m and a treatment strategy, draw M
trajectories of the covariates for steps m+1..K from the model:

* step 0 (when dropout is on): sample a fresh mask set per draw, held
  constant across every time step of that draw;
* warm the recurrent states on the observed history (teacher-forced);
* at each simulated step, evaluate the strategy on the current
  (simulated) covariates, then sample the next covariates group by
  group -- binary channels from their predicted probabilities,
  continuous channels as predicted mean plus a residual drawn with
  replacement from the holdout bank -- and feed the samples back
  autoregressively.

Per-draw randomness comes from streams keyed (seed, patient, draw), so
results are reproducible and independent of batching, and two
strategies run under the same seed share their draws (common random
numbers) until their trajectories diverge.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .. import rng as rngmod
from ..model.masks import MaskSet, sample_masks, stack_masks
from ..simulator.config import SimConfig
from .history import PatientHistory
from .strategies import (
    N_STRATEGY_NORMALS,
    N_STRATEGY_UNIFORMS,
    SimStrategy,
    StrategyContext,
    StrategyDraws,
)

log = logging.getLogger(__name__)

MAX_EXCLUDED_FRACTION = 0.01


class SimulationFailure(RuntimeError):
    pass


@dataclass
class McResult:
    """Monte-Carlo output for one patient.

    ``draws`` has a row per kept draw and a time slice per step m..K;
    slice 0 is the observed row at m (identical across draws). The
    point prediction is the arithmetic mean over kept draws.
    """

    patient_id: int
    m: int
    times: np.ndarray  # (S+1,) absolute step indices m..K
    channels: list[str]
    draws: np.ndarray  # (M_kept, S+1, n_channels) raw units
    point: np.ndarray  # (S+1, n_channels)
    q_low: np.ndarray  # (S+1, n_channels)
    q_high: np.ndarray  # (S+1, n_channels)
    alphas: tuple[float, float]
    n_excluded: int
    actions_mean: np.ndarray  # (S, 2) mean simulated doses
    seed: int = 0  # draw k came from the stream (seed, patient_id, k)

    @property
    def n_draws(self) -> int:
        return self.draws.shape[0]

    def quantile(self, q: float) -> np.ndarray:
        return np.quantile(self.draws, q, axis=0)


def _draw_blocks(stream: np.random.Generator, steps: int, n_bin: int, n_cont: int):
    """Fixed-order random blocks for one draw: all step uniforms first,
    then the strategy normals."""
    n_u = n_bin + n_cont + N_STRATEGY_UNIFORMS
    u = stream.uniform(size=(steps, n_u)) if steps else np.empty((0, n_u))
    z = (
        stream.standard_normal(size=(steps, N_STRATEGY_NORMALS))
        if steps
        else np.empty((0, N_STRATEGY_NORMALS))
    )
    return u, z


def _sample_residuals(bank, names, u_cols):
    """(B, n_cont) residual draws: per channel, index its pool by the
    uniform column (draw with replacement)."""
    B = u_cols.shape[0]
    out = np.empty((B, len(names)))
    for c, name in enumerate(names):
        pool = bank.channel(name)
        idx = np.minimum((u_cols[:, c] * len(pool)).astype(int), len(pool) - 1)
        out[:, c] = pool[idx]
    return out


def _tile_state(model, state, M: int):
    from ..model.network import ModelState

    def rep(x):
        return None if x is None else (np.repeat(x[0], M, axis=0), np.repeat(x[1], M, axis=0))

    return ModelState(
        rep=rep(state.rep),
        heads=[rep(h) for h in state.heads],
        prev_rep=np.repeat(state.prev_rep, M, axis=0),
    )


def _warm_state(model, history: PatientHistory, rows: int, masks: MaskSet | None):
    """Recurrent states after teacher-forced consumption of the history.

    Without masks every row is identical, so the warmup runs once and is
    tiled; with masks each row carries its own dropout pattern.
    """
    norm = model.norm
    L_hist_n = norm.normalize_l(history.L)
    A_hist_e = norm.encode_actions(np.vstack([history.A, np.zeros((1, 2))]))  # row m unused
    m = history.m
    if masks is None:
        state = model.init_state(1)
        for t in range(m):
            state = model.advance(
                state, L_hist_n[t : t + 1], A_hist_e[t : t + 1], L_hist_n[t + 1 : t + 2]
            )
        return _tile_state(model, state, rows), L_hist_n
    state = model.init_state(rows)
    for t in range(m):
        state = model.advance(
            state,
            np.repeat(L_hist_n[t : t + 1], rows, axis=0),
            np.repeat(A_hist_e[t : t + 1], rows, axis=0),
            np.repeat(L_hist_n[t + 1 : t + 2], rows, axis=0),
            masks=masks,
        )
    return state, L_hist_n


def _run_draws(
    model,
    bank,
    history: PatientHistory,
    strategy: SimStrategy,
    K: int,
    masks: MaskSet | None,
    u_all: np.ndarray,  # (B, S, n_bin + n_cont + N_STRATEGY_UNIFORMS)
    z_all: np.ndarray,  # (B, S, N_STRATEGY_NORMALS)
    cfg: SimConfig,
) -> tuple[np.ndarray, np.ndarray]:
    """Shared simulation loop; returns (draws (B, S+1, n_l), actions (B, S, 2))."""
    schema = model.schema
    norm = model.norm
    m = history.m
    S = K - m
    B = u_all.shape[0]
    cont_idx = schema.indices_of_kind("continuous")
    bin_idx = schema.indices_of_kind("binary")
    cont_names = [schema.channels[i].name for i in cont_idx]

    state, L_hist_n = _warm_state(model, history, B, masks)
    draws = np.empty((B, S + 1, schema.n_channels))
    draws[:, 0] = history.L[-1]
    actions = np.zeros((B, S, 2))
    values_raw = np.repeat(history.L[-1][None, :], B, axis=0)
    values_norm = np.repeat(L_hist_n[-1][None, :], B, axis=0)
    ctx = StrategyContext(config=cfg, model=model, bank=bank, masks=masks)

    with np.errstate(over="ignore", invalid="ignore"):
        for s in range(S):
            u_step = u_all[:, s]
            sdraws = StrategyDraws(
                u=u_step[:, len(bin_idx) + len(cont_idx) :], z=z_all[:, s]
            )
            ctx.model_state = state
            ctx.l_norm = values_norm
            a_raw = strategy.actions(values_raw, schema, m + s, sdraws, ctx)
            actions[:, s] = a_raw
            a_enc = norm.encode_actions(a_raw)

            u_bin = u_step[:, : len(bin_idx)]
            eps = _sample_residuals(
                bank, cont_names, u_step[:, len(bin_idx) : len(bin_idx) + len(cont_idx)]
            )

            def sampler(j, kind, vals, _u_bin=u_bin, _eps=eps):
                group = model.groups[j]
                if kind == "binary":
                    cols = [bin_idx.index(i) for i in group]
                    return (_u_bin[:, cols] < vals).astype(float)
                cols = [cont_idx.index(i) for i in group]
                raw = vals * norm.l_sd[group] + norm.l_mean[group] + _eps[:, cols]
                return (raw - norm.l_mean[group]) / norm.l_sd[group]

            state, values_norm, _ = model.simulate_step(
                state, values_norm, a_enc, sampler, masks=masks
            )
            values_raw = norm.denormalize_l(values_norm)
            draws[:, s + 1] = values_raw
    return draws, actions


def g_compute(
    model,
    bank,
    history: PatientHistory,
    strategy: SimStrategy,
    K: int,
    M: int,
    dropout: bool = False,
    alphas: tuple[float, float] = (0.25, 0.75),
    seed: int = 0,
    sim_config: SimConfig | None = None,
) -> McResult:
    """M Monte-Carlo counterfactual draws for one patient."""
    if M < 1:
        raise ValueError(f"need at least one draw, got M={M}")
    if not 0.0 <= alphas[0] < alphas[1] <= 1.0:
        raise ValueError(f"quantile pair must satisfy 0 <= low < high <= 1, got {alphas}")
    m = history.m
    if K < m:
        raise ValueError(f"K={K} precedes history end m={m}")
    schema = model.schema
    cfg = sim_config or SimConfig()
    S = K - m
    n_bin = len(schema.indices_of_kind("binary"))
    n_cont = len(schema.indices_of_kind("continuous"))

    # step 0: per-draw masks, constant across time within a draw
    masks: MaskSet | None = None
    if dropout:
        if model.config.dropout <= 0.0:
            raise ValueError("dropout requested but the model was configured with rate 0")
        masks = stack_masks(
            [
                sample_masks(model, rngmod.named_stream(seed, "gcomp-mask", history.patient_id, k))
                for k in range(M)
            ]
        )

    blocks = [
        _draw_blocks(rngmod.named_stream(seed, "gcomp", history.patient_id, k), S, n_bin, n_cont)
        for k in range(M)
    ]
    u_all = np.stack([b[0] for b in blocks])
    z_all = np.stack([b[1] for b in blocks])
    draws, actions = _run_draws(model, bank, history, strategy, K, masks, u_all, z_all, cfg)

    finite = np.all(np.isfinite(draws.reshape(M, -1)), axis=1)
    n_excluded = int(M - finite.sum())
    if n_excluded:
        log.warning(
            "patient %s: excluded %d/%d non-finite draws", history.patient_id, n_excluded, M
        )
        if n_excluded > MAX_EXCLUDED_FRACTION * M:
            raise SimulationFailure(
                f"patient {history.patient_id}: {n_excluded}/{M} draws non-finite "
                f"(> {MAX_EXCLUDED_FRACTION:.0%} allowed)"
            )
    kept = draws[finite]
    return McResult(
        patient_id=history.patient_id,
        m=m,
        times=np.arange(m, K + 1),
        channels=schema.names,
        draws=kept,
        point=kept.mean(axis=0),
        q_low=np.quantile(kept, alphas[0], axis=0),
        q_high=np.quantile(kept, alphas[1], axis=0),
        alphas=alphas,
        n_excluded=n_excluded,
        actions_mean=actions[finite].mean(axis=0) if S else np.zeros((0, 2)),
        seed=seed,
    )


def simulate_one(
    model,
    bank,
    masks: MaskSet | None,
    history: PatientHistory,
    strategy: SimStrategy,
    K: int,
    stream: np.random.Generator,
    sim_config: SimConfig | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """One simulated trajectory: (values for steps m..K, actions taken).

    Randomness is consumed from ``stream`` in the engine's fixed order;
    the masks, when given, apply unchanged at every step.
    """
    schema = model.schema
    n_bin = len(schema.indices_of_kind("binary"))
    n_cont = len(schema.indices_of_kind("continuous"))
    u, z = _draw_blocks(stream, K - history.m, n_bin, n_cont)
    draws, actions = _run_draws(
        model, bank, history, strategy, K, masks, u[None], z[None], sim_config or SimConfig()
    )
    return draws[0], actions[0]
