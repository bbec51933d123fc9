"""Sequential conditional covariate model.

The model estimates p(L_{t+1} | history) by an ordered group
decomposition: at each step a representation R_t of the inputs so far
is computed (identity passthrough or a recurrent encoder over the
(covariates, actions) stream), then group 0 of L_{t+1} is predicted
from R_t, group 1 from (R_t, group-0 values), and so on. Binary
channels produce probabilities, continuous channels produce
conditional means on the normalized scale.

During training the group inputs are the observed next-step values
(teacher forcing); during simulation they are the values just sampled,
and recurrent heads advance on the simulated stream. An optional
treatment head predicts (treat probability, arm probability, per-arm
dose means) from the previous representation and the current
covariates, which is what natural-course simulation draws actions from.

Everything is plain numpy with explicit gradients; see ``layers``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..channels import ChannelSchema, SchemaError
from .. import rng as rngmod
from .config import ModelConfig
from .layers import (
    init_linear,
    init_lstm,
    linear_backward,
    linear_forward,
    lstm_step,
    lstm_step_backward,
    sigmoid,
)
from .masks import MaskSet

N_ACTION_FEATURES = 3  # [treated flag, fluid dose, vaso dose] (doses normalized)

TREAT_OUTPUTS = 4  # [treat logit, fluid-arm logit, fluid dose mean, vaso dose mean]


class ContractViolation(RuntimeError):
    """Group values supplied out of the schema order."""


@dataclass
class NormStats:
    """Per-channel normalization, estimated on the training split only.

    Binary covariate channels pass through (mean 0, sd 1); continuous
    channels and action doses are z-scored.
    """

    l_mean: np.ndarray
    l_sd: np.ndarray
    a_mean: np.ndarray
    a_sd: np.ndarray

    @classmethod
    def fit(cls, L: np.ndarray, A: np.ndarray, schema: ChannelSchema) -> "NormStats":
        flat_l = L.reshape(-1, L.shape[-1])
        l_mean = flat_l.mean(axis=0)
        l_sd = flat_l.std(axis=0)
        for i in schema.indices_of_kind("binary"):
            l_mean[i], l_sd[i] = 0.0, 1.0
        l_sd = np.where(l_sd < 1e-8, 1.0, l_sd)
        flat_a = A.reshape(-1, A.shape[-1])
        a_mean = flat_a.mean(axis=0)
        a_sd = np.where(flat_a.std(axis=0) < 1e-8, 1.0, flat_a.std(axis=0))
        return cls(l_mean, l_sd, a_mean, a_sd)

    def normalize_l(self, L: np.ndarray) -> np.ndarray:
        return (L - self.l_mean) / self.l_sd

    def denormalize_l(self, Ln: np.ndarray) -> np.ndarray:
        return Ln * self.l_sd + self.l_mean

    def encode_actions(self, A: np.ndarray) -> np.ndarray:
        """(.., 2) raw doses -> (.., 3) [treated, fluid_n, vaso_n]."""
        treated = (A.sum(axis=-1, keepdims=True) > 0).astype(float)
        doses = (A - self.a_mean) / self.a_sd
        return np.concatenate([treated, doses], axis=-1)

    def to_dict(self) -> dict:
        return {
            "l_mean": self.l_mean.tolist(),
            "l_sd": self.l_sd.tolist(),
            "a_mean": self.a_mean.tolist(),
            "a_sd": self.a_sd.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NormStats":
        return cls(*(np.asarray(d[k], dtype=float) for k in ("l_mean", "l_sd", "a_mean", "a_sd")))


@dataclass
class ModelState:
    """Recurrent state carried across steps of one batched pass."""

    rep: tuple[np.ndarray, np.ndarray] | None
    heads: list[tuple[np.ndarray, np.ndarray] | None]
    prev_rep: np.ndarray  # R_{t-1}, zeros before the first step


class CovariateModel:
    def __init__(self, config: ModelConfig, schema: ChannelSchema, params: dict[str, np.ndarray],
                 norm: NormStats | None = None):
        config.validate()
        self.config = config
        self.schema = schema
        self.params = params
        self.norm = norm
        self.groups = [schema.group_indices(j) for j in range(schema.n_groups)]
        self.group_kinds = [schema.channels[idx[0]].kind for idx in self.groups]
        for j, idx in enumerate(self.groups):
            kinds = {schema.channels[i].kind for i in idx}
            if len(kinds) != 1:
                raise SchemaError(f"group {j} mixes channel kinds {sorted(kinds)}")

    # -- dimensions -------------------------------------------------
    @property
    def n_l(self) -> int:
        return self.schema.n_channels

    @property
    def input_dim(self) -> int:
        return self.n_l + N_ACTION_FEATURES

    @property
    def rep_dim(self) -> int:
        return self.config.rep_hidden if self.config.representation == "recurrent" else self.input_dim

    def head_input_dim(self, j: int) -> int:
        return self.rep_dim + sum(len(self.groups[i]) for i in range(j))

    def head_hidden(self, j: int) -> int:
        return int(self.config.group_hidden.get(j, 32))

    @property
    def treat_input_dim(self) -> int:
        return self.rep_dim + self.n_l

    # -- construction ------------------------------------------------
    @classmethod
    def build(cls, config: ModelConfig, schema: ChannelSchema) -> "CovariateModel":
        config.validate()
        model = cls(config, schema, params={})
        stream = rngmod.named_stream(config.seed, "model-init")
        params: dict[str, np.ndarray] = {}
        s = config.init_scale
        if config.representation == "recurrent":
            for k, v in init_lstm(stream, model.input_dim, config.rep_hidden, s).items():
                params[f"rep.{k}"] = v
        for j in range(schema.n_groups):
            d_in, g = model.head_input_dim(j), len(model.groups[j])
            if config.head == "recurrent":
                h = model.head_hidden(j)
                for k, v in init_lstm(stream, d_in, h, s).items():
                    params[f"head{j}.{k}"] = v
                for k, v in init_linear(stream, h, g, s).items():
                    params[f"head{j}.{k}"] = v
            else:
                for k, v in init_linear(stream, d_in, g, s).items():
                    params[f"head{j}.{k}"] = v
        if config.include_treatment_head:
            for k, v in init_linear(stream, model.treat_input_dim, TREAT_OUTPUTS, s).items():
                params[f"treat.{k}"] = v
        model.params = params
        return model

    def clone_params(self) -> dict[str, np.ndarray]:
        return {k: v.copy() for k, v in self.params.items()}

    # -- training forward/backward ------------------------------------
    def forward_backward(
        self,
        L_norm: np.ndarray,  # (B, T+1, n_l)
        A_enc: np.ndarray,  # (B, T+1, 3)
        masks: MaskSet | None = None,
        compute_grad: bool = True,
        feedback: str = "observed",
    ) -> tuple[float, dict[str, np.ndarray] | None]:
        """Teacher-forced sequence loss and (optionally) its gradient.

        The loss is the sum over steps and channels of squared error on
        normalized continuous channels plus cross-entropy on binary
        channels (and the treatment-head terms when enabled), averaged
        over (batch x steps).
        """
        if feedback != "observed":
            raise ContractViolation("training consumes observed covariates only")
        P = self.params
        B, T1, _ = L_norm.shape
        T = T1 - 1
        X = np.concatenate([L_norm, A_enc], axis=-1)
        scale = 1.0 / (B * T)

        def msk(site):
            return None if masks is None else masks.scaled(site)

        def msk3(site):
            # per-sequence masks (B, width) broadcast over the time axis
            m = msk(site)
            if m is not None and m.ndim == 2:
                return m[:, None, :]
            return m

        # representation
        rep_caches = []
        if self.config.representation == "recurrent":
            H = self.config.rep_hidden
            h = np.zeros((B, H))
            c = np.zeros((B, H))
            R = np.empty((B, T, H))
            for t in range(T):
                h, c, cache = lstm_step(P["rep.W"], P["rep.U"], P["rep.b"], X[:, t], h, c,
                                        msk("rep.x"), msk("rep.h"))
                rep_caches.append(cache)
                R[:, t] = h
        else:
            R = X[:, :T]

        loss = 0.0
        grads = {k: np.zeros_like(v) for k, v in P.items()} if compute_grad else None
        dR = np.zeros_like(R) if compute_grad else None

        # group heads, teacher-forced on observed next-step values
        head_records = []
        offset = 0
        for j, idx in enumerate(self.groups):
            u = R if j == 0 else np.concatenate([R, L_norm[:, 1:, :offset]], axis=-1)
            target = L_norm[:, 1:, offset : offset + len(idx)]
            if self.config.head == "recurrent":
                h_dim = self.head_hidden(j)
                h = np.zeros((B, h_dim))
                c = np.zeros((B, h_dim))
                caches = []
                hs = np.empty((B, T, h_dim))
                for t in range(T):
                    h, c, cache = lstm_step(
                        P[f"head{j}.W"], P[f"head{j}.U"], P[f"head{j}.b"], u[:, t], h, c,
                        msk(f"head{j}.x"), msk(f"head{j}.h"))
                    caches.append(cache)
                    hs[:, t] = h
                out = hs @ P[f"head{j}.Wo"].T + P[f"head{j}.bo"]
                head_records.append(("recurrent", j, u, hs, caches, out, target))
            else:
                out, um = linear_forward(P[f"head{j}.Wo"], P[f"head{j}.bo"], u, msk3(f"head{j}.x"))
                head_records.append(("linear", j, u, um, None, out, target))
            if self.group_kinds[j] == "binary":
                loss += scale * float(np.sum(np.logaddexp(0.0, out) - target * out))
            else:
                loss += scale * float(np.sum((out - target) ** 2))
            offset += len(idx)

        # treatment head: predicts the action at t from (R_{t-1}, L_t)
        treat_record = None
        if self.config.include_treatment_head:
            prev = np.concatenate([np.zeros((B, 1, self.rep_dim)), R], axis=1)  # (B, T+1, Dr)
            u_t = np.concatenate([prev, L_norm], axis=-1)
            out_t, um_t = linear_forward(P["treat.Wo"], P["treat.bo"], u_t, msk3("treat.x"))
            treated = A_enc[:, :, 0]
            arm = (A_enc[:, :, 1] * self.norm_a_sd(0) + self.norm_a_mean(0) > 0).astype(float) if self.norm else (A_enc[:, :, 1] > 0).astype(float)
            z_t, z_a, mu_f, mu_v = (out_t[..., k] for k in range(4))
            fluid_n, vaso_n = A_enc[:, :, 1], A_enc[:, :, 2]
            loss += scale * float(np.sum(np.logaddexp(0.0, z_t) - treated * z_t))
            loss += scale * float(np.sum(treated * (np.logaddexp(0.0, z_a) - arm * z_a)))
            loss += scale * float(np.sum(treated * arm * (mu_f - fluid_n) ** 2))
            loss += scale * float(np.sum(treated * (1.0 - arm) * (mu_v - vaso_n) ** 2))
            treat_record = (u_t, um_t, out_t, treated, arm, fluid_n, vaso_n)

        if not compute_grad:
            return loss, None

        # ---- backward ----
        if treat_record is not None:
            u_t, um_t, out_t, treated, arm, fluid_n, vaso_n = treat_record
            dout = np.empty_like(out_t)
            dout[..., 0] = sigmoid(out_t[..., 0]) - treated
            dout[..., 1] = treated * (sigmoid(out_t[..., 1]) - arm)
            dout[..., 2] = treated * arm * 2.0 * (out_t[..., 2] - fluid_n)
            dout[..., 3] = treated * (1.0 - arm) * 2.0 * (out_t[..., 3] - vaso_n)
            dout *= scale
            du, dWo, dbo = linear_backward(P["treat.Wo"], dout, um_t, msk3("treat.x"))
            grads["treat.Wo"] += dWo
            grads["treat.bo"] += dbo
            # R_{t-1} occupies positions 1..T of the prev block
            dR += du[:, 1:, : self.rep_dim]

        for kind, j, u, aux, caches, out, target in head_records:
            if self.group_kinds[j] == "binary":
                dout = scale * (sigmoid(out) - target)
            else:
                dout = scale * 2.0 * (out - target)
            if kind == "linear":
                du, dWo, dbo = linear_backward(P[f"head{j}.Wo"], dout, aux, msk3(f"head{j}.x"))
                grads[f"head{j}.Wo"] += dWo
                grads[f"head{j}.bo"] += dbo
            else:
                hs = aux
                flat_h = hs.reshape(-1, hs.shape[-1])
                flat_d = dout.reshape(-1, dout.shape[-1])
                grads[f"head{j}.Wo"] += flat_d.T @ flat_h
                grads[f"head{j}.bo"] += flat_d.sum(axis=0)
                dh_out = dout @ P[f"head{j}.Wo"]
                h_dim = self.head_hidden(j)
                dh = np.zeros((B, h_dim))
                dc = np.zeros((B, h_dim))
                du = np.empty_like(u)
                for t in range(u.shape[1] - 1, -1, -1):
                    dx, dh, dc, dW, dU, db = lstm_step_backward(
                        P[f"head{j}.W"], P[f"head{j}.U"], dh_out[:, t] + dh, dc, caches[t],
                        msk(f"head{j}.x"), msk(f"head{j}.h"))
                    grads[f"head{j}.W"] += dW
                    grads[f"head{j}.U"] += dU
                    grads[f"head{j}.b"] += db
                    du[:, t] = dx
            dR += du[..., : self.rep_dim]

        if self.config.representation == "recurrent":
            H = self.config.rep_hidden
            dh = np.zeros((B, H))
            dc = np.zeros((B, H))
            for t in range(T - 1, -1, -1):
                dx, dh, dc, dW, dU, db = lstm_step_backward(
                    P["rep.W"], P["rep.U"], dR[:, t] + dh, dc, rep_caches[t],
                    msk("rep.x"), msk("rep.h"))
                grads["rep.W"] += dW
                grads["rep.U"] += dU
                grads["rep.b"] += db
        return loss, grads

    def norm_a_mean(self, i: int) -> float:
        return float(self.norm.a_mean[i]) if self.norm else 0.0

    def norm_a_sd(self, i: int) -> float:
        return float(self.norm.a_sd[i]) if self.norm else 1.0

    def forward_means(self, L_norm: np.ndarray, A_enc: np.ndarray,
                      masks: MaskSet | None = None) -> np.ndarray:
        """Teacher-forced one-step conditional means (B, T, n_l) on the
        normalized scale; binary channels carry event probabilities.
        Group j conditions on the observed values of groups < j."""
        P = self.params
        B, T1, _ = L_norm.shape
        T = T1 - 1
        X = np.concatenate([L_norm, A_enc], axis=-1)

        def msk(site):
            return None if masks is None else masks.scaled(site)

        def msk3(site):
            m = msk(site)
            return m[:, None, :] if (m is not None and m.ndim == 2) else m

        if self.config.representation == "recurrent":
            H = self.config.rep_hidden
            h = np.zeros((B, H))
            c = np.zeros((B, H))
            R = np.empty((B, T, H))
            for t in range(T):
                h, c, _ = lstm_step(P["rep.W"], P["rep.U"], P["rep.b"], X[:, t], h, c,
                                    msk("rep.x"), msk("rep.h"))
                R[:, t] = h
        else:
            R = X[:, :T]

        means = np.empty((B, T, self.n_l))
        offset = 0
        for j, idx in enumerate(self.groups):
            u = R if j == 0 else np.concatenate([R, L_norm[:, 1:, :offset]], axis=-1)
            if self.config.head == "recurrent":
                h_dim = self.head_hidden(j)
                h = np.zeros((B, h_dim))
                c = np.zeros((B, h_dim))
                out = np.empty((B, T, len(idx)))
                for t in range(T):
                    h, c, _ = lstm_step(P[f"head{j}.W"], P[f"head{j}.U"], P[f"head{j}.b"],
                                        u[:, t], h, c, msk(f"head{j}.x"), msk(f"head{j}.h"))
                    out[:, t] = h @ P[f"head{j}.Wo"].T + P[f"head{j}.bo"]
            else:
                out, _ = linear_forward(P[f"head{j}.Wo"], P[f"head{j}.bo"], u, msk3(f"head{j}.x"))
            if self.group_kinds[j] == "binary":
                out = sigmoid(out)
            means[:, :, offset : offset + len(idx)] = out
            offset += len(idx)
        return means

    # -- stepping (warmup and simulation) ------------------------------
    def init_state(self, batch: int) -> ModelState:
        rep = None
        if self.config.representation == "recurrent":
            H = self.config.rep_hidden
            rep = (np.zeros((batch, H)), np.zeros((batch, H)))
        heads: list[tuple[np.ndarray, np.ndarray] | None] = []
        for j in range(self.schema.n_groups):
            if self.config.head == "recurrent":
                h = self.head_hidden(j)
                heads.append((np.zeros((batch, h)), np.zeros((batch, h))))
            else:
                heads.append(None)
        return ModelState(rep=rep, heads=heads, prev_rep=np.zeros((batch, self.rep_dim)))

    def _rep_step(self, state: ModelState, x: np.ndarray, masks: MaskSet | None) -> np.ndarray:
        def msk(site):
            return None if masks is None else masks.scaled(site)

        if self.config.representation == "recurrent":
            h, c, _ = lstm_step(self.params["rep.W"], self.params["rep.U"], self.params["rep.b"],
                                x, *state.rep, msk("rep.x"), msk("rep.h"))
            state.rep = (h, c)
            return h
        return x

    def _head_step(self, state: ModelState, j: int, u: np.ndarray, masks: MaskSet | None) -> np.ndarray:
        P = self.params

        def msk(site):
            return None if masks is None else masks.scaled(site)

        if self.config.head == "recurrent":
            h, c, _ = lstm_step(P[f"head{j}.W"], P[f"head{j}.U"], P[f"head{j}.b"],
                                u, *state.heads[j], msk(f"head{j}.x"), msk(f"head{j}.h"))
            state.heads[j] = (h, c)
            return h @ P[f"head{j}.Wo"].T + P[f"head{j}.bo"]
        out, _ = linear_forward(P[f"head{j}.Wo"], P[f"head{j}.bo"], u, msk(f"head{j}.x"))
        return out

    def advance(self, state: ModelState, l_norm_t: np.ndarray, a_enc_t: np.ndarray,
                l_norm_next: np.ndarray, masks: MaskSet | None = None) -> ModelState:
        """Teacher-forced transition on one observed (L_t, A_t, L_{t+1})."""
        x = np.concatenate([l_norm_t, a_enc_t], axis=-1)
        R = self._rep_step(state, x, masks)
        offset = 0
        for j in range(self.schema.n_groups):
            u = R if j == 0 else np.concatenate([R, l_norm_next[:, :offset]], axis=-1)
            self._head_step(state, j, u, masks)
            offset += len(self.groups[j])
        state.prev_rep = R
        return state

    def simulate_step(self, state: ModelState, l_norm_t: np.ndarray, a_enc_t: np.ndarray,
                      sampler, masks: MaskSet | None = None) -> tuple[ModelState, np.ndarray, np.ndarray]:
        """Autoregressive transition: predict group by group, feeding
        sampled values forward. ``sampler(j, kind, values)`` maps
        probabilities (binary) or normalized means (continuous) to
        sampled normalized values. Returns (state, sampled, means)."""
        x = np.concatenate([l_norm_t, a_enc_t], axis=-1)
        R = self._rep_step(state, x, masks)
        B = x.shape[0]
        sampled = np.empty((B, self.n_l))
        means = np.empty((B, self.n_l))
        offset = 0
        for j, idx in enumerate(self.groups):
            u = R if j == 0 else np.concatenate([R, sampled[:, :offset]], axis=-1)
            out = self._head_step(state, j, u, masks)
            if self.group_kinds[j] == "binary":
                prob = sigmoid(out)
                means[:, offset : offset + len(idx)] = prob
                sampled[:, offset : offset + len(idx)] = sampler(j, "binary", prob)
            else:
                means[:, offset : offset + len(idx)] = out
                sampled[:, offset : offset + len(idx)] = sampler(j, "continuous", out)
            offset += len(idx)
        state.prev_rep = R
        return state, sampled, means

    def treatment_outputs(self, state: ModelState, l_norm_t: np.ndarray,
                          masks: MaskSet | None = None) -> np.ndarray:
        """(B, 4) treatment-head outputs for the action at the current
        step: [treat logit, fluid-arm logit, fluid mean, vaso mean]."""
        if not self.config.include_treatment_head:
            raise ContractViolation("model was built without a treatment head")
        u = np.concatenate([state.prev_rep, l_norm_t], axis=-1)
        msk = None if masks is None else masks.scaled("treat.x")
        out, _ = linear_forward(self.params["treat.Wo"], self.params["treat.bo"], u, msk)
        return out

    # -- contract-level helpers ----------------------------------------
    def represent(self, L_raw: np.ndarray, A_raw: np.ndarray) -> np.ndarray:
        """Representation of a history prefix: rows (L_0..L_t, A_0..A_t).

        Identity kind returns the normalized current inputs; the
        recurrent kind returns the hidden state after consuming the
        prefix.
        """
        if self.norm is None:
            raise ContractViolation("model has no normalization stats; train or load first")
        if L_raw.ndim != 2 or A_raw.ndim != 2 or len(L_raw) != len(A_raw):
            raise ContractViolation("history must be aligned (L, A) rows")
        if len(L_raw) == 0:
            # empty-history base case: the recurrent encoder starts at
            # its zero hidden state; passthrough has no representation
            if self.config.representation == "recurrent":
                return np.zeros(self.config.rep_hidden)
            raise ContractViolation("identity representation needs at least one input row")
        if L_raw.shape[1] != self.n_l:
            raise SchemaError(f"expected {self.n_l} channels, got {L_raw.shape[1]}")
        X = np.concatenate([self.norm.normalize_l(L_raw), self.norm.encode_actions(A_raw)], axis=-1)
        if self.config.representation == "recurrent":
            h = np.zeros((1, self.config.rep_hidden))
            c = np.zeros((1, self.config.rep_hidden))
            for t in range(len(X)):
                h, c, _ = lstm_step(self.params["rep.W"], self.params["rep.U"], self.params["rep.b"],
                                    X[t : t + 1], h, c)
            return h[0]
        return X[-1]

    def predict_group_means(self, rep: np.ndarray, known_groups: dict[int, np.ndarray],
                            state: ModelState | None = None) -> np.ndarray:
        """One-group prediction given a representation and the values of
        every preceding group (normalized). Validates the ordering
        contract: group j requires exactly groups 0..j-1."""
        j = len(known_groups)
        if sorted(known_groups) != list(range(j)):
            raise ContractViolation(
                f"groups must be supplied in order; got {sorted(known_groups)}, expected 0..{j - 1}"
            )
        if j >= self.schema.n_groups:
            raise ContractViolation(f"no group {j} in a {self.schema.n_groups}-group schema")
        rep2 = np.atleast_2d(rep)
        parts = [rep2] + [np.atleast_2d(known_groups[i]) for i in range(j)]
        u = np.concatenate(parts, axis=-1)
        st = state or self.init_state(rep2.shape[0])
        out = self._head_step(st, j, u, None)
        if self.group_kinds[j] == "binary":
            return sigmoid(out)
        return out
