"""Recurrent and linear layer primitives with explicit backward passes.

Plain numpy implementations: a gated recurrent cell (input, forget,
cell, output gates) and an affine layer, each returning whatever cache
its backward pass needs. Dropout masks, when supplied, multiply the
cell inputs and the carried hidden state; callers hold them constant
across time steps (variational recurrent dropout), so a mask enters the
backward pass as a constant factor.

Gate layout in the stacked weight matrices is [input, forget, cell,
output] along the first axis.
"""

from __future__ import annotations

import numpy as np


def sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    e = np.exp(x[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def init_lstm(rng: np.random.Generator, in_dim: int, hidden: int, scale: float) -> dict[str, np.ndarray]:
    return {
        "W": rng.uniform(-scale, scale, size=(4 * hidden, in_dim)),
        "U": rng.uniform(-scale, scale, size=(4 * hidden, hidden)),
        "b": rng.uniform(-scale, scale, size=(4 * hidden,)),
    }


def init_linear(rng: np.random.Generator, in_dim: int, out_dim: int, scale: float) -> dict[str, np.ndarray]:
    return {
        "Wo": rng.uniform(-scale, scale, size=(out_dim, in_dim)),
        "bo": rng.uniform(-scale, scale, size=(out_dim,)),
    }


def lstm_step(W, U, b, x, h, c, mask_x=None, mask_h=None):
    """One cell step. Returns (h', c', cache)."""
    xm = x if mask_x is None else x * mask_x
    hm = h if mask_h is None else h * mask_h
    a = xm @ W.T + hm @ U.T + b
    H = h.shape[-1]
    i = sigmoid(a[..., :H])
    f = sigmoid(a[..., H : 2 * H])
    g = np.tanh(a[..., 2 * H : 3 * H])
    o = sigmoid(a[..., 3 * H :])
    c_new = f * c + i * g
    tc = np.tanh(c_new)
    h_new = o * tc
    cache = (xm, hm, c, i, f, g, o, tc)
    return h_new, c_new, cache


def lstm_step_backward(W, U, dh, dc, cache, mask_x=None, mask_h=None):
    """Backward through one cell step.

    dh, dc are the gradients flowing into (h', c'). Returns
    (dx, dh_prev, dc_prev, dW, dU, db).
    """
    xm, hm, c_prev, i, f, g, o, tc = cache
    do = dh * tc
    dct = dh * o * (1.0 - tc * tc) + dc
    di = dct * g
    df = dct * c_prev
    dg = dct * i
    dc_prev = dct * f
    da = np.concatenate(
        [di * i * (1.0 - i), df * f * (1.0 - f), dg * (1.0 - g * g), do * o * (1.0 - o)],
        axis=-1,
    )
    dW = da.T @ xm
    dU = da.T @ hm
    db = da.sum(axis=0)
    dxm = da @ W
    dhm = da @ U
    dx = dxm if mask_x is None else dxm * mask_x
    dh_prev = dhm if mask_h is None else dhm * mask_h
    return dx, dh_prev, dc_prev, dW, dU, db


def linear_forward(Wo, bo, u, mask=None):
    um = u if mask is None else u * mask
    return um @ Wo.T + bo, um


def linear_backward(Wo, dout, um, mask=None):
    """Returns (du, dWo, dbo); ``um`` is the masked input from forward."""
    flat_out = dout.reshape(-1, dout.shape[-1])
    flat_in = um.reshape(-1, um.shape[-1])
    dWo = flat_out.T @ flat_in
    dbo = flat_out.sum(axis=0)
    du = dout @ Wo
    if mask is not None:
        du = du * mask
    return du, dWo, dbo
