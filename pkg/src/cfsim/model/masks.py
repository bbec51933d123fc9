"""Dropout mask sets.

One MaskSet holds a binary keep/drop mask per dropout site; within a
single Monte-Carlo simulation the same MaskSet multiplies the layer
inputs and carried hidden states at every time step, which makes the
masked network behave like one parameter draw from an approximate
posterior. Masks are stored binary (for inspection and frequency
checks); ``scaled`` returns the inverted-dropout factor mask/keep that
the network actually applies.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class MaskSet:
    masks: dict[str, np.ndarray]  # site -> binary array, last axis = site width
    rate: float

    @property
    def keep(self) -> float:
        return 1.0 - self.rate

    def scaled(self, site: str) -> np.ndarray | None:
        m = self.masks.get(site)
        if m is None:
            return None
        return m / self.keep

    def sites(self) -> list[str]:
        return sorted(self.masks)


def mask_sites(model) -> dict[str, int]:
    """Dropout sites of a model: input/hidden of each recurrent layer
    and the input of each linear head."""
    sites: dict[str, int] = {}
    if model.config.representation == "recurrent":
        sites["rep.x"] = model.input_dim
        sites["rep.h"] = model.config.rep_hidden
    for j in range(model.schema.n_groups):
        d_in = model.head_input_dim(j)
        if model.config.head == "recurrent":
            sites[f"head{j}.x"] = d_in
            sites[f"head{j}.h"] = model.head_hidden(j)
        else:
            sites[f"head{j}.x"] = d_in
    if model.config.include_treatment_head:
        sites["treat.x"] = model.treat_input_dim
    return sites


def sample_masks(model, rng: np.random.Generator, batch: int | None = None) -> MaskSet:
    """Bernoulli(keep) masks for every site.

    ``batch=None`` gives per-site vectors (one simulation draw);
    an integer gives (batch, width) masks, one row per sequence.
    """
    rate = model.config.dropout
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must lie in [0, 1), got {rate}")
    masks = {}
    for site, width in mask_sites(model).items():
        shape = (width,) if batch is None else (batch, width)
        if rate == 0.0:
            masks[site] = np.ones(shape)
        else:
            masks[site] = (rng.uniform(size=shape) >= rate).astype(float)
    return MaskSet(masks=masks, rate=rate)


def stack_masks(mask_sets: list[MaskSet]) -> MaskSet:
    """Stack per-draw MaskSets into batched (n_draws, width) masks."""
    if not mask_sets:
        raise ValueError("need at least one mask set")
    rate = mask_sets[0].rate
    masks = {
        site: np.stack([ms.masks[site] for ms in mask_sets])
        for site in mask_sets[0].masks
    }
    return MaskSet(masks=masks, rate=rate)
