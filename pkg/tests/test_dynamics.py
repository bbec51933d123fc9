import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cfsim import rng
from cfsim.simulator import (
    Action,
    DiseaseEvent,
    SimConfig,
    StateCorruptionError,
    derive_pressures,
    draw_disease,
    initial_state,
    sample_baseline,
    step_state,
)
from cfsim.simulator.config import ConfigError
from cfsim.simulator.disease import KIND_BLOOD_LOSS, KIND_NONE, KIND_SEPSIS
from cfsim.simulator.dynamics import LatentInputs
from cfsim.simulator.generate import N_CONTINUOUS

CFG = SimConfig()
NO_NOISE = np.zeros(N_CONTINUOUS)


def mid_latents(**overrides):
    values = {name: (lo + hi) / 2 for name, (lo, hi) in CFG.input_ranges.items()}
    values.update(overrides)
    return LatentInputs(**values)


def test_derive_pressures_hand_values():
    assert derive_pressures(120.0, 80.0)[2] == pytest.approx(280.0 / 3.0)
    assert derive_pressures(100.0, 55.0)[2] == pytest.approx(70.0)


@given(st.floats(min_value=0.0, max_value=500.0))
def test_derive_pressures_equal_pair_is_identity(x):
    assert derive_pressures(x, x)[2] == pytest.approx(x)


def test_derive_pressures_rejects_corrupt_state():
    with pytest.raises(StateCorruptionError):
        derive_pressures(80.0, 120.0)
    with pytest.raises(StateCorruptionError):
        derive_pressures(10.0, -1.0)


def test_sample_baseline_within_ranges():
    stream = rng.named_stream(0, "baseline")
    for _ in range(200):
        latents = sample_baseline(stream, CFG)
        for name, (lo, hi) in CFG.input_ranges.items():
            assert lo <= getattr(latents, name) <= hi


def test_sample_baseline_degenerate_range_pins_value():
    cfg = SimConfig()
    cfg.input_ranges = dict(cfg.input_ranges)
    cfg.input_ranges["nominal_heart_rate"] = (72.0, 72.0)
    latents = sample_baseline(rng.named_stream(0, "x"), cfg)
    assert latents.nominal_heart_rate == 72.0


def test_sample_baseline_invalid_range_errors():
    cfg = SimConfig()
    cfg.input_ranges = dict(cfg.input_ranges)
    cfg.input_ranges["nominal_heart_rate"] = (100.0, 40.0)
    with pytest.raises(ConfigError):
        sample_baseline(rng.named_stream(0, "x"), cfg)
    with pytest.raises(ConfigError):
        cfg.validate()


def test_sample_baseline_uniform_mean():
    # 1e4 draws of total blood volume: mean within 2% of (1500+6000)/2
    stream = rng.named_stream(1, "tbv-mean")
    draws = np.array([sample_baseline(stream, CFG).total_blood_volume for _ in range(10_000)])
    assert abs(draws.mean() - 3750.0) / 3750.0 < 0.02


def test_disease_event_none_leaves_state_unchanged():
    ev = DiseaseEvent(KIND_NONE, 1.0)
    state = initial_state(mid_latents(), CFG, NO_NOISE)
    nxt = step_state(state, Action(), ev, mid_latents(), CFG, NO_NOISE)
    # without disease, no action and no noise, relaxation keeps the core at baseline
    assert nxt.tbv == pytest.approx(state.tbv)
    assert nxt.ar == pytest.approx(state.ar)


def test_sepsis_halves_resistance():
    # forced sepsis with alpha 0.5 on resistance 1.0 (at its baseline)
    latents = mid_latents(total_peripheral_resistance=1.0)
    state = initial_state(latents, CFG, NO_NOISE)
    ev = DiseaseEvent(KIND_SEPSIS, 0.5)
    nxt = step_state(state, Action(), ev, latents, CFG, NO_NOISE)
    assert nxt.ar == pytest.approx(0.5)


def test_blood_loss_scales_volume():
    latents = mid_latents(total_blood_volume=4000.0)
    state = initial_state(latents, CFG, NO_NOISE)
    ev = DiseaseEvent(KIND_BLOOD_LOSS, 0.8)
    nxt = step_state(state, Action(), ev, latents, CFG, NO_NOISE)
    assert nxt.tbv == pytest.approx(3200.0)


def test_disease_frequencies():
    # 1e5 draws: event frequency 0.05 +- 0.005, kinds near 50/50
    stream = rng.named_stream(2, "disease-freq")
    kinds = [draw_disease(stream, CFG).kind for _ in range(100_000)]
    events = [k for k in kinds if k != KIND_NONE]
    freq = len(events) / len(kinds)
    assert 0.045 <= freq <= 0.055
    sepsis_frac = sum(k == KIND_SEPSIS for k in events) / len(events)
    assert 0.47 <= sepsis_frac <= 0.53


def test_disease_alpha_ranges():
    stream = rng.named_stream(3, "disease-alpha")
    for _ in range(20_000):
        ev = draw_disease(stream, CFG)
        if ev.kind == KIND_SEPSIS:
            assert 0.0 < ev.alpha <= 0.7
        elif ev.kind == KIND_BLOOD_LOSS:
            assert 0.0 < ev.alpha <= 0.95


def test_pressure_identity_and_order_along_trajectory():
    latents = mid_latents()
    state = initial_state(latents, CFG, NO_NOISE)
    stream = rng.named_stream(4, "walk")
    for t in range(200):
        noise = stream.normal(size=N_CONTINUOUS)
        ev = draw_disease(stream, CFG)
        action = Action(fluid=float(stream.uniform(0, 800))) if stream.uniform() < 0.3 else Action()
        state = step_state(state, action, ev, latents, CFG, noise)
        sbp, map_v = state.value("sbp"), state.value("map")
        dbp = state.dbp
        assert sbp >= dbp >= 0.0
        assert map_v == pytest.approx((2.0 * dbp + sbp) / 3.0, abs=1e-9)
        assert state.value("tbv") > 0 and state.value("hr") > 0


def test_fluids_raise_map_and_cvp_promptly():
    latents = mid_latents()
    state = initial_state(latents, CFG, NO_NOISE)
    none = DiseaseEvent(KIND_NONE, 1.0)
    treated = step_state(state, Action(fluid=1000.0), none, latents, CFG, NO_NOISE)
    untreated = step_state(state, Action(), none, latents, CFG, NO_NOISE)
    assert treated.value("map") > untreated.value("map")
    assert treated.value("cvp") > untreated.value("cvp")


def test_vasopressor_raises_map_promptly():
    latents = mid_latents()
    state = initial_state(latents, CFG, NO_NOISE)
    none = DiseaseEvent(KIND_NONE, 1.0)
    treated = step_state(state, Action(vaso=3.0), none, latents, CFG, NO_NOISE)
    untreated = step_state(state, Action(), none, latents, CFG, NO_NOISE)
    assert treated.value("map") > untreated.value("map")


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=0, max_value=10_000))
def test_unperturbed_system_is_stable(seed):
    latents = sample_baseline(rng.named_stream(seed, "stab"), CFG)
    state = initial_state(latents, CFG, NO_NOISE)
    none = DiseaseEvent(KIND_NONE, 1.0)
    for _ in range(100):
        state = step_state(state, Action(), none, latents, CFG, NO_NOISE)
    assert np.all(np.isfinite(state.row))
    # the core must have settled near its baseline targets
    assert state.tbv == pytest.approx(latents.total_blood_volume, rel=1e-6)
    assert state.ar == pytest.approx(latents.total_peripheral_resistance, rel=1e-6)
