import numpy as np
import pytest

from cfsim import rng
from cfsim.simulator import SimConfig, fluid_dose, policy_for, treat_probability, vaso_dose
from cfsim.simulator.policies import Action, PolicyDraws


CFG = SimConfig()


class FixedDraws:
    """Hand-set policy draws for forcing branches."""

    def __init__(self, gate=1.0, arm=0.0, fluid_noise=0.0, vaso_noise=0.0):
        self.gate = gate
        self.arm = arm
        self.fluid_noise = fluid_noise
        self.vaso_noise = vaso_noise


def obs(map_v=65.0, cvp=10.0, sbp=110.0, hr=80.0):
    return {"map": map_v, "cvp": cvp, "sbp": sbp, "hr": hr}


def test_action_invariants():
    with pytest.raises(ValueError):
        Action(fluid=-1.0)
    with pytest.raises(ValueError):
        Action(fluid=1.0, vaso=1.0)
    assert not Action().any


def test_treat_probability_at_targets():
    # d_map = d_cvp = 0 leaves only the intercept: sigmoid(0.02)
    assert treat_probability(65.0, 10.0, CFG) == pytest.approx(0.50500, abs=5e-6)


def test_treat_probability_hypotensive():
    # map 45 -> d_map = 20: sigmoid(0.06*20 + 0.02) = sigmoid(1.22)
    assert treat_probability(45.0, 10.0, CFG) == pytest.approx(0.7721, abs=1e-4)


def test_fluid_dose_formula():
    # d_map=10, d_cvp=2, zero noise: 10*10 + 60*2 = 220 mL
    assert fluid_dose(55.0, 8.0, CFG, noise=0.0) == pytest.approx(220.0)


def test_doses_clip_at_zero():
    assert fluid_dose(85.0, 15.0, CFG, noise=0.0) == 0.0
    assert vaso_dose(85.0, 15.0, CFG, noise=0.0) == 0.0


def test_observational_policy_branches():
    g_o = policy_for("o")
    # gate above probability -> no treatment
    assert g_o.action(obs(), FixedDraws(gate=0.99), CFG) == Action()
    # gate passes, arm < 0.5 -> fluids with the noisy dose
    a = g_o.action(obs(55.0, 8.0), FixedDraws(gate=0.0, arm=0.0), CFG)
    assert a.fluid == pytest.approx(220.0) and a.vaso == 0.0
    # arm >= 0.5 -> vasopressor: 0.1*10 + 0.15*2 = 1.3
    a = g_o.action(obs(55.0, 8.0), FixedDraws(gate=0.0, arm=0.9), CFG)
    assert a.vaso == pytest.approx(1.3) and a.fluid == 0.0


def test_threshold_policy_gate():
    g_c1 = policy_for("c1")
    # SBP above the gate -> no treatment
    assert g_c1.action(obs(sbp=120.0), FixedDraws(arm=0.0), CFG) == Action()
    # SBP 95, HR 70 (ratio 0.737), d_map=5, d_cvp=1, fluids arm:
    # dose = 10*5 + 60*1 = 110 mL
    a = g_c1.action(obs(60.0, 9.0, sbp=95.0, hr=70.0), FixedDraws(arm=0.0), CFG)
    assert a.fluid == pytest.approx(110.0)
    # ratio above 0.8 blocks treatment even when SBP is low
    assert g_c1.action(obs(60.0, 9.0, sbp=95.0, hr=90.0), FixedDraws(arm=0.0), CFG) == Action()
    # negative deltas clip the dose to zero
    a = g_c1.action(obs(85.0, 15.0, sbp=95.0, hr=70.0), FixedDraws(arm=0.0), CFG)
    assert a == Action()


def test_withhold_policy_always_zero():
    g_c2 = policy_for("c2")
    for map_v in (5.0, 65.0, 200.0):
        assert g_c2.action(obs(map_v), FixedDraws(gate=0.0), CFG) == Action()


def test_policy_for_unknown_regime():
    with pytest.raises(ValueError):
        policy_for("c9")


def test_observational_treat_frequency_at_targets():
    # empirical frequency of the treat gate at d_map = d_cvp = 0 over
    # 1e5 draws must straddle sigmoid(0.02) ~ 0.505
    g_o = policy_for("o")
    key = rng.trajectory_key(123, 0)
    treated = 0
    n = 100_000
    stream = rng.step_stream(key, 0, rng.PURPOSE_POLICY)
    for _ in range(n):
        draws = PolicyDraws(stream, CFG)
        treated += g_o.gate_passes(obs(), draws, CFG)
    assert 0.495 <= treated / n <= 0.515


def test_dose_noise_moments():
    # noisy dose draws carry the configured Gaussian noise
    stream = rng.named_stream(9, "dose-noise")
    fl = np.array([PolicyDraws(stream, CFG).fluid_noise for _ in range(20_000)])
    assert fl.mean() == pytest.approx(1500.0, abs=25.0)
    assert fl.std() == pytest.approx(1000.0, rel=0.03)
