import math

import numpy as np
import pytest
from scipy.stats import norm

from followrl import RewardConfig, reward_gap, reward_jerk, reward_safe, reward_total

CFG = RewardConfig()


def test_safe_indicator_off_when_not_closing():
    assert reward_safe(5.0, 10.0, 3.0, CFG) == 0.0


def test_safe_hard_braking_value():
    # b_kin = (20-0)/5 = 4 > b_comf -> -tanh(2/9)
    assert reward_safe(20.0, 0.0, 5.0, CFG) == pytest.approx(-math.tanh(2.0 / 9.0), abs=1e-12)


def test_safe_boundary_is_strict():
    # b_kin = 2 exactly: indicator is strict, so no penalty
    assert reward_safe(20.0, 0.0, 10.0, CFG) == 0.0


def test_safe_rejects_nonpositive_gap():
    with pytest.raises(ValueError):
        reward_safe(5.0, 0.0, 0.0, CFG)


def test_gap_peak_at_optimum():
    v = 7.0
    g_opt = v * CFG.T + CFG.g_min
    assert reward_gap(v, g_opt, CFG) == pytest.approx(1.0, abs=1e-12)


def test_gap_zero_at_limit():
    v = 7.0
    g_lim = v * CFG.T_lim + 2 * CFG.g_min
    assert reward_gap(v, g_lim, CFG) == pytest.approx(0.0, abs=1e-12)


def test_gap_gaussian_ratio_value():
    # v=10: g_opt=17, g_var=8.5; g=8.5 -> z=-1 -> pdf(-1)/pdf(0)
    expected = norm.pdf(-1.0) / norm.pdf(0.0)
    assert reward_gap(10.0, 8.5, CFG) == pytest.approx(expected, abs=1e-12)


def test_gap_no_singularity_at_standstill():
    assert reward_gap(0.0, 2.0, CFG) == pytest.approx(1.0, abs=1e-12)


def test_gap_clamped_beyond_limit():
    assert reward_gap(10.0, 1000.0, CFG) == 0.0


def test_gap_continuity_at_knots():
    eps = 1e-10
    for v in (0.0, 3.0, 10.0, 20.0):
        g_opt = v * CFG.T + CFG.g_min
        g_lim = v * CFG.T_lim + 2 * CFG.g_min
        assert abs(reward_gap(v, g_opt - eps, CFG) - reward_gap(v, g_opt + eps, CFG)) < 1e-8
        assert abs(reward_gap(v, g_lim - eps, CFG) - reward_gap(v, g_lim + eps, CFG)) < 1e-8


def test_jerk_values():
    assert reward_jerk(0.0, CFG) == 0.0
    assert reward_jerk(CFG.j_comf, CFG) == -1.0
    # worst single-step swing with default action bounds and dt=0.1
    assert reward_jerk(140.0, CFG) == pytest.approx(-4900.0)


def test_total_optimum_is_half():
    v = 12.0
    g_opt = v * CFG.T + CFG.g_min
    assert reward_total(v, v, g_opt, 0.0, CFG).total == pytest.approx(0.5, abs=1e-12)


def test_total_composition():
    # independent recomputation of the weighted sum
    br = reward_total(20.0, 0.0, 5.0, 0.0, CFG)
    r_safe = -math.tanh(((20.0 - 0.0) / 5.0 - CFG.b_comf) / (-CFG.a_min))
    z = (5.0 - 32.0) / 16.0
    r_gap = norm.pdf(z) / norm.pdf(0.0)
    assert br.total == pytest.approx(CFG.w_safe * r_safe + CFG.w_gap * r_gap, abs=1e-12)
    assert br.total == pytest.approx(-0.098239846550997, abs=1e-9)


def test_total_zero_region():
    # beyond g_lim, not closing, zero jerk -> exactly 0
    assert reward_total(5.0, 5.0, 200.0, 0.0, CFG).total == 0.0


def test_breakdown_identity_random():
    rng = np.random.default_rng(1)
    for _ in range(200):
        v = rng.uniform(0, 20)
        v_l = rng.uniform(0, 20)
        g = rng.uniform(0.1, 200)
        jerk = rng.uniform(-140, 140)
        br = reward_total(v, v_l, g, jerk, CFG)
        assert br.total == pytest.approx(
            CFG.w_safe * br.r_safe + CFG.w_gap * br.r_gap + CFG.w_jerk * br.r_jerk,
            abs=1e-15)
        assert -1.0 < br.r_safe <= 0.0
        assert br.r_jerk <= 0.0


def test_safe_monotone_in_b_kin():
    # for b_kin > b_comf the penalty is non-increasing: fix v_l=0, shrink g
    gaps = np.linspace(9.9, 0.1, 100)
    vals = [reward_safe(20.0, 0.0, g, CFG) for g in gaps]
    assert all(b <= a + 1e-15 for a, b in zip(vals, vals[1:]))
