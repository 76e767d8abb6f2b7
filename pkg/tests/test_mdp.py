import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from brushagent.brush import BrushState, Footprint, fit_posture
from brushagent.mdp import (RewardParams, StateFeatures, delta, episode_return, extract_state, location_energy,
                            posture_energy, reward, reward_array, score_trajectory)

P = RewardParams()
feature = st.floats(-3.0, 3.0, allow_nan=False)
zero_or = st.one_of(st.just(0.0), feature)


def sf(omega=0.0, phi=0.0, d=0.0, k1=0.0, k2=0.0, l=1):
    return StateFeatures(omega, phi, d, k1, k2, l)


class TestDelta:
    def test_values(self):
        assert delta(0.0, 0.0) == 1.0
        assert delta(0.7, 0.7) == 0.0
        assert delta(1.0, -1.0) == 1.0

    @given(zero_or, zero_or)
    def test_range_and_symmetry(self, x, y):
        assert 0.0 <= delta(x, y) <= 1.0
        assert delta(x, y) == delta(y, x)


class TestEnergies:
    def test_location(self):
        assert location_energy(0.0, 0.0, P) == 0.0
        assert location_energy(math.pi / 2, 0.5, P) == pytest.approx(0.7854, abs=1e-4)
        assert location_energy(0.0, 1.5, P) == pytest.approx(1.25)

    def test_posture(self):
        assert posture_energy(0, 0, 0, P) == 0.0
        assert posture_energy(1, 1, 1, P) == pytest.approx(1.0)
        assert posture_energy(1, 0, 0, P) == pytest.approx(1 / 3)


class TestReward:
    def test_zero_cases(self):
        assert reward(sf(), sf(0.1, 0.2, 0.3), True, P) == 0.0
        assert reward(sf(), sf(0.1, 0.2, 0.3, l=0), False, P) == 0.0

    def test_straight_hand_example(self):
        assert reward(sf(), sf(), False, P) == 2.0

    def test_curvature_raises_reward(self):
        assert reward(sf(), sf(k1=0.5, k2=-0.5), False, P) == pytest.approx(3.0)

    def test_denominator_floor(self):
        r = reward(sf(0.3, 0.4, 0.5), sf(0.3, 0.4, 0.5), False, RewardParams(tau1=0.0))
        assert r == pytest.approx(1.0 / P.denom_eps)

    @given(*[zero_or] * 3, *[zero_or] * 3, st.floats(-1, 1), st.floats(-1, 1), st.integers(0, 1))
    def test_array_matches_scalar(self, po, pp, pd, o, p, d, k1, k2, lab):
        prev, cur = sf(po, pp, pd), sf(o, p, d, k1, k2, lab)
        got = float(reward_array(po, pp, pd, o, p, d, k1, k2, lab, P))
        assert got == pytest.approx(reward(prev, cur, False, P), rel=1e-12)

    @given(feature, feature, feature, feature, feature, st.floats(-1, 1), st.floats(-1, 1))
    def test_nonnegative_and_bounded(self, po, o, p, pd, d, k1, k2):
        r = reward(sf(po, 0.1, pd), sf(o, p, d, k1, k2), False, P)
        assert 0.0 <= r <= 2.0 / P.denom_eps

    def test_params_reject_unknown(self):
        with pytest.raises(ValueError):
            RewardParams.from_dict({"lambda3": 1.0})
        assert RewardParams.from_dict(P.to_dict()) == P


class TestReturn:
    def test_values(self):
        assert episode_return([0, 0, 0], 0.99) == 0.0
        assert episode_return([1, 1], 0.99) == pytest.approx(1.99)
        assert episode_return([2.5], 0.99) == 2.5


class TestFeatures:
    def test_centered_on_straight(self, rect_ctx):
        fp = fit_posture(rect_ctx.region, rect_ctx.axis, (0.0, 0.0))
        f = extract_state(rect_ctx.axis, BrushState(fp, 0.0), 1)
        assert f.omega == pytest.approx(0.0, abs=1e-9)
        assert abs(f.phi) == pytest.approx(math.pi / 2, abs=1e-9)
        assert f.d == pytest.approx(0.0, abs=1e-9)
        assert f.kappa1 == 0.0 and f.kappa2 == 0.0

    def test_center_on_wall(self, rect_ctx):
        # r = 0.5 with the center on the left wall: d = 1 / 0.5 = 2
        fp = Footprint((0.0, 1.0), 0.5, (0.0, -1.0))
        assert extract_state(rect_ctx.axis, BrushState(fp, 0.0), 1).d == pytest.approx(2.0)

    def test_past_half_right(self, rect_ctx):
        fp = Footprint((0.0, -0.6), 0.4, (0.0, 1.0))
        assert extract_state(rect_ctx.axis, BrushState(fp, 0.0), 1).d == pytest.approx(-1.5)

    def test_velocity_sets_omega(self, rect_ctx):
        fp = fit_posture(rect_ctx.region, rect_ctx.axis, (0.0, 0.0))
        assert extract_state(rect_ctx.axis, BrushState(fp, 0.4), 1).omega == pytest.approx(0.4)


def test_score_trajectory_straight(rect_ctx):
    fps = [fit_posture(rect_ctx.region, rect_ctx.axis, (x, 0.0)) for x in (-3.0, -2.5, -2.0)]
    rewards = score_trajectory(rect_ctx.region, rect_ctx.axis, fps, P, grid=rect_ctx.grid, initial_velocity=0.0)
    # omega and d stay at zero (delta 1 each); the folded heading stays at pi/2 (delta 0)
    assert rewards == pytest.approx([3.0, 3.0])
    assert score_trajectory(rect_ctx.region, rect_ctx.axis, [fps[0], fps[0]], P, grid=rect_ctx.grid) == [0.0]
