import numpy as np
import pytest
from scipy.optimize import minimize_scalar

from src.analysis.approx import low_rate_conditional_means
from src.analysis.policy import (adaptive_policy_table, expected_capacity, fit_scaling_B, fit_through_origin,
                                 gain_at_capacity, gain_curve, gain_profile, gossip_gain, m_star, round_half_away)
from src.chain.markov import StationaryDist, constant_policy, solve_delta
from src.model.errors import DegenerateFitError, ParamError
from src.model.params import ModelParams, derived_ratios, with_overrides


@pytest.fixture
def gain_params():
    return ModelParams(n=80, m=8, p=0.5, lambda_e=1.0, lambda_s=10.0, lambda_=0.4)


def test_round_half_away():
    assert [round_half_away(x) for x in (0.5, 1.5, 2.5, 2.4999, -0.5, -1.5)] == [1, 2, 3, 2, -1, -2]


def test_gossip_gain_value(gain_params):
    assert gossip_gain(gain_params, 0) == pytest.approx(0.011995904, rel=1e-6)


def test_gossip_gain_vanishes(gain_params):
    assert gossip_gain(gain_params, 72) == 0.0
    assert gossip_gain(with_overrides(gain_params, m=0), 40) == 0.0
    with pytest.raises(ParamError):
        gossip_gain(gain_params, 73)


@pytest.mark.parametrize("N", [0, 10, 35, 60])
def test_gain_equals_low_rate_mean_improvement(gain_params, N):
    mean1, mean2 = low_rate_conditional_means(gain_params, N)
    m, n = gain_params.m, gain_params.n
    improvement = (mean1 + mean2 + m - (N + m)) / n * derived_ratios(gain_params).rho_s ** m
    assert gossip_gain(gain_params, N) == pytest.approx(improvement, rel=1e-12)


def test_m_star_limits():
    params = ModelParams(n=60, m=10, p=0.2, lambda_e=1.0, lambda_s=0.0, lambda_=10.0)
    assert m_star(params, 0) == (0.0, 0)
    fast = with_overrides(params, lambda_s=1e9)
    assert m_star(fast, 60) == (0.0, 0)
    real, rounded = m_star(fast, 10)
    assert real == pytest.approx(25.0, abs=1e-6)
    assert rounded == 25
    with pytest.raises(ParamError):
        m_star(fast, 61)


def test_m_star_matches_numerical_maximizer():
    params = ModelParams(n=60, m=10, p=0.2, lambda_e=1.0, lambda_s=5.0, lambda_=10.0)
    best = minimize_scalar(lambda m: -gain_at_capacity(params, 0, m), bracket=(0.0, 10.0, 60.0),
                           method="golden", tol=1e-10)
    real, rounded = m_star(params, 0)
    assert real == pytest.approx(best.x, abs=1e-6)
    assert real == pytest.approx(4.987, abs=1e-3)
    assert rounded == 5


def test_m_star_is_a_local_maximum_on_random_grid():
    rng = np.random.default_rng(7)
    for _ in range(100):
        n = int(rng.integers(2, 101))
        N = int(rng.integers(0, n))
        rate = float(10 ** rng.uniform(-2, 3))
        params = ModelParams(n=n, m=0, p=0.3, lambda_e=1.0, lambda_s=rate, lambda_=1.0)
        real, rounded = m_star(params, N)
        assert 0.0 <= real <= (n - N) / 2 + 1e-9
        assert 0 <= rounded <= n - N
        peak = gain_at_capacity(params, N, real)
        assert peak >= gain_at_capacity(params, N, real + 1e-3) - 1e-15
        if real >= 1e-3:
            assert peak >= gain_at_capacity(params, N, real - 1e-3) - 1e-15


def test_adaptive_table():
    params = ModelParams(n=60, m=10, p=0.2, lambda_e=1.0, lambda_s=10.0, lambda_=10.0)
    table = adaptive_policy_table(params)
    assert table.capacity == tuple(round_half_away(m_star(params, N)[0]) for N in range(61))
    assert all(a >= b for a, b in zip(table.capacity, table.capacity[1:]))
    assert table.capacity[-1] == 0
    assert set(adaptive_policy_table(with_overrides(params, lambda_s=0.0)).capacity) == {0}


def test_expected_capacity():
    n, m = 10, 3
    half = np.r_[np.ones(n - m + 1), np.zeros(m)]
    pi = StationaryDist(np.r_[half, half] / (2 * half.sum()))
    assert expected_capacity(pi, constant_policy(n, m)) == pytest.approx(m)
    with pytest.raises(ParamError):
        expected_capacity(pi, constant_policy(12, m))


def test_fit_through_origin():
    assert fit_through_origin([1, 2, 3], [2, 4, 6]) == pytest.approx(2.0)
    assert fit_through_origin([1, 2], [-1, -2]) == 0.0
    with pytest.raises(DegenerateFitError):
        fit_through_origin([0, 0], [1, 2])


def test_fit_without_gossip_is_degenerate():
    params = ModelParams(n=10, m=2, p=0.5, lambda_e=1.0, lambda_s=5.0, lambda_=0.0)
    with pytest.raises(DegenerateFitError):
        fit_scaling_B(params, [1, 2, 3])
    with pytest.raises(ParamError):
        fit_scaling_B(params, [])


def test_gain_profile(gain_params):
    _, pi = solve_delta(gain_params, constant_policy(gain_params.n, gain_params.m))
    profile = gain_profile(gain_params, pi)
    assert len(profile.per_state_gain) == gain_params.n - gain_params.m + 1
    assert profile.fitted_B is None
    assert profile.total_gain_estimate > 0
    scaled = gain_profile(gain_params, pi, fitted_B=2.0)
    assert scaled.total_gain_estimate == pytest.approx(2 * profile.total_gain_estimate)


def test_gain_curve_columns():
    params = ModelParams(n=10, m=1, p=0.5, lambda_e=1.0, lambda_s=5.0, lambda_=0.4)
    curve = gain_curve(params, [1, 2, 3])
    assert list(curve.columns) == ["m", "delta", "delta_ng", "gain", "predictor"]
    assert list(curve["m"]) == [1, 2, 3]
    assert (curve["gain"] == (curve["delta"] - curve["delta_ng"]).abs()).all()
    assert (curve["predictor"] > 0).all()
    silent, _ = solve_delta(with_overrides(params, m=2, lambda_=0.0), constant_policy(10, 2))
    assert curve.loc[1, "delta_ng"] == silent


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
