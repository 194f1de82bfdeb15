import numpy as np
import pytest
from scipy.stats import norm

from src.analysis.approx import (a_coefficient, low_rate_conditional_means, pt1_high_approx, pt2_high_approx,
                                 pt2_high_limit, pt_low_approx, q_function)
from src.model.cycle_law import adopt_prob
from src.model.errors import CompositionError
from src.model.params import derived_ratios, with_overrides


def test_q_function_matches_normal_tail():
    x = np.linspace(-8.0, 8.0, 161)
    assert np.allclose(q_function(x), norm.sf(x), rtol=1e-10, atol=0)
    assert q_function(0.0) == 0.5


def test_a_coefficient(adoption_params):
    assert a_coefficient(adoption_params, 30) == pytest.approx(0.5773502692, abs=1e-9)
    assert a_coefficient(adoption_params, 130) == pytest.approx(-0.5773502692, abs=1e-9)
    assert a_coefficient(adoption_params, 80) == 0.0


@pytest.mark.parametrize("N", [-20, 180])
def test_a_coefficient_degenerate(adoption_params, N):
    with pytest.raises(CompositionError):
        a_coefficient(adoption_params, N)


def test_symmetric_composition_gives_half_of_gossip_mass(adoption_params):
    params = with_overrides(adoption_params, lambda_=3.0)
    rho_g = derived_ratios(params).rho_g
    assert pt2_high_approx(params, 80) == pytest.approx(rho_g / 2, abs=1e-11)


def test_no_gossip_approximations(adoption_params):
    silent = with_overrides(adoption_params, lambda_=0.0)
    assert pt2_high_approx(silent, 30) == 0.0
    assert pt1_high_approx(silent, 30) == 1.0
    assert pt_low_approx(silent, 30, False) == 0.0
    assert pt_low_approx(silent, 30, True) == 1.0


def test_high_rate_sum_tracks_exact(adoption_params):
    params = with_overrides(adoption_params, lambda_=400.0)
    gaps = [abs(pt2_high_approx(params, N) - adopt_prob(params, N, False)) for N in range(180)]
    assert max(gaps) <= 0.05


def test_exact_adoption_at_threshold(adoption_params):
    params = with_overrides(adoption_params, lambda_=400.0)
    assert adopt_prob(params, 80, False) == pytest.approx(0.5, abs=0.05)


@pytest.mark.parametrize("N, expected", [(79, 0.0), (80, 0.5), (81, 1.0), (0, 0.0), (180, 1.0)])
def test_step_limit(adoption_params, N, expected):
    assert pt2_high_limit(adoption_params, N) == expected


@pytest.mark.parametrize("N", [0, 20, 40, 60, 100, 120, 140, 160])
def test_exact_moves_toward_step_limit(adoption_params, N):
    distances = [abs(adopt_prob(with_overrides(adoption_params, lambda_=rate), N, False)
                     - pt2_high_limit(adoption_params, N)) for rate in (20.0, 200.0, 400.0)]
    assert distances[0] >= distances[1] >= distances[2]


def test_low_rate_forms(adoption_params):
    params = with_overrides(adoption_params, lambda_=0.1)
    rho_g = 0.1 / 1.1
    assert pt_low_approx(params, 30, False) == pytest.approx(rho_g * 50 / 200)
    assert pt_low_approx(params, 30, True) == pytest.approx(1 - rho_g * 150 / 200)
    assert pt_low_approx(params, 180, False) == pytest.approx(rho_g)
    assert pt_low_approx(params, 180, True) == 1.0
    assert pt_low_approx(params, 30, True) - pt_low_approx(params, 30, False) == pytest.approx(1 - rho_g)


def test_low_rate_error_bound(adoption_params):
    params = with_overrides(adoption_params, lambda_=0.1)
    rho_g = derived_ratios(params).rho_g
    for N in range(180):
        bound = (1 + (N + params.m) / params.n) * rho_g ** 2
        assert abs(pt_low_approx(params, N, False) - adopt_prob(params, N, False)) <= bound


def test_low_rate_conditional_means(adoption_params):
    params = with_overrides(adoption_params, lambda_=0.5)
    rho_g = 0.5 / 1.5
    mean1, mean2 = low_rate_conditional_means(params, 40)
    assert mean1 == pytest.approx(40 * (1 - rho_g * 140 / 200))
    assert mean2 == pytest.approx(140 * rho_g * 60 / 200)
    with pytest.raises(CompositionError):
        low_rate_conditional_means(params, 181)


def test_high_rate_correct_prior_adds_silent_mass(adoption_params):
    params = with_overrides(adoption_params, lambda_=20.0)
    assert pt1_high_approx(params, 30) == pytest.approx(pt2_high_approx(params, 30) + 1 / 21)
    assert 0.95 <= pt1_high_approx(params, 170) <= 1.0


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
