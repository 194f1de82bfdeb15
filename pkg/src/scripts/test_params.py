import math
import re

import pytest

from src.model.cycle_law import ki_pmf
from src.model.errors import ParamError
from src.model.params import ModelParams, check_params, derived_ratios, validate_params, with_overrides


def test_sweep_point_is_accepted(sweep_params):
    assert validate_params(sweep_params) is sweep_params
    assert check_params(sweep_params) == (True, "Params Approved")


@pytest.mark.parametrize("changes, reason", [
    (dict(n=1), "n ≥ 2 required"),
    (dict(p=1.0), "p out of (0,1)"),
    (dict(p=0.0), "p out of (0,1)"),
    (dict(m=61), "m out of [0, n]"),
    (dict(m=-1), "m out of [0, n]"),
    (dict(lambda_e=0.0), "lambda_e must be > 0"),
    (dict(lambda_s=-1.0), "lambda_s must be ≥ 0"),
    (dict(lambda_=-0.5), "lambda must be ≥ 0"),
    (dict(tail_tol=1.0), "tail_tol out of (0,1)"),
    (dict(lambda_s=math.inf), "lambda_s must be finite"),
])
def test_first_violated_invariant_is_named(changes, reason):
    values = dict(n=60, m=10, p=0.4, lambda_e=1.0, lambda_s=10.0, lambda_=10.0)
    values.update(changes)
    ok, message = check_params(ModelParams(**values))
    assert not ok
    assert message.startswith(reason)
    with pytest.raises(ParamError, match="^" + re.escape(reason)):
        validate_params(ModelParams(**values))


def test_m_zero_is_admitted(sweep_params):
    assert with_overrides(sweep_params, m=0).m == 0


def test_with_overrides_validates_and_copies(sweep_params):
    changed = with_overrides(sweep_params, lambda_s=20.0)
    assert changed.lambda_s == 20.0
    assert sweep_params.lambda_s == 10.0
    with pytest.raises(ParamError, match="unknown parameter"):
        with_overrides(sweep_params, rate=3.0)
    with pytest.raises(ParamError, match="p out of"):
        with_overrides(sweep_params, p=1.5)


def test_equal_rates_split_the_race(sweep_params):
    ratios = derived_ratios(with_overrides(sweep_params, lambda_s=1.0))
    assert ratios.rho_s == pytest.approx(0.5)


def test_no_gossip_has_no_depth(sweep_params):
    ratios = derived_ratios(with_overrides(sweep_params, lambda_=0.0))
    assert ratios.rho_g == 0.0
    assert ratios.k_max == 0


def test_truncation_depth_at_rate_ten(sweep_params):
    ratios = derived_ratios(sweep_params)
    assert ratios.rho_g == pytest.approx(10 / 11)
    assert ratios.k_max == 290
    assert ratios.rho_g ** (ratios.k_max + 1) <= sweep_params.tail_tol


@pytest.mark.parametrize("rate", [0.01, 0.3, 1.0, 7.0, 50.0, 400.0])
def test_truncated_geometric_keeps_all_but_tail_tol(sweep_params, rate):
    params = with_overrides(sweep_params, lambda_=rate)
    assert ki_pmf(params).total() >= 1.0 - params.tail_tol


def test_ratios_increase_with_their_rates(sweep_params):
    rates = [0.0, 0.1, 0.5, 1.0, 2.0, 10.0, 100.0]
    rho_s = [derived_ratios(with_overrides(sweep_params, lambda_s=r)).rho_s for r in rates]
    rho_g = [derived_ratios(with_overrides(sweep_params, lambda_=r)).rho_g for r in rates]
    assert all(a < b for a, b in zip(rho_s, rho_s[1:]))
    assert all(a < b for a, b in zip(rho_g, rho_g[1:]))
    assert all(0.0 <= r < 1.0 for r in rho_s + rho_g)


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
