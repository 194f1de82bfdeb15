"""Low-rate gossip gain and the adaptive transmission-capacity policy."""
import logging
import math
from dataclasses import dataclass, replace
from typing import Iterable, List, Optional, Tuple

import numpy as np
import pandas as pd

from src.chain.markov import (PolicyTable, StationaryDist, build_chain, average_error,
                              constant_policy, no_gossip_baseline, stationary)
from src.model.errors import DegenerateFitError, ParamError
from src.model.params import ModelParams, derived_ratios, validate_params

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GainProfile:
    per_state_gain: Tuple[float, ...]   # G(N) for N = 0 .. n - m
    fitted_B: Optional[float]
    total_gain_estimate: float


def round_half_away(x: float) -> int:
    return int(math.copysign(math.floor(abs(x) + 0.5), x))


def gain_at_capacity(params: ModelParams, N: int, m: float) -> float:
    """Gain expression at a (possibly non-integer) capacity m."""
    n = params.n
    ratios = derived_ratios(params)
    return (m / n ** 2) * (n - N - m) * ratios.rho_g * ratios.rho_s ** m


def gossip_gain(params: ModelParams, N: int) -> float:
    """Per-cycle error reduction G(N) from low-rate gossiping at capacity params.m."""
    if not 0 <= N <= params.n - params.m:
        raise ParamError(f"gossip gain needs 0 ≤ N ≤ n - m (N={N}, n - m={params.n - params.m})")
    return max(0.0, gain_at_capacity(params, N, params.m))


def gain_profile(params: ModelParams, pi: StationaryDist, fitted_B: float = None) -> GainProfile:
    gains = tuple(gossip_gain(params, N) for N in range(params.n - params.m + 1))
    weights = pi.by_count()[:len(gains)]
    total = float(np.dot(weights, gains))
    if fitted_B is not None:
        total *= fitted_B
    return GainProfile(per_state_gain=gains, fitted_B=fitted_B, total_gain_estimate=total)


def gain_curve(params: ModelParams, m_grid: Iterable[int]) -> pd.DataFrame:
    """
    Exact gossip gain |Delta - Delta_ng| and the weighted G(N) predictor for each m.

    Both errors come from the chain at constant capacity m; the predictor weights G(N)
    with the stationary distribution of the gossiping chain.
    """
    rows = []
    for m in m_grid:
        point = validate_params(replace(params, m=int(m)))
        policy = constant_policy(point.n, point.m)
        pi = stationary(build_chain(point, policy))
        delta = average_error(point, policy, pi)
        delta_ng = no_gossip_baseline(point, policy)
        rows.append({
            "m": int(m),
            "delta": delta,
            "delta_ng": delta_ng,
            "gain": abs(delta - delta_ng),
            "predictor": gain_profile(point, pi).total_gain_estimate,
        })
    return pd.DataFrame(rows, columns=["m", "delta", "delta_ng", "gain", "predictor"])


def fit_through_origin(x, y) -> float:
    """Least-squares slope B >= 0 of y ≈ B x with no intercept."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    denom = float(np.dot(x, x))
    if denom == 0.0:
        raise DegenerateFitError("all gain predictors are zero; B(p) is undetermined")
    return max(0.0, float(np.dot(x, y)) / denom)


def fit_scaling_B(params: ModelParams, m_grid: List[int]) -> float:
    """Least-squares B with |Delta - Delta_ng| ≈ B * sum_N (pi_0N + pi_1N) G(N) over m_grid."""
    m_grid = list(m_grid)
    if not m_grid:
        raise ParamError("m_grid must be nonempty")
    if params.lambda_ >= params.lambda_e:
        logger.warning(f"B(p) fit outside the low-gossip regime (lambda={params.lambda_} ≥ lambda_e={params.lambda_e})")

    curve = gain_curve(params, m_grid)
    return fit_through_origin(curve["predictor"], curve["gain"])


def _log_rho_s(params: ModelParams) -> float:
    # log(lambda_s / (lambda_s + lambda_e)) without cancellation for large lambda_s
    return -math.log1p(params.lambda_e / params.lambda_s)


def m_star(params: ModelParams, N: int) -> Tuple[float, int]:
    """
    Capacity maximizing G(N) over continuous m, and its rounding clamped to [0, n - N].

    Uses m* = h - h^2 / (c + sqrt(h^2 + c^2)) with h = (n - N)/2 and c = -1/log(rho_s),
    which is the smaller root of dG/dm = 0 written without cancellation.
    """
    if not 0 <= N <= params.n:
        raise ParamError(f"N out of [0, n] (N={N})")
    if params.lambda_s == 0:
        return 0.0, 0

    h = (params.n - N) / 2.0
    c = -1.0 / _log_rho_s(params)
    root = math.hypot(h, c)
    real = h - h * h / (c + root) if h > 0 else 0.0

    discarded = h + c + root
    assert discarded > params.n - N, "larger stationary point must be infeasible"

    rounded = min(max(round_half_away(real), 0), params.n - N)
    return real, rounded


def adaptive_policy_table(params: ModelParams) -> PolicyTable:
    validate_params(params)
    return PolicyTable(tuple(m_star(params, N)[1] for N in range(params.n + 1)))


def expected_capacity(pi: StationaryDist, policy: PolicyTable) -> float:
    """Stationary mean of the capacity the policy uses."""
    if pi.n != policy.n:
        raise ParamError(f"stationary distribution (n={pi.n}) and policy (n={policy.n}) disagree")
    return float(np.dot(pi.by_count(), policy.capacity))
