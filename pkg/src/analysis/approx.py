"""High- and low-gossip-rate approximations of the adoption probabilities."""
import math
from typing import Tuple

import numpy as np
from scipy.special import erfc

from src.model.errors import CompositionError, ParamError
from src.model.params import ModelParams, derived_ratios


def q_function(x):
    """Standard normal upper tail, Q(x) = erfc(x / sqrt 2) / 2.

    erfc keeps full relative precision in the far tail, where 1 - Phi(x) would cancel.
    """
    return 0.5 * erfc(np.asarray(x, dtype=float) / math.sqrt(2.0))


def a_coefficient(params: ModelParams, N: int) -> float:
    n, m = params.n, params.m
    if N + m <= 0 or N + m >= n:
        raise CompositionError(f"degenerate composition (N + m = {N + m}, n = {n})")
    f = (N + m) / n
    return (0.5 - f) / math.sqrt(f * (1.0 - f))


def pt2_high_approx(params: ModelParams, N: int) -> float:
    """Sum of Q-functions approximating P_T2(N) when gossip is fast."""
    A = a_coefficient(params, N)
    ratios = derived_ratios(params)
    if ratios.k_max == 0:
        return 0.0
    k = np.arange(1, ratios.k_max + 1)
    p_k = ratios.rho_g ** k * (1.0 - ratios.rho_g)
    return float(np.dot(q_function(np.sqrt(k) * A), p_k))


def pt1_high_approx(params: ModelParams, N: int) -> float:
    # correct-prior nodes additionally keep their bit when no gossip arrives
    return min(1.0, pt2_high_approx(params, N) + 1.0 - derived_ratios(params).rho_g)


def pt2_high_limit(params: ModelParams, N: int) -> float:
    """Step function that P_T2(N) tends to as the gossip rate grows."""
    if not 0 <= N <= params.n:
        raise ParamError(f"N out of [0, n] (N={N})")
    twice_correct = 2 * (N + params.m)
    if twice_correct < params.n:
        return 0.0
    if twice_correct == params.n:
        return 0.5
    return 1.0


def pt_low_approx(params: ModelParams, N: int, prior_matches: bool) -> float:
    """Linear low-rate forms: rho_g (N+m)/n for wrong priors, 1 - rho_g (n-N-m)/n for correct ones."""
    n, m = params.n, params.m
    if N < 0 or N + m > n:
        raise CompositionError(f"composition needs 0 ≤ N + m ≤ n (N={N}, m={m})")
    rho_g = derived_ratios(params).rho_g
    if prior_matches:
        return 1.0 - rho_g * (n - N - m) / n
    return rho_g * (N + m) / n


def low_rate_conditional_means(params: ModelParams, N: int) -> Tuple[float, float]:
    """E[N1' | N] and E[N2' | N] under the low-rate forms."""
    incorrect = params.n - N - params.m
    if N < 0 or incorrect < 0:
        raise CompositionError(f"composition needs 0 ≤ N ≤ n - m (N={N})")
    return (N * pt_low_approx(params, N, True),
            incorrect * pt_low_approx(params, N, False))
