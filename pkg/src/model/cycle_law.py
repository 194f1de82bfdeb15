"""Per-update-cycle probability laws.

Everything here is a pure function of an immutable ModelParams. The adoption
probabilities are memoized with functools.lru_cache keyed by the frozen params,
which returns exactly what the uncached computation would.
"""
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict

import numpy as np
from scipy.stats import binom

from src.model.errors import CompositionError, ParamError
from src.model.params import ModelParams, derived_ratios


@dataclass(frozen=True)
class Pmf:
    """Finite pmf over the contiguous support {offset, ..., offset + len(weights) - 1}."""
    offset: int
    weights: np.ndarray

    def __post_init__(self):
        weights = np.asarray(self.weights, dtype=float)
        if weights.ndim != 1 or weights.size == 0:
            raise ParamError("pmf weights must be a nonempty vector")
        if np.any(weights < 0):
            raise ParamError("pmf weights must be non-negative")
        weights = weights.copy()
        weights.flags.writeable = False
        object.__setattr__(self, "weights", weights)

    def support(self) -> np.ndarray:
        return np.arange(self.offset, self.offset + self.weights.size)

    def prob(self, k: int) -> float:
        i = k - self.offset
        if 0 <= i < self.weights.size:
            return float(self.weights[i])
        return 0.0

    def total(self) -> float:
        return float(self.weights.sum())

    def mean(self) -> float:
        return float(np.dot(self.support(), self.weights))

    def as_dict(self) -> Dict[int, float]:
        return {int(k): float(w) for k, w in zip(self.support(), self.weights)}

    def dense(self, size: int) -> np.ndarray:
        """Weights laid out on {0, ..., size-1}."""
        out = np.zeros(size)
        out[self.offset:self.offset + self.weights.size] = self.weights
        return out


def _checked(params: ModelParams, offset: int, weights) -> Pmf:
    pmf = Pmf(offset, weights)
    slack = 10 * params.tail_tol
    if not 1.0 - slack <= pmf.total() <= 1.0 + slack:
        raise ParamError(f"pmf mass {pmf.total():.15f} outside 1 ± {slack:g}")
    return pmf


def _check_count(params: ModelParams, N: int):
    if not 0 <= N <= params.n:
        raise ParamError(f"N out of [0, n] (N={N}, n={params.n})")


def _check_composition(params: ModelParams, N: int, prior_matches: bool):
    n, m = params.n, params.m
    if N < 0 or N + m > n:
        raise CompositionError(f"gossip composition needs 0 ≤ N and N + m ≤ n (N={N}, m={m}, n={n})")
    if prior_matches and N < 1:
        raise CompositionError("a correct-prior receiver needs N ≥ 1")
    if not prior_matches and N + m > n - 1:
        raise CompositionError("an incorrect-prior receiver needs N + m ≤ n - 1")


def phase_s_budget(params: ModelParams, N: int) -> int:
    return min(params.m, params.n - N)


def ks_pmf(params: ModelParams, N: int) -> Pmf:
    """Law of K_s, the number of source updates before the source changes or the budget is spent."""
    _check_count(params, N)
    rho_s = derived_ratios(params).rho_s
    budget = phase_s_budget(params, N)

    k = np.arange(budget + 1)
    weights = rho_s ** k * (1.0 - rho_s)
    weights[budget] = rho_s ** budget
    return _checked(params, 0, weights)


def ki_pmf(params: ModelParams) -> Pmf:
    """Truncated geometric law of K_i, the gossip updates one node receives.

    The tail beyond k_max (mass rho_g^(k_max+1) <= tail_tol) is dropped, not folded in.
    """
    ratios = derived_ratios(params)
    k = np.arange(ratios.k_max + 1)
    return _checked(params, 0, ratios.rho_g ** k * (1.0 - ratios.rho_g))


def _sender_fraction(params: ModelParams, N: int, prior_matches: bool) -> float:
    # the sender pool is the other n-1 nodes; a correct-prior receiver is not its own sender
    correct_senders = N + params.m - (1 if prior_matches else 0)
    return correct_senders / (params.n - 1)


def ri_pmf(params: ModelParams, N: int, k_i: int, prior_matches: bool) -> Pmf:
    _check_composition(params, N, prior_matches)
    if k_i < 0:
        raise ParamError("k_i must be ≥ 0")
    q = _sender_fraction(params, N, prior_matches)
    return _checked(params, 0, binom.pmf(np.arange(k_i + 1), k_i, q))


@lru_cache(maxsize=65536)
def _adopt_prob(params: ModelParams, N: int, prior_matches: bool) -> float:
    ratios = derived_ratios(params)
    rho_g, k_max = ratios.rho_g, ratios.k_max
    hold = (1.0 - rho_g) if prior_matches else 0.0
    if k_max == 0:
        return hold

    q = _sender_fraction(params, N, prior_matches)

    k = np.arange(1, k_max + 1)
    p_k = rho_g ** k * (1.0 - rho_g)
    strict = binom.sf(k // 2, k, q)  # P(R >= floor(k/2) + 1)

    j = np.arange(1, k_max // 2 + 1)
    tie = 0.5 * binom.pmf(j, 2 * j, q) * rho_g ** (2 * j) * (1.0 - rho_g)

    total = float(np.dot(strict, p_k) + tie.sum() + hold)
    return min(1.0, max(0.0, total))


def adopt_prob(params: ModelParams, N: int, prior_matches: bool) -> float:
    """
    Probability that a gossiping node ends the phase holding the source's bit.

    prior_matches=True gives P_T1(N) (node starts correct), False gives P_T2(N).
    Only defined in the gossip regime N < n - m.
    """
    _check_composition(params, N, prior_matches)
    if N >= params.n - params.m:
        raise CompositionError(f"adoption is only defined for N < n - m (N={N})")
    return _adopt_prob(params, N, bool(prior_matches))


def nprime_pmf(params: ModelParams, N: int) -> Pmf:
    """Law of N' = N1' + N2' on {0, ..., n-m}: gossip-phase adopters of the source bit."""
    n, m = params.n, params.m
    if not 0 <= N < n - m:
        raise CompositionError(f"gossip phase needs 0 ≤ N < n - m (N={N}, n={n}, m={m})")

    incorrect = n - N - m
    p_t2 = adopt_prob(params, N, False)
    n2 = binom.pmf(np.arange(incorrect + 1), incorrect, p_t2)
    if N == 0:
        return _checked(params, 0, n2)

    p_t1 = adopt_prob(params, N, True)
    n1 = binom.pmf(np.arange(N + 1), N, p_t1)
    return _checked(params, 0, np.convolve(n1, n2))


def ndp_given_n_pmf(params: ModelParams, N: int) -> Pmf:
    """
    Law of N'', the correct-node count at the end of a cycle that starts at N.

    Built as a mixture over the phase-S outcome: a cycle cut short after k_s < budget
    source updates ends at N + k_s; a spent budget m with N < n - m leads into the gossip
    phase and ends at m + N'; a spent budget n - N ends with every node correct.
    """
    _check_count(params, N)
    n, m = params.n, params.m
    ks = ks_pmf(params, N)
    budget = ks.weights.size - 1

    out = np.zeros(n + 1)
    out[N:N + budget] += ks.weights[:budget]

    spent = ks.weights[budget]
    if N < n - m:
        out[m:] += spent * nprime_pmf(params, N).weights
    else:
        out[n] += spent

    return _checked(params, 0, out)
