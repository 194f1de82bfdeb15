import numpy as np
import pytest

from src.chain.markov import (PolicyTable, StationaryDist, TransitionMatrix, average_error, build_chain,
                              constant_policy, end_count_laws, no_gossip_baseline, solve_delta, stationary)
from src.model.cycle_law import ks_pmf, ndp_given_n_pmf, nprime_pmf
from src.model.errors import ParamError
from src.model.params import ModelParams, with_overrides


def literal_end_count(params, N, n2):
    """Piecewise end-count law, transcribed case by case (consistent for m = 1)."""
    n, m = params.n, params.m
    ks = ks_pmf(params, N)
    if N >= n - m:
        return ks.prob(n2 - N) if N <= n2 <= n else 0.0
    nprime = nprime_pmf(params, N)
    if n2 < m:
        k = n2 - N
        return ks.prob(k) if 0 <= k <= m - 1 else 0.0
    if n2 < N:
        return ks.prob(m) * nprime.prob(n2 - m)
    if n2 < N + m:
        return ks.prob(n2 - N) + ks.prob(m) * nprime.prob(n2 - m)
    return ks.prob(m) * nprime.prob(n2 - m)


def literal_matrix(params):
    """Transition matrix from 1-based state labels, flips read as p/(1-p) times the mirrored entry."""
    n, p = params.n, params.p
    size = 2 * n + 2
    P = {}
    for a in range(1, size + 1):
        for b in range(1, size + 1):
            if a <= n + 1 and b <= n + 1:
                P[a, b] = (1 - p) * literal_end_count(params, a - 1, b - 1)
            elif a >= n + 2 and b >= n + 2:
                P[a, b] = (1 - p) * literal_end_count(params, a - n - 2, b - n - 2)
    for a in range(1, size + 1):
        for b in range(1, size + 1):
            if (a, b) not in P:
                P[a, b] = p / (1 - p) * P[a, 2 * n + 3 - b]
    return np.array([[P[a, b] for b in range(1, size + 1)] for a in range(1, size + 1)])


CHAIN_POINTS = [
    ModelParams(n=4, m=1, p=0.3, lambda_e=1.0, lambda_s=1.0, lambda_=1.0),
    ModelParams(n=20, m=5, p=0.4, lambda_e=1.0, lambda_s=10.0, lambda_=10.0),
    ModelParams(n=60, m=10, p=0.4, lambda_e=1.0, lambda_s=10.0, lambda_=10.0),
]


def test_policy_table_bounds():
    assert constant_policy(5, 3).capacity == (3, 3, 3, 2, 1, 0)
    with pytest.raises(ParamError):
        PolicyTable((2, 2, 2))
    with pytest.raises(ParamError):
        constant_policy(5, 6)


def test_frozen_network_only_flips():
    params = ModelParams(n=5, m=2, p=0.3, lambda_e=1.0, lambda_s=0.0, lambda_=0.0)
    P = build_chain(params, constant_policy(5, 2)).entries
    half = params.n + 1
    expected = np.zeros_like(P)
    for x in range(2):
        for N in range(half):
            expected[x * half + N, x * half + N] = 0.7
            expected[x * half + N, (1 - x) * half + params.n - N] = 0.3
    assert np.allclose(P, expected, atol=1e-15)


def test_matrix_matches_literal_transcription():
    params = CHAIN_POINTS[0]
    P = build_chain(params, constant_policy(params.n, params.m)).entries
    assert np.allclose(P, literal_matrix(params), atol=1e-9, rtol=0)


@pytest.mark.parametrize("params", CHAIN_POINTS, ids=lambda p: f"n{p.n}")
def test_chain_soundness(params):
    policy = constant_policy(params.n, params.m)
    P = build_chain(params, policy)
    assert P.is_row_stochastic(tol=1e-11)
    assert P.has_bit_flip_symmetry()
    assert P.is_ergodic()

    pi = stationary(P)
    assert np.all(pi.pi >= 0)
    assert pi.pi.sum() == pytest.approx(1.0, abs=params.solve_tol)
    assert np.max(np.abs(pi.pi @ P.entries - pi.pi)) <= 1e-12
    half = params.n + 1
    assert np.max(np.abs(pi.pi[:half] - pi.pi[half:])) <= 1e-10


@pytest.mark.parametrize("params", CHAIN_POINTS, ids=lambda p: f"n{p.n}")
def test_solvers_agree(params):
    P = build_chain(params, constant_policy(params.n, params.m))
    power = stationary(P, method="power")
    direct = stationary(P, method="direct")
    assert power.method == "power"
    assert direct.method == "direct"
    assert np.max(np.abs(power.pi - direct.pi)) <= 100 * params.solve_tol


def test_stalled_power_iteration_falls_back(small_params):
    P = build_chain(small_params, constant_policy(small_params.n, small_params.m))
    pi = stationary(P, max_iter=1)
    assert pi.method == "direct"
    assert pi.residual <= small_params.solve_tol


def test_unknown_solver_is_rejected(small_params):
    P = build_chain(small_params, constant_policy(small_params.n, small_params.m))
    with pytest.raises(ParamError):
        stationary(P, method="eigen")


def test_two_state_symmetric_chain():
    P = TransitionMatrix(n=0, entries=[[0.7, 0.3], [0.3, 0.7]])
    assert list(stationary(P).pi) == pytest.approx([0.5, 0.5], abs=1e-12)


def test_matches_dense_eigenvector():
    params = ModelParams(n=10, m=3, p=0.25, lambda_e=1.0, lambda_s=3.0, lambda_=2.0)
    P = build_chain(params, constant_policy(10, 3))
    values, vectors = np.linalg.eig(P.entries.T)
    v = np.real(vectors[:, np.argmin(np.abs(values - 1.0))])
    v = v / v.sum()
    assert np.allclose(stationary(P).pi, v, atol=1e-9, rtol=0)


def test_frozen_chain_pairs_mirrored_states():
    params = ModelParams(n=8, m=2, p=0.3, lambda_e=1.0, lambda_s=0.0, lambda_=0.0)
    P = build_chain(params, constant_policy(8, 2))
    assert not P.is_ergodic()
    pi = stationary(P)
    half = params.n + 1
    assert np.allclose(pi.pi, 1.0 / (2 * half), atol=1e-12)
    for N in range(half):
        assert pi.pi[N] == pytest.approx(pi.pi[half + params.n - N], abs=1e-12)
    assert average_error(params, constant_policy(8, 2), pi) == pytest.approx(0.5, abs=1e-12)


def test_full_broadcast_drives_error_to_zero():
    params = ModelParams(n=6, m=6, p=0.3, lambda_e=1.0, lambda_s=1e6, lambda_=1.0)
    delta, _ = solve_delta(params, constant_policy(6, 6))
    assert 0.0 <= delta < 1e-4


def test_error_is_relabel_invariant(small_params):
    policy = constant_policy(small_params.n, small_params.m)
    delta, pi = solve_delta(small_params, policy)
    half = small_params.n + 1
    swapped = StationaryDist(np.concatenate([pi.pi[half:], pi.pi[:half]]))
    assert average_error(small_params, policy, swapped) == pytest.approx(delta, abs=1e-14)
    assert 0.0 <= delta <= 1.0


def test_no_gossip_baseline(small_params):
    policy = constant_policy(small_params.n, small_params.m)
    silent = with_overrides(small_params, lambda_=0.0)
    delta, _ = solve_delta(silent, policy)
    assert no_gossip_baseline(small_params, policy) == delta
    assert no_gossip_baseline(silent, policy) == delta


def test_more_source_updates_never_hurt_without_gossip():
    base = ModelParams(n=20, m=5, p=0.4, lambda_e=1.0, lambda_s=0.0, lambda_=0.0)
    policy = constant_policy(20, 5)
    deltas = [solve_delta(with_overrides(base, lambda_s=rate), policy)[0] for rate in (0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 50.0)]
    assert all(b <= a + 1e-12 for a, b in zip(deltas, deltas[1:]))


def test_policy_length_must_match(small_params):
    with pytest.raises(ParamError):
        end_count_laws(small_params, constant_policy(5, 2))


def test_adaptive_rows_use_their_own_capacity(small_params):
    policy = PolicyTable((3, 3, 2, 2, 1, 1, 0))
    laws = end_count_laws(small_params, policy)
    for N, cap in enumerate(policy.capacity):
        assert list(laws[N]) == pytest.approx(list(ndp_given_n_pmf(with_overrides(small_params, m=cap), N).weights))


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
