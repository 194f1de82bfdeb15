"""Markov chain over (x_s, N) and its long-term average error.

State (x, N) sits at index x * (n + 1) + N, so the first n + 1 states are
(0, 0) ... (0, n) and the last n + 1 are (1, 0) ... (1, n).
"""
import logging
from dataclasses import dataclass, replace
from typing import Sequence, Tuple

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from src.model.cycle_law import ndp_given_n_pmf
from src.model.errors import ConvergenceError, ParamError
from src.model.params import ModelParams, validate_params

logger = logging.getLogger(__name__)

POWER_ITERATION_CAP = 10 ** 6


def _frozen(array) -> np.ndarray:
    array = np.array(array, dtype=float)
    array.flags.writeable = False
    return array


@dataclass(frozen=True)
class PolicyTable:
    """capacity[N] is the source capacity m used in a cycle that starts with N correct nodes."""
    capacity: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "capacity", tuple(int(c) for c in self.capacity))
        n = len(self.capacity) - 1
        for N, cap in enumerate(self.capacity):
            if not 0 <= cap <= n - N:
                raise ParamError(f"capacity[{N}]={cap} out of [0, {n - N}]")

    @property
    def n(self) -> int:
        return len(self.capacity) - 1


def constant_policy(n: int, m: int) -> PolicyTable:
    """Constant capacity m, capped by the n - N nodes that can still be wrong."""
    if not 0 <= m <= n:
        raise ParamError(f"m out of [0, n] (m={m}, n={n})")
    return PolicyTable(tuple(min(m, n - N) for N in range(n + 1)))


@dataclass(frozen=True)
class TransitionMatrix:
    n: int
    entries: np.ndarray
    tail_tol: float = 1e-12
    solve_tol: float = 1e-12

    def __post_init__(self):
        entries = _frozen(self.entries)
        size = 2 * (self.n + 1)
        if entries.shape != (size, size):
            raise ParamError(f"transition matrix must be {size}x{size}, got {entries.shape}")
        object.__setattr__(self, "entries", entries)

    @property
    def size(self) -> int:
        return 2 * (self.n + 1)

    def row_sums(self) -> np.ndarray:
        return self.entries.sum(axis=1)

    def is_row_stochastic(self, tol: float = None) -> bool:
        tol = 10 * self.tail_tol if tol is None else tol
        return bool(np.all(self.entries >= 0) and np.all(np.abs(self.row_sums() - 1.0) <= tol))

    def has_bit_flip_symmetry(self, tol: float = 0.0) -> bool:
        half = self.n + 1
        flipped = np.roll(np.roll(self.entries, half, axis=0), half, axis=1)
        return bool(np.max(np.abs(self.entries - flipped)) <= tol)

    def is_ergodic(self) -> bool:
        """Positive diagonal (aperiodic) and one strongly connected component (irreducible)."""
        if np.any(np.diag(self.entries) <= 0):
            return False
        count, _ = connected_components(csr_matrix(self.entries > 0), directed=True, connection="strong")
        return count == 1


@dataclass(frozen=True)
class StationaryDist:
    pi: np.ndarray
    method: str = "power"
    iterations: int = 0
    residual: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "pi", _frozen(self.pi))

    @property
    def n(self) -> int:
        return self.pi.size // 2 - 1

    def by_count(self) -> np.ndarray:
        """pi_{0,N} + pi_{1,N} for N = 0..n."""
        half = self.n + 1
        return self.pi[:half] + self.pi[half:]


def _check_policy(params: ModelParams, policy: PolicyTable):
    if len(policy.capacity) != params.n + 1:
        raise ParamError(f"policy length {len(policy.capacity)} != n + 1 = {params.n + 1}")


def end_count_laws(params: ModelParams, policy: PolicyTable) -> np.ndarray:
    """Row N is the law of N'' for a cycle starting at N under capacity[N]."""
    validate_params(params)
    _check_policy(params, policy)
    n = params.n
    laws = np.zeros((n + 1, n + 1))
    for N in range(n + 1):
        row_params = params if policy.capacity[N] == params.m else replace(params, m=policy.capacity[N])
        laws[N] = ndp_given_n_pmf(row_params, N).weights
    return laws


def build_chain(params: ModelParams, policy: PolicyTable) -> TransitionMatrix:
    laws = end_count_laws(params, policy)
    n, p = params.n, params.p
    half = n + 1

    entries = np.zeros((2 * half, 2 * half))
    # a source flip relabels the end count N'' as n - N'' under the new bit
    keep, flip = (1.0 - p) * laws, p * laws[:, ::-1]
    entries[:half, :half] = keep
    entries[half:, half:] = keep
    entries[:half, half:] = flip
    entries[half:, :half] = flip

    return TransitionMatrix(n=n, entries=entries, tail_tol=params.tail_tol, solve_tol=params.solve_tol)


def _power_iteration(P: np.ndarray, tol: float, cap: int) -> Tuple[np.ndarray, int, float]:
    pi = np.full(P.shape[0], 1.0 / P.shape[0])
    residual = np.inf
    for iteration in range(1, cap + 1):
        nxt = pi @ P
        residual = float(np.max(np.abs(nxt - pi)))
        # a decade of headroom so the renormalized vector still meets tol
        if residual <= 0.1 * tol:
            return pi / pi.sum(), iteration, residual
        pi = nxt
    return pi / pi.sum(), cap, residual


def _direct_solve(P: np.ndarray) -> np.ndarray:
    size = P.shape[0]
    A = P.T - np.eye(size)
    A[-1, :] = 1.0
    b = np.zeros(size)
    b[-1] = 1.0
    pi = np.linalg.solve(A, b)
    pi = np.maximum(pi, 0.0)
    return pi / pi.sum()


def _residual(pi: np.ndarray, P: np.ndarray) -> float:
    return float(np.max(np.abs(pi @ P - pi)))


def stationary(P: TransitionMatrix, method: str = "power", max_iter: int = POWER_ITERATION_CAP) -> StationaryDist:
    """
    Solve pi = pi P.

    method="power" iterates from the uniform vector and falls back to the direct solve
    when the residual is still above solve_tol after max_iter steps; method="direct"
    solves the linear system with the normalization row directly.
    """
    tol = P.solve_tol
    entries = P.entries

    if method == "power":
        pi, iterations, residual = _power_iteration(entries, tol, max_iter)
        if residual <= tol:
            logger.debug(f"stationary: power iteration converged in {iterations} steps (residual {residual:.2e})")
            return StationaryDist(pi, method="power", iterations=iterations, residual=_residual(pi, entries))
        logger.warning(f"stationary: power iteration stalled at residual {residual:.2e}; using direct solve")
    elif method != "direct":
        raise ParamError(f"unknown stationary method '{method}'")

    try:
        pi = _direct_solve(entries)
    except np.linalg.LinAlgError as e:
        raise ConvergenceError(f"direct stationary solve failed: {e}", residual=np.inf)
    residual = _residual(pi, entries)
    if residual > tol:
        raise ConvergenceError("stationary distribution did not reach solve_tol", residual=residual)
    logger.debug(f"stationary: direct solve residual {residual:.2e}")
    return StationaryDist(pi, method="direct", iterations=0, residual=residual)


def average_error(params: ModelParams, policy: PolicyTable, pi: StationaryDist) -> float:
    """Long-term fraction of nodes whose end-of-cycle bit differs from the source."""
    laws = end_count_laws(params, policy)
    if pi.pi.size != 2 * (params.n + 1):
        raise ParamError("stationary distribution does not match n")
    n = params.n
    wrong_fraction = (n - np.arange(n + 1)) / n
    delta = float(pi.by_count() @ (laws @ wrong_fraction))
    return min(1.0, max(0.0, delta))


def solve_delta(params: ModelParams, policy: PolicyTable, method: str = "power") -> Tuple[float, StationaryDist]:
    pi = stationary(build_chain(params, policy), method=method)
    return average_error(params, policy, pi), pi


def no_gossip_baseline(params: ModelParams, policy: PolicyTable) -> float:
    """Average error of the same system with the gossip rate forced to 0."""
    delta, _ = solve_delta(replace(params, lambda_=0.0), policy)
    return delta
