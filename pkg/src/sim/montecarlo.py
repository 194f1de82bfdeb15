"""
Cycle-by-cycle simulation of the source/gossip network.

Two fidelity modes:
  paper-faithful  every gossiping node draws its own update count from the geometric
                  law, independently of the others
  event-driven    one exponential cycle length is shared by the whole network and each
                  node's gossip arrivals are a Poisson process over what is left of it
"""
import logging
import math
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from functools import reduce
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd

from src.chain.markov import PolicyTable
from src.model.errors import ParamError
from src.model.params import ModelParams, derived_ratios, validate_params

logger = logging.getLogger(__name__)

PAPER_FAITHFUL = "paper-faithful"
EVENT_DRIVEN = "event-driven"
MODES = (PAPER_FAITHFUL, EVENT_DRIVEN)

DEFAULT_BURN_IN = 1000
BATCH_COUNT = 32

TRACE_COLUMNS = ["cycle_index", "source_bit", "start_correct", "end_correct", "error"]


@dataclass(frozen=True)
class CycleState:
    source_bit: int
    node_bits: np.ndarray
    cycle_index: int = 0

    def __post_init__(self):
        if self.source_bit not in (0, 1):
            raise ParamError(f"source_bit must be 0 or 1, got {self.source_bit}")
        bits = np.array(self.node_bits, dtype=np.int8)
        if bits.ndim != 1 or bits.size < 2 or np.any((bits != 0) & (bits != 1)):
            raise ParamError("node_bits must be a vector of at least two 0/1 entries")
        bits.flags.writeable = False
        object.__setattr__(self, "node_bits", bits)

    @property
    def n(self) -> int:
        return self.node_bits.size

    @property
    def correct_count(self) -> int:
        return int(np.count_nonzero(self.node_bits == self.source_bit))


@dataclass(frozen=True)
class CycleRecord:
    cycle_index: int
    source_bit: int
    start_correct: int
    end_correct: int
    error: float


@dataclass(frozen=True)
class McEstimate:
    mean_error: float
    std_error: float
    cycles: int
    burn_in: int
    seed: int
    mode: str
    replicas: int = 1


def rng_stream(seed: int, purpose: str, replica: int = 0) -> np.random.Generator:
    """Named PCG64 stream; distinct (purpose, replica) pairs never share state."""
    key = (zlib.crc32(purpose.encode("utf-8")), int(replica))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=key)))


def start_state(n: int, correct: int, source_bit: int = 0) -> CycleState:
    """State whose first `correct` nodes hold the source bit."""
    if not 0 <= correct <= n:
        raise ParamError(f"correct out of [0, n] (correct={correct}, n={n})")
    bits = np.full(n, 1 - source_bit, dtype=np.int8)
    bits[:correct] = source_bit
    return CycleState(source_bit=source_bit, node_bits=bits)


class CycleKernel:
    """One update cycle for fixed params, policy and mode, working on raw bit arrays."""

    def __init__(self, params: ModelParams, policy: PolicyTable, mode: str = PAPER_FAITHFUL):
        validate_params(params)
        if policy.n != params.n:
            raise ParamError(f"policy length {policy.n + 1} != n + 1 = {params.n + 1}")
        if mode not in MODES:
            raise ParamError(f"unknown simulation mode '{mode}' (expected one of {', '.join(MODES)})")
        self.params = params
        self.policy = policy
        self.mode = mode
        ratios = derived_ratios(params)
        self.rho_s, self.rho_g, self.k_max = ratios.rho_s, ratios.rho_g, ratios.k_max

    def _phase_s(self, budget: int, rng: np.random.Generator) -> Tuple[int, float]:
        """Source updates delivered before the source changes, and the gossip time left."""
        if self.mode == PAPER_FAITHFUL:
            if budget == 0 or self.rho_s == 0:
                return 0, 0.0
            # wins before the first loss of the source-vs-change race
            return min(int(rng.geometric(1.0 - self.rho_s)) - 1, budget), 0.0

        cycle_length = rng.exponential(1.0 / self.params.lambda_e)
        if budget == 0:
            return 0, cycle_length
        if self.params.lambda_s == 0:
            return 0, 0.0
        sends = np.cumsum(rng.exponential(1.0 / self.params.lambda_s, size=budget))
        delivered = int(np.searchsorted(sends, cycle_length))
        return delivered, max(cycle_length - sends[-1], 0.0)

    def _gossip_counts(self, size: int, remaining: float, rng: np.random.Generator) -> np.ndarray:
        if self.mode == PAPER_FAITHFUL:
            if self.rho_g == 0:
                return np.zeros(size, dtype=np.int64)
            # tail beyond k_max carries at most tail_tol of mass
            return np.minimum(rng.geometric(1.0 - self.rho_g, size=size) - 1, self.k_max)
        return rng.poisson(self.params.lambda_ * remaining, size=size)

    def run(self, bits: np.ndarray, source_bit: int, rng: np.random.Generator) -> Tuple[np.ndarray, int, int]:
        """Returns (end bits, correct count at start, correct count at end)."""
        n = bits.size
        correct = bits == source_bit
        N = int(np.count_nonzero(correct))
        m = self.policy.capacity[N]
        budget = min(m, n - N)

        end = bits.copy()
        wrong = np.flatnonzero(~correct)
        delivered, remaining = self._phase_s(budget, rng)
        end[wrong[:delivered]] = source_bit

        if delivered == budget and N < n - m:
            receivers = np.ones(n, dtype=bool)
            receivers[wrong[:budget]] = False
            prior = correct[receivers]

            # sender identities are uniform over the other n - 1 nodes, so the number of
            # correct updates is binomial in the phase-start composition
            q = (N + m - prior.astype(np.int64)) / (n - 1)
            k = self._gossip_counts(prior.size, remaining, rng)
            r = rng.binomial(k, q)
            coin = rng.random(prior.size) < 0.5

            adopt = np.where(2 * r > k, True, np.where(2 * r < k, False, coin))
            adopt = np.where(k == 0, prior, adopt)
            end[receivers] = np.where(adopt, source_bit, 1 - source_bit)

        return end, N, int(np.count_nonzero(end == source_bit))


def step_cycle(state: CycleState, params: ModelParams, policy: PolicyTable, mode: str,
               rng: np.random.Generator) -> Tuple[CycleState, CycleRecord]:
    if state.n != params.n:
        raise ParamError(f"state has {state.n} nodes, params say n={params.n}")
    kernel = CycleKernel(params, policy, mode)
    end, start_correct, end_correct = kernel.run(state.node_bits, state.source_bit, rng)

    record = CycleRecord(
        cycle_index=state.cycle_index,
        source_bit=state.source_bit,
        start_correct=start_correct,
        end_correct=end_correct,
        error=(params.n - end_correct) / params.n,
    )
    next_bit = 1 - state.source_bit if rng.random() < params.p else state.source_bit
    return CycleState(source_bit=next_bit, node_bits=end, cycle_index=state.cycle_index + 1), record


def simulate_cycle(state: CycleState, params: ModelParams, policy: PolicyTable, mode: str,
                   rng: np.random.Generator) -> CycleState:
    return step_cycle(state, params, policy, mode, rng)[0]


def batch_means_se(samples: np.ndarray, batches: int = BATCH_COUNT) -> float:
    """Standard error of the sample mean from non-overlapping batch means."""
    batches = min(batches, samples.size)
    if batches < 2:
        return 0.0
    means = np.array([chunk.mean() for chunk in np.array_split(samples, batches)])
    return float(np.std(means, ddof=1) / math.sqrt(batches))


def write_trace(records: List[CycleRecord], trace_path: str):
    frame = pd.DataFrame([asdict(r) for r in records], columns=TRACE_COLUMNS)
    frame.to_csv(trace_path, index=False, float_format="%.12g", lineterminator="\n")


def estimate_error(params: ModelParams, policy: PolicyTable, mode: str = PAPER_FAITHFUL,
                   cycles: int = 100_000, burn_in: int = DEFAULT_BURN_IN, seed: int = 0,
                   replica: int = 0, trace_path: Optional[str] = None) -> McEstimate:
    """
    Long-run average error from one simulated trajectory.

    The network starts with every node correct; the first burn_in cycles are discarded.
    """
    if cycles < 1:
        raise ParamError("cycles must be ≥ 1")
    if burn_in < 0:
        raise ParamError("burn_in must be ≥ 0")
    kernel = CycleKernel(params, policy, mode)
    rng = rng_stream(seed, "cycles", replica)

    n, p = params.n, params.p
    bits = np.full(n, 0, dtype=np.int8)
    source_bit = 0
    errors = np.empty(cycles)
    records: List[CycleRecord] = []

    for j in range(burn_in + cycles):
        bits, start_correct, end_correct = kernel.run(bits, source_bit, rng)
        if j >= burn_in:
            errors[j - burn_in] = (n - end_correct) / n
            if trace_path is not None:
                records.append(CycleRecord(j, source_bit, start_correct, end_correct, errors[j - burn_in]))
        if rng.random() < p:
            source_bit = 1 - source_bit

    if trace_path is not None:
        write_trace(records, trace_path)
        logger.info(f"Trace of {len(records)} cycles written to {trace_path}")

    estimate = McEstimate(
        mean_error=min(1.0, max(0.0, float(errors.mean()))),
        std_error=batch_means_se(errors),
        cycles=cycles,
        burn_in=burn_in,
        seed=seed,
        mode=mode,
    )
    logger.debug(f"{mode} replica {replica}: error {estimate.mean_error:.6f} ± {estimate.std_error:.6f}")
    return estimate


def merge_estimates(a: McEstimate, b: McEstimate) -> McEstimate:
    """Cycle-weighted combination of two independent estimates."""
    if a.mode != b.mode:
        raise ParamError(f"cannot merge {a.mode} and {b.mode} estimates")
    total = a.cycles + b.cycles
    wa, wb = a.cycles / total, b.cycles / total
    return McEstimate(
        mean_error=wa * a.mean_error + wb * b.mean_error,
        std_error=math.sqrt((wa * a.std_error) ** 2 + (wb * b.std_error) ** 2),
        cycles=total,
        burn_in=a.burn_in,
        seed=a.seed,
        mode=a.mode,
        replicas=a.replicas + b.replicas,
    )


def estimate_replicas(params: ModelParams, policy: PolicyTable, mode: str = PAPER_FAITHFUL,
                      cycles: int = 100_000, burn_in: int = DEFAULT_BURN_IN, seed: int = 0,
                      replicas: int = 1, threads: int = 1) -> McEstimate:
    """Independent replicas on disjoint streams, merged in replica order."""
    if replicas < 1:
        raise ParamError("replicas must be ≥ 1")

    def one(replica: int) -> McEstimate:
        return estimate_error(params, policy, mode, cycles, burn_in, seed, replica=replica)

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        estimates = list(pool.map(one, range(replicas)))
    return reduce(merge_estimates, estimates)


def sample_end_counts(params: ModelParams, policy: PolicyTable, start_correct: int, cycles: int,
                      mode: str = PAPER_FAITHFUL, seed: int = 0) -> np.ndarray:
    """N'' from `cycles` independent single cycles that all start with start_correct correct nodes."""
    kernel = CycleKernel(params, policy, mode)
    rng = rng_stream(seed, f"end-counts-{start_correct}")
    bits = start_state(params.n, start_correct).node_bits
    out = np.empty(cycles, dtype=np.int64)
    for j in range(cycles):
        out[j] = kernel.run(bits, 0, rng)[2]
    return out


def mode_gap(params: ModelParams, policy: PolicyTable, cycles: int, burn_in: int = DEFAULT_BURN_IN,
             seed: int = 0, replicas: int = 1, threads: int = 1) -> Tuple[McEstimate, McEstimate]:
    """Both modes on the same point; the difference measures the shared-duration correlation."""
    faithful = estimate_replicas(params, policy, PAPER_FAITHFUL, cycles, burn_in, seed, replicas, threads)
    driven = estimate_replicas(params, policy, EVENT_DRIVEN, cycles, burn_in, seed, replicas, threads)
    return faithful, driven
