import math
from dataclasses import dataclass, fields, replace
from typing import Tuple

from src.model.errors import ParamError


@dataclass(frozen=True)
class ModelParams:
    """All rates and counts of the source/gossip model.

    n nodes, source capacity m, source flip probability p, source change rate
    lambda_e, source transmission rate lambda_s and per-node gossip rate lambda_.
    """
    n: int
    m: int
    p: float
    lambda_e: float
    lambda_s: float
    lambda_: float
    tail_tol: float = 1e-12
    solve_tol: float = 1e-12


@dataclass(frozen=True)
class DerivedRatios:
    rho_s: float  # source wins the race against a source change
    rho_g: float  # a gossip arrival precedes the source change
    k_max: int    # truncation depth for K_i sums


def _is_int(value) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def check_params(raw: ModelParams) -> Tuple[bool, str]:
    """
    Checks every ModelParams invariant in a fixed order.
    Returns (is_valid, reason) with the first violated invariant as the reason.
    """
    if not _is_int(raw.n):
        return False, "n must be an integer"
    if raw.n < 2:
        return False, "n ≥ 2 required"
    if not _is_int(raw.m):
        return False, "m must be an integer"
    if not 0 <= raw.m <= raw.n:
        return False, f"m out of [0, n] (m={raw.m}, n={raw.n})"
    if not 0.0 < raw.p < 1.0:
        return False, "p out of (0,1)"

    for name in ("lambda_e", "lambda_s", "lambda_"):
        value = getattr(raw, name)
        if not math.isfinite(value):
            return False, f"{name} must be finite"
    if raw.lambda_e <= 0:
        return False, "lambda_e must be > 0"
    if raw.lambda_s < 0:
        return False, "lambda_s must be ≥ 0"
    if raw.lambda_ < 0:
        return False, "lambda must be ≥ 0"

    if not 0.0 < raw.tail_tol < 1.0:
        return False, "tail_tol out of (0,1)"
    if not 0.0 < raw.solve_tol < 1.0:
        return False, "solve_tol out of (0,1)"

    return True, "Params Approved"


def validate_params(raw: ModelParams) -> ModelParams:
    ok, reason = check_params(raw)
    if not ok:
        raise ParamError(reason)
    return raw


def with_overrides(params: ModelParams, **changes) -> ModelParams:
    """Validated copy of params with the given fields replaced."""
    known = {f.name for f in fields(ModelParams)}
    unknown = set(changes) - known
    if unknown:
        raise ParamError(f"unknown parameter(s): {', '.join(sorted(unknown))}")
    return validate_params(replace(params, **changes))


def derived_ratios(params: ModelParams) -> DerivedRatios:
    rho_s = params.lambda_s / (params.lambda_s + params.lambda_e)
    rho_g = params.lambda_ / (params.lambda_ + params.lambda_e)

    k_max = 0
    if 0.0 < rho_g < 1.0:
        k_max = max(0, math.ceil(math.log(params.tail_tol) / math.log(rho_g)))
        # guard the float boundary so the dropped tail really is below tail_tol
        while rho_g ** (k_max + 1) > params.tail_tol:
            k_max += 1

    return DerivedRatios(rho_s=rho_s, rho_g=rho_g, k_max=k_max)
