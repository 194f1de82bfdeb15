"""
Scenario definitions and the INI scenario-file reader.

    [scenario]   name, description, report, sweep_axis, sweep_values, series_axis,
                 series_values, policy, engine, baseline, timing, fit_grid, output
    [params]     n, m, p, lambda_e, lambda_s, lambda, tail_tol, solve_tol
    [scaling]    m_per_n, lambda_s_per_n
    [montecarlo] cycles, burn_in, seed, replicas

List values accept comma-separated numbers, inclusive ranges `a..b` and `a..b..step`,
and `logspace(a, b, k)`.
"""
import configparser
import math
import re
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from src.analysis.policy import round_half_away
from src.model.errors import ConfigError, ParamError
from src.model.params import ModelParams, with_overrides

REPORTS = ("error", "adoption_high", "adoption_low", "gain", "mstar", "compare")
ENGINES = ("analytic", "paper-faithful-mc", "event-driven-mc")
POLICIES = ("constant", "adaptive")

# axis name -> ModelParams field
PARAM_AXES = {"m": "m", "n": "n", "p": "p", "lambda": "lambda_", "lambda_s": "lambda_s", "lambda_e": "lambda_e"}
SWEEP_AXES = tuple(PARAM_AXES) + ("N",)
SERIES_AXES = tuple(PARAM_AXES) + ("m_per_n", "lambda_s_per_n", "scale")
INTEGER_AXES = {"m", "n", "N"}
N_AXIS_REPORTS = {"adoption_high", "adoption_low", "mstar"}

SCHEMA = {
    "scenario": ("name", "description", "report", "sweep_axis", "sweep_values", "series_axis",
                 "series_values", "policy", "engine", "baseline", "timing", "fit_grid", "output"),
    "params": ("n", "m", "p", "lambda_e", "lambda_s", "lambda", "tail_tol", "solve_tol"),
    "scaling": ("m_per_n", "lambda_s_per_n"),
    "montecarlo": ("cycles", "burn_in", "seed", "replicas"),
}
REQUIRED = {
    "scenario": ("sweep_axis", "sweep_values"),
    "params": ("n", "m", "p", "lambda_e", "lambda_s", "lambda"),
}

_TOKEN = re.compile(r"\s*logspace\([^)]*\)|[^,]+")
_LOGSPACE = re.compile(r"logspace\(\s*([^,]+),\s*([^,]+),\s*([^,)]+)\)$")


@dataclass(frozen=True)
class Scenario:
    base: ModelParams
    sweep_axis: str
    sweep_values: Tuple[float, ...]
    name: str = "scenario"
    description: str = ""
    report: str = "error"
    series_axis: Optional[str] = None
    series_values: Tuple[float, ...] = ()
    policy_mode: str = "constant"
    engine: str = "analytic"
    baseline: bool = False
    timing: bool = False
    m_per_n: Optional[float] = None
    lambda_s_per_n: Optional[float] = None
    fit_grid: Tuple[int, ...] = ()
    cycles: int = 100_000
    burn_in: int = 1000
    seed: Optional[int] = None
    replicas: int = 1
    output_path: str = ""

    @property
    def output(self) -> str:
        return self.output_path or f"{self.name}.csv"

    @property
    def series(self) -> Tuple[Optional[float], ...]:
        return self.series_values if self.series_axis else (None,)


@dataclass(frozen=True)
class ScenarioPoint:
    series_value: Optional[float]
    sweep_value: float
    params: ModelParams


def _number(token: str):
    token = token.strip()
    try:
        value = float(token)
    except ValueError:
        raise ValueError(f"'{token}' is not a number")
    if not math.isfinite(value):
        raise ValueError(f"'{token}' is not finite")
    if re.fullmatch(r"[+-]?\d+", token):
        return int(token)
    return value


def _sig6(value: float) -> float:
    return float(f"{value:.6g}")


def parse_values(text: str) -> Tuple[float, ...]:
    """Sorted, de-duplicated values of a list expression."""
    values = []
    for token in _TOKEN.findall(text):
        token = token.strip()
        if not token:
            continue
        match = _LOGSPACE.match(token)
        if match:
            lo, hi, count = (_number(g) for g in match.groups())
            if lo <= 0 or hi <= 0 or not isinstance(count, int) or count < 1:
                raise ValueError(f"bad logspace '{token}'")
            values.extend(_sig6(v) for v in np.logspace(math.log10(lo), math.log10(hi), count))
        elif ".." in token:
            parts = [_number(t) for t in token.split("..")]
            if len(parts) not in (2, 3):
                raise ValueError(f"bad range '{token}'")
            lo, hi = parts[0], parts[1]
            step = parts[2] if len(parts) == 3 else 1
            if step <= 0 or hi < lo:
                raise ValueError(f"bad range '{token}'")
            count = int(math.floor((hi - lo) / step + 1e-9)) + 1
            exact = all(isinstance(v, int) for v in (lo, hi, step))
            values.extend(lo + i * step if exact else float(f"{lo + i * step:.12g}") for i in range(count))
        else:
            values.append(_number(token))
    if not values:
        raise ValueError("empty value list")
    return tuple(sorted(set(values)))


def format_values(values) -> str:
    return ",".join(f"{v:.12g}" if isinstance(v, float) else str(v) for v in values)


def _bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"'{text}' is not a boolean")


def _int_value(text: str) -> int:
    value = _number(text)
    if not isinstance(value, int):
        raise ValueError(f"'{text}' is not an integer")
    return value


def _integral_axis(axis: str, values: Tuple[float, ...]) -> Tuple[float, ...]:
    if axis not in INTEGER_AXES:
        return values
    for v in values:
        if float(v) != int(v):
            raise ValueError(f"axis '{axis}' takes integers, got {v}")
    return tuple(int(v) for v in values)


def _no_line(section: str, key: str) -> Optional[int]:
    return None


def scenario_from_sections(sections: Dict[str, Dict[str, str]], locate: Callable = _no_line,
                           path: str = None) -> Scenario:
    """Builds and validates a Scenario from string-valued sections."""
    def fail(message, section=None, key=None):
        line = locate(section, key) if section else None
        raise ConfigError(message, line=line, path=path)

    for section, keys in sections.items():
        if section not in SCHEMA:
            fail(f"unknown section [{section}]", section, None)
        for key in keys:
            if key not in SCHEMA[section]:
                fail(f"unknown key '{key}' in [{section}]", section, key)
    for section, keys in REQUIRED.items():
        for key in keys:
            if key not in sections.get(section, {}):
                fail(f"missing required key '{key}' in [{section}]")

    def get(section, key, convert, default=None):
        raw = sections.get(section, {}).get(key)
        if raw is None or raw.strip() == "":
            return default
        try:
            return convert(raw)
        except ValueError as e:
            fail(f"[{section}] {key}: {e}", section, key)

    base = ModelParams(
        n=get("params", "n", _int_value),
        m=get("params", "m", _int_value),
        p=get("params", "p", float),
        lambda_e=get("params", "lambda_e", float),
        lambda_s=get("params", "lambda_s", float),
        lambda_=get("params", "lambda", float),
        tail_tol=get("params", "tail_tol", float, 1e-12),
        solve_tol=get("params", "solve_tol", float, 1e-12),
    )

    def choice(section, key, options, default):
        value = get(section, key, str.strip, default)
        if value not in options:
            fail(f"[{section}] {key}: '{value}' not one of {', '.join(o for o in options if o)}", section, key)
        return value

    report = choice("scenario", "report", REPORTS, "error")
    sweep_axis = choice("scenario", "sweep_axis", SWEEP_AXES, None)
    series_axis = choice("scenario", "series_axis", SERIES_AXES + (None,), None)

    sweep_values = get("scenario", "sweep_values", lambda t: _integral_axis(sweep_axis, parse_values(t)))
    if not sweep_values:
        fail("sweep_values must be nonempty", "scenario", "sweep_values")
    series_values = ()
    if series_axis:
        series_values = get("scenario", "series_values", lambda t: _integral_axis(series_axis, parse_values(t)), ())
        if not series_values:
            fail("series_axis needs series_values", "scenario", "series_axis")

    if (sweep_axis == "N") != (report in N_AXIS_REPORTS):
        fail(f"report '{report}' cannot sweep axis '{sweep_axis}'", "scenario", "sweep_axis")

    engine = choice("scenario", "engine", ENGINES, "analytic")
    if engine != "analytic" and report != "error":
        fail(f"engine '{engine}' only supports report 'error'", "scenario", "engine")

    scenario = Scenario(
        base=base,
        sweep_axis=sweep_axis,
        sweep_values=sweep_values,
        name=get("scenario", "name", str.strip, "scenario"),
        description=get("scenario", "description", str.strip, ""),
        report=report,
        series_axis=series_axis,
        series_values=series_values,
        policy_mode=choice("scenario", "policy", POLICIES, "constant"),
        engine=engine,
        baseline=get("scenario", "baseline", _bool, False),
        timing=get("scenario", "timing", _bool, False),
        m_per_n=get("scaling", "m_per_n", float),
        lambda_s_per_n=get("scaling", "lambda_s_per_n", float),
        fit_grid=get("scenario", "fit_grid", lambda t: _integral_axis("m", parse_values(t)), ()),
        cycles=get("montecarlo", "cycles", _int_value, 100_000),
        burn_in=get("montecarlo", "burn_in", _int_value, 1000),
        seed=get("montecarlo", "seed", _int_value),
        replicas=get("montecarlo", "replicas", _int_value, 1),
        output_path=get("scenario", "output", str.strip, ""),
    )

    if scenario.cycles < 1 or scenario.burn_in < 0 or scenario.replicas < 1:
        fail("montecarlo needs cycles ≥ 1, burn_in ≥ 0, replicas ≥ 1", "montecarlo", "cycles")
    try:
        scenario_points(scenario)
    except ParamError as e:
        fail(f"invalid sweep point: {e}", "scenario", "sweep_values")
    return scenario


def _locator(lines: List[str]) -> Callable:
    def locate(section: str, key: Optional[str]) -> Optional[int]:
        current = None
        for number, line in enumerate(lines, start=1):
            stripped = line.strip()
            if stripped.startswith("[") and stripped.endswith("]"):
                current = stripped[1:-1].strip()
                if key is None and current == section:
                    return number
            elif current == section and key is not None and re.match(rf"{re.escape(key)}\s*[=:]", stripped):
                return number
        return None
    return locate


def load_scenario(path: str) -> Scenario:
    try:
        with open(path, encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        raise ConfigError(f"cannot read scenario file: {e.strerror}", path=path)

    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text, source=path)
    except (configparser.DuplicateOptionError, configparser.DuplicateSectionError) as e:
        raise ConfigError(e.message.split(": ", 1)[-1], line=e.lineno, path=path)
    except configparser.MissingSectionHeaderError as e:
        raise ConfigError("key outside of any [section]", line=e.lineno, path=path)
    except configparser.ParsingError as e:
        line = e.errors[0][0] if e.errors else None
        raise ConfigError("malformed line", line=line, path=path)

    sections = {name: dict(parser[name]) for name in parser.sections()}
    return scenario_from_sections(sections, _locator(text.splitlines()), path)


def scenario_to_sections(scenario: Scenario) -> Dict[str, Dict[str, str]]:
    """Inverse of scenario_from_sections, used to apply key=value overrides."""
    b = scenario.base
    sections = {
        "scenario": {
            "name": scenario.name,
            "description": scenario.description,
            "report": scenario.report,
            "sweep_axis": scenario.sweep_axis,
            "sweep_values": format_values(scenario.sweep_values),
            "policy": scenario.policy_mode,
            "engine": scenario.engine,
            "baseline": str(scenario.baseline).lower(),
            "timing": str(scenario.timing).lower(),
            "output": scenario.output_path,
        },
        "params": {
            "n": str(b.n), "m": str(b.m), "p": repr(b.p), "lambda_e": repr(b.lambda_e),
            "lambda_s": repr(b.lambda_s), "lambda": repr(b.lambda_),
            "tail_tol": repr(b.tail_tol), "solve_tol": repr(b.solve_tol),
        },
        "scaling": {},
        "montecarlo": {
            "cycles": str(scenario.cycles), "burn_in": str(scenario.burn_in),
            "replicas": str(scenario.replicas),
        },
    }
    if scenario.series_axis:
        sections["scenario"]["series_axis"] = scenario.series_axis
        sections["scenario"]["series_values"] = format_values(scenario.series_values)
    if scenario.fit_grid:
        sections["scenario"]["fit_grid"] = format_values(scenario.fit_grid)
    if scenario.m_per_n is not None:
        sections["scaling"]["m_per_n"] = repr(scenario.m_per_n)
    if scenario.lambda_s_per_n is not None:
        sections["scaling"]["lambda_s_per_n"] = repr(scenario.lambda_s_per_n)
    if scenario.seed is not None:
        sections["montecarlo"]["seed"] = str(scenario.seed)
    return sections


def with_settings(scenario: Scenario, assignments: List[str]) -> Scenario:
    """Applies `section.key=value` (or bare `key=value` for unique keys) assignments."""
    sections = scenario_to_sections(scenario)
    for assignment in assignments:
        if "=" not in assignment:
            raise ConfigError(f"override '{assignment}' is not key=value")
        key, value = (s.strip() for s in assignment.split("=", 1))
        if "." in key:
            section, key = key.split(".", 1)
        else:
            owners = [s for s, keys in SCHEMA.items() if key in keys]
            if len(owners) != 1:
                raise ConfigError(f"override key '{key}' is unknown or ambiguous; use section.key")
            section = owners[0]
        if section not in SCHEMA or key not in SCHEMA[section]:
            raise ConfigError(f"unknown override '{section}.{key}'")
        sections[section][key] = value
    return scenario_from_sections(sections)


def scenario_points(scenario: Scenario) -> List[ScenarioPoint]:
    """Every (series, sweep) point in output order, each with validated params."""
    points = []
    for series_value in scenario.series:
        for sweep_value in scenario.sweep_values:
            changes = {}
            fractions = {"m_per_n": scenario.m_per_n, "lambda_s_per_n": scenario.lambda_s_per_n}

            for axis, value in ((scenario.series_axis, series_value), (scenario.sweep_axis, sweep_value)):
                if axis is None or axis == "N":
                    continue
                if axis == "scale":
                    fractions = {"m_per_n": value, "lambda_s_per_n": value}
                elif axis in fractions:
                    fractions[axis] = value
                else:
                    changes[PARAM_AXES[axis]] = value

            n = changes.get("n", scenario.base.n)
            if fractions["m_per_n"] is not None:
                changes["m"] = min(n, round_half_away(fractions["m_per_n"] * n))
            if fractions["lambda_s_per_n"] is not None:
                changes["lambda_s"] = fractions["lambda_s_per_n"] * n
            if "m" in changes:
                changes["m"] = int(changes["m"])
            if "n" in changes:
                changes["n"] = int(changes["n"])

            points.append(ScenarioPoint(series_value, sweep_value, with_overrides(scenario.base, **changes)))
    return points
