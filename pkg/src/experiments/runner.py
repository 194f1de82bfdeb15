import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List

import pandas as pd
from tqdm import tqdm

from src.analysis.approx import pt2_high_approx, pt2_high_limit, pt_low_approx
from src.analysis.policy import (adaptive_policy_table, expected_capacity, fit_through_origin, gain_at_capacity,
                                 gain_curve, m_star, round_half_away)
from src.chain.markov import constant_policy, no_gossip_baseline, solve_delta
from src.experiments import settings
from src.experiments.config import Scenario, ScenarioPoint, scenario_points
from src.model.cycle_law import adopt_prob
from src.model.errors import ParamError
from src.sim.montecarlo import estimate_replicas

logger = logging.getLogger(__name__)

CSV_FLOAT_FORMAT = "%.12g"


class ScenarioRunner:
    """Evaluates every point of a scenario on a worker pool and assembles the result table."""

    def __init__(self, scenario: Scenario, threads: int = None, progress: bool = False):
        self.scenario = scenario
        self.threads = max(1, threads or settings.THREADS)
        self.progress = progress
        self.seed = scenario.seed if scenario.seed is not None else settings.SEED

    def _policy(self, params):
        if self.scenario.policy_mode == "adaptive":
            return adaptive_policy_table(params)
        return constant_policy(params.n, params.m)

    def _error_row(self, params) -> Dict[str, float]:
        sc = self.scenario
        policy = self._policy(params)
        row = {}
        if sc.engine == "analytic":
            delta, pi = solve_delta(params, policy)
            row["delta"] = delta
            if sc.policy_mode == "adaptive":
                row["mean_capacity"] = expected_capacity(pi, policy)
        else:
            mode = sc.engine[:-len("-mc")]
            estimate = estimate_replicas(params, policy, mode, sc.cycles, sc.burn_in, self.seed, sc.replicas)
            row["mean_error"] = estimate.mean_error
            row["std_error"] = estimate.std_error
            row["cycles"] = estimate.cycles
        if sc.baseline:
            row["delta_ng"] = no_gossip_baseline(params, policy)
        return row

    def _adoption_high_row(self, params, N: int) -> Dict[str, float]:
        return {
            "pt2_exact": adopt_prob(params, N, False),
            "pt2_approx": pt2_high_approx(params, N),
            "pt2_limit": pt2_high_limit(params, N),
        }

    def _adoption_low_row(self, params, N: int) -> Dict[str, float]:
        return {
            "pt1_exact": adopt_prob(params, N, True) if N >= 1 else math.nan,
            "pt1_approx": pt_low_approx(params, N, True),
            "pt2_exact": adopt_prob(params, N, False),
            "pt2_approx": pt_low_approx(params, N, False),
        }

    def _gain_row(self, params) -> Dict[str, float]:
        curve = gain_curve(params, [params.m])
        row = curve.iloc[0].to_dict()
        del row["m"]
        return row

    def _mstar_row(self, params, N: int) -> Dict[str, float]:
        real, rounded = m_star(params, N)
        return {"m_star": real, "m_star_rounded": rounded, "gain_at_m_star": gain_at_capacity(params, N, real)}

    def _compare_row(self, params) -> Dict[str, float]:
        adaptive = adaptive_policy_table(params)
        delta_adaptive, pi = solve_delta(params, adaptive)
        mean_capacity = expected_capacity(pi, adaptive)
        # constant capacity matched to the adaptive policy's average use
        m_constant = min(params.n, round_half_away(mean_capacity))
        delta_constant, _ = solve_delta(params, constant_policy(params.n, m_constant))
        row = {
            "delta_adaptive": delta_adaptive,
            "mean_capacity": mean_capacity,
            "m_constant": m_constant,
            "delta_constant": delta_constant,
        }
        if self.scenario.baseline:
            row["delta_ng"] = no_gossip_baseline(params, adaptive)
        return row

    def evaluate(self, point: ScenarioPoint) -> Dict[str, float]:
        sc = self.scenario
        started = time.perf_counter()
        params = point.params

        if sc.report == "error":
            values = self._error_row(params)
        elif sc.report == "gain":
            values = self._gain_row(params)
        elif sc.report == "compare":
            values = self._compare_row(params)
        else:
            N = int(point.sweep_value)
            if sc.report == "adoption_high":
                values = self._adoption_high_row(params, N)
            elif sc.report == "adoption_low":
                values = self._adoption_low_row(params, N)
            elif sc.report == "mstar":
                values = self._mstar_row(params, N)
            else:
                raise ParamError(f"unknown report '{sc.report}'")

        row = {}
        if sc.series_axis:
            row[sc.series_axis] = point.series_value
        row[sc.sweep_axis] = point.sweep_value
        row.update(values)
        if sc.timing:
            row["wall_time"] = time.perf_counter() - started
        return row

    def _add_fit(self, frame: pd.DataFrame) -> pd.DataFrame:
        """Fitted B per series over the fit grid, and the scaled predictor it implies."""
        sc = self.scenario
        groups = frame.groupby(sc.series_axis, sort=False) if sc.series_axis else [(None, frame)]
        fitted = pd.Series(math.nan, index=frame.index)
        for _, group in groups:
            grid = group[group[sc.sweep_axis].isin(sc.fit_grid)] if sc.fit_grid else group
            fitted[group.index] = fit_through_origin(grid["predictor"], grid["gain"])
        frame["fitted_B"] = fitted
        frame["predicted_gain"] = fitted * frame["predictor"]
        return frame

    def run(self) -> pd.DataFrame:
        sc = self.scenario
        points = scenario_points(sc)
        logger.info(f"Scenario {sc.name}: {len(points)} points, report={sc.report}, engine={sc.engine}, threads={self.threads}")

        with ThreadPoolExecutor(max_workers=self.threads) as pool:
            rows = list(tqdm(pool.map(self.evaluate, points), total=len(points), desc=sc.name,
                             disable=not self.progress, leave=False))

        frame = pd.DataFrame(rows)
        if sc.report == "gain" and sc.sweep_axis == "m":
            frame = self._add_fit(frame)
        return frame


def run_scenario(scenario: Scenario, threads: int = None, progress: bool = False) -> pd.DataFrame:
    return ScenarioRunner(scenario, threads, progress).run()


def write_csv(frame: pd.DataFrame, path: str) -> str:
    folder = os.path.dirname(path)
    if folder:
        os.makedirs(folder, exist_ok=True)
    frame.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
    logger.info(f"Wrote {len(frame)} rows to {path}")
    return path


def output_path(scenario: Scenario, out_dir: str) -> str:
    if os.path.isabs(scenario.output):
        return scenario.output
    return os.path.join(out_dir, scenario.output)


def summarize(frame: pd.DataFrame, scenario: Scenario) -> List[str]:
    """Per-series one-line summaries for the console."""
    sc = scenario
    column = {"error": "delta" if sc.engine == "analytic" else "mean_error",
              "gain": "gain", "compare": "delta_adaptive"}.get(sc.report)
    if column is None or column not in frame:
        return []
    groups = frame.groupby(sc.series_axis, sort=False) if sc.series_axis else [(None, frame)]
    lines = []
    for key, group in groups:
        best = group.loc[group[column].idxmax() if sc.report == "gain" else group[column].idxmin()]
        label = f"{sc.series_axis}={key:g}: " if sc.series_axis else ""
        word = "max" if sc.report == "gain" else "min"
        lines.append(f"{label}{word} {column} {best[column]:.6f} at {sc.sweep_axis}={best[sc.sweep_axis]:g}")
    return lines
