"""
Command-line entry point.

    python -m src.main run scenario.ini
    python -m src.main preset fig2 --set params.lambda_s=20
    python -m src.main presets
    python -m src.main simulate --n 20 --m 5 --mode both --cycles 100000
    python -m src.main compare-policy --lambda-s-grid "logspace(1, 200, 10)"

Exit codes: 0 success, 2 config/parameter error, 3 output error, 4 non-convergence.
"""
import argparse
import os
import sys
from dataclasses import replace
from typing import List, Optional

import pandas as pd

from src.analysis.policy import adaptive_policy_table
from src.chain.markov import constant_policy, solve_delta
from src.experiments import settings
from src.experiments.config import Scenario, load_scenario, parse_values, with_settings
from src.experiments.logs import failure, header, setup_logging, success, warning
from src.experiments.presets import figure_presets, get_preset
from src.experiments.runner import output_path, run_scenario, summarize, write_csv
from src.model.errors import ConfigError, ConvergenceError, DegenerateFitError, ParamError
from src.model.params import ModelParams, validate_params
from src.sim.montecarlo import EVENT_DRIVEN, MODES, PAPER_FAITHFUL, estimate_error, estimate_replicas, mode_gap

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_CONVERGENCE = 4


def _add_param_flags(parser: argparse.ArgumentParser):
    group = parser.add_argument_group("model parameters")
    group.add_argument("--n", type=int, default=20, help="receiver nodes")
    group.add_argument("--m", type=int, default=5, help="source transmission capacity")
    group.add_argument("--p", type=float, default=0.4, help="source flip probability")
    group.add_argument("--lambda-e", dest="lambda_e", type=float, default=1.0, help="source change rate")
    group.add_argument("--lambda-s", dest="lambda_s", type=float, default=10.0, help="source transmission rate")
    group.add_argument("--lambda", dest="lambda_", type=float, default=10.0, help="per-node gossip rate")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gossip-age", description="Source/gossip dissemination experiments")
    parser.add_argument("--seed", type=int, default=None, help=f"RNG seed (default GOSSIP_SEED or {settings.SEED})")
    parser.add_argument("--out", default=settings.OUT_DIR, help="output directory for CSV files")
    parser.add_argument("--threads", type=int, default=settings.THREADS, help="worker threads")
    parser.add_argument("--log-level", default=settings.LOG_LEVEL, help="DEBUG, INFO, WARNING, ...")
    parser.add_argument("--quiet", action="store_true", help="no progress bars, warnings only on the console")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario file")
    run.add_argument("config", help="INI scenario file")

    preset = sub.add_parser("preset", help="run a named figure preset")
    preset.add_argument("name")
    preset.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="override a scenario setting, e.g. params.lambda_s=20 (repeatable)")

    sub.add_parser("presets", help="list the figure presets")

    simulate = sub.add_parser("simulate", help="Monte-Carlo estimate at one parameter point")
    _add_param_flags(simulate)
    simulate.add_argument("--policy", choices=["constant", "adaptive"], default="constant")
    simulate.add_argument("--mode", choices=list(MODES) + ["both"], default=PAPER_FAITHFUL,
                          help="'both' also reports the gap to the analytic error")
    simulate.add_argument("--cycles", type=int, default=100_000)
    simulate.add_argument("--burn-in", dest="burn_in", type=int, default=1000)
    simulate.add_argument("--replicas", type=int, default=1)
    simulate.add_argument("--trace", default=None, help="per-cycle trace CSV (single replica only)")

    compare = sub.add_parser("compare-policy", help="adaptive m*(N) policy vs the matched constant policy")
    _add_param_flags(compare)
    compare.add_argument("--lambda-s-grid", dest="lambda_s_grid", default=None,
                         help="list expression of source rates; default is --lambda-s alone")
    return parser


class ExperimentCLI:
    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.logger = setup_logging(args.log_level, settings.LOG_DIR, quiet=args.quiet)

    def _params(self) -> ModelParams:
        a = self.args
        return validate_params(ModelParams(n=a.n, m=a.m, p=a.p, lambda_e=a.lambda_e,
                                           lambda_s=a.lambda_s, lambda_=a.lambda_))

    def _seed(self, scenario_seed: Optional[int] = None) -> int:
        if self.args.seed is not None:
            return self.args.seed
        return scenario_seed if scenario_seed is not None else settings.SEED

    def _execute(self, scenario: Scenario) -> int:
        scenario = replace(scenario, seed=self._seed(scenario.seed))
        self.logger.info(header(f"=== {scenario.name}: {scenario.description or scenario.report} ==="))
        frame = run_scenario(scenario, threads=self.args.threads, progress=not self.args.quiet)
        path = write_csv(frame, output_path(scenario, self.args.out))
        for line in summarize(frame, scenario):
            self.logger.info(f"  {line}")
        self.logger.info(success(f"Saved {path}"))
        return EXIT_OK

    def cmd_run(self) -> int:
        return self._execute(load_scenario(self.args.config))

    def cmd_preset(self) -> int:
        scenario = get_preset(self.args.name)
        if self.args.overrides:
            scenario = with_settings(scenario, self.args.overrides)
        return self._execute(scenario)

    def cmd_presets(self) -> int:
        for scenario in figure_presets():
            self.logger.info(f"{header(scenario.name):<20} {scenario.description}")
        return EXIT_OK

    def cmd_simulate(self) -> int:
        a = self.args
        params = self._params()
        policy = adaptive_policy_table(params) if a.policy == "adaptive" else constant_policy(params.n, params.m)
        if a.trace and a.replicas != 1:
            raise ConfigError("--trace needs --replicas 1")
        if a.trace and a.mode == "both":
            raise ConfigError("--trace needs a single --mode")
        seed = self._seed()

        if a.mode == "both":
            estimates = mode_gap(params, policy, a.cycles, a.burn_in, seed, a.replicas, a.threads)
        elif a.trace:
            estimates = (estimate_error(params, policy, a.mode, a.cycles, a.burn_in, seed, trace_path=a.trace),)
        else:
            estimates = (estimate_replicas(params, policy, a.mode, a.cycles, a.burn_in, seed, a.replicas, a.threads),)

        rows = []
        for estimate in estimates:
            rows.append({"mode": estimate.mode, "mean_error": estimate.mean_error, "std_error": estimate.std_error,
                         "cycles": estimate.cycles, "replicas": estimate.replicas})
            self.logger.info(f"{estimate.mode:>15}: error {estimate.mean_error:.6f} ± {estimate.std_error:.6f}")

        frame = pd.DataFrame(rows)
        if a.mode == "both":
            delta, _ = solve_delta(params, policy)
            frame["analytic_delta"] = delta
            frame["gap"] = frame["mean_error"] - delta
            self.logger.info(f"{'analytic':>15}: error {delta:.6f}")
            gap = float(frame.loc[frame["mode"] == EVENT_DRIVEN, "gap"].iloc[0])
            self.logger.info(warning(f"event-driven minus analytic: {gap:+.6f}"))

        path = write_csv(frame, os.path.join(a.out, "simulate.csv"))
        self.logger.info(success(f"Saved {path}"))
        return EXIT_OK

    def cmd_compare_policy(self) -> int:
        a = self.args
        params = self._params()
        grid = parse_values(a.lambda_s_grid) if a.lambda_s_grid else (a.lambda_s,)
        scenario = Scenario(base=params, sweep_axis="lambda_s", sweep_values=grid, name="compare_policy",
                            description="adaptive vs constant capacity", report="compare")
        return self._execute(scenario)

    def run(self) -> int:
        handlers = {
            "run": self.cmd_run,
            "preset": self.cmd_preset,
            "presets": self.cmd_presets,
            "simulate": self.cmd_simulate,
            "compare-policy": self.cmd_compare_policy,
        }
        return handlers[self.args.command]()


def main(argv: List[str] = None) -> int:
    args = build_parser().parse_args(argv)
    cli = ExperimentCLI(args)
    try:
        return cli.run()
    except (ConfigError, ParamError, DegenerateFitError) as e:
        cli.logger.error(failure(f"Config error: {e}"))
        return EXIT_CONFIG
    except ConvergenceError as e:
        cli.logger.error(failure(f"Numerical failure: {e}"))
        return EXIT_CONVERGENCE
    except OSError as e:
        cli.logger.error(failure(f"Output error: {e}"))
        return EXIT_IO
    except ValueError as e:
        cli.logger.error(failure(f"Config error: {e}"))
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
