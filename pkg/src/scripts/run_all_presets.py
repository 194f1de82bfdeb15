import argparse
import os
import time

from termcolor import colored

from src.experiments import settings
from src.experiments.logs import setup_logging
from src.experiments.presets import figure_presets
from src.experiments.runner import run_scenario, write_csv


def run_all_presets(out_dir: str, threads: int, only=None):
    """Renders every figure preset (or the named subset) into out_dir."""
    logger = setup_logging(settings.LOG_LEVEL, settings.LOG_DIR)
    scenarios = [s for s in figure_presets() if not only or s.name in only]
    failed = []

    for scenario in scenarios:
        print(colored(f"--- {scenario.name}: {scenario.description} ---", "cyan"))
        started = time.time()
        try:
            frame = run_scenario(scenario, threads=threads, progress=True)
            path = write_csv(frame, os.path.join(out_dir, scenario.output))
            print(colored(f"Saved {path} ({len(frame)} rows, {time.time() - started:.1f}s)", "green"))
        except Exception as e:
            logger.error(f"{scenario.name} failed: {e}")
            print(colored(f"Error rendering {scenario.name}: {e}", "red"))
            failed.append(scenario.name)

    if failed:
        print(colored(f"Failed presets: {', '.join(failed)}", "red"))
    return failed


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description="Render every figure preset to CSV")
    parser.add_argument("--out", default=settings.OUT_DIR)
    parser.add_argument("--threads", type=int, default=settings.THREADS)
    parser.add_argument("names", nargs="*", help="preset names (default: all)")
    args = parser.parse_args()
    raise SystemExit(1 if run_all_presets(args.out, args.threads, args.names) else 0)
