"""Named scenarios reproducing each published figure's data at desk scale."""
from typing import Dict, List

from src.experiments.config import Scenario, parse_values
from src.model.errors import ConfigError
from src.model.params import ModelParams


def _base(**kwargs) -> ModelParams:
    values = dict(n=60, m=1, p=0.4, lambda_e=1.0, lambda_s=10.0, lambda_=0.0)
    values.update(kwargs)
    return ModelParams(**values)


def figure_presets() -> List[Scenario]:
    return [
        Scenario(
            name="fig2",
            description="Average error vs source capacity m for gossip rates 0, 10, 20",
            base=_base(),
            sweep_axis="m", sweep_values=parse_values("1..60"),
            series_axis="lambda", series_values=(0.0, 10.0, 20.0),
        ),
        Scenario(
            name="fig3",
            description="Average error vs gossip rate for m = 5, 10, 15",
            base=_base(),
            sweep_axis="lambda", sweep_values=parse_values("0..40"),
            series_axis="m", series_values=(5, 10, 15),
        ),
        Scenario(
            name="fig4",
            description="Average error vs source rate for m = 5, 10, 15 at gossip rate 5",
            base=_base(p=0.2, lambda_=5.0),
            sweep_axis="lambda_s", sweep_values=parse_values("logspace(1, 400, 30)"),
            series_axis="m", series_values=(5, 10, 15),
        ),
        Scenario(
            name="fig5a",
            description="Network-size scaling with m = 8 and source rate proportional to n",
            base=_base(n=10, m=8, p=0.2, lambda_=10.0),
            sweep_axis="n", sweep_values=parse_values("10..150..10"),
            series_axis="lambda_s_per_n", series_values=(0.1, 0.2, 0.5),
        ),
        Scenario(
            name="fig5b",
            description="Network-size scaling with source rate 4 and m proportional to n",
            base=_base(n=10, m=1, p=0.2, lambda_s=4.0, lambda_=10.0),
            sweep_axis="n", sweep_values=parse_values("10..150..10"),
            series_axis="m_per_n", series_values=(0.1, 0.2, 0.5),
        ),
        Scenario(
            name="fig5c",
            description="Network-size scaling with both m and source rate proportional to n",
            base=_base(n=10, m=1, p=0.2, lambda_=10.0),
            sweep_axis="n", sweep_values=parse_values("10..150..10"),
            series_axis="scale", series_values=(0.1, 0.2, 0.5),
        ),
        Scenario(
            name="fig6",
            description="Low-rate adoption probabilities and their linear approximations",
            base=_base(n=200, m=20, p=0.2, lambda_s=2.0),
            report="adoption_low",
            sweep_axis="N", sweep_values=parse_values("0..179"),
            series_axis="lambda", series_values=(0.1, 0.5, 1.0),
        ),
        Scenario(
            name="fig7",
            description="High-rate adoption probability, its Q-function sum and the step limit",
            base=_base(n=200, m=20, p=0.2, lambda_s=2.0),
            report="adoption_high",
            sweep_axis="N", sweep_values=parse_values("0..179"),
            series_axis="lambda", series_values=(20.0, 200.0, 400.0),
        ),
        Scenario(
            name="fig8",
            description="Gossip gain vs m with the fitted scaling B per flip probability",
            base=_base(n=80, lambda_=0.4),
            report="gain",
            sweep_axis="m", sweep_values=parse_values("1..30"),
            series_axis="p", series_values=(0.3, 0.5, 0.7),
            fit_grid=parse_values("2..20"),
        ),
        Scenario(
            name="fig9",
            description="Adaptive m*(N) policy against the matched constant policy",
            base=_base(p=0.2, lambda_=5.0),
            report="compare",
            sweep_axis="lambda_s", sweep_values=parse_values("logspace(1, 200, 10)"),
            series_axis="lambda", series_values=(0.0, 1.0, 5.0),
        ),
        Scenario(
            name="mstar",
            description="Capacity m*(N) maximizing the gossip gain, and its rounding",
            base=_base(p=0.2, lambda_=10.0),
            report="mstar",
            sweep_axis="N", sweep_values=parse_values("0..60"),
            series_axis="lambda_s", series_values=(1.0, 5.0, 10.0),
        ),
    ]


def presets_by_name() -> Dict[str, Scenario]:
    return {scenario.name: scenario for scenario in figure_presets()}


def get_preset(name: str) -> Scenario:
    presets = presets_by_name()
    if name not in presets:
        raise ConfigError(f"unknown preset '{name}' (available: {', '.join(presets)})")
    return presets[name]
