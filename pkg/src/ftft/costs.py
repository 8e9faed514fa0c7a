"""Relative training-cost accounting.

Fine-tuning FLOPs are modeled as proportional to parameter count times
optimization steps times batch size, which is enough to compare methods
that all fine-tune transformer encoders on the same data.  Costs are
expressed relative to a baseline run, scaled to 100, and a pipeline's
cost is the sum of its stages.  Full precision is kept internally;
rounding to two decimals happens only at display time.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import IO, Mapping, Sequence


class CostError(ValueError):
    pass


@dataclass(frozen=True)
class ModelSpec:
    name: str
    num_params: int


# Encoder sizes used in the comparison tables (parameter counts).
MODEL_REGISTRY: dict[str, ModelSpec] = {
    spec.name: spec
    for spec in (
        ModelSpec("deberta-v3-small", 44_000_000),
        ModelSpec("deberta-v3-base", 86_000_000),
        ModelSpec("deberta-v3-large", 304_000_000),
        ModelSpec("electra-small", 14_000_000),
        ModelSpec("electra-base", 110_000_000),
        ModelSpec("electra-large", 335_000_000),
        ModelSpec("bert-large", 345_000_000),
        ModelSpec("roberta-large", 355_000_000),
        ModelSpec("tinybert", 4_400_000),
    )
}

DEFAULT_BASELINE = "deberta-v3-large"


def resolve_model(name: str) -> ModelSpec:
    try:
        return MODEL_REGISTRY[name]
    except KeyError:
        known = ", ".join(sorted(MODEL_REGISTRY))
        raise CostError(f"unknown model {name!r}; known models: {known}") from None


@dataclass(frozen=True)
class TrainingRun:
    """One fine-tuning stage: a model trained for steps x batch examples."""

    num_params: int
    steps: int
    batch_size: int

    def flops(self) -> float:
        if self.num_params < 1 or self.steps < 0 or self.batch_size < 1:
            raise CostError(f"invalid run dimensions: {self}")
        # constant factors cancel in every ratio we take
        return float(self.num_params) * self.steps * self.batch_size


def relative_cost(run: TrainingRun, baseline: TrainingRun) -> float:
    base = baseline.flops()
    if base == 0:
        raise CostError("baseline run has zero cost")
    return 100.0 * run.flops() / base


def model_relative_cost(
    name: str, baseline_name: str = DEFAULT_BASELINE, steps: int = 1, batch_size: int = 1
) -> float:
    """Relative cost of fine-tuning ``name`` vs the baseline, equal schedules."""
    run = TrainingRun(resolve_model(name).num_params, steps, batch_size)
    base = TrainingRun(resolve_model(baseline_name).num_params, steps, batch_size)
    return relative_cost(run, base)


def pipeline_cost(stages: Sequence[TrainingRun], baseline: TrainingRun) -> float:
    """Total cost of a multi-stage pipeline relative to a single baseline run."""
    return sum(relative_cost(stage, baseline) for stage in stages)


def format_cost(cost: float) -> str:
    return f"{cost:.2f}"


def cost_rows(
    methods: Mapping[str, tuple[str, str | None]],
    baseline_name: str = DEFAULT_BASELINE,
) -> list[tuple[str, str, str, float]]:
    """(method, main_model, ref_model, relative_cost) rows.

    ``methods`` maps a method label to (main model name, reference model
    name or None).  A reference model means the pipeline first fine-tunes
    the reference for the full schedule, then the main model; both stages
    are charged at the shared schedule, so the stage cost reduces to a
    parameter-count ratio.
    """
    rows = []
    for method, (main, ref) in methods.items():
        total = model_relative_cost(main, baseline_name)
        if ref is not None:
            total += model_relative_cost(ref, baseline_name)
        rows.append((method, main, ref if ref is not None else "-", total))
    return rows


def write_cost_csv(rows: Sequence[tuple[str, str, str, float]], sink: IO[str]) -> None:
    w = csv.writer(sink, lineterminator="\n")
    w.writerow(["method", "main_model", "ref_model", "relative_cost"])
    for method, main, ref, cost in rows:
        w.writerow([method, main, ref, format_cost(cost)])
