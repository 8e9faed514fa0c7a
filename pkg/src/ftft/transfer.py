"""Comparisons between maps from different models.

The questions answered here: how much of one model's ambiguous region
another model also flags (overlap), how much of the data a model finds
easy (capacity proxy), and how the two halves of a split behave over
training (median trajectories).
"""

from __future__ import annotations

import csv
import statistics
from dataclasses import dataclass
from typing import IO, Iterable, Mapping, Sequence

from .cartography import DataMap, MapError, build_map, sel_count
from .dynamics import TrainingDynamics


def subset_overlap(a: frozenset[int], b: frozenset[int]) -> float:
    """Fraction of a selection shared by another selection of equal size."""
    if len(a) != len(b):
        raise MapError(f"subset sizes differ: {len(a)} vs {len(b)}")
    if not a:
        raise MapError("overlap of empty subsets is undefined")
    return len(a & b) / len(a)


def map_overlap(a: DataMap, b: DataMap) -> float:
    """Ambiguous-region overlap between two maps of the same dataset."""
    if a.num_instances != b.num_instances:
        raise MapError(
            f"instance sets differ: {a.num_instances} vs {b.num_instances} instances"
        )
    ids_a = frozenset(s.id for s in a.stats)
    ids_b = frozenset(s.id for s in b.stats)
    if ids_a != ids_b:
        raise MapError("instance sets differ: maps cover different instance ids")
    return subset_overlap(a.ambiguous, b.ambiguous)


@dataclass(frozen=True)
class OverlapMatrix:
    labels: tuple[str, ...]
    values: tuple[tuple[float, ...], ...]  # row-major, values[i][j] = overlap(i, j)


def overlap_matrix(maps: Mapping[str, DataMap]) -> OverlapMatrix:
    labels = tuple(maps.keys())
    rows = []
    for la in labels:
        row = []
        for lb in labels:
            row.append(1.0 if la == lb else map_overlap(maps[la], maps[lb]))
        rows.append(tuple(row))
    return OverlapMatrix(labels=labels, values=tuple(rows))


def easy_ratio_rows(
    dynamics_by_model: Mapping[str, TrainingDynamics], qs: Sequence[float]
) -> list[tuple[str, float, float]]:
    """(model, q, easy_ratio) rows, models in given order, qs ascending per model."""
    rows = []
    for model, dyn in dynamics_by_model.items():
        for q in sorted(qs):
            rows.append((model, q, build_map(dyn, q).easy_ratio()))
    return rows


def median_trajectories(
    dynamics: TrainingDynamics, split: Iterable[int]
) -> list[tuple[int, float, float]]:
    """Per-checkpoint median p_true inside a split vs outside it.

    Rows are (checkpoint, split_median, other_median).  Both halves must
    be nonempty; ids in the split must exist in the dynamics.
    """
    split = frozenset(split)
    known = dynamics.instance_ids()
    missing = split - known
    if missing:
        raise MapError(f"split ids not in dynamics: {sorted(missing)[:5]}")
    inside = [r for r in dynamics.records if r.id in split]
    outside = [r for r in dynamics.records if r.id not in split]
    if not inside or not outside:
        raise MapError("split must leave both halves nonempty")
    rows = []
    for c in range(dynamics.num_checkpoints):
        rows.append(
            (
                c,
                statistics.median(r.p_true[c] for r in inside),
                statistics.median(r.p_true[c] for r in outside),
            )
        )
    return rows


def expected_random_overlap(num_instances: int, q: float) -> float:
    """Overlap two independent uniform selections achieve on average."""
    return sel_count(num_instances, q) / num_instances


# --- CSV emission; lineterminator pinned so output is byte-stable ---


def write_easy_ratio_csv(rows: Sequence[tuple[str, float, float]], sink: IO[str]) -> None:
    w = csv.writer(sink, lineterminator="\n")
    w.writerow(["model", "q", "easy_ratio"])
    for model, q, ratio in rows:
        w.writerow([model, f"{q:g}", f"{ratio:.6f}"])


def write_trajectory_csv(rows: Sequence[tuple[int, float, float]], sink: IO[str]) -> None:
    w = csv.writer(sink, lineterminator="\n")
    w.writerow(["checkpoint", "hard_median", "other_median"])
    for ckpt, hard, other in rows:
        w.writerow([ckpt, f"{hard:.6f}", f"{other:.6f}"])
