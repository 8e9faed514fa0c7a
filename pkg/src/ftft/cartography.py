"""Data maps: per-instance dynamics statistics and region assignment.

An instance is summarized by the mean and population standard deviation
of its true-class probability across checkpoints.  The map splits the
dataset into three regions: the top q fraction by std is *ambiguous*,
the bottom q fraction by mean is *hard-to-learn*, and everything in
neither set is *easy*.  Ambiguous and hard-to-learn may overlap, so the
easy fraction lands anywhere in [1-2q, 1-q].
"""

from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass
from typing import IO, Iterable, Sequence

from .dynamics import TrainingDynamics

MAP_SCHEMA_VERSION = "ftft-map-1"

# Spread/mean differences below this are treated as exact ties so that
# ordering never depends on summation order; ties then break by id.
TIE_EPS = 1e-12


class MapError(ValueError):
    pass


@dataclass(frozen=True)
class InstanceStats:
    id: int
    mean: float
    std: float


@dataclass(frozen=True)
class DataMap:
    """Region assignment for one training run at a fixed selection fraction."""

    run_id: str
    q: float
    stats: tuple[InstanceStats, ...]
    ambiguous: frozenset[int]
    hard_to_learn: frozenset[int]
    easy: frozenset[int]

    @property
    def num_instances(self) -> int:
        return len(self.stats)

    def easy_ratio(self) -> float:
        if not self.stats:
            raise MapError("easy_ratio undefined for an empty map")
        return len(self.easy) / len(self.stats)


def mean_and_std(values: Sequence[float]) -> tuple[float, float]:
    """Mean and population standard deviation, compensated summation.

    Population (not sample) normalization: the checkpoints are the whole
    series of interest, not a sample from a longer one.
    """
    n = len(values)
    if n == 0:
        raise MapError("mean_and_std of empty sequence")
    mean = math.fsum(values) / n
    var = math.fsum((v - mean) ** 2 for v in values) / n
    return mean, math.sqrt(max(var, 0.0))


def compute_stats(dynamics: TrainingDynamics) -> tuple[InstanceStats, ...]:
    out = []
    for rec in dynamics.records:
        mean, std = mean_and_std(rec.p_true)
        out.append(InstanceStats(rec.id, mean, std))
    return tuple(out)


def sel_count(num_instances: int, q: float) -> int:
    """Number of instances a fraction q selects: round-half-up, at least 1."""
    if num_instances < 1:
        raise MapError("selection needs at least one instance")
    check_q(q)
    return max(1, math.floor(q * num_instances + 0.5))


def check_q(q: float):
    if not (0.0 < q <= 0.5):
        raise MapError("q must be in (0, 0.5]")


def _quantize(x: float) -> int:
    return round(x * 1e12)


def select_by_stat(
    stats: Sequence[InstanceStats], count: int, key: str, largest: bool
) -> frozenset[int]:
    """Ids of the ``count`` instances extreme in ``key`` ("mean" or "std").

    Values are quantized so sub-tie-threshold differences cannot reorder
    anything; ties break toward the smaller id in both directions.
    """
    if largest:
        keyed = [(-_quantize(getattr(s, key)), s.id) for s in stats]
    else:
        keyed = [(_quantize(getattr(s, key)), s.id) for s in stats]
    picked = heapq.nsmallest(count, keyed)
    return frozenset(i for _, i in picked)


def build_map(dynamics: TrainingDynamics, q: float = 0.33) -> DataMap:
    stats = compute_stats(dynamics)
    return categorize(dynamics.run_id, stats, q)


def categorize(run_id: str, stats: Sequence[InstanceStats], q: float) -> DataMap:
    check_q(q)
    if not stats:
        raise MapError("cannot categorize an empty stats list")
    count = sel_count(len(stats), q)
    ambiguous = select_by_stat(stats, count, "std", largest=True)
    hard = select_by_stat(stats, count, "mean", largest=False)
    easy = frozenset(s.id for s in stats) - ambiguous - hard
    return DataMap(
        run_id=run_id,
        q=q,
        stats=tuple(stats),
        ambiguous=ambiguous,
        hard_to_learn=hard,
        easy=easy,
    )


def ambiguous_subset(dynamics: TrainingDynamics, q: float = 0.33) -> tuple[int, ...]:
    """Sorted ids of the ambiguous region, the training subset of interest."""
    return tuple(sorted(build_map(dynamics, q).ambiguous))


def random_subset(ids: Iterable[int], q: float, rng) -> frozenset[int]:
    """Uniform random selection of sel_count ids; the no-map baseline."""
    pool = sorted(ids)
    count = sel_count(len(pool), q)
    picked = rng.choice(len(pool), size=count, replace=False)
    return frozenset(pool[i] for i in picked)


# --- map serialization ("ftft-map-1") ---


def write_map(data_map: DataMap, sink: IO[bytes]) -> None:
    obj = {
        "schema_version": MAP_SCHEMA_VERSION,
        "run_id": data_map.run_id,
        "q": data_map.q,
        "stats": [
            {"id": s.id, "mean": s.mean, "std": s.std} for s in data_map.stats
        ],
        "ambiguous": sorted(data_map.ambiguous),
        "hard_to_learn": sorted(data_map.hard_to_learn),
        "easy": sorted(data_map.easy),
    }
    sink.write(
        json.dumps(obj, separators=(",", ":"), ensure_ascii=False).encode("utf-8")
        + b"\n"
    )


def parse_map(stream: IO[bytes]) -> DataMap:
    try:
        obj = json.loads(stream.read().decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise MapError(f"malformed map file: {exc}") from None
    if not isinstance(obj, dict):
        raise MapError("map file must hold a JSON object")
    version = obj.get("schema_version")
    if version != MAP_SCHEMA_VERSION:
        raise MapError(f"unknown schema_version {version!r}")
    try:
        stats = tuple(
            InstanceStats(int(s["id"]), float(s["mean"]), float(s["std"]))
            for s in obj["stats"]
        )
        data_map = DataMap(
            run_id=str(obj["run_id"]),
            q=float(obj["q"]),
            stats=stats,
            ambiguous=frozenset(int(i) for i in obj["ambiguous"]),
            hard_to_learn=frozenset(int(i) for i in obj["hard_to_learn"]),
            easy=frozenset(int(i) for i in obj["easy"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise MapError(f"malformed map file: {exc!r}") from None
    ids = frozenset(s.id for s in stats)
    regions = data_map.ambiguous | data_map.hard_to_learn | data_map.easy
    if regions - ids:
        raise MapError(f"region ids not in stats: {sorted(regions - ids)[:5]}")
    return data_map


def load_map(path) -> DataMap:
    with open(path, "rb") as fh:
        return parse_map(fh)


def save_map(data_map: DataMap, path) -> None:
    with open(path, "wb") as fh:
        write_map(data_map, fh)
