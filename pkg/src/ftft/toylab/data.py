"""Synthetic classification data with three difficulty tiers.

Features are 4-dimensional.  Dims 0-1 carry Gaussian cluster structure:
the *simple* tier puts each class on a well-separated ring (linearly
separable), the *ambiguous_band* tier shrinks the ring and inflates the
noise until classes overlap heavily near the decision boundaries.  Dims
2-3 carry the *difficult* tier's signal: the plane is cut into 2K equal
angular sectors and the label is the sector index mod K, so each class
occupies two antipodal wedges.  Antipodal symmetry makes every class
mean zero on these dims, leaving a linear model at chance while a small
nonlinear model can carve out the sectors.

Whichever dims a tier does not use get low-amplitude noise.  That
amplitude matters: large off-tier noise lets a trained model's grown
weights project noise into the logits, which skews the probabilities of
the tier being measured.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import IO, Sequence

import numpy as np

TIERS = ("simple", "ambiguous_band", "difficult")
SPLITS = ("train", "id_eval", "hard_slice_eval")

NUM_FEATURES = 4


class DataError(ValueError):
    pass


@dataclass(frozen=True)
class GeometryConfig:
    simple_radius: float = 2.0
    simple_sigma: float = 0.35
    band_radius: float = 1.15
    band_sigma: float = 0.72
    wedge_margin: float = 0.11  # angular gap carved out at sector borders
    wedge_turns: int = 1  # label pattern repeats 2*turns times around the circle
    wedge_radius_lo: float = 0.7
    wedge_radius_hi: float = 1.8
    off_tier_sigma: float = 0.03


@dataclass(frozen=True)
class SyntheticDataset:
    name: str
    seed: int
    num_classes: int
    features: np.ndarray  # (N, 4) float64
    labels: np.ndarray  # (N,) int64
    tier: np.ndarray  # (N,) unicode, values in TIERS
    split: np.ndarray  # (N,) unicode, values in SPLITS

    def __post_init__(self):
        n = len(self.labels)
        if self.features.shape != (n, NUM_FEATURES):
            raise DataError(f"features shape {self.features.shape} != ({n}, {NUM_FEATURES})")
        if len(self.tier) != n or len(self.split) != n:
            raise DataError("tier/split length mismatch")
        if not set(np.unique(self.tier)) <= set(TIERS):
            raise DataError(f"unknown tier tags {set(np.unique(self.tier)) - set(TIERS)}")
        if not set(np.unique(self.split)) <= set(SPLITS):
            raise DataError(f"unknown split tags {set(np.unique(self.split)) - set(SPLITS)}")

    @property
    def num_instances(self) -> int:
        return len(self.labels)

    @property
    def num_features(self) -> int:
        return NUM_FEATURES

    def split_indices(self, split: str) -> np.ndarray:
        if split not in SPLITS:
            raise DataError(f"unknown split {split!r}")
        return np.flatnonzero(self.split == split)

    def tier_indices(self, tier: str) -> np.ndarray:
        if tier not in TIERS:
            raise DataError(f"unknown tier {tier!r}")
        return np.flatnonzero(self.tier == tier)


def _tier_counts(n: int, mix: Sequence[float]) -> list[int]:
    if len(mix) != 3:
        raise DataError("mix must have three tier fractions")
    if any(f < 0 for f in mix):
        raise DataError(f"negative tier fraction in {mix}")
    if abs(math.fsum(mix) - 1.0) > 1e-9:
        raise DataError(f"tier fractions must sum to 1, got {math.fsum(mix)}")
    counts = [math.floor(f * n) for f in mix]
    # hand out the remainder by largest fractional part, ties to lower index
    rema = sorted(
        range(3), key=lambda i: (-(mix[i] * n - counts[i]), i)
    )
    for i in range(n - sum(counts)):
        counts[rema[i % 3]] += 1
    return counts


def _class_angles(num_classes: int) -> np.ndarray:
    return 2.0 * np.pi * np.arange(num_classes) / num_classes


def _sample_cluster_tier(
    rng: np.random.Generator,
    count: int,
    num_classes: int,
    radius: float,
    sigma: float,
    off_sigma: float,
) -> tuple[np.ndarray, np.ndarray]:
    labels = np.arange(count, dtype=np.int64) % num_classes
    angles = _class_angles(num_classes)[labels]
    centers = radius * np.stack([np.cos(angles), np.sin(angles)], axis=1)
    X = np.empty((count, NUM_FEATURES))
    X[:, :2] = centers + rng.normal(0.0, sigma, (count, 2))
    X[:, 2:] = rng.normal(0.0, off_sigma, (count, 2))
    return X, labels


def _sample_wedge_tier(
    rng: np.random.Generator,
    count: int,
    num_classes: int,
    geom: GeometryConfig,
) -> tuple[np.ndarray, np.ndarray]:
    labels = np.arange(count, dtype=np.int64) % num_classes
    # 2*K*turns sectors; label = sector mod K, so each class owns
    # antipodal wedges and its feature mean vanishes (no linear signal)
    num_sectors = 2 * num_classes * geom.wedge_turns
    sector_width = 2.0 * np.pi / num_sectors
    usable = sector_width - 2.0 * geom.wedge_margin
    if usable <= 0:
        raise DataError("wedge margin leaves no usable sector width")
    repeat = rng.integers(0, 2 * geom.wedge_turns, count)
    sector = labels + num_classes * repeat
    theta = sector * sector_width + geom.wedge_margin + rng.random(count) * usable
    r = rng.uniform(geom.wedge_radius_lo, geom.wedge_radius_hi, count)
    X = np.empty((count, NUM_FEATURES))
    X[:, :2] = rng.normal(0.0, geom.off_tier_sigma, (count, 2))
    X[:, 2] = r * np.cos(theta)
    X[:, 3] = r * np.sin(theta)
    return X, labels


def _sample_split(
    rng: np.random.Generator,
    n: int,
    num_classes: int,
    mix: Sequence[float],
    geom: GeometryConfig,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    counts = _tier_counts(n, mix)
    parts_X, parts_y, parts_tier = [], [], []
    samplers = (
        lambda rng, c: _sample_cluster_tier(
            rng, c, num_classes, geom.simple_radius, geom.simple_sigma, geom.off_tier_sigma
        ),
        lambda rng, c: _sample_cluster_tier(
            rng, c, num_classes, geom.band_radius, geom.band_sigma, geom.off_tier_sigma
        ),
        lambda rng, c: _sample_wedge_tier(rng, c, num_classes, geom),
    )
    for tier_name, count, sampler in zip(TIERS, counts, samplers):
        if count == 0:
            continue
        X, y = sampler(rng, count)
        parts_X.append(X)
        parts_y.append(y)
        parts_tier.append(np.full(count, tier_name, dtype="<U15"))
    X = np.concatenate(parts_X)
    y = np.concatenate(parts_y)
    tier = np.concatenate(parts_tier)
    perm = rng.permutation(n)
    return X[perm], y[perm], tier[perm]


def generate_dataset(
    seed: int,
    num_instances: int = 1200,
    num_classes: int = 3,
    mix: Sequence[float] = (0.5, 0.2, 0.3),
    geometry: GeometryConfig = GeometryConfig(),
    id_eval_size: int | None = None,
    hard_eval_size: int | None = None,
    name: str | None = None,
) -> SyntheticDataset:
    """Tiered dataset with train / id_eval / hard_slice_eval splits.

    ``num_instances`` sizes the train split; eval splits default to a
    quarter of it each.  id_eval mirrors the train mix; hard_slice_eval
    is drawn purely from the difficult tier's distribution.
    """
    if num_instances < 100:
        raise DataError(f"need at least 100 training instances, got {num_instances}")
    if num_classes < 2:
        raise DataError(f"need at least 2 classes, got {num_classes}")
    id_n = id_eval_size if id_eval_size is not None else num_instances // 4
    hard_n = hard_eval_size if hard_eval_size is not None else num_instances // 4

    X_tr, y_tr, tier_tr = _sample_split(
        np.random.default_rng([seed, 0]), num_instances, num_classes, mix, geometry
    )
    X_id, y_id, tier_id = _sample_split(
        np.random.default_rng([seed, 1]), id_n, num_classes, mix, geometry
    )
    X_h, y_h, tier_h = _sample_split(
        np.random.default_rng([seed, 2]), hard_n, num_classes, (0.0, 0.0, 1.0), geometry
    )

    features = np.concatenate([X_tr, X_id, X_h])
    labels = np.concatenate([y_tr, y_id, y_h])
    tier = np.concatenate([tier_tr, tier_id, tier_h])
    split = np.concatenate(
        [
            np.full(num_instances, "train", dtype="<U15"),
            np.full(id_n, "id_eval", dtype="<U15"),
            np.full(hard_n, "hard_slice_eval", dtype="<U15"),
        ]
    )
    return SyntheticDataset(
        name=name or f"toy-s{seed}",
        seed=seed,
        num_classes=num_classes,
        features=features,
        labels=labels,
        tier=tier,
        split=split,
    )


def write_dataset_csv(dataset: SyntheticDataset, sink: IO[str]) -> None:
    w = csv.writer(sink, lineterminator="\n")
    w.writerow(
        ["id", "label", "tier", "split"]
        + [f"f{d}" for d in range(dataset.num_features)]
    )
    for i in range(dataset.num_instances):
        w.writerow(
            [i, int(dataset.labels[i]), dataset.tier[i], dataset.split[i]]
            + [repr(float(v)) for v in dataset.features[i]]
        )


def read_dataset_csv(stream: IO[str], name: str = "csv", seed: int = -1) -> SyntheticDataset:
    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        raise DataError("empty dataset csv") from None
    expected = ["id", "label", "tier", "split"] + [f"f{d}" for d in range(NUM_FEATURES)]
    if header != expected:
        raise DataError(f"bad dataset csv header: {header}")
    rows = list(reader)
    n = len(rows)
    features = np.empty((n, NUM_FEATURES))
    labels = np.empty(n, dtype=np.int64)
    tier = np.empty(n, dtype="<U15")
    split = np.empty(n, dtype="<U15")
    for lineno, row in enumerate(rows, start=2):
        if len(row) != len(expected):
            raise DataError(f"line {lineno}: expected {len(expected)} fields")
        idx = int(row[0])
        if idx != lineno - 2:
            raise DataError(f"line {lineno}: ids must be dense and ordered, got {idx}")
        labels[idx] = int(row[1])
        tier[idx] = row[2]
        split[idx] = row[3]
        features[idx] = [float(v) for v in row[4:]]
    return SyntheticDataset(
        name=name,
        seed=seed,
        num_classes=int(labels.max()) + 1 if n else 2,
        features=features,
        labels=labels,
        tier=tier,
        split=split,
    )
