import io

import numpy as np
import pytest

from ftft.cartography import DataMap, InstanceStats, MapError, random_subset
from ftft.dynamics import DynamicsRecord, TrainingDynamics
from ftft.transfer import (
    easy_ratio_rows,
    expected_random_overlap,
    map_overlap,
    median_trajectories,
    overlap_matrix,
    subset_overlap,
    write_easy_ratio_csv,
    write_trajectory_csv,
)


def map_with_ambiguous(amb, n=12, q=0.33):
    stats = tuple(InstanceStats(i, 0.5, 0.1) for i in range(n))
    ids = frozenset(range(n))
    amb = frozenset(amb)
    return DataMap(
        run_id="r",
        q=q,
        stats=stats,
        ambiguous=amb,
        hard_to_learn=amb,
        easy=ids - amb,
    )


def test_three_way_overlap_matrix():
    a = map_with_ambiguous({0, 1, 2, 3})
    b = map_with_ambiguous({0, 1, 4, 5})
    c = map_with_ambiguous({1, 4, 5, 6})
    mat = overlap_matrix({"A": a, "B": b, "C": c})
    assert mat.labels == ("A", "B", "C")
    assert mat.values[0][1] == 0.5
    assert mat.values[0][2] == 0.25
    assert mat.values[1][2] == 0.75
    # symmetric with unit diagonal
    for i in range(3):
        assert mat.values[i][i] == 1.0
        for j in range(3):
            assert mat.values[i][j] == mat.values[j][i]


def test_overlap_rejects_mismatched_sizes():
    with pytest.raises(MapError, match="sizes differ"):
        subset_overlap(frozenset({1, 2}), frozenset({1, 2, 3}))


def test_overlap_rejects_different_datasets():
    a = map_with_ambiguous({0, 1, 2, 3}, n=12)
    b = map_with_ambiguous({0, 1, 2, 3}, n=13)
    with pytest.raises(MapError, match="instance sets differ"):
        map_overlap(a, b)


def test_random_selection_overlap_near_q():
    rng = np.random.default_rng(42)
    ids = range(2000)
    vals = [
        subset_overlap(random_subset(ids, 0.33, rng), random_subset(ids, 0.33, rng))
        for _ in range(40)
    ]
    assert 0.30 < sum(vals) / len(vals) < 0.36
    assert expected_random_overlap(2000, 0.33) == pytest.approx(0.33, abs=0.001)


def rising_dyn():
    # one stuck instance, nine that climb
    records = [DynamicsRecord(0, 0, (0.1, 0.1, 0.1, 0.1))]
    for i in range(1, 10):
        base = 0.2 + 0.05 * i
        records.append(
            DynamicsRecord(i, 0, tuple(min(1.0, base + 0.15 * c) for c in range(4)))
        )
    return TrainingDynamics(
        run_id="t",
        model_name="m",
        num_params=5,
        dataset_name="d",
        num_checkpoints=4,
        records=tuple(records),
    )


def test_median_trajectories_split_behaviour():
    rows = median_trajectories(rising_dyn(), {0})
    assert [r[0] for r in rows] == [0, 1, 2, 3]
    hard = [r[1] for r in rows]
    other = [r[2] for r in rows]
    assert hard == [0.1, 0.1, 0.1, 0.1]
    assert other == sorted(other)
    assert other[-1] > other[0]


def test_median_trajectories_validation():
    with pytest.raises(MapError, match="not in dynamics"):
        median_trajectories(rising_dyn(), {99})
    with pytest.raises(MapError, match="both halves"):
        median_trajectories(rising_dyn(), set(range(10)))


def test_easy_ratio_rows_ordering():
    records = tuple(
        DynamicsRecord(i, 0, (0.1 * (i % 10), 0.1 * (i % 10) + 0.05))
        for i in range(30)
    )
    dyn = TrainingDynamics(
        run_id="t",
        model_name="m",
        num_params=5,
        dataset_name="d",
        num_checkpoints=2,
        records=records,
    )
    rows = easy_ratio_rows({"b": dyn, "a": dyn}, [0.5, 0.1])
    assert [(r[0], r[1]) for r in rows] == [("b", 0.1), ("b", 0.5), ("a", 0.1), ("a", 0.5)]
    for _, q, ratio in rows:
        assert 0.0 <= ratio <= 1.0 - q + 1e-12


def test_easy_ratio_csv_layout():
    sink = io.StringIO()
    write_easy_ratio_csv([("toy_linear", 0.33, 0.415), ("toy_mlp", 0.33, 0.52)], sink)
    assert sink.getvalue() == (
        "model,q,easy_ratio\n"
        "toy_linear,0.33,0.415000\n"
        "toy_mlp,0.33,0.520000\n"
    )


def test_trajectory_csv_layout():
    sink = io.StringIO()
    write_trajectory_csv([(0, 0.1, 0.42), (1, 0.105, 0.61)], sink)
    assert sink.getvalue() == (
        "checkpoint,hard_median,other_median\n"
        "0,0.100000,0.420000\n"
        "1,0.105000,0.610000\n"
    )
