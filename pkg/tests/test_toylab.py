import io

import numpy as np
import pytest

from ftft.toylab.data import (
    DataError,
    GeometryConfig,
    SyntheticDataset,
    generate_dataset,
    read_dataset_csv,
    write_dataset_csv,
)
from ftft.toylab.models import (
    LinearModel,
    MlpModel,
    ModelError,
    ToyModelSpec,
    create_model,
    loss_at,
    params_digest,
    softmax,
)
from ftft.toylab.train import (
    CheckpointMetric,
    TrainConfig,
    TrainError,
    lr_at,
    run_reference,
    train,
    write_metrics_csv,
)


def fd_gradients(model, X, y, eps=1e-5):
    """Central finite differences over every parameter component."""
    grads = {}
    for name, param in model.param_items():
        g = np.empty_like(param)
        flat = param.reshape(-1)
        gflat = g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            hi = loss_at(model, X, y)
            flat[i] = orig - eps
            lo = loss_at(model, X, y)
            flat[i] = orig
            gflat[i] = (hi - lo) / (2 * eps)
        grads[name] = g
    return grads


def max_rel_err(analytic, numeric):
    worst = 0.0
    for name in analytic:
        a, f = analytic[name], numeric[name]
        # relative where the value is large, absolute where it is tiny
        err = np.abs(a - f) / np.maximum(1.0, np.abs(f))
        worst = max(worst, float(err.max()))
    return worst


@pytest.mark.parametrize("kind", ["linear", "mlp"])
def test_gradients_match_finite_differences(kind):
    rng = np.random.default_rng(3)
    spec = ToyModelSpec(kind, hidden_units=7)
    worst = 0.0
    for trial in range(20):
        model = create_model(spec, 4, 3, np.random.default_rng([3, trial]))
        # random parameter point, not just the init distribution
        for _, p in model.param_items():
            p += rng.normal(0, 0.8, p.shape)
        X = rng.normal(0, 1.5, (5, 4))
        y = rng.integers(0, 3, 5)
        _, analytic = model.loss_and_grads(X, y)
        worst = max(worst, max_rel_err(analytic, fd_gradients(model, X, y)))
    assert worst < 1e-5


def test_softmax_rows_sum_to_one():
    rng = np.random.default_rng(0)
    probs = softmax(rng.normal(0, 30, (50, 3)))
    assert np.all(probs > 0)
    assert np.allclose(probs.sum(axis=1), 1.0, atol=1e-9)


def test_param_counts():
    assert ToyModelSpec("linear").num_params(4, 3) == 4 * 3 + 3
    assert ToyModelSpec("mlp", hidden_units=32).num_params(4, 3) == 4 * 32 + 32 + 32 * 3 + 3
    with pytest.raises(ModelError):
        ToyModelSpec("transformer")


def test_dataset_determinism():
    a = generate_dataset(5, 200)
    b = generate_dataset(5, 200)
    assert np.array_equal(a.features, b.features)
    assert np.array_equal(a.labels, b.labels)
    assert np.array_equal(a.tier, b.tier)
    assert np.array_equal(a.split, b.split)
    c = generate_dataset(6, 200)
    assert not np.array_equal(a.features, c.features)


def test_dataset_shapes_and_splits():
    ds = generate_dataset(1, num_instances=400, mix=(0.5, 0.2, 0.3))
    assert ds.num_instances == 400 + 100 + 100
    tr = ds.split_indices("train")
    ide = ds.split_indices("id_eval")
    hard = ds.split_indices("hard_slice_eval")
    assert len(tr) == 400 and len(ide) == 100 and len(hard) == 100
    assert not (set(tr) & set(ide)) and not (set(tr) & set(hard))
    # hard slice comes from the difficult tier only
    assert set(ds.tier[hard]) == {"difficult"}
    # train split carries all three tiers at the requested proportions
    tiers_tr = ds.tier[tr]
    assert np.sum(tiers_tr == "simple") == 200
    assert np.sum(tiers_tr == "ambiguous_band") == 80
    assert np.sum(tiers_tr == "difficult") == 120


def test_dataset_validation():
    with pytest.raises(DataError, match="sum to 1"):
        generate_dataset(0, 200, mix=(0.5, 0.2, 0.2))
    with pytest.raises(DataError, match="at least 100"):
        generate_dataset(0, 50)
    with pytest.raises(DataError, match="at least 2 classes"):
        generate_dataset(0, 200, num_classes=1)


def test_difficult_tier_has_no_linear_class_signal():
    # class means on the wedge dims vanish by antipodal symmetry
    ds = generate_dataset(2, num_instances=3000, mix=(0.0, 0.0, 1.0))
    tr = ds.split_indices("train")
    X, y = ds.features[tr], ds.labels[tr]
    for k in range(ds.num_classes):
        mean = X[y == k][:, 2:].mean(axis=0)
        assert np.all(np.abs(mean) < 0.1), (k, mean)


def small_config(**kw):
    defaults = dict(max_steps=60, checkpoint_every=20, peak_lr=0.5, seed=0)
    defaults.update(kw)
    return TrainConfig(**defaults)


def test_lr_schedule_endpoints():
    cfg = small_config(max_steps=1000, checkpoint_every=100, peak_lr=0.4)
    assert lr_at(0, cfg) == 0.0
    assert lr_at(100, cfg) == pytest.approx(0.4)  # warmup_fraction 0.1
    assert lr_at(1000, cfg) == 0.0
    assert lr_at(50, cfg) == pytest.approx(0.2)
    assert lr_at(550, cfg) == pytest.approx(0.2)
    # zero warmup starts at peak
    cfg0 = small_config(max_steps=100, checkpoint_every=10, warmup_fraction=0.0, peak_lr=0.3)
    assert lr_at(0, cfg0) == pytest.approx(0.3)


def test_config_validation():
    with pytest.raises(TrainError, match="checkpoint_every"):
        small_config(checkpoint_every=100, max_steps=50)
    with pytest.raises(TrainError, match="warmup_fraction"):
        small_config(warmup_fraction=1.0)
    with pytest.raises(TrainError, match="peak_lr"):
        small_config(peak_lr=0.0)


def test_train_records_full_dynamics():
    ds = generate_dataset(3, num_instances=120)
    res = train(ds, ToyModelSpec("linear"), small_config())
    assert res.dynamics.num_checkpoints == 3
    assert res.dynamics.num_instances == 120
    assert res.dynamics.model_name == "toy_linear"
    assert res.dynamics.num_params == 15
    assert res.steps_run == 60
    assert len(res.checkpoint_metrics) == 3
    assert res.dynamics.instance_ids() == set(ds.split_indices("train").tolist())
    for rec in res.dynamics.records:
        for p in rec.p_true:
            assert 0.0 < p < 1.0


def test_train_determinism_bit_for_bit():
    ds = generate_dataset(3, num_instances=120)
    a = train(ds, ToyModelSpec("mlp", hidden_units=8), small_config(seed=9))
    b = train(ds, ToyModelSpec("mlp", hidden_units=8), small_config(seed=9))
    assert a.dynamics == b.dynamics
    assert a.final_params_digest == b.final_params_digest
    assert a.checkpoint_metrics == b.checkpoint_metrics
    c = train(ds, ToyModelSpec("mlp", hidden_units=8), small_config(seed=10))
    assert c.final_params_digest != a.final_params_digest


def test_subset_training_still_records_everyone():
    ds = generate_dataset(4, num_instances=150)
    tr = ds.split_indices("train")
    subset = frozenset(tr[:40].tolist())
    res = train(ds, ToyModelSpec("linear"), small_config(subset=subset))
    # dynamics cover the whole train split, not just the subset
    assert res.dynamics.num_instances == 150
    assert res.dynamics.instance_ids() == set(tr.tolist())


def test_subset_must_be_train_ids():
    ds = generate_dataset(4, num_instances=150)
    bad = frozenset({int(ds.split_indices("id_eval")[0])})
    with pytest.raises(TrainError, match="subset ids not in train split"):
        train(ds, ToyModelSpec("linear"), small_config(subset=bad))


def test_subset_training_ignores_outsiders():
    # two subsets over datasets differing only outside the subset give
    # identical digests: out-of-subset rows never touch the updates
    ds = generate_dataset(4, num_instances=150)
    tr = ds.split_indices("train")
    subset = frozenset(tr[:64].tolist())
    res1 = train(ds, ToyModelSpec("linear"), small_config(subset=subset))
    feats = ds.features.copy()
    outside = np.setdiff1d(tr, np.array(sorted(subset)))
    feats[outside] += 123.0
    ds2 = SyntheticDataset(
        name=ds.name,
        seed=ds.seed,
        num_classes=ds.num_classes,
        features=feats,
        labels=ds.labels,
        tier=ds.tier,
        split=ds.split,
    )
    res2 = train(ds2, ToyModelSpec("linear"), small_config(subset=subset))
    assert res1.final_params_digest == res2.final_params_digest


def test_reference_ignores_subset():
    ds = generate_dataset(4, num_instances=150)
    tr = ds.split_indices("train")
    full = train(ds, ToyModelSpec("linear"), small_config())
    ref = run_reference(
        ds, ToyModelSpec("linear"), small_config(subset=frozenset(tr[:10].tolist()))
    )
    assert ref.final_params_digest == full.final_params_digest


def test_mlp_learns_the_mixture():
    ds = generate_dataset(11, num_instances=400)
    cfg = TrainConfig(max_steps=600, checkpoint_every=60, peak_lr=0.5, seed=1)
    res = train(ds, ToyModelSpec("mlp"), cfg)
    accs = res.metric_series("id_accuracy")
    assert accs[-1] > accs[0]
    assert accs[-1] > 0.75


def test_simple_only_mixture_is_linearly_separable():
    ds = generate_dataset(12, num_instances=300, mix=(1.0, 0.0, 0.0))
    cfg = TrainConfig(max_steps=500, checkpoint_every=100, peak_lr=0.5, seed=1)
    res = train(ds, ToyModelSpec("linear"), cfg)
    assert res.checkpoint_metrics[-1].id_accuracy >= 0.95


def test_difficult_only_separates_weak_from_strong():
    ds = generate_dataset(13, num_instances=600, mix=(0.0, 0.0, 1.0))
    cfg = TrainConfig(max_steps=900, checkpoint_every=300, peak_lr=0.5, seed=1)
    lin = train(ds, ToyModelSpec("linear"), cfg)
    assert lin.checkpoint_metrics[-1].id_accuracy <= 1 / 3 + 0.15
    mlp = train(ds, ToyModelSpec("mlp"), cfg)
    assert mlp.checkpoint_metrics[-1].id_accuracy >= 0.8


def test_nonfinite_loss_reports_step():
    ds = generate_dataset(3, num_instances=120)
    cfg = small_config(peak_lr=1e9, warmup_fraction=0.0)
    with pytest.raises(TrainError, match=r"non-finite loss .* at step \d+"):
        train(ds, ToyModelSpec("mlp"), cfg)


def test_dataset_csv_roundtrip():
    ds = generate_dataset(7, num_instances=110)
    sink = io.StringIO()
    write_dataset_csv(ds, sink)
    back = read_dataset_csv(io.StringIO(sink.getvalue()))
    assert np.array_equal(back.features, ds.features)
    assert np.array_equal(back.labels, ds.labels)
    assert np.array_equal(back.tier, ds.tier)
    assert np.array_equal(back.split, ds.split)
    assert back.num_classes == ds.num_classes


def test_metrics_csv_layout():
    sink = io.StringIO()
    write_metrics_csv(
        [CheckpointMetric(0, 0.5, 0.25), CheckpointMetric(1, 0.75, 0.5)], sink
    )
    assert sink.getvalue() == (
        "checkpoint,id_accuracy,hard_slice_accuracy\n"
        "0,0.500000,0.250000\n"
        "1,0.750000,0.500000\n"
    )


def test_params_digest_reflects_values():
    m1 = create_model(ToyModelSpec("linear"), 4, 3, np.random.default_rng(1))
    m2 = create_model(ToyModelSpec("linear"), 4, 3, np.random.default_rng(1))
    assert params_digest(m1) == params_digest(m2)
    m2.W[0, 0] += 1e-12
    assert params_digest(m1) != params_digest(m2)
