import numpy as np
import pytest

from pigait.gaitsynth.cycles import SLOTS
from pigait.pig import checkpoint as ckpt
from pigait.pig.baseline import init_lstm_params
from pigait.pig.evaluate import N_REPORT_ROWS, evaluate, read_report_csv, reports_to_csv
from pigait.pig.model import Normalization, init_pig_params, pig_predict
from pigait.pig.train import Adam, DivergenceError, train, train_lstm

from conftest import tiny_lstm, tiny_pig


@pytest.fixture(scope="module")
def batches(random_batch_module):
    return random_batch_module(12, 1), random_batch_module(4, 2)


@pytest.fixture(scope="module")
def random_batch_module():
    from conftest import random_graph
    from pigait.pig.graph import batch_graphs

    def make(n, seed=0):
        rng = np.random.default_rng(seed)
        return batch_graphs([random_graph(rng) for _ in range(n)])
    return make


# -- training -------------------------------------------------------------------------

def test_training_is_bit_reproducible(batches):
    tr, va = batches
    p1, h1, _ = train(tr, tiny_pig(), va)
    p2, h2, _ = train(tr, tiny_pig(), va)
    assert h1.to_csv() == h2.to_csv()
    assert np.array_equal(p1.values, p2.values)
    l1, g1, _ = train_lstm(tr, tiny_lstm(), va)
    l2, g2, _ = train_lstm(tr, tiny_lstm(), va)
    assert g1.to_csv() == g2.to_csv() and np.array_equal(l1.values, l2.values)


def test_zero_learning_rate_leaves_parameters_unchanged(batches):
    tr, va = batches
    cfg = tiny_pig(learning_rate=0.0)
    start = init_pig_params(cfg)
    p, h, _ = train(tr, cfg, va, params=start)
    assert np.array_equal(p.values, start.values)
    assert len({r["val_mae"] for r in h.rows}) == 1


def test_different_seeds_differ(batches):
    tr, va = batches
    _, h1, _ = train(tr, tiny_pig(seed=1), va)
    _, h2, _ = train(tr, tiny_pig(seed=2), va)
    assert h1.to_csv() != h2.to_csv()


def test_early_stopping_restores_best(batches):
    tr, va = batches
    p, h, norm = train(tr, tiny_pig(epochs=30, patience=2, learning_rate=0.05), va)
    assert h.stopped_early and len(h.rows) == h.best_epoch + 2
    mae = np.mean(np.abs(pig_predict(va, p, tiny_pig(), norm) - va.targets))
    assert mae == pytest.approx(h.rows[h.best_epoch - 1]["val_mae"], rel=1e-12)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_non_finite_parameters_raise_divergence(batches):
    tr, va = batches
    cfg = tiny_pig()
    bad = init_pig_params(cfg)
    bad.values[0] = np.nan
    with pytest.raises(DivergenceError) as ei:
        train(tr, cfg, va, params=bad)
    assert ei.value.epoch == 1


def test_empty_training_split_is_rejected(batches):
    tr, _ = batches
    with pytest.raises(ValueError):
        train(tr.take([]), tiny_pig())


def test_adam_first_step_is_lr_sized():
    opt = Adam(0.1)
    x = opt.step(np.zeros(3), np.array([1.0, -2.0, 1e-3]))
    assert np.allclose(x, [-0.1, 0.1, -0.1], atol=1e-6)


# -- evaluation -------------------------------------------------------------------------

GAITS = ["normal", "normal", "toe_walking", "flexed_knee", "foot_drag"]


def test_report_has_all_rows_and_zero_error():
    t = np.random.default_rng(0).normal(size=(5, 12))
    r = evaluate(t, t, GAITS)
    assert len(r) == N_REPORT_ROWS == 22
    assert all(row.mae == 0.0 for row in r.rows)
    assert {row.group for row in r.rows} == {"segment", "gait_type", "phase", "joint", "overall"}


def test_constant_offset_shows_everywhere():
    t = np.random.default_rng(1).normal(size=(5, 12))
    r = evaluate(t + 2.0, t, GAITS)
    assert all(row.mae == pytest.approx(2.0) for row in r.rows)


def test_overall_is_weighted_mean_of_gait_rows():
    rng = np.random.default_rng(2)
    t = rng.normal(size=(5, 12))
    r = evaluate(t + rng.normal(size=(5, 12)), t, GAITS)
    gait_rows = [row for row in r.rows if row.group == "gait_type"]
    assert sum(row.n for row in gait_rows) == 5
    assert sum(row.mae * row.n for row in gait_rows) / 5 == pytest.approx(r.overall, rel=1e-12)
    seg = np.mean([r.get("segment", f"{j}_{e}").mae for j, e in SLOTS])
    assert seg == pytest.approx(r.overall, rel=1e-12)
    phases = r.get("phase", "stance").mae + r.get("phase", "swing").mae
    assert phases / 2 == pytest.approx(r.overall, rel=1e-12)


def test_report_errors_and_csv_round_trip():
    with pytest.raises(ValueError, match="empty"):
        evaluate(np.zeros((0, 12)), np.zeros((0, 12)), [])
    with pytest.raises(ValueError):
        evaluate(np.zeros((2, 11)), np.zeros((2, 11)), GAITS[:2])
    t = np.random.default_rng(3).normal(size=(5, 12))
    a, b = evaluate(t + 1, t, GAITS), evaluate(t - 3, t, GAITS)
    text = reports_to_csv({"pig": a, "lstm": b})
    back = read_report_csv("# config_hash: x\n" + text)
    assert back["pig"][("overall", "all")] == 1.0 and back["lstm"][("joint", "knee")] == 3.0
    assert len(text.strip().splitlines()) == 23


# -- checkpoints ---------------------------------------------------------------------------

def test_checkpoint_round_trip_is_exact(batches, tmp_path):
    tr, va = batches
    cfg = tiny_pig(epochs=1)
    p, _, norm = train(tr, cfg, va)
    ck = ckpt.Checkpoint("pig", cfg, p, norm, "abcd", 3, 4, {"best_epoch": 1})
    path = ckpt.save(ck, tmp_path / "ck.json")
    back = ckpt.load(path)
    assert np.array_equal(back.params.values, p.values)
    assert back.config == cfg and back.config_hash == "abcd" and back.extra == {"best_epoch": 1}
    for k in Normalization._ARRAYS:
        assert np.array_equal(getattr(back.norm, k), getattr(norm, k))
    assert back.norm.vib_scale == norm.vib_scale
    assert np.array_equal(pig_predict(va, back.params, back.config, back.norm),
                          pig_predict(va, p, cfg, norm))
    assert ckpt.dumps(back) == path.read_text()
    ckpt.check_compatible(back, init_pig_params(cfg))


def test_checkpoint_errors(tmp_path):
    cfg = tiny_lstm()
    ck = ckpt.Checkpoint("lstm", cfg, init_lstm_params(cfg), Normalization())
    text = ckpt.dumps(ck)
    with pytest.raises(ckpt.CheckpointError, match="version"):
        ckpt.loads(text.replace('"version": 1', '"version": 2'))
    with pytest.raises(ckpt.CheckpointError, match="schema"):
        ckpt.loads(text.replace('"hidden"', '"hidden_size"'))
    with pytest.raises(ckpt.CheckpointError):
        ckpt.loads("{not json")
    with pytest.raises(ckpt.CheckpointError):
        ckpt.load(tmp_path / "missing.json")
    with pytest.raises(ckpt.CheckpointError, match="schema mismatch"):
        ckpt.check_compatible(ckpt.loads(text), init_pig_params(tiny_pig()))
