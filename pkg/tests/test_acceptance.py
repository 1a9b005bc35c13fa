"""End-to-end acceptance checks, one test per criterion.

Each test records a one-line PASS/FAIL verdict that is repeated in the
terminal summary. Criteria 6 and 7 train on the default 1000-trial dataset
and take tens of minutes.
"""

import os
import time

import numpy as np
import pytest
import yaml

from pigait import experiment as ex
from pigait.biomech import G, Anthropometry, JointTrajectory, inverse_dynamics
from pigait.cli import main
from pigait.config import from_dict
from pigait.floorsim import FloorModel, floor_velocity, geophone_transduce
from pigait.gaitsynth import GaitType, TrialSeeds, make_subject, synth_trial
from pigait.numerics import (ModalOscillator, finite_difference, integrate_modal, relative_error,
                             value_and_grad)
from pigait.pig.baseline import LstmConfig
from pigait.pig.graph import batch_graphs
from pigait.pig.model import (Normalization, PigConfig, dead_parameters, init_pig_params,
                              pig_forward, pig_loss)
from pigait.pig.train import train, train_lstm

from conftest import random_graph, record_criterion, tiny_pig
from test_floorsim import step_grf

pytestmark = pytest.mark.acceptance


def test_criterion_1_free_vibration():
    osc = ModalOscillator(2000.0, 0.05, 12.0)
    dt, n, u0 = 1e-3, 2000, 0.01
    integrate_modal(osc, np.zeros(10), dt, u0=u0)
    t0 = time.perf_counter()
    u, _, _ = integrate_modal(osc, np.zeros(n), dt, u0=u0)
    elapsed = time.perf_counter() - t0
    w, z = osc.omega, osc.damping_ratio
    wd = w * np.sqrt(1 - z * z)
    t = np.arange(n) * dt
    exact = np.exp(-z * w * t) * u0 * (np.cos(wd * t) + z * w / wd * np.sin(wd * t))
    err = np.abs(u - exact).max()
    assert record_criterion(1, err < 1e-3 and elapsed < 1.0,
                            f"max error {err:.2e} m (< 1e-3), runtime {elapsed * 1e3:.1f} ms (< 1 s)")


def test_criterion_2_ground_reaction_force():
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(50):
        m = rng.uniform(40, 120)
        a = Anthropometry(m, 0.42, 0.42, 0.26, 1.75)
        traj = JointTrajectory(*(np.full(40, rng.uniform(-20, 40)) for _ in range(3)))
        g = inverse_dynamics(traj, a, np.ones(40, bool))
        worst = max(worst, np.abs(g.vertical[1:-1] - m * G).max())
    periodic = {}
    for gait in GaitType:
        subject = make_subject(3, 11)
        rec = synth_trial(gait, subject, FloorModel(noise_std=0.0), TrialSeeds(11, 5, 6), n_cycles=3)
        strikes = rec.events.foot_strike_times["R"]
        t = rec.grf["R"].times
        sel = (t >= strikes[0]) & (t < strikes[-1])
        total = rec.grf["R"].vertical[sel] + rec.grf["L"].vertical[sel]
        weight = subject.anthropometry.body_mass * G
        periodic[gait.value] = abs(total.mean() - weight) / weight
    dev = max(periodic.values())
    assert record_criterion(2, worst < 1e-9 and dev < 0.02,
                            f"quiet standing |F - mg| max {worst:.1e} N (< 1e-9), "
                            f"periodic mean deviation max {100 * dev:.2f}% (< 2%)")


def test_criterion_3_floor_linearity_and_attenuation():
    quiet = FloorModel(noise_std=0.0)
    rng = np.random.default_rng(1)
    lin = 0.0
    for trial in range(20):
        xy1 = (rng.uniform(0, 6), rng.uniform(-0.6, 0.6))
        xy2 = (rng.uniform(0, 6), rng.uniform(-0.6, 0.6))
        a, b = step_grf(runs=((10, 70),), seed=trial), step_grf(runs=((60, 130),), seed=100 + trial)
        k = rng.uniform(0.1, 10)
        both = geophone_transduce(floor_velocity([a, b], [[xy1], [xy2]], quiet))
        sep = geophone_transduce(floor_velocity([a], [[xy1]], quiet)) + \
            geophone_transduce(floor_velocity([b], [[xy2]], quiet))
        one = geophone_transduce(floor_velocity([a], [[xy1]], quiet))
        scaled = geophone_transduce(floor_velocity([a.scaled(k)], [[xy1]], quiet))
        lin = max(lin, np.abs(both - sep).max() / np.abs(both).max(),
                  np.abs(scaled - k * one).max() / np.abs(scaled).max())
    pos = np.asarray(quiet.sensor_positions)
    monotone = 0
    for trial in range(100):
        xy = (rng.uniform(0, 6), rng.uniform(-0.6, 0.6))
        peaks = np.abs(floor_velocity([step_grf(seed=trial, amp=rng.uniform(300, 1200))], [[xy]],
                                      quiet)).max(axis=1)
        d = np.hypot(pos[:, 0] - xy[0], pos[:, 1] - xy[1])
        order = np.argsort(d)
        monotone += bool(np.all(np.diff(peaks[order]) < 0))
    assert record_criterion(3, lin < 1e-10 and monotone == 100,
                            f"superposition/scaling rel. error {lin:.1e} (< 1e-10), "
                            f"monotone attenuation {monotone}/100 trials")


def test_criterion_4_gradients_and_dead_parameters():
    worst = 0.0
    for seed in range(20):
        rng = np.random.default_rng(seed)
        cfg = tiny_pig(seed=seed, message_rounds=3)
        params = init_pig_params(cfg)
        batch = batch_graphs([random_graph(rng)])
        norm = Normalization.fit(batch)

        def obj(tape):
            r = pig_forward(tape, batch, cfg, norm)
            return pig_loss(tape, r.pred, batch.targets, r.consistency, 0.1)

        _, g, _ = value_and_grad(obj, params)
        idx = []
        for name in params.names():
            off, shape = params.slices[name]
            n = int(np.prod(shape))
            idx.extend(off + rng.choice(n, size=min(3, n), replace=False))
        idx = np.array(sorted(idx))
        worst = max(worst, relative_error(g[idx], finite_difference(obj, params, 1e-6, idx)[idx]))
    # audit at the default model size
    cfg = PigConfig()
    rng = np.random.default_rng(99)
    batch = batch_graphs([random_graph(rng, window=cfg.vib_window) for _ in range(2)])
    norm = Normalization.fit(batch)
    params = init_pig_params(cfg)
    _, g, _ = value_and_grad(lambda t: (lambda r: pig_loss(t, r.pred, batch.targets, r.consistency,
                                                           0.1))(pig_forward(t, batch, cfg, norm)),
                             params)
    dead = dead_parameters(params, g)
    assert record_criterion(4, worst < 1e-4 and not dead,
                            f"max gradient rel. error {worst:.1e} over 20 graphs (< 1e-4), "
                            f"dead parameter slices: {dead or 'none'}")


def test_criterion_5_overfit_one_sample(small_split):
    one = small_split.train.take([0])
    _, hp, _ = train(one, PigConfig(epochs=200, patience=200, batch_size=1, learning_rate=1e-2,
                                    frame_len=64))
    _, hl, _ = train_lstm(one, LstmConfig(epochs=200, patience=200, batch_size=1,
                                          learning_rate=1e-2, frame_len=64))
    pig = min(r["train_mse"] for r in hp.rows)
    lstm = min(r["train_mse"] for r in hl.rows)
    assert record_criterion(5, pig < 0.01 and lstm < 0.01,
                            f"training MSE after 200 epochs: PIG {pig:.2e}, LSTM {lstm:.2e} deg^2 "
                            f"(< 0.01)")


@pytest.fixture(scope="module")
def default_benchmark(tmp_path_factory):
    root = tmp_path_factory.mktemp("bench")
    cfg = from_dict({})
    t0 = time.time()
    ex.simulate_dataset(cfg, root / "data")
    _, records = ex.load_records(root / "data")
    data = ex.make_splits(records, cfg)
    res = ex.run_benchmark(cfg, data, root / "out")
    return res, time.time() - t0, root / "out"


def test_criterion_6_pig_beats_lstm(default_benchmark):
    res, seconds, _ = default_benchmark
    pig, lstm = res.overall("pig"), res.overall("lstm")
    red = res.reduction()
    cores = os.cpu_count()
    ok = pig.mean() < lstm.mean() and red.mean() >= 0.15 and seconds < 45 * 60
    assert record_criterion(6, ok,
                            f"test MAE PIG {pig.mean():.3f} vs LSTM {lstm.mean():.3f} deg, "
                            f"per-seed reduction {', '.join(f'{100 * r:.1f}%' for r in red)}, "
                            f"mean {100 * red.mean():.1f}% (>= 15%), run {seconds / 60:.1f} min "
                            f"on {cores} core(s) (< 45)")


def test_criterion_7_normal_easier_than_abnormal(default_benchmark):
    res, _, out = default_benchmark
    worse = []
    for m in ex.MODELS:
        for s in res.seeds():
            normal, abnormal = res.gait_mae(m, s)
            worse.append(normal < abnormal)
    text = (out / "report.csv").read_text()
    phases = "phase,stance" in text and "phase,swing" in text
    assert record_criterion(7, all(worse) and phases,
                            f"normal < abnormal MAE in {sum(worse)}/{len(worse)} model-seed runs, "
                            f"per-phase rows {'present' if phases else 'missing'}")


TINY = {
    "dataset": {"subjects": 3, "normal_trials": 3, "abnormal_trials": 1, "workers": 1},
    "pig": {"hidden_dim": 8, "lstm_hidden": 8, "message_rounds": 1, "epochs": 2, "batch_size": 16},
    "lstm": {"hidden": 8, "epochs": 2, "batch_size": 16},
    "grid": {"hidden": [8], "learning_rate": [0.003, 0.01], "epochs": 1},
    "benchmark": {"seeds": [0, 1]},
}


def test_criterion_8_byte_reproducibility(tmp_path):
    cfg = tmp_path / "tiny.yaml"
    cfg.write_text(yaml.safe_dump(TINY))
    runs = []
    for k in range(2):
        d = tmp_path / f"run{k}"
        assert main(["simulate", "--config", str(cfg), "--seed", "5", "--out", str(d / "data")]) == 0
        assert main(["benchmark", "--config", str(cfg), "--seed", "5", "--manifest", str(d / "data"),
                     "--out", str(d / "out")]) == 0
        files = sorted(p.relative_to(d) for p in d.rglob("*") if p.is_file())
        runs.append({str(p): (d / p).read_bytes() for p in files})
    same = runs[0].keys() == runs[1].keys() and all(runs[0][k] == runs[1][k] for k in runs[0])
    kinds = {"manifest": "data/manifest.txt", "checkpoint": "out/pig_seed0_checkpoint.json",
             "report": "out/report.csv"}
    present = all(v in runs[0] for v in kinds.values())
    assert record_criterion(8, same and present,
                            f"{len(runs[0])} files incl. manifest, checkpoints and reports "
                            f"{'byte-identical' if same else 'DIFFER'} across two runs")
