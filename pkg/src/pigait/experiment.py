"""End-to-end workflows: dataset synthesis, training, evaluation, benchmark."""

from __future__ import annotations

import logging
import multiprocessing as mp
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import RunConfig, config_hash
from .gaitsynth.bundle import load_trial, save_trial
from .gaitsynth.dataset import (default_workers, plan_trials, read_manifest, split_trials,
                                synthesize, write_manifest)
from .pig import checkpoint as ckpt
from .pig.baseline import LstmConfig, init_lstm_params, lstm_predict
from .pig.data import SplitData, make_split_data
from .pig.evaluate import Report, evaluate, reports_to_csv
from .pig.graph import GraphBatch
from .pig.model import Normalization, PigConfig, init_pig_params, pig_predict
from .pig.train import History, train, train_lstm
from .svg import grouped_bar_svg
from .gaitsynth.cycles import SLOTS

log = logging.getLogger(__name__)

MODELS = ("pig", "lstm")


def workers_for(cfg: RunConfig) -> int:
    return cfg.dataset.workers if cfg.dataset.workers > 0 else default_workers()


# -- data -----------------------------------------------------------------------

def simulate_dataset(cfg: RunConfig, root, seed: int | None = None) -> Path:
    """Synthesize every trial of the protocol, write bundles and the manifest."""
    seed = cfg.seed if seed is None else seed
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    specs = plan_trials(cfg.dataset.protocol(), seed)
    records = synthesize(specs, cfg.floor.model(), cfg.sensor.chain(), cfg.dataset.n_cycles,
                         workers_for(cfg))
    h = config_hash(cfg)
    for rec in records:
        save_trial(rec, root, {"config_hash": h, "global_seed": seed})
    return write_manifest(root, specs, {"config_hash": h, "seed": seed, "n_trials": len(specs)})


def load_records(manifest_path):
    man = read_manifest(manifest_path)
    return man, [load_trial(p) for p in man.bundle_paths()]


def make_splits(records, cfg: RunConfig, protocol: str | None = None, seed: int | None = None) -> SplitData:
    protocol = protocol or cfg.split.protocol
    rows = [{"trial_id": r.trial_id, "subject_id": r.subject_id, "gait_type": r.gait_type.value}
            for r in records]
    membership = split_trials(rows, protocol, cfg.seed if seed is None else seed,
                              tuple(cfg.split.fractions))
    return make_split_data(records, membership, cfg.pig.vib_window)


# -- models -------------------------------------------------------------------------

@dataclass
class Trained:
    model: str
    config: object
    params: object
    norm: Normalization
    history: History


def train_model(model: str, data: SplitData, model_cfg) -> Trained:
    if model == "pig":
        p, h, n = train(data.train, model_cfg, data.val)
    elif model == "lstm":
        p, h, n = train_lstm(data.train, model_cfg, data.val)
    else:
        raise ValueError(f"unknown model {model!r}")
    return Trained(model, model_cfg, p, n, h)


def predict(t: Trained, batch: GraphBatch) -> np.ndarray:
    if t.model == "pig":
        return pig_predict(batch, t.params, t.config, t.norm)
    return lstm_predict(batch, t.params, t.config, t.norm)


def model_config(cfg: RunConfig, model: str, seed: int, hidden=None, lr=None, epochs=None):
    over = {"seed": seed}
    if lr is not None:
        over["learning_rate"] = lr
    if epochs is not None:
        over["epochs"] = epochs
    if model == "pig":
        if hidden is not None:
            over.update(hidden_dim=hidden, lstm_hidden=hidden)
        return cfg.pig_config(**over)
    if hidden is not None:
        over["hidden"] = hidden
    return cfg.lstm_config(**over)


def to_checkpoint(t: Trained, cfg: RunConfig, n_sensors: int) -> ckpt.Checkpoint:
    return ckpt.Checkpoint(t.model, t.config, t.params, t.norm, config_hash(cfg), t.config.seed,
                           n_sensors, {"best_epoch": t.history.best_epoch})


def from_checkpoint(ck: ckpt.Checkpoint) -> Trained:
    fresh = (init_pig_params(ck.config) if ck.model == "pig"
             else init_lstm_params(ck.config, ck.n_sensors))
    ckpt.check_compatible(ck, fresh)
    return Trained(ck.model, ck.config, ck.params, ck.norm, History())


# -- parallel map with the dataset shared through fork -------------------------------

_SHARED: dict = {}


def _job(args):
    model, mcfg = args
    t = train_model(model, _SHARED["data"], mcfg)
    return t


def _map_jobs(data: SplitData, jobs, workers: int):
    if workers <= 1 or len(jobs) < 2 or "fork" not in mp.get_all_start_methods():
        _SHARED["data"] = data
        try:
            return [_job(j) for j in jobs]
        finally:
            _SHARED.clear()
    _SHARED["data"] = data
    try:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs)),
                                 mp_context=mp.get_context("fork")) as ex:
            return list(ex.map(_job, jobs))
    finally:
        _SHARED.clear()


# -- benchmark -----------------------------------------------------------------------

@dataclass
class BenchmarkResult:
    grid: dict = field(default_factory=dict)          # model -> list of (hidden, lr, val_mae)
    chosen: dict = field(default_factory=dict)        # model -> (hidden, lr)
    reports: dict = field(default_factory=dict)       # (model, seed) -> Report
    histories: dict = field(default_factory=dict)
    lambda_mae: dict = field(default_factory=dict)    # consistency weight -> PIG test MAE
    seconds: float = 0.0

    def overall(self, model):
        return np.array([self.reports[(model, s)].overall for s in self.seeds()])

    def seeds(self):
        return sorted({s for _, s in self.reports})

    def reduction(self) -> np.ndarray:
        pig, lstm = self.overall("pig"), self.overall("lstm")
        return (lstm - pig) / lstm

    def gait_mae(self, model, seed):
        r = self.reports[(model, seed)]
        normal = r.get("gait_type", "normal").mae
        ab = [x for x in r.rows if x.group == "gait_type" and x.key != "normal" and x.n > 0]
        n = sum(x.n for x in ab)
        abnormal = sum(x.mae * x.n for x in ab) / n if n else float("nan")
        return normal, abnormal


def tune(cfg: RunConfig, data: SplitData, model: str, workers: int = 1):
    g = cfg.grid
    points = [(h, lr) for h in g.hidden for lr in g.learning_rate]
    jobs = [(model, model_config(cfg, model, g.seed, h, lr, g.epochs)) for h, lr in points]
    trained = _map_jobs(data, jobs, workers)
    results = []
    for (h, lr), t in zip(points, trained):
        results.append((h, lr, min(r["val_mae"] for r in t.history.rows)))
    best = min(results, key=lambda r: (r[2], r[0], r[1]))
    return results, (best[0], best[1])


def run_benchmark(cfg: RunConfig, data: SplitData, out_dir=None, workers: int | None = None) -> BenchmarkResult:
    """Tune both models on the same budgeted grid, then train each seed and
    evaluate on the held-out test split."""
    t0 = time.time()
    workers = workers_for(cfg) if workers is None else workers
    res = BenchmarkResult()
    for model in MODELS:
        if cfg.benchmark.tune:
            res.grid[model], res.chosen[model] = tune(cfg, data, model, workers)
        else:
            mc = cfg.pig if model == "pig" else cfg.lstm
            res.chosen[model] = (mc.hidden_dim if model == "pig" else mc.hidden, mc.learning_rate)
        log.info("%s chosen hidden=%s lr=%s", model, *res.chosen[model])
    jobs = [(m, model_config(cfg, m, s, *res.chosen[m])) for s in cfg.benchmark.seeds for m in MODELS]
    trained = _map_jobs(data, jobs, workers)
    for (m, mcfg), t in zip(jobs, trained):
        pred = predict(t, data.test)
        res.reports[(m, mcfg.seed)] = evaluate(pred, data.test.targets, data.test.gait_types)
        res.histories[(m, mcfg.seed)] = t.history
        if out_dir is not None:
            ckpt.save(to_checkpoint(t, cfg, data.train.n_sensors),
                      Path(out_dir) / f"{m}_seed{mcfg.seed}_checkpoint.json")
    if cfg.benchmark.lambda_sweep:
        seed = cfg.benchmark.seeds[0]
        jobs = [("pig", model_config(cfg, "pig", seed, *res.chosen["pig"]))
                for _ in cfg.benchmark.lambda_sweep]
        for (_, mcfg), lam in zip(jobs, cfg.benchmark.lambda_sweep):
            mcfg.consistency_weight = float(lam)
        for lam, t in zip(cfg.benchmark.lambda_sweep, _map_jobs(data, jobs, workers)):
            res.lambda_mae[float(lam)] = evaluate(predict(t, data.test), data.test.targets,
                                                  data.test.gait_types).overall
    res.seconds = time.time() - t0
    if out_dir is not None:
        write_benchmark(res, cfg, out_dir)
    return res


def mean_report(reports) -> Report:
    reports = list(reports)
    rows = []
    for i, r in enumerate(reports[0].rows):
        vals = [x.rows[i].mae for x in reports]
        rows.append(type(r)(r.group, r.key, float(np.mean(vals)), r.n))
    return Report(rows)


def write_benchmark(res: BenchmarkResult, cfg: RunConfig, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    h = config_hash(cfg)
    head = f"# config_hash: {h}\n# seed: {cfg.seed}\n"
    seeds = res.seeds()
    lines = [head + "seed,pig_mae,lstm_mae,reduction,pig_normal,pig_abnormal,lstm_normal,lstm_abnormal"]
    red = res.reduction()
    for k, s in enumerate(seeds):
        pn, pa = res.gait_mae("pig", s)
        ln, la = res.gait_mae("lstm", s)
        lines.append(f"{s},{res.reports[('pig', s)].overall:.6f},{res.reports[('lstm', s)].overall:.6f},"
                     f"{red[k]:.6f},{pn:.6f},{pa:.6f},{ln:.6f},{la:.6f}")
    (out / "benchmark_summary.csv").write_text("\n".join(lines) + "\n")
    grid_lines = [head + "model,hidden,learning_rate,val_mae"]
    for m, rows in res.grid.items():
        grid_lines += [f"{m},{hh},{lr:g},{v:.6f}" for hh, lr, v in rows]
    (out / "grid.csv").write_text("\n".join(grid_lines) + "\n")
    if res.lambda_mae:
        rows = [head + "consistency_weight,pig_mae"]
        rows += [f"{lam:g},{v:.6f}" for lam, v in res.lambda_mae.items()]
        (out / "lambda_sweep.csv").write_text("\n".join(rows) + "\n")
    mean = {m: mean_report(res.reports[(m, s)] for s in seeds) for m in MODELS}
    (out / "report.csv").write_text(head + reports_to_csv(mean))
    write_svg(mean, out / "segment_mae.svg", {"config_hash": h, "seed": cfg.seed})


def write_svg(reports: dict, path, metadata: dict) -> Path:
    cats = [f"{j}_{e}" for j, e in SLOTS]
    series = {m.upper(): [r.get("segment", c).mae for c in cats] for m, r in reports.items()}
    Path(path).write_text(grouped_bar_svg(cats, series, "Per-segment MAE", metadata=metadata))
    return Path(path)
