"""Command line entry point: simulate, train, eval, benchmark, print-config."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import experiment as ex
from .config import ConfigError, RunConfig, config_hash, dump_config, load_config
from .gaitsynth.bundle import BundleError
from .numerics import NonFiniteError
from .pig import checkpoint as ckpt
from .pig.evaluate import evaluate, reports_to_csv
from .pig.train import DivergenceError

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4

log = logging.getLogger("pigait")


def _config(args) -> RunConfig:
    over = {}
    if getattr(args, "seed", None) is not None:
        over["seed"] = args.seed
    if getattr(args, "split", None) == "loso":
        over["split"] = {"protocol": "loso"}
    return load_config(args.config, over)


def _out(args, cfg: RunConfig) -> Path:
    out = Path(args.out or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _header(cfg: RunConfig) -> str:
    return f"# config_hash: {config_hash(cfg)}\n# seed: {cfg.seed}\n"


def _manifest(args, cfg: RunConfig) -> Path:
    return Path(args.manifest or cfg.dataset.root)


def write_splits(path, membership: dict, cfg: RunConfig) -> Path:
    doc = {"config_hash": config_hash(cfg), "seed": cfg.seed, "protocol": cfg.split.protocol,
           "splits": membership}
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")
    return Path(path)


def cmd_print_config(args) -> int:
    cfg = _config(args)
    sys.stdout.write(f"# config_hash: {config_hash(cfg)}\n" + dump_config(cfg))
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = _config(args)
    root = Path(args.out or cfg.dataset.root)
    path = ex.simulate_dataset(cfg, root)
    print(f"wrote {cfg.dataset.protocol().n_trials} trials, manifest {path}")
    return EXIT_OK


def _load_split(args, cfg):
    _, records = ex.load_records(_manifest(args, cfg))
    return ex.make_splits(records, cfg)


def cmd_train(args) -> int:
    cfg = _config(args)
    out = _out(args, cfg)
    data = _load_split(args, cfg)
    mcfg = ex.model_config(cfg, args.model, cfg.seed)
    t = ex.train_model(args.model, data, mcfg)
    stem = f"{args.model}_seed{cfg.seed}"
    ckpt.save(ex.to_checkpoint(t, cfg, data.train.n_sensors), out / f"{stem}_checkpoint.json")
    (out / f"{stem}_history.csv").write_text(_header(cfg) + t.history.to_csv())
    write_splits(out / f"{stem}_splits.json", data.membership, cfg)
    best = t.history.rows[t.history.best_epoch - 1]["val_mae"] if t.history.rows else float("nan")
    print(f"{args.model}: best epoch {t.history.best_epoch}, val MAE {best:.3f} deg, wrote {out}")
    return EXIT_OK


def cmd_eval(args) -> int:
    cfg = _config(args)
    if not args.checkpoint:
        raise ConfigError("eval needs at least one --checkpoint")
    out = _out(args, cfg)
    data = _load_split(args, cfg)
    subset = "test" if args.split in (None, "loso") else args.split
    batch = getattr(data, subset)
    if batch is None or len(batch) == 0:
        raise ConfigError(f"the {subset} split is empty")
    reports = {}
    for path in args.checkpoint:
        ck = ckpt.load(path)
        t = ex.from_checkpoint(ck)
        name = ck.model if ck.model not in reports else f"{ck.model}_{len(reports)}"
        reports[name] = evaluate(ex.predict(t, batch), batch.targets, batch.gait_types)
        print(f"{name}: {subset} MAE {reports[name].overall:.3f} deg")
    (out / "report.csv").write_text(_header(cfg) + reports_to_csv(reports))
    ex.write_svg(reports, out / "segment_mae.svg", {"config_hash": config_hash(cfg), "seed": cfg.seed})
    return EXIT_OK


def cmd_benchmark(args) -> int:
    cfg = _config(args)
    out = _out(args, cfg)
    data = _load_split(args, cfg)
    write_splits(out / "splits.json", data.membership, cfg)
    res = ex.run_benchmark(cfg, data, out)
    red = res.reduction()
    for s, r in zip(res.seeds(), red):
        print(f"seed {s}: PIG {res.reports[('pig', s)].overall:.3f}  "
              f"LSTM {res.reports[('lstm', s)].overall:.3f}  reduction {100 * r:.1f}%")
    print(f"mean reduction {100 * red.mean():.1f}% in {res.seconds:.0f} s, wrote {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pigait", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        s = sub.add_parser(name, help=help_)
        s.add_argument("--config", help="YAML run configuration")
        s.add_argument("--seed", type=int)
        s.set_defaults(fn=fn)
        return s

    add("print-config", cmd_print_config, "print the resolved configuration")
    s = add("simulate", cmd_simulate, "synthesize the dataset")
    s.add_argument("--out", help="dataset directory (default: dataset.root)")
    for name, fn, help_ in (("train", cmd_train, "train one model"),
                            ("eval", cmd_eval, "evaluate checkpoints on the test split"),
                            ("benchmark", cmd_benchmark, "tune and compare both models")):
        s = add(name, fn, help_)
        s.add_argument("--manifest", help="dataset directory or manifest file")
        s.add_argument("--split", choices=("train", "val", "test", "loso"),
                       help="subset to evaluate; 'loso' switches to leave-one-subject-out")
        s.add_argument("--out", help="output directory (default: output_dir)")
        if name == "train":
            s.add_argument("--model", choices=ex.MODELS, default="pig")
        if name == "eval":
            s.add_argument("--checkpoint", action="append", default=[])
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.fn(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (DivergenceError, NonFiniteError, FloatingPointError) as e:
        print(f"numeric error: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except (OSError, BundleError, ckpt.CheckpointError, ValueError, KeyError) as e:
        print(f"data error: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
