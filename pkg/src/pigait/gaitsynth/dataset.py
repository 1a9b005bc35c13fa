"""Dataset protocol: which trials exist, their seeds, and train/val/test splits."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..floorsim import FloorModel, SensorChain
from .synth import TrialRecord, TrialSeeds, Variability, make_subject, synth_trial
from .templates import GaitType

MANIFEST_NAME = "manifest.txt"


@dataclass(frozen=True)
class Protocol:
    subjects: int = 20
    normal_trials: int = 20
    abnormal_trials: int = 10
    gait_types: tuple = tuple(g.value for g in GaitType)
    n_cycles: int = 2

    def __post_init__(self):
        object.__setattr__(self, "gait_types", tuple(GaitType(g).value for g in self.gait_types))
        if self.subjects < 1:
            raise ValueError("subjects must be >= 1")
        if self.normal_trials < 0 or self.abnormal_trials < 0:
            raise ValueError("trial counts must be >= 0")
        if self.n_cycles < 1:
            raise ValueError("n_cycles must be >= 1")

    def trials_per_subject(self) -> int:
        return sum(self.normal_trials if g == "normal" else self.abnormal_trials
                   for g in self.gait_types)

    @property
    def n_trials(self) -> int:
        return self.subjects * self.trials_per_subject()


@dataclass(frozen=True)
class TrialSpec:
    trial_id: str
    subject_id: int
    gait_type: str
    seeds: TrialSeeds

    @property
    def seed(self) -> int:
        return self.seeds.trial_seed


def plan_trials(protocol: Protocol, seed: int) -> list[TrialSpec]:
    """Every trial of the protocol with its derived seeds, in a fixed order."""
    out = []
    for sid in range(protocol.subjects):
        for g in protocol.gait_types:
            n = protocol.normal_trials if g == "normal" else protocol.abnormal_trials
            for k in range(n):
                ss = np.random.SeedSequence([seed, sid, list(GaitType).index(GaitType(g)), k])
                trial_seed, noise_seed = (int(x) for x in ss.generate_state(2))
                out.append(TrialSpec(f"s{sid:02d}_{g}_{k:02d}", sid, g,
                                     TrialSeeds(seed, trial_seed, noise_seed)))
    return out


def synth_one(spec: TrialSpec, floor: FloorModel, chain: SensorChain = SensorChain(),
              n_cycles: int = 2, variability: Variability = Variability()) -> TrialRecord:
    subject = make_subject(spec.subject_id, spec.seeds.subject_seed, variability)
    return synth_trial(spec.gait_type, subject, floor, spec.seeds, spec.trial_id, n_cycles,
                       variability, chain)


def _synth_star(args):
    return synth_one(*args)


def synthesize(specs, floor: FloorModel, chain: SensorChain = SensorChain(), n_cycles: int = 2,
               workers: int = 1) -> list[TrialRecord]:
    jobs = [(s, floor, chain, n_cycles) for s in specs]
    if workers <= 1 or len(jobs) < 2:
        return [_synth_star(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(_synth_star, jobs, chunksize=max(1, len(jobs) // (4 * workers))))


def default_workers() -> int:
    return max(1, len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else os.cpu_count() or 1)


# -- manifest ---------------------------------------------------------------

MANIFEST_HEADER = ("trial_id", "subject_id", "gait_type", "seed", "noise_seed", "bundle")


def write_manifest(root, specs, header_meta: dict) -> Path:
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    lines = [f"# {k}: {v}" for k, v in header_meta.items()]
    lines.append("\t".join(MANIFEST_HEADER))
    for s in specs:
        lines.append("\t".join([s.trial_id, str(s.subject_id), s.gait_type, str(s.seeds.trial_seed),
                                str(s.seeds.noise_seed), f"trial_{s.trial_id}"]))
    path = root / MANIFEST_NAME
    path.write_text("\n".join(lines) + "\n")
    return path


@dataclass
class Manifest:
    root: Path
    meta: dict
    rows: list = field(default_factory=list)   # dicts keyed by MANIFEST_HEADER

    def __len__(self):
        return len(self.rows)

    def bundle_paths(self):
        return [self.root / r["bundle"] for r in self.rows]


def read_manifest(path) -> Manifest:
    path = Path(path)
    if path.is_dir():
        path = path / MANIFEST_NAME
    if not path.exists():
        raise FileNotFoundError(f"manifest not found: {path}")
    meta, rows, header = {}, [], None
    for line in path.read_text().splitlines():
        if line.startswith("# "):
            k, _, v = line[2:].partition(": ")
            meta[k] = v
        elif header is None:
            header = line.split("\t")
        elif line.strip():
            rows.append(dict(zip(header, line.split("\t"))))
    if header is None or tuple(header) != MANIFEST_HEADER:
        raise ValueError(f"{path}: malformed manifest header")
    for r in rows:
        r["subject_id"] = int(r["subject_id"])
    return Manifest(path.parent, meta, rows)


# -- splits -------------------------------------------------------------------

SPLIT_FRACTIONS = (0.70, 0.15, 0.15)


def split_trials(rows, protocol: str = "per_trial", seed: int = 0,
                 fractions=SPLIT_FRACTIONS) -> dict:
    """Trial ids for train / val / test.

    ``per_trial``: within every (subject, gait type) group the trials are
    shuffled and cut by ``fractions``, so every subject appears in all splits.
    ``loso``: one held-out test subject (chosen by ``seed``) and one
    validation subject; everyone else trains.
    """
    rows = [(r["trial_id"], int(r["subject_id"]), r["gait_type"]) if isinstance(r, dict)
            else (r.trial_id, r.subject_id, r.gait_type) for r in rows]
    if not rows:
        raise ValueError("no trials to split")
    rng = np.random.default_rng([seed, 0x5917])
    out = {"train": [], "val": [], "test": []}
    if protocol == "per_trial":
        groups = {}
        for tid, sid, g in rows:
            groups.setdefault((sid, g), []).append(tid)
        for key in sorted(groups):
            ids = sorted(groups[key])
            rng.shuffle(ids)
            n = len(ids)
            n_test = int(round(fractions[2] * n))
            n_val = int(round(fractions[1] * n))
            if n >= 3:
                n_test, n_val = max(n_test, 1), max(n_val, 1)
            out["test"] += ids[:n_test]
            out["val"] += ids[n_test:n_test + n_val]
            out["train"] += ids[n_test + n_val:]
    elif protocol == "loso":
        subjects = sorted({sid for _, sid, _ in rows})
        if len(subjects) < 3:
            raise ValueError("leave-one-subject-out needs at least 3 subjects")
        test_s = subjects[seed % len(subjects)]
        val_s = subjects[(seed + 1) % len(subjects)]
        for tid, sid, _ in rows:
            out["test" if sid == test_s else "val" if sid == val_s else "train"].append(tid)
    else:
        raise ValueError(f"unknown split protocol {protocol!r}")
    return {k: sorted(v) for k, v in out.items()}
