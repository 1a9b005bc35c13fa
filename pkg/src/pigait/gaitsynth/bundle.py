"""Trial bundles on disk: one directory per trial.

    trial_<id>/meta.txt    key: value lines (values JSON-encoded)
    trial_<id>/angles.csv  t, hip/knee/ankle per foot
    trial_<id>/grf.csv     t, Fv/Fap/stance per foot
    trial_<id>/vib.csv     t, s1..sN

Numeric CSV fields carry 9 significant digits. Records produced by
:func:`synth_trial` are already rounded to that precision, so save -> load
is bit-identical.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..biomech import Anthropometry, GrfSeries, JointTrajectory
from ..floorsim import VibrationRecord
from .cycles import FEET, GaitEvents
from .synth import TrialRecord
from .templates import JOINTS, GaitType

FMT = "%.9g"
BUNDLE_VERSION = 1


class BundleError(ValueError):
    pass


def bundle_dir(root, trial_id: str) -> Path:
    return Path(root) / f"trial_{trial_id}"


def _write_csv(path: Path, header, columns):
    data = np.column_stack(columns)
    np.savetxt(path, data, fmt=FMT, delimiter=",", header=",".join(header), comments="")


def _read_csv(path: Path):
    try:
        with open(path) as fh:
            header = fh.readline().strip().split(",")
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except OSError as e:
        raise BundleError(f"cannot read {path}: {e}") from e
    if data.shape[1] != len(header):
        raise BundleError(f"{path}: {data.shape[1]} columns but {len(header)} header fields")
    return {h: data[:, i] for i, h in enumerate(header)}


def save_trial(rec: TrialRecord, root, extra_meta: dict | None = None) -> Path:
    d = bundle_dir(root, rec.trial_id)
    d.mkdir(parents=True, exist_ok=True)
    a = rec.anthropometry
    traj0 = rec.trajectories[FEET[0]]
    meta = {
        "bundle_version": BUNDLE_VERSION,
        "trial_id": rec.trial_id,
        "subject_id": rec.subject_id,
        "gait_type": rec.gait_type.value,
        "seed": rec.seed,
        "anthropometry": {k: getattr(a, k) for k in
                          ("body_mass", "thigh_length", "shank_length", "foot_length", "height")},
        "angle_rate": traj0.sample_rate,
        "t0": traj0.t0,
        "vib_rate": rec.vibration.sample_rate,
        "vib_gain": rec.vibration.gain,
        "vib_sensitivity": rec.vibration.sensitivity,
        "foot_strike_times": rec.events.foot_strike_times,
        "foot_off_times": rec.events.foot_off_times,
        "footfalls": {f: [list(map(float, xy)) for xy in rec.footfalls[f]] for f in rec.footfalls},
        "meta": rec.meta,
    }
    meta.update(extra_meta or {})
    with open(d / "meta.txt", "w") as fh:
        for k, v in meta.items():
            fh.write(f"{k}: {json.dumps(v, sort_keys=True)}\n")

    t = traj0.times
    cols, head = [t], ["t"]
    for f in FEET:
        for j in JOINTS:
            head.append(f"{f}_{j}")
            cols.append(rec.trajectories[f].joint(j))
    _write_csv(d / "angles.csv", head, cols)

    cols, head = [rec.grf[FEET[0]].times], ["t"]
    for f in FEET:
        g = rec.grf[f]
        head += [f"{f}_Fv", f"{f}_Fap", f"{f}_stance"]
        cols += [g.vertical, g.anterior_posterior, g.stance_mask.astype(float)]
    _write_csv(d / "grf.csv", head, cols)

    v = rec.vibration
    head = ["t"] + [f"s{i + 1}" for i in range(v.n_sensors)]
    _write_csv(d / "vib.csv", head, [v.times] + list(v.signals))
    return d


def read_meta(path) -> dict:
    meta = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as e:
        raise BundleError(f"cannot read {path}: {e}") from e
    for n, line in enumerate(lines, 1):
        if not line.strip():
            continue
        key, sep, val = line.partition(": ")
        if not sep:
            raise BundleError(f"{path}:{n}: expected 'key: value'")
        meta[key] = json.loads(val)
    return meta


def load_trial(path) -> TrialRecord:
    d = Path(path)
    meta = read_meta(d / "meta.txt")
    if meta.get("bundle_version") != BUNDLE_VERSION:
        raise BundleError(f"{d}: unsupported bundle version {meta.get('bundle_version')}")
    rate, t0 = meta["angle_rate"], meta["t0"]
    ang = _read_csv(d / "angles.csv")
    grf_cols = _read_csv(d / "grf.csv")
    vib = _read_csv(d / "vib.csv")
    trajs, grf = {}, {}
    for f in FEET:
        trajs[f] = JointTrajectory(*(ang[f"{f}_{j}"] for j in JOINTS), sample_rate=rate, t0=t0)
        grf[f] = GrfSeries(grf_cols[f"{f}_Fv"], grf_cols[f"{f}_Fap"], rate,
                           grf_cols[f"{f}_stance"] > 0.5, t0)
    sensors = sorted((k for k in vib if k != "t"), key=lambda s: int(s[1:]))
    vrec = VibrationRecord(np.vstack([vib[s] for s in sensors]), meta["vib_rate"],
                           meta["vib_gain"], meta["vib_sensitivity"], t0)
    events = GaitEvents(meta["foot_strike_times"], meta["foot_off_times"])
    footfalls = {f: [tuple(xy) for xy in v] for f, v in meta["footfalls"].items()}
    return TrialRecord(meta["trial_id"], meta["subject_id"], GaitType(meta["gait_type"]),
                       Anthropometry(**meta["anthropometry"]), trajs, events, grf, vrec,
                       footfalls, meta["seed"], meta.get("meta", {}))
