"""Model checkpoints: one JSON document with config echo, slice table and
parameter values written at 17 significant digits."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..numerics import ParamStore
from .baseline import LstmConfig
from .model import Normalization, PigConfig

FORMAT = "pigait-checkpoint"
VERSION = 1
MODELS = {"pig": PigConfig, "lstm": LstmConfig}


class CheckpointError(ValueError):
    pass


@dataclass
class Checkpoint:
    model: str
    config: object              # PigConfig | LstmConfig
    params: ParamStore
    norm: Normalization
    config_hash: str = ""
    seed: int = 0
    n_sensors: int = 4
    extra: dict | None = None


def _num(x: float) -> str:
    return "%.17g" % x


def _json_num(x) -> str:
    """JSON with every float written at 17 significant digits."""
    if isinstance(x, dict):
        return "{" + ", ".join(f'"{k}": {_json_num(v)}' for k, v in sorted(x.items())) + "}"
    if isinstance(x, (list, tuple)):
        return "[" + ", ".join(_json_num(v) for v in x) + "]"
    return _num(float(x))


def dumps(ck: Checkpoint) -> str:
    if ck.model not in MODELS:
        raise CheckpointError(f"unknown model {ck.model!r}")
    head = {
        "format": FORMAT,
        "version": VERSION,
        "model": ck.model,
        "config_hash": ck.config_hash,
        "seed": ck.seed,
        "n_sensors": ck.n_sensors,
        "config": ck.config.to_dict(),
        "extra": ck.extra or {},
        "slices": [{"name": n, "offset": ck.params.slices[n][0], "shape": list(ck.params.slices[n][1])}
                   for n in ck.params.names()],
    }
    if not np.isfinite(ck.params.values).all():
        raise CheckpointError("refusing to write non-finite parameters")
    body = json.dumps(head, indent=1, sort_keys=True)
    norm_txt = _json_num(ck.norm.to_dict())
    vals = ",\n".join(_num(v) for v in ck.params.values)
    return body[:-2] + ',\n "normalization": ' + norm_txt + ',\n "values": [\n' + vals + "\n ]\n}\n"


def save(ck: Checkpoint, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(ck))
    return path


def loads(text: str) -> Checkpoint:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise CheckpointError(f"checkpoint is not valid JSON: {e}") from e
    if doc.get("format") != FORMAT:
        raise CheckpointError("not a pigait checkpoint")
    if doc.get("version") != VERSION:
        raise CheckpointError(f"checkpoint version {doc.get('version')} unsupported (expected {VERSION})")
    model = doc.get("model")
    if model not in MODELS:
        raise CheckpointError(f"unknown model {model!r}")
    try:
        cfg = MODELS[model](**doc["config"])
    except TypeError as e:
        raise CheckpointError(f"checkpoint config does not match the {model} schema: {e}") from e
    slices = {s["name"]: (int(s["offset"]), tuple(s["shape"])) for s in doc["slices"]}
    try:
        params = ParamStore(np.array(doc["values"], dtype=float), slices, int(doc.get("seed", 0)))
    except ValueError as e:
        raise CheckpointError(f"slice table inconsistent with values: {e}") from e
    return Checkpoint(model, cfg, params, Normalization.from_dict(doc["normalization"]),
                      doc.get("config_hash", ""), int(doc.get("seed", 0)),
                      int(doc.get("n_sensors", 4)), doc.get("extra") or {})


def load(path) -> Checkpoint:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise CheckpointError(f"cannot read checkpoint {path}: {e}") from e
    return loads(text)


def check_compatible(ck: Checkpoint, expected_params: ParamStore):
    """Slice names and shapes must match a freshly initialised store."""
    want = {n: tuple(s) for n, (_, s) in expected_params.slices.items()}
    have = {n: tuple(s) for n, (_, s) in ck.params.slices.items()}
    if want != have:
        missing = sorted(set(want) - set(have))
        extra = sorted(set(have) - set(want))
        raise CheckpointError(f"checkpoint schema mismatch (version {VERSION}): "
                              f"missing {missing[:5]}, unexpected {extra[:5]}")
