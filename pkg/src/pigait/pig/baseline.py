"""LSTM baseline: all sensor windows as one multichannel sequence -> 12 angles."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..gaitsynth.cycles import N_TARGETS
from ..numerics import ParamStore, Tape
from .graph import GraphBatch
from .layers import affine, frame, lstm_encode, register_affine, register_lstm
from .model import Normalization, as_batch


@dataclass
class LstmConfig:
    hidden: int = 32
    vib_window: int = 1024
    frame_len: int = 32
    learning_rate: float = 3e-3
    epochs: int = 60
    batch_size: int = 32
    patience: int = 10
    seed: int = 0

    def __post_init__(self):
        for k in ("hidden", "vib_window", "frame_len", "epochs", "batch_size", "patience"):
            if int(getattr(self, k)) < 1:
                raise ValueError(f"{k} must be >= 1")
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be >= 0")
        if self.vib_window % self.frame_len:
            raise ValueError("vib_window must be a multiple of frame_len")

    def to_dict(self):
        return asdict(self)


def init_lstm_params(cfg: LstmConfig, n_sensors: int = 4, seed: int | None = None) -> ParamStore:
    p = ParamStore(rng_seed=cfg.seed if seed is None else seed)
    register_lstm(p, "lstm", n_sensors * cfg.frame_len, cfg.hidden)
    register_affine(p, "head", cfg.hidden, N_TARGETS)
    return p


def sequence_input(vib: np.ndarray, frame_len: int, scale: float = 1.0) -> np.ndarray:
    """(B, S, W) windows -> (B, W // frame_len, S * frame_len) channel-concatenated frames."""
    B, S, W = vib.shape
    f = frame(vib / scale, frame_len)                 # (B, S, T, F)
    return np.transpose(f, (0, 2, 1, 3)).reshape(B, W // frame_len, S * frame_len)


def lstm_forward(tape: Tape, graphs, cfg: LstmConfig, norm: Normalization):
    batch: GraphBatch = as_batch(graphs)
    if batch.vib.shape[-1] != cfg.vib_window:
        raise ValueError(f"vibration window has {batch.vib.shape[-1]} samples, "
                         f"config expects {cfg.vib_window}")
    seq = sequence_input(batch.vib, cfg.frame_len, norm.vib_scale)
    h = lstm_encode(tape, "lstm", seq, cfg.hidden)
    z = affine(tape, "head", h)
    return tape.add(tape.mul(z, norm.target_std), norm.target_mean)


def lstm_predict(graphs, params: ParamStore, cfg: LstmConfig, norm: Normalization,
                 batch_size: int = 256) -> np.ndarray:
    batch = as_batch(graphs)
    out = []
    for i in range(0, len(batch), batch_size):
        tape = Tape(params)
        out.append(lstm_forward(tape, batch.take(np.arange(i, min(i + batch_size, len(batch)))),
                                cfg, norm).value)
    return np.concatenate(out)
