"""Mini-batch Adam training with validation early stopping, shared by PIG and the LSTM baseline."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..numerics import NonFiniteError, ParamStore, value_and_grad
from .baseline import LstmConfig, init_lstm_params, lstm_forward, lstm_predict
from .graph import GraphBatch
from .model import (Normalization, PigConfig, as_batch, init_pig_params, pig_forward, pig_loss,
                    pig_predict)

log = logging.getLogger(__name__)

ADAM_BETAS = (0.9, 0.999)
ADAM_EPS = 1e-8


class DivergenceError(FloatingPointError):
    def __init__(self, epoch: int, detail: str = ""):
        self.epoch = epoch
        super().__init__(f"training diverged at epoch {epoch}" + (f": {detail}" if detail else ""))


@dataclass
class Adam:
    lr: float
    betas: tuple = ADAM_BETAS
    eps: float = ADAM_EPS
    m: np.ndarray | None = None
    v: np.ndarray | None = None
    t: int = 0

    def step(self, x: np.ndarray, g: np.ndarray) -> np.ndarray:
        if self.m is None:
            self.m = np.zeros_like(x)
            self.v = np.zeros_like(x)
        b1, b2 = self.betas
        self.t += 1
        self.m = b1 * self.m + (1 - b1) * g
        self.v = b2 * self.v + (1 - b2) * g * g
        mhat = self.m / (1 - b1 ** self.t)
        vhat = self.v / (1 - b2 ** self.t)
        return x - self.lr * mhat / (np.sqrt(vhat) + self.eps)


@dataclass
class History:
    rows: list = field(default_factory=list)   # dicts: epoch, train_loss, train_mse, val_mae
    best_epoch: int = 0
    stopped_early: bool = False

    COLUMNS = ("epoch", "train_loss", "train_mse", "val_mae")

    def to_csv(self) -> str:
        lines = [",".join(self.COLUMNS)]
        for r in self.rows:
            lines.append(",".join([str(r["epoch"])] + ["%.17g" % r[c] for c in self.COLUMNS[1:]]))
        return "\n".join(lines) + "\n"

    @property
    def final(self) -> dict:
        return self.rows[-1]


def fit(params: ParamStore, train: GraphBatch, loss_fn: Callable, predict_fn: Callable,
        val: GraphBatch | None, lr: float, epochs: int, batch_size: int, patience: int,
        seed: int) -> tuple[ParamStore, History]:
    """Generic loop. ``loss_fn(tape, batch) -> (loss Var, mse float)``;
    ``predict_fn(params, batch) -> (B, 12)``."""
    if len(train) == 0:
        raise ValueError("empty training split")
    params = params.copy()
    opt = Adam(lr)
    rng = np.random.default_rng([seed, 0x7AA1])
    hist = History()
    best = np.inf
    best_values = params.values.copy()
    since = 0
    n = len(train)
    for epoch in range(1, epochs + 1):
        order = rng.permutation(n)
        tot_loss = tot_mse = 0.0
        for i in range(0, n, batch_size):
            mb = train.take(order[i:i + batch_size])
            try:
                loss, g, mse = value_and_grad(lambda tape: loss_fn(tape, mb), params)
            except NonFiniteError as e:
                raise DivergenceError(epoch, str(e)) from e
            if not np.isfinite(loss):
                raise DivergenceError(epoch, "loss is NaN")
            tot_loss += loss * len(mb)
            tot_mse += mse * len(mb)
            params.values[:] = opt.step(params.values, g)
        if not np.isfinite(params.values).all():
            raise DivergenceError(epoch, "non-finite parameters")
        row = {"epoch": epoch, "train_loss": tot_loss / n, "train_mse": tot_mse / n}
        if val is not None and len(val):
            pred = predict_fn(params, val)
            row["val_mae"] = float(np.mean(np.abs(pred - val.targets)))
            score = row["val_mae"]
        else:
            row["val_mae"] = float("nan")
            score = row["train_loss"]
        hist.rows.append(row)
        log.info("epoch %d loss %.4g mse %.4g val_mae %.4g", epoch, row["train_loss"],
                 row["train_mse"], row["val_mae"])
        if score < best:
            best, since, hist.best_epoch = score, 0, epoch
            best_values = params.values.copy()
        else:
            since += 1
            if since >= patience:
                hist.stopped_early = True
                break
    params.values[:] = best_values
    return params, hist


def train(dataset, cfg: PigConfig, val=None, norm: Normalization | None = None,
          params: ParamStore | None = None) -> tuple[ParamStore, History, Normalization]:
    """Train the PIG model on a list of graphs (or a batch)."""
    train_b = as_batch(dataset)
    val_b = as_batch(val) if val is not None else None
    norm = norm or Normalization.fit(train_b)
    params = params or init_pig_params(cfg)
    lam = cfg.consistency_weight

    def loss_fn(tape, mb):
        r = pig_forward(tape, mb, cfg, norm)
        loss = pig_loss(tape, r.pred, mb.targets, r.consistency, lam)
        return loss, float(np.mean((r.pred.value - mb.targets) ** 2))

    def predict_fn(p, b):
        return pig_predict(b, p, cfg, norm)

    p, h = fit(params, train_b, loss_fn, predict_fn, val_b, cfg.learning_rate, cfg.epochs,
               cfg.batch_size, cfg.patience, cfg.seed)
    return p, h, norm


def train_lstm(dataset, cfg: LstmConfig, val=None, norm: Normalization | None = None,
               params: ParamStore | None = None) -> tuple[ParamStore, History, Normalization]:
    train_b = as_batch(dataset)
    val_b = as_batch(val) if val is not None else None
    norm = norm or Normalization.fit(train_b)
    params = params or init_lstm_params(cfg, train_b.n_sensors)

    def loss_fn(tape, mb):
        pred = lstm_forward(tape, mb, cfg, norm)
        loss = tape.mean(tape.square(tape.sub(pred, mb.targets)))
        return loss, float(loss.value)

    def predict_fn(p, b):
        return lstm_predict(b, p, cfg, norm)

    p, h = fit(params, train_b, loss_fn, predict_fn, val_b, cfg.learning_rate, cfg.epochs,
               cfg.batch_size, cfg.patience, cfg.seed)
    return p, h, norm
