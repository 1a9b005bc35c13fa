"""Small tape-level building blocks: affine maps and a framed LSTM encoder."""

from __future__ import annotations

import numpy as np

from ..numerics import ParamStore, Tape, Var


def register_affine(params: ParamStore, name: str, n_in: int, n_out: int, bias: bool = True):
    params.register(f"{name}.W", (n_in, n_out))
    if bias:
        params.register(f"{name}.b", (n_out,), init="zeros")


def affine(tape: Tape, name: str, x, bias: bool = True) -> Var:
    y = tape.matmul(x, tape.param(f"{name}.W"))
    return tape.add(y, tape.param(f"{name}.b")) if bias else y


def register_lstm(params: ParamStore, name: str, n_in: int, hidden: int):
    params.register(f"{name}.Wx", (n_in, 4 * hidden))
    params.register(f"{name}.Wh", (hidden, 4 * hidden))
    b = params.register(f"{name}.b", (4 * hidden,), init="zeros")
    b[hidden:2 * hidden] = 1.0   # forget-gate bias


def frame(x: np.ndarray, frame_len: int) -> np.ndarray:
    """(..., W) -> (..., W // frame_len, frame_len); W must divide evenly."""
    w = x.shape[-1]
    if w % frame_len:
        raise ValueError(f"window length {w} is not a multiple of frame length {frame_len}")
    return x.reshape(*x.shape[:-1], w // frame_len, frame_len)


def lstm_encode(tape: Tape, name: str, seq, hidden: int) -> Var:
    """Run an LSTM over ``seq`` of shape (B, T, F); return the final hidden state (B, H)."""
    Wx, Wh, b = (tape.param(f"{name}.{k}") for k in ("Wx", "Wh", "b"))
    if isinstance(seq, Var):
        B, T, _ = seq.shape
        steps = [tape.getitem(seq, (slice(None), t, slice(None))) for t in range(T)]
    else:
        # plain data: per-step slices need no tape nodes
        seq = np.asarray(seq, dtype=float)
        B, T, _ = seq.shape
        steps = [np.ascontiguousarray(seq[:, t, :]) for t in range(T)]
    h = tape.const(np.zeros((B, hidden)))
    c = tape.const(np.zeros((B, hidden)))
    H = hidden
    for t in range(T):
        z = tape.add(tape.add(tape.matmul(steps[t], Wx), b), tape.matmul(h, Wh))
        i = tape.sigmoid(tape.getitem(z, (slice(None), slice(0, H))))
        f = tape.sigmoid(tape.getitem(z, (slice(None), slice(H, 2 * H))))
        g = tape.tanh(tape.getitem(z, (slice(None), slice(2 * H, 3 * H))))
        o = tape.sigmoid(tape.getitem(z, (slice(None), slice(3 * H, 4 * H))))
        c = tape.add(tape.mul(f, c), tape.mul(i, g))
        h = tape.mul(o, tape.tanh(c))
    return h
