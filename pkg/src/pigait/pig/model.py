"""Physics-informed graphical model: typed message passing plus two
physics paths that meet at the latent force node.

* force path: a shared recurrent "structure property learner" encodes each
  sensor's vibration window; the per-sensor embeddings are summed.
* biomechanics path: joint states go through sin/cos feature maps, are
  multiplied elementwise by an affine map of the body dimensions (segment
  weight / moment-arm proxies), and are pooled with GATv2-style attention.

Both embeddings update the latent force node; their squared distance is the
consistency penalty of the training loss.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from ..gaitsynth.cycles import N_TARGETS
from ..numerics import ParamStore, Tape, Var
from .graph import EDGE_KINDS, EdgeKind, GraphBatch, GraphInstance, batch_graphs
from .layers import affine, frame, lstm_encode, register_affine, register_lstm

MASK_FILL = -1e30


@dataclass
class PigConfig:
    hidden_dim: int = 32
    attention_heads: int = 2
    lstm_hidden: int = 32
    message_rounds: int = 3
    vib_window: int = 1024
    frame_len: int = 32
    learning_rate: float = 3e-3
    epochs: int = 60
    batch_size: int = 32
    patience: int = 10
    consistency_weight: float = 0.1
    seed: int = 0

    def __post_init__(self):
        for k in ("hidden_dim", "attention_heads", "lstm_hidden", "message_rounds", "vib_window",
                  "frame_len", "epochs", "batch_size", "patience"):
            if int(getattr(self, k)) < 1:
                raise ValueError(f"{k} must be >= 1")
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be >= 0")
        if self.consistency_weight < 0:
            raise ValueError("consistency_weight must be >= 0")
        if self.vib_window % self.frame_len:
            raise ValueError("vib_window must be a multiple of frame_len")

    def to_dict(self):
        return asdict(self)


@dataclass
class Normalization:
    """Training-split statistics: target z-scoring, vibration scale, and
    standardisation of the body and time node features."""

    target_mean: np.ndarray = field(default_factory=lambda: np.zeros(N_TARGETS))
    target_std: np.ndarray = field(default_factory=lambda: np.ones(N_TARGETS))
    vib_scale: float = 1.0
    body_mean: np.ndarray = field(default_factory=lambda: np.zeros(4))
    body_std: np.ndarray = field(default_factory=lambda: np.ones(4))
    time_mean: np.ndarray = field(default_factory=lambda: np.zeros((2, 2)))
    time_std: np.ndarray = field(default_factory=lambda: np.ones((2, 2)))

    STD_FLOOR = 1.0       # deg
    FEATURE_FLOOR = 1e-3

    @classmethod
    def fit(cls, batch: GraphBatch) -> "Normalization":
        if batch.targets is None or len(batch) == 0:
            raise ValueError("normalization needs a non-empty batch with targets")
        mean = batch.targets.mean(axis=0)
        std = np.maximum(batch.targets.std(axis=0), cls.STD_FLOOR)
        nz = batch.vib[batch.vib != 0]
        scale = float(np.sqrt(np.mean(nz ** 2))) if nz.size else 1.0
        return cls(mean, std, scale,
                   batch.body.mean(axis=0), np.maximum(batch.body.std(axis=0), cls.FEATURE_FLOOR),
                   batch.time.mean(axis=0), np.maximum(batch.time.std(axis=0), cls.FEATURE_FLOOR))

    def body(self, x):
        return (x - self.body_mean) / self.body_std

    def time(self, x):
        return (x - self.time_mean) / self.time_std

    _ARRAYS = ("target_mean", "target_std", "body_mean", "body_std", "time_mean", "time_std")

    def to_dict(self):
        d = {k: np.asarray(getattr(self, k)).tolist() for k in self._ARRAYS}
        d["vib_scale"] = float(self.vib_scale)
        return d

    @classmethod
    def from_dict(cls, d):
        kw = {k: np.asarray(d[k], float) for k in cls._ARRAYS if k in d}
        return cls(vib_scale=float(d["vib_scale"]), **kw)


def init_pig_params(cfg: PigConfig, seed: int | None = None) -> ParamStore:
    H, L = cfg.hidden_dim, cfg.lstm_hidden
    p = ParamStore(rng_seed=cfg.seed if seed is None else seed)
    # node encoders
    p.register("enc.joint", (N_TARGETS, H), init="normal", scale=0.5)
    register_affine(p, "enc.time", 2, H)
    register_affine(p, "enc.body", 4, H)
    register_lstm(p, "spl", cfg.frame_len, L)       # structure property learner
    register_affine(p, "enc.vib", L, H)
    # force path
    register_affine(p, "force.vib", L, H)
    # biomechanics path
    half = H // 2
    p.register("bio.sin", (H, half))
    p.register("bio.cos", (H, H - half))
    register_affine(p, "bio.body", 4, H)
    for h in range(cfg.attention_heads):
        p.register(f"bio.att{h}.src", (H, H))
        p.register(f"bio.att{h}.dst", (H, H))
        p.register(f"bio.att{h}.a", (H, 1))
        p.register(f"bio.att{h}.val", (H, H))
    register_affine(p, "bio.out", cfg.attention_heads * H, H)
    # latent force update
    p.register("latent.vib", (H, H))
    p.register("latent.bio", (H, H))
    p.register("latent.b", (H,), init="zeros")
    # typed message passing
    for k in EDGE_KINDS:
        register_affine(p, f"msg.{k.value}", H, H)
    register_affine(p, "update", H, H)
    # readout
    register_affine(p, "readout", H, 1)
    p.register("readout.slot", (N_TARGETS,), init="zeros")
    return p


def as_batch(graphs) -> GraphBatch:
    if isinstance(graphs, GraphBatch):
        return graphs
    if isinstance(graphs, GraphInstance):
        return batch_graphs([graphs])
    return batch_graphs(graphs)


def _check_window(batch: GraphBatch, cfg: PigConfig):
    if batch.vib.shape[-1] != cfg.vib_window:
        raise ValueError(f"vibration window has {batch.vib.shape[-1]} samples, "
                         f"config expects {cfg.vib_window}")


def encode_sensors(tape: Tape, batch: GraphBatch, cfg: PigConfig, norm: Normalization) -> Var:
    """Structure property learner on every sensor window -> (B, S, L)."""
    _check_window(batch, cfg)
    B, S, W = batch.vib.shape
    seq = frame(batch.vib.reshape(B * S, W) / norm.vib_scale, cfg.frame_len)
    h = lstm_encode(tape, "spl", seq, cfg.lstm_hidden)
    return tape.reshape(h, (B, S, cfg.lstm_hidden))


def _force_members(batch: GraphBatch) -> np.ndarray:
    """0/1 over sensors: which vibration nodes are tied to the latent force node."""
    adj = batch.adjacency[EdgeKind.FORCE_CONSTRAINT]
    return adj[batch.force_index, batch.vib_slice]


def force_aggregate(tape: Tape, batch: GraphBatch, cfg: PigConfig, norm: Normalization,
                    sensor_codes: Var | None = None) -> Var:
    """Sum over sensors of the per-sensor force embedding -> (B, H)."""
    if sensor_codes is None:
        sensor_codes = encode_sensors(tape, batch, cfg, norm)
    e = affine(tape, "force.vib", sensor_codes)                 # (B, S, H)
    w = _force_members(batch)
    if not np.all(w == 1.0):
        e = tape.mul(e, w[None, :, None])
    return tape.sum(e, axis=1)


def biomech_constrain(tape: Tape, joint_states, body_features, latent_state, cfg: PigConfig,
                      mask=None, return_attention: bool = False):
    """Attention-pooled products of joint transforms and body transforms -> (B, H).

    ``joint_states`` (B, 12, H); ``body_features`` (B, 4); ``latent_state``
    (B, H) is the attention query. ``mask`` (12,) or (B, 12) of 0/1 removes
    joints from the attention support.
    """
    joint_states = tape._lift(joint_states)
    latent_state = tape._lift(latent_state)
    phi = tape.concat([tape.sin(tape.matmul(joint_states, tape.param("bio.sin"))),
                       tape.cos(tape.matmul(joint_states, tape.param("bio.cos")))], axis=-1)
    psi = affine(tape, "bio.body", body_features)                  # (B, H)
    B = psi.shape[0]
    prod = tape.mul(phi, tape.reshape(psi, (B, 1, cfg.hidden_dim)))   # (B, 12, H)
    q = tape.reshape(latent_state, (B, 1, cfg.hidden_dim))
    heads, weights = [], []
    for h in range(cfg.attention_heads):
        pre = tape.add(tape.matmul(prod, tape.param(f"bio.att{h}.src")),
                       tape.matmul(q, tape.param(f"bio.att{h}.dst")))
        score = tape.matmul(tape.leaky_relu(pre, 0.2), tape.param(f"bio.att{h}.a"))  # (B, 12, 1)
        score = tape.reshape(score, (B, N_TARGETS))
        if mask is not None:
            m = np.broadcast_to(np.asarray(mask, float), (B, N_TARGETS))
            score = tape.add(score, np.where(m > 0, 0.0, MASK_FILL))
        alpha = tape.softmax(score, axis=-1)
        weights.append(alpha)
        val = tape.matmul(prod, tape.param(f"bio.att{h}.val"))        # (B, 12, H)
        pooled = tape.matmul(tape.reshape(alpha, (B, 1, N_TARGETS)), val)
        heads.append(tape.reshape(pooled, (B, cfg.hidden_dim)))
    out = affine(tape, "bio.out", tape.concat(heads, axis=-1))
    if return_attention:
        return out, weights
    return out


@dataclass
class ForwardResult:
    pred: Var           # (B, 12) deg
    consistency: Var    # (B,)
    f_vib: Var
    f_bio: Var


def _initial_states(tape: Tape, batch: GraphBatch, cfg: PigConfig, norm: Normalization,
                    sensor_codes: Var) -> Var:
    B = len(batch)
    H = cfg.hidden_dim
    joint = tape.matmul(batch.joint, tape.param("enc.joint"))             # (B, 12, H)
    time = tape.tanh(affine(tape, "enc.time", norm.time(batch.time)))               # (B, 2, H)
    vib = tape.tanh(affine(tape, "enc.vib", sensor_codes))               # (B, S, H)
    body = tape.reshape(tape.tanh(affine(tape, "enc.body", norm.body(batch.body))), (B, 1, H))
    force = tape.const(np.zeros((B, 1, H)))
    return tape.concat([joint, time, vib, body, force], axis=1)


def _routing(batch: GraphBatch):
    """Per-kind mean-aggregation operators; rows into the latent node are zero."""
    n = batch.n_nodes
    f = batch.force_index
    mats = {k: batch.adjacency[k].copy() for k in EDGE_KINDS}
    for k in mats:
        mats[k][f, :] = 0.0
    deg = sum(mats.values()).sum(axis=1)
    inv = np.where(deg > 0, 1.0 / np.maximum(deg, 1.0), 0.0)
    out = {k: m * inv[:, None] for k, m in mats.items() if m.any()}
    keep = np.ones((n, 1))
    keep[f] = 0.0
    return out, keep


def pig_forward(tape: Tape, graphs, cfg: PigConfig, norm: Normalization) -> ForwardResult:
    batch = as_batch(graphs)
    B, H = len(batch), cfg.hidden_dim
    codes = encode_sensors(tape, batch, cfg, norm)
    state = _initial_states(tape, batch, cfg, norm, codes)
    f_vib = force_aggregate(tape, batch, cfg, norm, codes)
    routes, keep = _routing(batch)
    onehot_f = np.zeros((batch.n_nodes, 1))
    onehot_f[batch.force_index] = 1.0
    body_linked = batch.adjacency[EdgeKind.FORCE_CONSTRAINT][batch.force_index, batch.body_index] > 0
    body_feat = norm.body(batch.body) if body_linked else np.zeros_like(batch.body)
    f_bio = None
    for _ in range(cfg.message_rounds):
        agg = None
        for kind, A in routes.items():
            msg = tape.tanh(affine(tape, f"msg.{kind.value}", state))
            part = tape.matmul(A, msg)
            agg = part if agg is None else tape.add(agg, part)
        if agg is not None:
            upd = tape.tanh(affine(tape, "update", agg))
            state = tape.add(state, tape.mul(upd, keep))
        joints = tape.getitem(state, (slice(None), slice(0, N_TARGETS)))
        latent = tape.reshape(tape.getitem(state, (slice(None), batch.force_index)), (B, H))
        f_bio = biomech_constrain(tape, joints, body_feat, latent, cfg)
        d_latent = tape.tanh(tape.add(tape.add(tape.matmul(f_vib, tape.param("latent.vib")),
                                               tape.matmul(f_bio, tape.param("latent.bio"))),
                                      tape.param("latent.b")))
        state = tape.add(state, tape.mul(tape.reshape(d_latent, (B, 1, H)), onehot_f))
    joints = tape.getitem(state, (slice(None), slice(0, N_TARGETS)))
    z = tape.reshape(affine(tape, "readout", joints), (B, N_TARGETS))
    z = tape.add(z, tape.param("readout.slot"))
    pred = tape.add(tape.mul(z, norm.target_std), norm.target_mean)
    diff = tape.sub(f_vib, f_bio)
    consistency = tape.mean(tape.square(diff), axis=-1)
    return ForwardResult(pred, consistency, f_vib, f_bio)


def pig_loss(tape: Tape, pred, target, consistency, lam: float) -> Var:
    """Mean over the batch of (MSE over the 12 targets + lam * consistency)."""
    if lam < 0:
        raise ValueError("consistency weight must be >= 0")
    pred = tape._lift(pred)
    target = np.asarray(target, dtype=float)
    if not np.isfinite(target).all():
        raise ValueError("non-finite target")
    mse = tape.mean(tape.square(tape.sub(pred, target)))
    if lam == 0:
        return mse
    return tape.add(mse, tape.mul(tape.mean(consistency), float(lam)))


def pig_predict(graphs, params: ParamStore, cfg: PigConfig, norm: Normalization,
                batch_size: int = 256) -> np.ndarray:
    batch = as_batch(graphs)
    out = []
    for i in range(0, len(batch), batch_size):
        tape = Tape(params)
        out.append(pig_forward(tape, batch.take(np.arange(i, min(i + batch_size, len(batch)))),
                               cfg, norm).pred.value)
    return np.concatenate(out)


def dead_parameters(params: ParamStore, grad: np.ndarray) -> list[str]:
    """Named slices whose gradient is identically zero."""
    grad = np.asarray(grad)
    dead = []
    for name in params.names():
        off, shape = params.slices[name]
        if not np.any(grad[off:off + int(np.prod(shape))]):
            dead.append(name)
    return dead
