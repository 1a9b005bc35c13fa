"""Heterogeneous gait-cycle graph: typed nodes, typed edges, batching.

One graph per gait cycle:

* 12 joint nodes (hip / knee / ankle at four cycle events)
* 2 time nodes (foot strike, foot off)
* one vibration node per sensor, holding that sensor's raw cycle window
* 1 body node (mass and segment lengths)
* 1 latent force node, written only by the two physics paths

Edges are undirected and stored once; message passing uses both directions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from ..gaitsynth.cycles import EVENTS, N_TARGETS, SLOTS, GaitCycle, TargetAngles, extract_targets
from ..gaitsynth.synth import TrialRecord
from ..gaitsynth.templates import JOINTS

VIB_WINDOW = 1024
# fixed feature scales, so features are O(1) without data-dependent stats
DURATION_SCALE = 1.1      # s
MASS_SCALE = 75.0         # kg
LENGTH_SCALE = (0.42, 0.42, 0.26)  # thigh, shank, foot, m


class NodeKind(str, Enum):
    HIP = "hip"
    KNEE = "knee"
    ANKLE = "ankle"
    TIME = "time"
    VIBRATION = "vibration"
    BODY = "body"
    LATENT_FORCE = "latent_force"


JOINT_KINDS = (NodeKind.HIP, NodeKind.KNEE, NodeKind.ANKLE)


class EdgeKind(str, Enum):
    SPATIAL = "spatial"
    TEMPORAL = "temporal"
    INDIRECT = "indirect"
    TIME_CONSTRAINT = "time_constraint"
    BODY_DIMENSION = "body_dimension"
    FORCE_CONSTRAINT = "force_constraint"


EDGE_KINDS = tuple(EdgeKind)

_ALLOWED = {
    EdgeKind.SPATIAL: lambda a, b: a in JOINT_KINDS and b in JOINT_KINDS and a != b,
    EdgeKind.TEMPORAL: lambda a, b: a in JOINT_KINDS and a == b,
    EdgeKind.INDIRECT: lambda a, b: {a, b} <= set(JOINT_KINDS) | {NodeKind.VIBRATION}
    and (a == NodeKind.VIBRATION) != (b == NodeKind.VIBRATION),
    EdgeKind.TIME_CONSTRAINT: lambda a, b: (a == NodeKind.TIME and b in JOINT_KINDS)
    or (b == NodeKind.TIME and a in JOINT_KINDS),
    EdgeKind.BODY_DIMENSION: lambda a, b: (a == NodeKind.BODY and b in JOINT_KINDS)
    or (b == NodeKind.BODY and a in JOINT_KINDS),
    EdgeKind.FORCE_CONSTRAINT: lambda a, b: NodeKind.LATENT_FORCE in (a, b)
    and ({a, b} - {NodeKind.LATENT_FORCE}) <= {NodeKind.BODY, NodeKind.VIBRATION},
}


class GraphError(ValueError):
    pass


@dataclass
class Node:
    kind: NodeKind
    slot: int               # joint: event index; time: 0 strike / 1 off; vibration: sensor
    features: np.ndarray


@dataclass
class GraphInstance:
    nodes: list
    edges: list             # (src, dst, EdgeKind)
    cycle_ref: GaitCycle | None = None
    targets: TargetAngles | None = None
    gait_type: str = ""
    subject_id: int = -1
    valid_length: int = 0   # samples of real signal in each vibration window

    def count(self, kind: NodeKind) -> int:
        return sum(n.kind == kind for n in self.nodes)

    def edges_of(self, kind: EdgeKind):
        return [e for e in self.edges if e[2] == kind]


def joint_node_index(joint: str, event: str) -> int:
    return SLOTS.index((joint, event))


def _edge_list(n_sensors: int):
    """Edges in canonical node numbering (joints 0-11 in SLOTS order, then
    time, vibration, body, latent force)."""
    t0 = N_TARGETS
    v0 = t0 + 2
    body = v0 + n_sensors
    force = body + 1
    E = []
    for e, _ in enumerate(EVENTS):
        for a, b in zip(JOINTS[:-1], JOINTS[1:]):
            E.append((joint_node_index(a, EVENTS[e]), joint_node_index(b, EVENTS[e]), EdgeKind.SPATIAL))
    for j in JOINTS:
        for a, b in zip(EVENTS[:-1], EVENTS[1:]):
            E.append((joint_node_index(j, a), joint_node_index(j, b), EdgeKind.TEMPORAL))
    for s in range(n_sensors):
        for k in range(N_TARGETS):
            E.append((v0 + s, k, EdgeKind.INDIRECT))
    for t in range(2):
        for k in range(N_TARGETS):
            E.append((t0 + t, k, EdgeKind.TIME_CONSTRAINT))
    for k in range(N_TARGETS):
        E.append((body, k, EdgeKind.BODY_DIMENSION))
    E.append((body, force, EdgeKind.FORCE_CONSTRAINT))
    for s in range(n_sensors):
        E.append((force, v0 + s, EdgeKind.FORCE_CONSTRAINT))
    return E


def body_features(anth) -> np.ndarray:
    return np.array([anth.body_mass / MASS_SCALE,
                     anth.thigh_length / LENGTH_SCALE[0],
                     anth.shank_length / LENGTH_SCALE[1],
                     anth.foot_length / LENGTH_SCALE[2]])


def cycle_window(trial: TrialRecord, cycle: GaitCycle, window: int = VIB_WINDOW):
    """Per-sensor vibration samples over the cycle, zero-padded to ``window``."""
    v = trial.vibration
    i0 = int(round((cycle.start - v.t0) * v.sample_rate))
    i1 = int(round((cycle.end - v.t0) * v.sample_rate))
    if i0 < 0 or i1 > len(v):
        raise GraphError(f"cycle [{cycle.start}, {cycle.end}] s outside the vibration record")
    n = i1 - i0
    if n > window:
        raise GraphError(f"cycle spans {n} vibration samples, longer than the {window}-sample window")
    out = np.zeros((v.n_sensors, window))
    out[:, :n] = v.signals[:, i0:i1]
    return out, n


def build_graph(trial: TrialRecord, cycle: GaitCycle, window: int = VIB_WINDOW,
                with_targets: bool = True) -> GraphInstance:
    if cycle.trial_id != trial.trial_id:
        raise GraphError(f"cycle of trial {cycle.trial_id!r} does not belong to trial {trial.trial_id!r}")
    if cycle.foot not in trial.trajectories:
        raise GraphError(f"trial {trial.trial_id!r} has no foot {cycle.foot!r}")
    if not any(c == cycle for c in trial.cycles()):
        raise GraphError(f"cycle {cycle} is not one of trial {trial.trial_id!r}'s cycles")
    win, n_valid = cycle_window(trial, cycle, window)
    nodes = []
    for k, (joint, event) in enumerate(SLOTS):
        onehot = np.zeros(N_TARGETS)
        onehot[k] = 1.0
        nodes.append(Node(NodeKind(joint), EVENTS.index(event), onehot))
    dur = cycle.duration / DURATION_SCALE
    nodes.append(Node(NodeKind.TIME, 0, np.array([0.0, dur])))
    nodes.append(Node(NodeKind.TIME, 1, np.array([cycle.stance_fraction, dur])))
    for s in range(win.shape[0]):
        nodes.append(Node(NodeKind.VIBRATION, s, win[s]))
    nodes.append(Node(NodeKind.BODY, 0, body_features(trial.anthropometry)))
    nodes.append(Node(NodeKind.LATENT_FORCE, 0, np.zeros(1)))
    targets = extract_targets(trial.trajectories[cycle.foot], cycle) if with_targets else None
    g = GraphInstance(nodes, _edge_list(win.shape[0]), cycle, targets,
                      trial.gait_type.value, trial.subject_id, n_valid)
    validate_graph(g)
    return g


def validate_graph(g: GraphInstance) -> None:
    n = len(g.nodes)
    for src, dst, kind in g.edges:
        if not (0 <= src < n and 0 <= dst < n) or src == dst:
            raise GraphError(f"edge ({src}, {dst}) out of range or a self-loop")
        a, b = g.nodes[src].kind, g.nodes[dst].kind
        if not _ALLOWED[EdgeKind(kind)](a, b):
            raise GraphError(f"{kind.value} edge not allowed between {a.value} and {b.value}")
    # connectivity by union-find
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for src, dst, _ in g.edges:
        parent[find(src)] = find(dst)
    if len({find(i) for i in range(n)}) != 1:
        raise GraphError("graph is not connected")


def relabel(g: GraphInstance, perm) -> GraphInstance:
    """Isomorphic copy with node ``i`` moved to position ``perm[i]``."""
    perm = np.asarray(perm)
    nodes = [None] * len(g.nodes)
    for i, node in enumerate(g.nodes):
        nodes[perm[i]] = node
    edges = [(int(perm[s]), int(perm[d]), k) for s, d, k in g.edges]
    return GraphInstance(nodes, edges, g.cycle_ref, g.targets, g.gait_type, g.subject_id,
                         g.valid_length)


def without_edges(g: GraphInstance, kind: EdgeKind) -> GraphInstance:
    """Same graph minus every edge of one family (no connectivity check)."""
    return GraphInstance(list(g.nodes), [e for e in g.edges if e[2] != kind], g.cycle_ref,
                         g.targets, g.gait_type, g.subject_id, g.valid_length)


# -- canonical layout and batching --------------------------------------------

def canonical_order(g: GraphInstance) -> list[int]:
    """Node indices sorted into joints (SLOTS order), time, vibration, body, force."""
    rank = {NodeKind.TIME: 1, NodeKind.VIBRATION: 2, NodeKind.BODY: 3, NodeKind.LATENT_FORCE: 4}

    def key(i):
        node = g.nodes[i]
        if node.kind in JOINT_KINDS:
            return (0, SLOTS.index((node.kind.value, EVENTS[node.slot])))
        return (rank[node.kind], node.slot)

    return sorted(range(len(g.nodes)), key=key)


@dataclass
class GraphBatch:
    """Graphs with identical topology, stacked along a leading batch axis."""

    joint: np.ndarray         # (B, 12, 12) slot one-hots
    time: np.ndarray          # (B, 2, 2)
    vib: np.ndarray           # (B, S, W)
    body: np.ndarray          # (B, 4)
    adjacency: dict           # EdgeKind -> (N, N) 0/1, adjacency[k][dst, src]
    targets: np.ndarray | None = None   # (B, 12)
    gait_types: list = field(default_factory=list)
    subject_ids: list = field(default_factory=list)

    def __len__(self):
        return self.joint.shape[0]

    @property
    def n_sensors(self) -> int:
        return self.vib.shape[1]

    @property
    def n_nodes(self) -> int:
        return N_TARGETS + 2 + self.n_sensors + 2

    @property
    def force_index(self) -> int:
        return self.n_nodes - 1

    @property
    def body_index(self) -> int:
        return self.n_nodes - 2

    @property
    def vib_slice(self) -> slice:
        return slice(N_TARGETS + 2, N_TARGETS + 2 + self.n_sensors)

    def take(self, idx) -> "GraphBatch":
        idx = np.asarray(idx, dtype=int)
        return GraphBatch(self.joint[idx], self.time[idx], self.vib[idx], self.body[idx],
                          self.adjacency, None if self.targets is None else self.targets[idx],
                          [self.gait_types[i] for i in idx], [self.subject_ids[i] for i in idx])


def _canonical_adjacency(g: GraphInstance, order) -> dict:
    pos = np.empty(len(order), dtype=int)
    pos[np.asarray(order)] = np.arange(len(order))
    n = len(order)
    adj = {k: np.zeros((n, n)) for k in EDGE_KINDS}
    for s, d, kind in g.edges:
        a, b = pos[s], pos[d]
        adj[EdgeKind(kind)][b, a] = 1.0
        adj[EdgeKind(kind)][a, b] = 1.0
    return adj


def batch_graphs(graphs) -> GraphBatch:
    graphs = list(graphs)
    if not graphs:
        raise GraphError("cannot batch zero graphs")
    joint, time, vib, body, targets = [], [], [], [], []
    adj = None
    for g in graphs:
        order = canonical_order(g)
        nodes = [g.nodes[i] for i in order]
        a = _canonical_adjacency(g, order)
        if adj is None:
            adj = a
            kinds = [n.kind for n in nodes]
        elif [n.kind for n in nodes] != kinds or any(not np.array_equal(adj[k], a[k]) for k in EDGE_KINDS):
            raise GraphError("graphs in one batch must share the same topology")
        joint.append(np.stack([n.features for n in nodes[:N_TARGETS]]))
        time.append(np.stack([n.features for n in nodes[N_TARGETS:N_TARGETS + 2]]))
        vib.append(np.stack([n.features for n in nodes if n.kind == NodeKind.VIBRATION]))
        body.append(nodes[-2].features)
        if g.targets is not None:
            targets.append(g.targets.values)
    if kinds[-1] != NodeKind.LATENT_FORCE or kinds[-2] != NodeKind.BODY:
        raise GraphError("graph needs exactly one body node and one latent force node")
    widths = {v.shape[-1] for v in vib}
    if len(widths) != 1:
        raise GraphError(f"vibration windows of unequal length {sorted(widths)}")
    return GraphBatch(np.stack(joint), np.stack(time), np.stack(vib), np.stack(body), adj,
                      np.stack(targets) if len(targets) == len(graphs) else None,
                      [g.gait_type for g in graphs], [g.subject_id for g in graphs])
