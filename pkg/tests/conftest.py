"""Shared fixtures: a small synthesized dataset and random small graphs."""

from __future__ import annotations

import numpy as np
import pytest

from pigait.floorsim import FloorModel
from pigait.gaitsynth.cycles import EVENTS, N_TARGETS, SLOTS, TargetAngles
from pigait.gaitsynth.dataset import Protocol, plan_trials, split_trials, synthesize
from pigait.gaitsynth.templates import GaitType
from pigait.pig.graph import GraphInstance, Node, NodeKind, _edge_list, batch_graphs
from pigait.pig.data import make_split_data
from pigait.pig.model import PigConfig
from pigait.pig.baseline import LstmConfig

SMALL_PROTOCOL = Protocol(subjects=3, normal_trials=3, abnormal_trials=3)


@pytest.fixture(scope="session")
def small_specs():
    return plan_trials(SMALL_PROTOCOL, 7)


@pytest.fixture(scope="session")
def small_records(small_specs):
    return synthesize(small_specs, FloorModel(), workers=1)


@pytest.fixture(scope="session")
def small_split(small_specs, small_records):
    mem = split_trials(small_specs, "per_trial", 0)
    return make_split_data(small_records, mem)


def tiny_pig(**over) -> PigConfig:
    kw = dict(hidden_dim=6, attention_heads=2, lstm_hidden=5, message_rounds=2, vib_window=64,
              frame_len=16, epochs=3, batch_size=4, seed=3)
    kw.update(over)
    return PigConfig(**kw)


def tiny_lstm(**over) -> LstmConfig:
    kw = dict(hidden=6, vib_window=64, frame_len=16, epochs=3, batch_size=4, seed=3)
    kw.update(over)
    return LstmConfig(**kw)


def random_graph(rng, n_sensors: int = 4, window: int = 64, gait: str | None = None) -> GraphInstance:
    """Valid graph with random features and targets, no synthesis involved."""
    nodes = []
    for k, (joint, event) in enumerate(SLOTS):
        onehot = np.zeros(N_TARGETS)
        onehot[k] = 1.0
        nodes.append(Node(NodeKind(joint), EVENTS.index(event), onehot))
    dur = rng.uniform(0.9, 1.2)
    off = rng.uniform(0.55, 0.70)
    nodes.append(Node(NodeKind.TIME, 0, np.array([0.0, dur])))
    nodes.append(Node(NodeKind.TIME, 1, np.array([off, dur])))
    for s in range(n_sensors):
        nodes.append(Node(NodeKind.VIBRATION, s, rng.normal(0.0, 1.0, window)))
    nodes.append(Node(NodeKind.BODY, 0, rng.uniform(0.8, 1.2, 4)))
    nodes.append(Node(NodeKind.LATENT_FORCE, 0, np.zeros(1)))
    gait = gait or str(rng.choice([g.value for g in GaitType]))
    targets = TargetAngles(rng.normal(15.0, 10.0, N_TARGETS))
    return GraphInstance(nodes, _edge_list(n_sensors), None, targets, gait, int(rng.integers(5)), window)


@pytest.fixture
def random_batch():
    def make(n: int, seed: int = 0, **kw):
        rng = np.random.default_rng(seed)
        return batch_graphs([random_graph(rng, **kw) for _ in range(n)])
    return make


# -- acceptance summary ------------------------------------------------------------

ACCEPTANCE: dict = {}


def record_criterion(number: int, ok: bool, detail: str) -> bool:
    ACCEPTANCE[number] = (bool(ok), detail)
    print(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")
    return bool(ok)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
