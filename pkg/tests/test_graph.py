import numpy as np
import pytest

from pigait.gaitsynth.cycles import GaitCycle
from pigait.pig.graph import (EDGE_KINDS, EdgeKind, GraphError, NodeKind, batch_graphs, build_graph,
                              canonical_order, relabel, validate_graph, without_edges)
from pigait.pig.model import Normalization, init_pig_params, pig_predict

from conftest import random_graph, tiny_pig

EDGE_COUNTS = {EdgeKind.SPATIAL: 8, EdgeKind.TEMPORAL: 9, EdgeKind.INDIRECT: 48,
               EdgeKind.TIME_CONSTRAINT: 24, EdgeKind.BODY_DIMENSION: 12,
               EdgeKind.FORCE_CONSTRAINT: 5}


@pytest.fixture(scope="module")
def real_graph(small_records):
    rec = small_records[0]
    return build_graph(rec, rec.cycles()[0], window=1024)


def test_node_and_edge_counts(real_graph):
    g = real_graph
    assert len(g.nodes) == 20
    assert [g.count(k) for k in NodeKind] == [4, 4, 4, 2, 4, 1, 1]
    assert {k: len(g.edges_of(k)) for k in EDGE_KINDS} == EDGE_COUNTS
    assert len(g.edges) == 106
    assert g.targets is not None and g.targets.values.shape == (12,)
    assert 0 < g.valid_length <= 1024


def test_vibration_nodes_hold_the_cycle_window(small_records, real_graph):
    rec = small_records[0]
    cyc = rec.cycles()[0]
    v = rec.vibration
    i0 = int(round((cyc.start - v.t0) * v.sample_rate))
    vib = [n for n in real_graph.nodes if n.kind == NodeKind.VIBRATION]
    n = real_graph.valid_length
    for s, node in enumerate(vib):
        assert np.array_equal(node.features[:n], v.signals[s, i0:i0 + n])
        assert np.all(node.features[n:] == 0.0)


def test_bad_edge_kind_is_rejected(real_graph):
    g = real_graph
    bad = relabel(g, np.arange(20))
    bad.edges = bad.edges + [(0, 19, EdgeKind.SPATIAL)]
    with pytest.raises(GraphError, match="spatial"):
        validate_graph(bad)
    loop = relabel(g, np.arange(20))
    loop.edges = loop.edges + [(3, 3, EdgeKind.TEMPORAL)]
    with pytest.raises(GraphError):
        validate_graph(loop)


def test_disconnected_graph_is_rejected(real_graph):
    g = without_edges(without_edges(real_graph, EdgeKind.BODY_DIMENSION), EdgeKind.FORCE_CONSTRAINT)
    with pytest.raises(GraphError, match="connected"):
        validate_graph(g)


def test_cycle_from_another_trial_is_rejected(small_records):
    a, b = small_records[0], small_records[1]
    with pytest.raises(GraphError, match="does not belong"):
        build_graph(a, b.cycles()[0], window=1024)
    c = a.cycles()[0]
    with pytest.raises(GraphError):
        build_graph(a, GaitCycle(c.start, c.end + 0.01, c.foot_off, c.trial_id, c.foot), window=1024)
    with pytest.raises(GraphError, match="longer"):
        build_graph(a, c, window=512)


def test_relabel_gives_identical_predictions():
    rng = np.random.default_rng(0)
    cfg = tiny_pig()
    params = init_pig_params(cfg)
    for trial in range(5):
        g = random_graph(rng)
        perm = rng.permutation(len(g.nodes))
        h = relabel(g, perm)
        validate_graph(h)
        assert [h.nodes[i] for i in canonical_order(h)] == [g.nodes[i] for i in canonical_order(g)]
        norm = Normalization()
        assert np.array_equal(pig_predict([g], params, cfg, norm), pig_predict([h], params, cfg, norm))


def test_batch_rejects_mixed_topology():
    rng = np.random.default_rng(1)
    a, b = random_graph(rng), random_graph(rng, n_sensors=3)
    with pytest.raises(GraphError):
        batch_graphs([a, b])
    with pytest.raises(GraphError):
        batch_graphs([a, without_edges(random_graph(rng), EdgeKind.TEMPORAL)])
    with pytest.raises(GraphError):
        batch_graphs([])


def test_batch_layout():
    rng = np.random.default_rng(2)
    gs = [random_graph(rng) for _ in range(3)]
    b = batch_graphs(gs)
    assert len(b) == 3 and b.n_nodes == 20 and b.force_index == 19 and b.body_index == 18
    assert b.vib.shape == (3, 4, 64) and b.targets.shape == (3, 12)
    for k in EDGE_KINDS:
        assert np.array_equal(b.adjacency[k], b.adjacency[k].T)
    assert b.adjacency[EdgeKind.FORCE_CONSTRAINT][19, 14:18].tolist() == [1, 1, 1, 1]
    sub = b.take([2, 0])
    assert np.array_equal(sub.vib[0], b.vib[2]) and sub.gait_types == [gs[2].gait_type, gs[0].gait_type]
