"""From trial records to per-split graph batches."""

from __future__ import annotations

from dataclasses import dataclass

from ..gaitsynth.synth import TrialRecord
from .graph import VIB_WINDOW, GraphBatch, GraphInstance, batch_graphs, build_graph


def graphs_from_records(records, window: int = VIB_WINDOW) -> list[GraphInstance]:
    out = []
    for rec in records:
        for cyc in rec.cycles():
            out.append(build_graph(rec, cyc, window))
    return out


@dataclass
class SplitData:
    train: GraphBatch
    val: GraphBatch | None
    test: GraphBatch | None
    membership: dict        # split -> trial ids


def split_graphs(graphs, membership: dict) -> dict:
    """Group graphs by the split their trial belongs to."""
    where = {tid: name for name, ids in membership.items() for tid in ids}
    out = {name: [] for name in membership}
    for g in graphs:
        tid = g.cycle_ref.trial_id
        if tid not in where:
            raise KeyError(f"trial {tid!r} is not assigned to any split")
        out[where[tid]].append(g)
    return out


def make_split_data(records: list[TrialRecord], membership: dict,
                    window: int = VIB_WINDOW) -> SplitData:
    by = split_graphs(graphs_from_records(records, window), membership)
    b = {k: (batch_graphs(v) if v else None) for k, v in by.items()}
    if b.get("train") is None:
        raise ValueError("empty training split")
    return SplitData(b["train"], b.get("val"), b.get("test"), membership)
