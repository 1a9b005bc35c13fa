"""MAE breakdown tables: per segment, gait type, phase, joint, overall."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..gaitsynth.cycles import EVENTS, SLOTS, SWING_EVENTS
from ..gaitsynth.templates import JOINTS, GaitType

STANCE_EVENTS = tuple(e for e in EVENTS if e not in SWING_EVENTS)
PHASES = {"stance": STANCE_EVENTS, "swing": SWING_EVENTS}
N_REPORT_ROWS = len(SLOTS) + len(GaitType) + len(PHASES) + len(JOINTS) + 1


@dataclass
class ReportRow:
    group: str      # segment | gait_type | phase | joint | overall
    key: str
    mae: float
    n: int          # number of cycles contributing


@dataclass
class Report:
    rows: list

    def __len__(self):
        return len(self.rows)

    def get(self, group: str, key: str) -> ReportRow:
        for r in self.rows:
            if r.group == group and r.key == key:
                return r
        raise KeyError((group, key))

    @property
    def overall(self) -> float:
        return self.get("overall", "all").mae

    def to_csv(self) -> str:
        return reports_to_csv({"mae": self})


def _mask_slots(events=None, joint=None):
    return np.array([(events is None or e in events) and (joint is None or j == joint)
                     for j, e in SLOTS])


def evaluate(pred, targets, gait_types) -> Report:
    pred = np.asarray(pred, dtype=float)
    targets = np.asarray(targets, dtype=float)
    if pred.shape != targets.shape or pred.ndim != 2 or pred.shape[1] != len(SLOTS):
        raise ValueError(f"pred {pred.shape} and targets {targets.shape} must both be (n, 12)")
    if pred.shape[0] == 0:
        raise ValueError("empty evaluation split")
    err = np.abs(pred - targets)
    gt = np.asarray([GaitType(g).value for g in gait_types])
    n = err.shape[0]
    rows = []
    for k, (j, e) in enumerate(SLOTS):
        rows.append(ReportRow("segment", f"{j}_{e}", float(err[:, k].mean()), n))
    for g in GaitType:
        sel = gt == g.value
        rows.append(ReportRow("gait_type", g.value,
                              float(err[sel].mean()) if sel.any() else float("nan"), int(sel.sum())))
    for phase, events in PHASES.items():
        rows.append(ReportRow("phase", phase, float(err[:, _mask_slots(events=events)].mean()), n))
    for j in JOINTS:
        rows.append(ReportRow("joint", j, float(err[:, _mask_slots(joint=j)].mean()), n))
    rows.append(ReportRow("overall", "all", float(err.mean()), n))
    return Report(rows)


def reports_to_csv(reports: dict) -> str:
    """One table, one MAE column per model; rows must align."""
    names = list(reports)
    first = reports[names[0]]
    lines = ["group,key,n," + ",".join(f"mae_{m}" if m != "mae" else "mae" for m in names)]
    for i, r in enumerate(first.rows):
        cells = []
        for m in names:
            other = reports[m].rows[i]
            if (other.group, other.key) != (r.group, r.key):
                raise ValueError("reports have mismatched rows")
            cells.append("%.6f" % other.mae)
        lines.append(f"{r.group},{r.key},{r.n}," + ",".join(cells))
    return "\n".join(lines) + "\n"


def read_report_csv(text: str) -> dict:
    """Inverse of :func:`reports_to_csv`: model -> {(group, key): mae}."""
    lines = [l for l in text.strip().splitlines() if l and not l.startswith("#")]
    head = lines[0].split(",")
    models = [h[4:] if h.startswith("mae_") else h for h in head[3:]]
    out = {m: {} for m in models}
    for line in lines[1:]:
        cells = line.split(",")
        for m, v in zip(models, cells[3:]):
            out[m][(cells[0], cells[1])] = float(v)
    return out
