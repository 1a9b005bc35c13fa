"""Gait events, cycle segmentation and the 12 critical-angle targets."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..biomech import JointTrajectory
from .templates import JOINTS

FEET = ("L", "R")
EVENTS = ("foot_strike", "loading_response", "foot_off", "mid_swing")
SLOTS = tuple((j, e) for j in JOINTS for e in EVENTS)
N_TARGETS = len(SLOTS)
SWING_EVENTS = ("foot_off", "mid_swing")

# which extremum defines the windowed events, per joint
EXTREMUM = {
    "hip": {"loading_response": "max", "mid_swing": "max"},
    "knee": {"loading_response": "max", "mid_swing": "max"},
    "ankle": {"loading_response": "min", "mid_swing": "max"},
}
LOADING_WINDOW = 0.2          # fraction of stance after foot strike
MID_SWING_WINDOW = (1 / 3, 2 / 3)  # fraction of swing


class EventError(ValueError):
    pass


@dataclass
class GaitEvents:
    foot_strike_times: dict = field(default_factory=dict)  # foot -> list of s
    foot_off_times: dict = field(default_factory=dict)

    def __post_init__(self):
        for foot in set(self.foot_strike_times) | set(self.foot_off_times):
            self.foot_strike_times.setdefault(foot, [])
            self.foot_off_times.setdefault(foot, [])
        for table in (self.foot_strike_times, self.foot_off_times):
            for foot in table:
                table[foot] = [float(t) for t in table[foot]]

    def feet(self):
        return sorted(self.foot_strike_times)

    def shifted(self, dt: float) -> "GaitEvents":
        return GaitEvents({f: [t + dt for t in v] for f, v in self.foot_strike_times.items()},
                          {f: [t + dt for t in v] for f, v in self.foot_off_times.items()})


@dataclass(frozen=True)
class GaitCycle:
    start: float
    end: float
    foot_off: float
    trial_id: str = ""
    foot: str = "R"

    def __post_init__(self):
        if not self.start < self.foot_off < self.end:
            raise EventError(f"cycle needs start < foot_off < end, got "
                             f"{self.start}, {self.foot_off}, {self.end}")

    @property
    def duration(self) -> float:
        return self.end - self.start

    @property
    def stance_fraction(self) -> float:
        return (self.foot_off - self.start) / self.duration


@dataclass
class TargetAngles:
    values: np.ndarray  # (12,) deg, ordered as SLOTS

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (N_TARGETS,):
            raise ValueError(f"expected {N_TARGETS} target angles")
        if not np.isfinite(self.values).all():
            raise ValueError("target angles must be finite")

    def __getitem__(self, key):
        joint, event = key
        return self.values[SLOTS.index((joint, event))]

    def as_dict(self):
        return {f"{j}_{e}": float(v) for (j, e), v in zip(SLOTS, self.values)}


def extract_cycles(events: GaitEvents, trial_id: str = "") -> list[GaitCycle]:
    """One cycle per consecutive strike pair of each foot.

    Foot-off lists hold exactly one off per cycle: ``offs[i]`` must fall
    strictly between ``strikes[i]`` and ``strikes[i + 1]``.
    """
    cycles = []
    for foot in events.feet():
        strikes = events.foot_strike_times[foot]
        offs = events.foot_off_times[foot]
        if any(b <= a for a, b in zip(strikes, strikes[1:])):
            raise EventError(f"foot {foot}: strike times are not strictly increasing")
        n_cycles = max(len(strikes) - 1, 0)
        if len(offs) != n_cycles:
            raise EventError(f"foot {foot}: {len(offs)} foot-off events for {n_cycles} cycles "
                             f"(unmatched event at index {min(len(offs), n_cycles)})")
        for i in range(n_cycles):
            if not strikes[i] < offs[i] < strikes[i + 1]:
                raise EventError(f"foot {foot}: foot-off {i} at {offs[i]} s lies outside "
                                 f"strike pair ({strikes[i]}, {strikes[i + 1]})")
            cycles.append(GaitCycle(strikes[i], strikes[i + 1], offs[i], trial_id, foot))
    return cycles


def _interp(x: np.ndarray, pos: float) -> float:
    i = int(np.floor(pos))
    i = min(max(i, 0), x.size - 2)
    w = pos - i
    return float(x[i] * (1.0 - w) + x[i + 1] * w)


def _window_extremum(x: np.ndarray, lo: float, hi: float, kind: str) -> float:
    """Extremum of the sampled curve over fractional-index window [lo, hi],
    refined by a parabola through the best interior sample and its neighbours."""
    sign = 1.0 if kind == "max" else -1.0
    best = max(sign * _interp(x, lo), sign * _interp(x, hi))
    idx = np.arange(int(np.ceil(lo)), int(np.floor(hi)) + 1)
    if idx.size:
        k = idx[np.argmax(sign * x[idx])]
        best = max(best, sign * x[k])
        if 0 < k < x.size - 1:
            ym, y0, yp = sign * x[k - 1], sign * x[k], sign * x[k + 1]
            curv = ym - 2.0 * y0 + yp
            if curv < 0:
                off = 0.5 * (ym - yp) / curv
                if abs(off) <= 0.5 and lo <= k + off <= hi:
                    best = max(best, y0 - 0.25 * (ym - yp) * off)
    return sign * best


def extract_targets(traj: JointTrajectory, cycle: GaitCycle) -> TargetAngles:
    fs = traj.sample_rate
    n = len(traj)

    def pos(t):
        return (t - traj.t0) * fs

    p_start, p_off, p_end = pos(cycle.start), pos(cycle.foot_off), pos(cycle.end)
    if p_start < 0 or p_end > n - 1:
        raise EventError(f"cycle [{cycle.start}, {cycle.end}] s outside trajectory span "
                         f"[{traj.t0}, {traj.t0 + (n - 1) / fs}] s")
    load_hi = p_start + LOADING_WINDOW * (p_off - p_start)
    sw_lo = p_off + MID_SWING_WINDOW[0] * (p_end - p_off)
    sw_hi = p_off + MID_SWING_WINDOW[1] * (p_end - p_off)
    out = []
    for joint in JOINTS:
        x = traj.joint(joint)
        out.append(_interp(x, p_start))
        out.append(_window_extremum(x, p_start, load_hi, EXTREMUM[joint]["loading_response"]))
        out.append(_interp(x, p_off))
        out.append(_window_extremum(x, sw_lo, sw_hi, EXTREMUM[joint]["mid_swing"]))
    return TargetAngles(np.array(out))
