"""Sagittal-plane link-segment inverse dynamics: joint angles -> ground reaction force.

The leg is a chain pelvis -> thigh -> shank -> foot with hinge joints at hip,
knee and ankle. The foot is massless, so the ankle reaction is the force the
floor applies. Joint forces are propagated top-down: whatever load arrives at
the hip, plus the inertial and gravity load of each segment below it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

G = 9.81
ANGLE_BOUNDS = (-40.0, 150.0)  # deg
SEGMENTS = ("thigh", "shank", "foot")


@dataclass(frozen=True)
class Anthropometry:
    body_mass: float     # kg
    thigh_length: float  # m
    shank_length: float  # m
    foot_length: float   # m
    height: float        # m

    def __post_init__(self):
        for name in ("body_mass", "thigh_length", "shank_length", "foot_length", "height"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)}")
        if self.thigh_length + self.shank_length + self.foot_length >= self.height:
            raise ValueError("thigh + shank + foot lengths must be shorter than height")

    def scaled_mass(self, factor: float) -> "Anthropometry":
        return Anthropometry(self.body_mass * factor, self.thigh_length, self.shank_length,
                             self.foot_length, self.height)


@dataclass(frozen=True)
class RatioTable:
    """Segment mass / centre-of-mass / radius-of-gyration ratios.

    Mass ratios are fractions of body mass; COM and gyration ratios are
    fractions of segment length, COM measured from the proximal joint.
    """

    mass: dict = field(default_factory=lambda: {"thigh": 0.100, "shank": 0.0465, "foot": 0.0145})
    com: dict = field(default_factory=lambda: {"thigh": 0.433, "shank": 0.433, "foot": 0.5})
    gyration: dict = field(default_factory=lambda: {"thigh": 0.323, "shank": 0.302, "foot": 0.475})


DEFAULT_RATIOS = RatioTable()


@dataclass(frozen=True)
class Segment:
    mass: float
    com_ratio: float
    gyration_ratio: float


@dataclass(frozen=True)
class SegmentProperties:
    thigh: Segment
    shank: Segment
    foot: Segment

    @property
    def leg_mass(self) -> float:
        return self.thigh.mass + self.shank.mass + self.foot.mass


@dataclass
class JointTrajectory:
    hip_flexion: np.ndarray    # deg
    knee_flexion: np.ndarray   # deg
    ankle_flexion: np.ndarray  # deg, dorsiflexion positive
    sample_rate: float = 100.0
    t0: float = 0.0

    def __post_init__(self):
        self.hip_flexion = np.asarray(self.hip_flexion, dtype=float)
        self.knee_flexion = np.asarray(self.knee_flexion, dtype=float)
        self.ankle_flexion = np.asarray(self.ankle_flexion, dtype=float)
        n = self.hip_flexion.shape
        if self.knee_flexion.shape != n or self.ankle_flexion.shape != n or len(n) != 1:
            raise ValueError("hip, knee and ankle series must be 1-D and of equal length")
        if not self.sample_rate > 0:
            raise ValueError("sample_rate must be > 0")
        lo, hi = ANGLE_BOUNDS
        for name in ("hip_flexion", "knee_flexion", "ankle_flexion"):
            x = getattr(self, name)
            if x.size and (x.min() < lo or x.max() > hi or not np.isfinite(x).all()):
                raise ValueError(f"{name} outside physiological bounds [{lo}, {hi}] deg")

    def __len__(self):
        return self.hip_flexion.size

    @property
    def times(self) -> np.ndarray:
        return self.t0 + np.arange(len(self)) / self.sample_rate

    def joint(self, name: str) -> np.ndarray:
        return getattr(self, f"{name}_flexion")

    def reversed(self) -> "JointTrajectory":
        return JointTrajectory(self.hip_flexion[::-1], self.knee_flexion[::-1],
                               self.ankle_flexion[::-1], self.sample_rate, self.t0)


@dataclass
class GrfSeries:
    vertical: np.ndarray            # N
    anterior_posterior: np.ndarray  # N, forward positive
    sample_rate: float
    stance_mask: np.ndarray
    t0: float = 0.0

    def __post_init__(self):
        self.vertical = np.asarray(self.vertical, dtype=float)
        self.anterior_posterior = np.asarray(self.anterior_posterior, dtype=float)
        self.stance_mask = np.asarray(self.stance_mask, dtype=bool)

    def __len__(self):
        return self.vertical.size

    @property
    def times(self) -> np.ndarray:
        return self.t0 + np.arange(len(self)) / self.sample_rate

    def scaled(self, factor: float) -> "GrfSeries":
        return GrfSeries(self.vertical * factor, self.anterior_posterior * factor,
                         self.sample_rate, self.stance_mask.copy(), self.t0)


def segment_properties(a: Anthropometry, ratios: RatioTable = DEFAULT_RATIOS) -> SegmentProperties:
    return SegmentProperties(**{
        s: Segment(ratios.mass[s] * a.body_mass, ratios.com[s], ratios.gyration[s])
        for s in SEGMENTS
    })


def second_derivative(x: np.ndarray, dt: float) -> np.ndarray:
    """Three-point central second difference; end samples reuse the nearest
    interior stencil."""
    x = np.asarray(x, dtype=float)
    if x.shape[0] < 3:
        raise ValueError("need at least 3 samples to differentiate twice")
    d2 = np.empty_like(x)
    d2[1:-1] = (x[2:] - 2.0 * x[1:-1] + x[:-2]) / (dt * dt)
    d2[0] = d2[1]
    d2[-1] = d2[-2]
    return d2


@dataclass
class LegKinematics:
    hip: np.ndarray        # (N, 2) positions, m
    knee: np.ndarray
    ankle: np.ndarray
    thigh_com: np.ndarray
    shank_com: np.ndarray


def forward_kinematics(traj: JointTrajectory, a: Anthropometry, hip_path=None,
                       ratios: RatioTable = DEFAULT_RATIOS) -> LegKinematics:
    """Joint and segment-COM positions in the sagittal plane (x forward, y up)."""
    n = len(traj)
    if hip_path is None:
        hip = np.zeros((n, 2))
    else:
        hip = np.column_stack([np.asarray(hip_path[0], float), np.asarray(hip_path[1], float)])
        if hip.shape != (n, 2):
            raise ValueError("hip_path must hold two series matching the trajectory length")
    phi_t = np.deg2rad(traj.hip_flexion)
    phi_s = np.deg2rad(traj.hip_flexion - traj.knee_flexion)
    u_t = np.column_stack([np.sin(phi_t), -np.cos(phi_t)])
    u_s = np.column_stack([np.sin(phi_s), -np.cos(phi_s)])
    knee = hip + a.thigh_length * u_t
    ankle = knee + a.shank_length * u_s
    return LegKinematics(
        hip=hip, knee=knee, ankle=ankle,
        thigh_com=hip + ratios.com["thigh"] * a.thigh_length * u_t,
        shank_com=knee + ratios.com["shank"] * a.shank_length * u_s,
    )


def _segment_loads(kin: LegKinematics, seg: SegmentProperties, dt: float):
    """m * (a + g) for thigh and shank, shape (N, 2) each."""
    gvec = np.array([0.0, G])
    thigh = seg.thigh.mass * (second_derivative(kin.thigh_com, dt) + gvec)
    shank = seg.shank.mass * (second_derivative(kin.shank_com, dt) + gvec)
    return thigh, shank


def load_shares(stance_a, stance_b, sample_rate: float, sharpness: float = 6.0) -> np.ndarray:
    """Fraction of the whole-body load carried by foot ``a``.

    1 in single support on ``a``, 0 when ``a`` is off the ground. During
    double support the leading foot (the one that just struck) takes over as
    ``1 - (1 - tau/D)**sharpness``, which loads it quickly after contact.
    Double support with no handover in the record is split evenly.
    """
    sa = np.asarray(stance_a, dtype=bool)
    sb = np.asarray(stance_b, dtype=bool)
    share = sa.astype(float)
    both = sa & sb
    n = both.size
    i = 0
    while i < n:
        if not both[i]:
            i += 1
            continue
        j = i
        while j < n and both[j]:
            j += 1
        a_new = i > 0 and not sa[i - 1]
        b_new = i > 0 and not sb[i - 1]
        if not (a_new or b_new):
            # run starts the record; the foot whose stance ends first is trailing
            a_end = i + np.argmin(sa[i:]) if not sa[i:].all() else n
            b_end = i + np.argmin(sb[i:]) if not sb[i:].all() else n
            if a_end == b_end:
                share[i:j] = 0.5        # symmetric stance, nothing to hand over
                i = j
                continue
            a_new = a_end > b_end
        tau = (np.arange(i, j) - i + 1.0) / (j - i + 1.0)
        lead = 1.0 - (1.0 - tau) ** sharpness
        share[i:j] = lead if a_new else 1.0 - lead
        i = j
    return share


def inverse_dynamics(traj: JointTrajectory, a: Anthropometry, stance_mask, hip_path=None,
                     contralateral=None, ratios: RatioTable = DEFAULT_RATIOS,
                     sharpness: float = 6.0) -> GrfSeries:
    """Ground reaction force under one foot.

    Without ``contralateral`` the rest of the body (everything except this
    leg's thigh and shank) is lumped at the hip and carried by this leg
    whenever it is in stance. With ``contralateral=(other_traj, other_mask)``
    the whole-body load (upper body plus both legs) is split between the feet
    by :func:`load_shares`, so the two feet sum to the whole-body force and a
    single-support foot carries the swinging leg as well.
    """
    mask = np.asarray(stance_mask, dtype=bool)
    if mask.shape != (len(traj),):
        raise ValueError("stance_mask must match the trajectory length")
    if len(traj) < 3:
        raise ValueError("trajectory shorter than 3 samples; cannot differentiate")
    dt = 1.0 / traj.sample_rate
    seg = segment_properties(a, ratios)
    kin = forward_kinematics(traj, a, hip_path, ratios)
    thigh, shank = _segment_loads(kin, seg, dt)
    hip_acc = second_derivative(kin.hip, dt) + np.array([0.0, G])

    if contralateral is None:
        rest_mass = a.body_mass - seg.thigh.mass - seg.shank.mass
        hip_load = rest_mass * hip_acc
    else:
        other_traj, other_mask = contralateral
        other_mask = np.asarray(other_mask, dtype=bool)
        if len(other_traj) != len(traj) or other_mask.shape != mask.shape:
            raise ValueError("contralateral leg must match the trajectory length")
        other_kin = forward_kinematics(other_traj, a, hip_path, ratios)
        o_thigh, o_shank = _segment_loads(other_kin, seg, dt)
        upper_mass = a.body_mass - 2.0 * (seg.thigh.mass + seg.shank.mass)
        share = load_shares(mask, other_mask, traj.sample_rate, sharpness)[:, None]
        # whole-body load enters through the pelvis; this leg's own share of it
        # is added back segment by segment below
        whole = upper_mass * hip_acc + thigh + shank + o_thigh + o_shank
        hip_load = share * whole - thigh - shank

    knee_load = hip_load + thigh
    ankle_load = knee_load + shank
    grf = np.where(mask[:, None], ankle_load, 0.0)
    # the floor can push but not pull
    grf[:, 1] = np.maximum(grf[:, 1], 0.0)
    return GrfSeries(grf[:, 1], grf[:, 0], traj.sample_rate, mask, traj.t0)
