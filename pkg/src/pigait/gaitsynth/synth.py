"""Synthetic walking trials: joint angles -> GRF -> floor vibration."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..biomech import (ANGLE_BOUNDS, Anthropometry, GrfSeries, JointTrajectory, inverse_dynamics,
                       load_shares)
from ..floorsim import FloorModel, SensorChain, VibrationRecord, simulate_vibration
from .cycles import FEET, GaitEvents
from .templates import JOINTS, N_HARMONICS, TEMPLATE_FOOT_OFF, GaitType, fourier_basis, coefficients

LEAD_IN = 0.25      # s before the first right-foot strike
TAIL = 0.25         # s after the last left-foot strike
FOOT_Y = {"L": 0.09, "R": -0.09}


@dataclass(frozen=True)
class Variability:
    """Standard deviations of the random gait variations (deg unless noted).

    Trial-level terms are multiplied by ``abnormal_factor`` for abnormal gait.
    """

    subject_offset: float = 3.0
    subject_cadence: float = 6.0          # steps/min
    trial_offset: float = 1.2
    trial_harmonic: float = 0.8           # on harmonics 1-2 coefficients
    trial_stance: float = 0.012           # stance fraction
    trial_cadence: float = 2.5            # steps/min
    foot_asymmetry: float = 0.4
    abnormal_factor: float = 2.5

    def scaled(self, factor: float) -> "Variability":
        return Variability(**{k: (v * factor if k != "abnormal_factor" else v)
                              for k, v in self.__dict__.items()})


ZERO_VARIABILITY = Variability().scaled(0.0)


@dataclass(frozen=True)
class Subject:
    subject_id: int
    seed: int
    anthropometry: Anthropometry
    cadence: float                  # steps/min, natural
    offsets: tuple                  # per joint, deg


def make_subject(subject_id: int, seed: int, variability: Variability = Variability()) -> Subject:
    rng = np.random.default_rng([seed, subject_id, 0x5B])
    height = float(np.clip(rng.normal(1.70, 0.09), 1.45, 1.98))
    bmi = float(np.clip(rng.normal(23.5, 2.8), 17.0, 33.0))
    mass = bmi * height ** 2
    shape = rng.normal(1.0, 0.02, 3)
    anth = Anthropometry(
        body_mass=mass,
        thigh_length=0.245 * height * shape[0],
        shank_length=0.246 * height * shape[1],
        foot_length=0.152 * height * shape[2],
        height=height,
    )
    cadence = float(np.clip(rng.normal(108.0, variability.subject_cadence), 90.0, 126.0))
    offsets = tuple(float(x) for x in rng.normal(0.0, variability.subject_offset, len(JOINTS)))
    return Subject(subject_id, seed, anth, cadence, offsets)


def _phase_warp(phase, stance: float, template_off: float) -> np.ndarray:
    """Smooth periodic warp sending ``stance`` to ``template_off`` and 0 to 0."""
    s = math.sin(2 * math.pi * stance)
    amp = 0.0 if stance == template_off else 2 * math.pi * (template_off - stance) / s
    return phase + amp * np.sin(2 * np.pi * phase) / (2 * np.pi)


@dataclass
class GaitDraw:
    """Everything random about one trial's gait, drawn from the seeds."""

    coeffs: dict            # foot -> joint -> (2K+1,) Fourier coefficients
    stance: float           # stance fraction of the cycle
    cycle_time: float       # s


def draw_gait(gait_type, subject_seed: int, trial_seed: int, cadence: float,
              variability: Variability = Variability(), subject_offsets=None) -> GaitDraw:
    gait_type = GaitType(gait_type)
    v = variability.scaled(variability.abnormal_factor) if gait_type.abnormal else variability
    rng = np.random.default_rng([subject_seed, trial_seed, 0x7A])
    if subject_offsets is None:
        subject_offsets = np.random.default_rng([subject_seed, 0x51]).normal(
            0.0, variability.subject_offset, len(JOINTS))
    base_off = TEMPLATE_FOOT_OFF[gait_type.value]
    stance = float(np.clip(base_off + rng.normal(0.0, v.trial_stance), base_off - 0.05, base_off + 0.05))
    cad = float(np.clip(cadence + rng.normal(0.0, v.trial_cadence), 60.0, 160.0))
    shared = {}
    for j, joint in enumerate(JOINTS):
        c = coefficients(gait_type, joint).copy()
        c[0] += subject_offsets[j] + rng.normal(0.0, v.trial_offset)
        c[1:5] += rng.normal(0.0, v.trial_harmonic, 4)
        shared[joint] = c
    coeffs = {}
    for foot in FEET:
        coeffs[foot] = {}
        for joint in JOINTS:
            c = shared[joint].copy()
            c[0] += rng.normal(0.0, v.foot_asymmetry)
            coeffs[foot][joint] = c
    return GaitDraw(coeffs, stance, 120.0 / cad)


@dataclass
class GaitTiming:
    first_strike: dict      # foot -> s, strike time of cycle index 0 (may be < 0)
    cycle_time: float
    stance: float
    duration: float

    def phase(self, foot, t):
        return np.mod((np.asarray(t) - self.first_strike[foot]) / self.cycle_time, 1.0)


def _timing(draw: GaitDraw, n_cycles: int) -> GaitTiming:
    T = draw.cycle_time
    first = {"R": LEAD_IN, "L": LEAD_IN + 0.5 * T}
    duration = LEAD_IN + (n_cycles + 0.5) * T + TAIL
    return GaitTiming(first, T, draw.stance, duration)


def _events(timing: GaitTiming, n_cycles: int) -> GaitEvents:
    strikes, offs = {}, {}
    for foot in FEET:
        t0 = timing.first_strike[foot]
        strikes[foot] = [t0 + k * timing.cycle_time for k in range(n_cycles + 1)]
        offs[foot] = [t0 + (k + timing.stance) * timing.cycle_time for k in range(n_cycles)]
    return GaitEvents(strikes, offs)


def synth_trajectory(gait_type, subject_seed: int, trial_seed: int, n_cycles: int = 2,
                     cadence: float = 108.0, sample_rate: float = 100.0,
                     variability: Variability = Variability(), subject_offsets=None):
    """Joint angles of both legs plus ground-truth gait events.

    Returns ``(trajectories, events)`` with ``trajectories`` a dict
    ``{"L": JointTrajectory, "R": JointTrajectory}``.
    """
    if n_cycles < 1:
        raise ValueError("n_cycles must be >= 1")
    if not 60.0 <= cadence <= 160.0:
        raise ValueError(f"cadence {cadence} steps/min outside [60, 160]")
    draw = draw_gait(gait_type, subject_seed, trial_seed, cadence, variability, subject_offsets)
    trajs, events, _ = _kinematics(gait_type, draw, n_cycles, sample_rate)
    return trajs, events


def _kinematics(gait_type, draw: GaitDraw, n_cycles: int, sample_rate: float):
    timing = _timing(draw, n_cycles)
    n = int(math.floor(timing.duration * sample_rate)) + 1
    t = np.arange(n) / sample_rate
    template_off = TEMPLATE_FOOT_OFF[GaitType(gait_type).value]
    lo, hi = ANGLE_BOUNDS
    trajs = {}
    for foot in FEET:
        ph = _phase_warp(timing.phase(foot, t), timing.stance, template_off)
        basis = fourier_basis(ph)
        angles = {j: np.clip(basis @ draw.coeffs[foot][j], lo, hi) for j in JOINTS}
        trajs[foot] = JointTrajectory(angles["hip"], angles["knee"], angles["ankle"], sample_rate)
    return trajs, _events(timing, n_cycles), timing


def stance_masks(timing: GaitTiming, times) -> dict:
    return {foot: timing.phase(foot, times) < timing.stance for foot in FEET}


# contact geometry of the foot, as fractions of foot length
ANKLE_HEIGHT = 0.25
HEEL_LENGTH = 0.20
TOE_LENGTH = 0.75
_ROCKER_SMOOTH = 0.02   # rad, rounds the heel -> toe rocker transition


def _smooth_pos(x):
    return 0.5 * (x + np.sqrt(x * x + _ROCKER_SMOOTH ** 2))


def leg_height(traj: JointTrajectory, a: Anthropometry) -> np.ndarray:
    """Hip height above the floor if this leg's foot were the support.

    Thigh and shank vertical projections plus the ankle height over the
    contact point: the heel while the toes point up, the forefoot once the
    foot pitches down (rocker contact).
    """
    phi_t = np.deg2rad(traj.hip_flexion)
    phi_s = np.deg2rad(traj.hip_flexion - traj.knee_flexion)
    pitch = phi_s + np.deg2rad(traj.ankle_flexion)      # toe-up positive
    lf = a.foot_length
    return (a.thigh_length * np.cos(phi_t) + a.shank_length * np.cos(phi_s)
            + ANKLE_HEIGHT * lf * np.cos(pitch)
            + HEEL_LENGTH * lf * _smooth_pos(np.sin(pitch))
            + TOE_LENGTH * lf * _smooth_pos(-np.sin(pitch)))


def hip_path(a: Anthropometry, timing: GaitTiming, trajs: dict, masks: dict, speed: float):
    """Pelvis path: constant forward speed; height carried by the stance legs.

    The support-weighted stance-leg height is projected onto the stride and
    step fundamentals. The templates are not a closed kinematic chain, so
    the raw blend jumps at the support handover; the projection keeps the
    joint-angle dependence of the vertical excursion while staying periodic
    and smooth.
    """
    t = trajs["R"].times
    w = load_shares(masks["R"], masks["L"], trajs["R"].sample_rate, 1.0)
    h = w * leg_height(trajs["R"], a) + (1.0 - w) * leg_height(trajs["L"], a)
    ph = 2 * np.pi * (t - timing.first_strike["R"]) / timing.cycle_time
    X = np.column_stack([np.ones_like(t), np.cos(ph), np.sin(ph), np.cos(2 * ph), np.sin(2 * ph)])
    coef, *_ = np.linalg.lstsq(X, h, rcond=None)
    return speed * t, X @ coef


def _footfalls(timing: GaitTiming, masks, speed: float, floor: FloorModel, sample_rate: float):
    """(x, y) of every stance run per foot, walkway fitted inside the sensor plane."""
    lo, hi = floor.bounds()
    runs = {}
    for foot in FEET:
        m = np.concatenate([[False], masks[foot], [False]])
        starts = np.flatnonzero(np.diff(m.astype(int)) == 1)
        # strike time of each run: the cycle whose stance contains the run start
        strikes = []
        for s in starts:
            t = s / sample_rate
            k = math.floor((t - timing.first_strike[foot]) / timing.cycle_time + 1e-9)
            strikes.append(timing.first_strike[foot] + k * timing.cycle_time)
        runs[foot] = strikes
    all_x = [speed * ts for foot in FEET for ts in runs[foot]]
    span = (max(all_x) - min(all_x)) if all_x else 0.0
    x_room = hi[0] - lo[0]
    if span > x_room - 0.2:
        raise ValueError(f"walk of {span:.2f} m does not fit the {x_room:.2f} m sensor plane")
    shift = lo[0] + 0.5 * (x_room - span) - (min(all_x) if all_x else 0.0)
    ymid = 0.5 * (lo[1] + hi[1])
    return {foot: [(speed * ts + shift, float(np.clip(ymid + FOOT_Y[foot], lo[1], hi[1])))
                   for ts in runs[foot]] for foot in FEET}


def quantize(x, digits: int = 9) -> np.ndarray:
    """Round to the storage precision used by trial bundles (9 significant
    digits), so a saved record loads back bit-identically."""
    x = np.asarray(x, dtype=float)
    return np.char.mod(f"%.{digits}g", x).astype(float)


@dataclass
class TrialRecord:
    trial_id: str
    subject_id: int
    gait_type: GaitType
    anthropometry: Anthropometry
    trajectories: dict          # foot -> JointTrajectory
    events: GaitEvents
    grf: dict                   # foot -> GrfSeries
    vibration: VibrationRecord
    footfalls: dict             # foot -> list of (x, y)
    seed: int
    meta: dict = field(default_factory=dict)

    def cycles(self):
        from .cycles import extract_cycles
        return extract_cycles(self.events, self.trial_id)


@dataclass(frozen=True)
class TrialSeeds:
    subject_seed: int
    trial_seed: int
    noise_seed: int


def synth_trial(gait_type, subject: Subject, floor: FloorModel, seeds: TrialSeeds,
                trial_id: str = "0", n_cycles: int = 2, variability: Variability = Variability(),
                chain: SensorChain = SensorChain(), angle_rate: float = 100.0) -> TrialRecord:
    """Compose angles -> inverse dynamics -> floor response -> geophone volts."""
    gait_type = GaitType(gait_type)
    draw = draw_gait(gait_type, seeds.subject_seed, seeds.trial_seed, subject.cadence,
                     variability, subject.offsets)
    trajs, events, timing = _kinematics(gait_type, draw, n_cycles, angle_rate)
    times = trajs["R"].times
    masks = stance_masks(timing, times)
    stride = 1.45 * (subject.anthropometry.thigh_length + subject.anthropometry.shank_length)
    if gait_type.abnormal:
        stride *= 0.85
    speed = stride / timing.cycle_time
    a = subject.anthropometry
    path = hip_path(a, timing, trajs, masks, speed)
    grf = {}
    for foot, other in (("L", "R"), ("R", "L")):
        grf[foot] = inverse_dynamics(trajs[foot], a, masks[foot], hip_path=path,
                                     contralateral=(trajs[other], masks[other]))
    footfalls = _footfalls(timing, masks, speed, floor, angle_rate)
    vib = simulate_vibration([grf[f] for f in FEET], [footfalls[f] for f in FEET], floor,
                             seeds.noise_seed, chain)
    # canonicalise to storage precision
    trajs = {f: JointTrajectory(quantize(j.hip_flexion), quantize(j.knee_flexion),
                                quantize(j.ankle_flexion), j.sample_rate, j.t0)
             for f, j in trajs.items()}
    grf = {f: GrfSeries(quantize(g.vertical), quantize(g.anterior_posterior), g.sample_rate,
                        g.stance_mask, g.t0) for f, g in grf.items()}
    vib = VibrationRecord(quantize(vib.signals), vib.sample_rate, vib.gain, vib.sensitivity, vib.t0)
    return TrialRecord(trial_id, subject.subject_id, gait_type, a, trajs, events, grf, vib,
                       footfalls, seeds.trial_seed)
