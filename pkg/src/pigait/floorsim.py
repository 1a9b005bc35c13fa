"""Floor structural response and geophone sensing chain.

Each floor mode is an SDOF oscillator driven by the footstep force. A sensor
at distance ``d`` from the footfall sees the modal velocity attenuated by
``exp(-alpha * d)`` and delayed by ``d / wave_speed``. Velocity noise is added
before the geophone's high-pass response, sensitivity and amplifier gain.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import signal

from .biomech import GrfSeries
from .numerics.modal import ModalOscillator, integrate_modal

SM24_SENSITIVITY = 28.8  # V/(m/s)


@dataclass(frozen=True)
class FloorModel:
    modes: tuple = (ModalOscillator(2000.0, 0.05, 12.0),)
    attenuation_alpha: float = 0.3      # 1/m
    wave_speed: float = 400.0           # m/s
    sensor_positions: tuple = ((0.0, 0.6), (2.0, -0.6), (4.0, 0.6), (6.0, -0.6))
    noise_std: float = 2e-5             # m/s

    def __post_init__(self):
        object.__setattr__(self, "modes", tuple(self.modes))
        object.__setattr__(self, "sensor_positions",
                           tuple(tuple(float(c) for c in p) for p in self.sensor_positions))
        if not self.modes:
            raise ValueError("floor needs at least one mode")
        if not self.sensor_positions:
            raise ValueError("floor needs at least one sensor")
        if len(set(self.sensor_positions)) != len(self.sensor_positions):
            raise ValueError("sensor positions must be distinct")
        if self.attenuation_alpha < 0:
            raise ValueError("attenuation_alpha must be >= 0")
        if not self.wave_speed > 0:
            raise ValueError("wave_speed must be > 0")
        if self.noise_std < 0:
            raise ValueError("noise_std must be >= 0")

    @property
    def n_sensors(self) -> int:
        return len(self.sensor_positions)

    def bounds(self):
        p = np.asarray(self.sensor_positions)
        return p.min(axis=0), p.max(axis=0)

    def distances(self, xy) -> np.ndarray:
        p = np.asarray(self.sensor_positions)
        return np.hypot(p[:, 0] - xy[0], p[:, 1] - xy[1])


@dataclass
class VibrationRecord:
    signals: np.ndarray            # (n_sensors, N) volts
    sample_rate: float = 500.0
    gain: float = 500.0
    sensitivity: float = SM24_SENSITIVITY
    t0: float = 0.0

    def __post_init__(self):
        self.signals = np.atleast_2d(np.asarray(self.signals, dtype=float))
        if not self.sample_rate > 0:
            raise ValueError("sample_rate must be > 0")

    @property
    def n_sensors(self) -> int:
        return self.signals.shape[0]

    def __len__(self):
        return self.signals.shape[1]

    @property
    def times(self) -> np.ndarray:
        return self.t0 + np.arange(len(self)) / self.sample_rate


def resample_linear(x, rate_in: float, rate_out: float) -> np.ndarray:
    """Linear interpolation onto the faster grid, same start and end time."""
    x = np.asarray(x, dtype=float)
    n_out = int(round((x.size - 1) * rate_out / rate_in)) + 1
    t_in = np.arange(x.size) / rate_in
    t_out = np.arange(n_out) / rate_out
    return np.interp(t_out, t_in, x)


def _stance_runs(mask) -> list[tuple[int, int]]:
    m = np.concatenate([[False], np.asarray(mask, bool), [False]])
    d = np.diff(m.astype(int))
    return list(zip(np.flatnonzero(d == 1), np.flatnonzero(d == -1)))


def floor_velocity(grfs, footfalls, floor: FloorModel, sample_rate: float = 500.0) -> np.ndarray:
    """Noise-free floor velocity at every sensor, shape ``(n_sensors, N)`` in m/s.

    ``grfs`` holds one :class:`GrfSeries` per foot; ``footfalls[f][k]`` is the
    (x, y) position of the k-th contiguous stance run of foot ``f``.
    """
    if not grfs:
        raise ValueError("empty GRF input")
    n_in = len(grfs[0])
    if n_in == 0:
        raise ValueError("empty GRF series")
    if len(footfalls) != len(grfs):
        raise ValueError("need one footfall list per GRF series")
    lo, hi = floor.bounds()
    out = None
    for grf, positions in zip(grfs, footfalls):
        if len(grf) != n_in:
            raise ValueError("GRF series of all feet must have equal length")
        if not np.isfinite(grf.vertical).all():
            raise ValueError("GRF contains NaN or infinite values")
        runs = _stance_runs(grf.stance_mask)
        if len(runs) != len(positions):
            raise ValueError(f"{len(runs)} stance runs but {len(positions)} footfall positions")
        force = resample_linear(grf.vertical, grf.sample_rate, sample_rate)
        if out is None:
            out = np.zeros((floor.n_sensors, force.size))
        scale = sample_rate / grf.sample_rate
        for (i0, i1), xy in zip(runs, positions):
            if np.any(np.asarray(xy) < lo - 1e-9) or np.any(np.asarray(xy) > hi + 1e-9):
                raise ValueError(f"footfall {tuple(xy)} outside the sensor plane bounds")
            # the run's force on the fast grid, ramping to zero at the boundary samples
            j0 = max(int(round((i0 - 1) * scale)), 0)
            j1 = min(int(round(i1 * scale)) + 1, force.size)
            step = np.zeros(force.size)
            seg = np.zeros(i1 - i0 + 2)
            seg[1:-1] = grf.vertical[i0:i1]
            t_seg = (np.arange(i0 - 1, i1 + 1)) / grf.sample_rate
            t_fast = np.arange(j0, j1) / sample_rate
            step[j0:j1] = np.interp(t_fast, t_seg, seg)
            out += _single_footfall(step, xy, floor, sample_rate)
    return out


def _single_footfall(force: np.ndarray, xy, floor: FloorModel, sample_rate: float) -> np.ndarray:
    dt = 1.0 / sample_rate
    d = floor.distances(xy)
    gains = np.exp(-floor.attenuation_alpha * d)
    delays = np.rint(d / floor.wave_speed * sample_rate).astype(int)
    n = force.size
    out = np.zeros((floor.n_sensors, n))
    for mode in floor.modes:
        # a load already present at the first sample has been there all along:
        # start from static deflection rather than a step onto an unloaded floor
        _, vel, _ = integrate_modal(mode, force, dt, u0=force[0] / mode.stiffness)
        for s in range(floor.n_sensors):
            k = delays[s]
            if k < n:
                out[s, k:] += gains[s] * vel[:n - k]
    return out


def geophone_transduce(floor_velocity, sensitivity: float = SM24_SENSITIVITY, gain: float = 500.0,
                       corner_frequency: float = 10.0, sample_rate: float = 500.0) -> np.ndarray:
    """First-order high-pass at the geophone corner, then volts x amplifier gain."""
    if not 0 < corner_frequency < sample_rate / 2:
        raise ValueError(
            f"corner_frequency {corner_frequency} Hz must lie in (0, Nyquist={sample_rate / 2} Hz)")
    b, a = signal.butter(1, corner_frequency, btype="highpass", fs=sample_rate)
    x = np.asarray(floor_velocity, dtype=float)
    return signal.lfilter(b, a, x, axis=-1) * (sensitivity * gain)


@dataclass(frozen=True)
class SensorChain:
    sample_rate: float = 500.0
    gain: float = 500.0
    sensitivity: float = SM24_SENSITIVITY
    corner_frequency: float = 10.0


def simulate_vibration(grfs, footfalls, floor: FloorModel, seed: int,
                       chain: SensorChain = SensorChain()) -> VibrationRecord:
    """GRF under each foot -> amplified geophone voltage at every sensor."""
    vel = floor_velocity(grfs, footfalls, floor, chain.sample_rate)
    if floor.noise_std > 0:
        rng = np.random.default_rng(seed)
        vel = vel + rng.normal(0.0, floor.noise_std, vel.shape)
    volts = geophone_transduce(vel, chain.sensitivity, chain.gain, chain.corner_frequency,
                               chain.sample_rate)
    return VibrationRecord(volts, chain.sample_rate, chain.gain, chain.sensitivity, grfs[0].t0)
