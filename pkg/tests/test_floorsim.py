import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import signal

from pigait.biomech import GrfSeries
from pigait.floorsim import (FloorModel, SensorChain, floor_velocity, geophone_transduce,
                             resample_linear, simulate_vibration)
from pigait.numerics import ModalOscillator

QUIET = FloorModel(noise_std=0.0)


def step_grf(n=200, runs=((20, 80),), amp=700.0, rate=100.0, seed=None):
    """Half-sine footsteps (optionally randomly shaped) on a 100 Hz grid."""
    v = np.zeros(n)
    mask = np.zeros(n, bool)
    rng = np.random.default_rng(seed) if seed is not None else None
    for i0, i1 in runs:
        k = np.arange(i1 - i0)
        shape = np.sin(np.pi * (k + 1) / (i1 - i0 + 1))
        if rng is not None:
            shape = shape * (1 + 0.3 * rng.standard_normal()) + 0.1 * rng.standard_normal(k.size) * shape
        v[i0:i1] = amp * shape
        mask[i0:i1] = True
    return GrfSeries(v, np.zeros(n), rate, mask)


def test_zero_force_gives_zero_signal():
    g = GrfSeries(np.zeros(100), np.zeros(100), 100.0, np.r_[np.zeros(50, bool), np.ones(50, bool)])
    rec = simulate_vibration([g], [[(3.0, 0.0)]], QUIET, seed=1)
    assert np.all(rec.signals == 0.0)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.1, 10.0))
def test_scaling(factor):
    g = step_grf()
    a = simulate_vibration([g], [[(2.5, 0.1)]], QUIET, 0).signals
    b = simulate_vibration([g.scaled(factor)], [[(2.5, 0.1)]], QUIET, 0).signals
    assert np.abs(b - factor * a).max() <= 1e-10 * max(1.0, np.abs(b).max())


def test_doubling_grf_doubles_every_sample():
    g = step_grf()
    a = simulate_vibration([g], [[(2.5, 0.1)]], QUIET, 0).signals
    b = simulate_vibration([g.scaled(2.0)], [[(2.5, 0.1)]], QUIET, 0).signals
    assert np.array_equal(b, 2.0 * a)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_superposition_of_footsteps(seed):
    rng = np.random.default_rng(seed)
    xy1 = (rng.uniform(0, 6), rng.uniform(-0.6, 0.6))
    xy2 = (rng.uniform(0, 6), rng.uniform(-0.6, 0.6))
    both = step_grf(runs=((20, 80), (110, 170)), seed=seed)
    one = GrfSeries(np.where(np.arange(200) < 100, both.vertical, 0.0), np.zeros(200), 100.0,
                    both.stance_mask & (np.arange(200) < 100))
    two = GrfSeries(np.where(np.arange(200) >= 100, both.vertical, 0.0), np.zeros(200), 100.0,
                    both.stance_mask & (np.arange(200) >= 100))
    joint = floor_velocity([both], [[xy1, xy2]], QUIET)
    split = floor_velocity([one], [[xy1]], QUIET) + floor_velocity([two], [[xy2]], QUIET)
    assert np.abs(joint - split).max() < 1e-10 * max(1.0, np.abs(joint).max())
    # and after the linear sensor chain
    chain = SensorChain()
    va = geophone_transduce(joint)
    vb = geophone_transduce(floor_velocity([one], [[xy1]], QUIET)) + \
        geophone_transduce(floor_velocity([two], [[xy2]], QUIET))
    assert np.abs(va - vb).max() < 1e-10 * max(1.0, np.abs(va).max())
    assert chain.sample_rate == 500.0


def test_two_feet_superpose():
    a, b = step_grf(runs=((10, 70),)), step_grf(runs=((60, 120),), amp=650.0)
    both = floor_velocity([a, b], [[(1.0, 0.1)], [(2.0, -0.1)]], QUIET)
    sep = floor_velocity([a], [[(1.0, 0.1)]], QUIET) + floor_velocity([b], [[(2.0, -0.1)]], QUIET)
    assert np.abs(both - sep).max() < 1e-10 * np.abs(both).max()


def test_monotone_distance_attenuation_on_random_trials():
    rng = np.random.default_rng(123)
    floor = FloorModel(noise_std=0.0)
    pos = np.asarray(floor.sensor_positions)
    for trial in range(100):
        xy = (rng.uniform(0, 6), rng.uniform(-0.6, 0.6))
        g = step_grf(seed=trial, amp=rng.uniform(300, 1200))
        peaks = np.abs(floor_velocity([g], [[xy]], floor)).max(axis=1)
        d = np.hypot(pos[:, 0] - xy[0], pos[:, 1] - xy[1])
        for i in range(len(d)):
            for j in range(len(d)):
                if d[i] < d[j]:
                    assert peaks[i] > peaks[j]


def test_wave_speed_delay_in_samples():
    floor = FloorModel(sensor_positions=((0.0, 0.0), (4.0, 0.0)), noise_std=0.0,
                       attenuation_alpha=0.0, wave_speed=100.0)
    v = floor_velocity([step_grf()], [[(0.0, 0.0)]], floor)
    lag = int(round(4.0 / 100.0 * 500))
    assert np.allclose(v[1, lag:], v[0, :-lag])
    assert np.all(v[1, :lag] == 0.0)


def test_seeded_noise_is_deterministic():
    floor = FloorModel()
    g = step_grf()
    a = simulate_vibration([g], [[(2.0, 0.0)]], floor, 9).signals
    b = simulate_vibration([g], [[(2.0, 0.0)]], floor, 9).signals
    c = simulate_vibration([g], [[(2.0, 0.0)]], floor, 10).signals
    assert np.array_equal(a, b) and not np.array_equal(a, c)


def test_input_validation():
    g = step_grf()
    with pytest.raises(ValueError):
        floor_velocity([], [], QUIET)
    with pytest.raises(ValueError):
        floor_velocity([g], [[(20.0, 0.0)]], QUIET)
    with pytest.raises(ValueError):
        floor_velocity([g], [[]], QUIET)
    bad = GrfSeries(np.where(g.stance_mask, np.nan, 0.0), np.zeros(200), 100.0, g.stance_mask)
    with pytest.raises(ValueError):
        floor_velocity([bad], [[(1.0, 0.0)]], QUIET)
    with pytest.raises(ValueError):
        FloorModel(modes=())
    with pytest.raises(ValueError):
        FloorModel(sensor_positions=((0, 0), (0, 0)))


def test_geophone_zero_and_dc():
    assert np.all(geophone_transduce(np.zeros((2, 100))) == 0.0)
    x = np.ones(500)
    y = geophone_transduce(x, 28.8, 500.0, 10.0, 500.0)
    assert abs(y[-1]) < 1e-3 * 28.8 * 500.0


def test_geophone_sinusoid_matches_analytic_response():
    fs, fc, f = 500.0, 10.0, 50.0
    t = np.arange(int(4 * fs)) / fs
    y = geophone_transduce(np.sin(2 * np.pi * f * t), 28.8, 500.0, fc, fs)
    amp = np.abs(y[len(y) // 2:]).max()
    b, a = signal.butter(1, fc, btype="highpass", fs=fs)
    _, h = signal.freqz(b, a, worN=[f], fs=fs)
    analog = (f / fc) / np.sqrt(1 + (f / fc) ** 2)
    assert amp == pytest.approx(28.8 * 500.0 * abs(h[0]), rel=0.02)
    assert amp == pytest.approx(28.8 * 500.0 * analog, rel=0.02)


def test_geophone_rejects_corner_above_nyquist():
    with pytest.raises(ValueError):
        geophone_transduce(np.zeros(10), corner_frequency=300.0, sample_rate=500.0)


def test_resample_linear_endpoints():
    x = np.array([0.0, 1.0, 4.0])
    y = resample_linear(x, 100.0, 500.0)
    assert y.size == 11 and y[0] == 0.0 and y[-1] == 4.0 and y[5] == 1.0


def test_stiffer_floor_responds_less():
    g = step_grf()
    soft = FloorModel(modes=(ModalOscillator(2000.0, 0.05, 12.0),), noise_std=0.0)
    stiff = FloorModel(modes=(ModalOscillator(2000.0, 0.05, 24.0),), noise_std=0.0)
    a = np.abs(floor_velocity([g], [[(2.0, 0.0)]], soft)).max()
    b = np.abs(floor_velocity([g], [[(2.0, 0.0)]], stiff)).max()
    assert b < a
