import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pigait.biomech import (G, Anthropometry, JointTrajectory, RatioTable, forward_kinematics,
                            inverse_dynamics, load_shares, second_derivative, segment_properties)
from pigait.gaitsynth.synth import Subject, TrialSeeds, make_subject, synth_trial
from pigait.floorsim import FloorModel

ANTH = Anthropometry(80.0, 0.42, 0.42, 0.26, 1.75)


def gait_traj(n=300, rate=100.0, period=1.1, phase=0.0):
    t = np.arange(n) / rate
    p = 2 * np.pi * t / period + phase
    return JointTrajectory(20 + 20 * np.cos(p), 25 - 20 * np.sin(p), 3 * np.sin(2 * p), rate)


def test_segment_properties_examples():
    seg = segment_properties(ANTH)
    assert seg.thigh.mass == pytest.approx(8.0)
    assert seg.shank.mass == pytest.approx(3.72)
    assert seg.leg_mass == pytest.approx(0.161 * 80.0)
    custom = segment_properties(ANTH, RatioTable(mass={"thigh": 0.2, "shank": 0.05, "foot": 0.01}))
    assert custom.thigh.mass == pytest.approx(16.0)


def test_anthropometry_invariants():
    with pytest.raises(ValueError):
        Anthropometry(80.0, 0.8, 0.8, 0.3, 1.7)
    with pytest.raises(ValueError):
        Anthropometry(0.0, 0.4, 0.4, 0.2, 1.7)


def test_trajectory_bounds_and_lengths():
    with pytest.raises(ValueError):
        JointTrajectory([0, 0], [0, 0], [0])
    with pytest.raises(ValueError):
        JointTrajectory([200.0], [0.0], [0.0])
    with pytest.raises(ValueError):
        JointTrajectory([0.0], [0.0], [0.0], sample_rate=0)


@settings(max_examples=30, deadline=None)
@given(st.floats(-30, 60), st.floats(0, 90), st.floats(-30, 30), st.floats(40, 120))
def test_quiet_standing_equals_body_weight(hip, knee, ankle, mass):
    a = Anthropometry(mass, 0.42, 0.42, 0.26, 1.75)
    n = 50
    traj = JointTrajectory(np.full(n, hip), np.full(n, knee), np.full(n, ankle))
    stance = np.ones(n, bool)
    single = inverse_dynamics(traj, a, stance)
    assert np.abs(single.vertical[1:-1] - mass * G).max() < 1e-9


def test_double_stance_feet_sum_to_body_weight():
    n = 60
    traj = JointTrajectory(np.full(n, 10.0), np.full(n, 5.0), np.zeros(n))
    stance = np.ones(n, bool)
    a = inverse_dynamics(traj, ANTH, stance, contralateral=(traj, stance))
    assert np.abs(2 * a.vertical - 80.0 * G).max() < 1e-9
    other = JointTrajectory(np.full(n, -5.0), np.full(n, 20.0), np.full(n, 4.0))
    b = inverse_dynamics(other, ANTH, stance, contralateral=(traj, stance))
    c = inverse_dynamics(traj, ANTH, stance, contralateral=(other, stance))
    assert np.abs(b.vertical + c.vertical - 80.0 * G)[1:-1].max() < 1e-9


@settings(max_examples=20, deadline=None)
@given(st.floats(0.3, 4.0))
def test_grf_is_homogeneous_in_mass(factor):
    traj = gait_traj()
    other = gait_traj(phase=np.pi)
    m1 = np.arange(300) % 110 < 68
    m2 = (np.arange(300) + 55) % 110 < 68
    g1 = inverse_dynamics(traj, ANTH, m1, contralateral=(other, m2))
    g2 = inverse_dynamics(traj, ANTH.scaled_mass(factor), m1, contralateral=(other, m2))
    assert np.allclose(g2.vertical, factor * g1.vertical, rtol=1e-12, atol=1e-9)
    assert np.allclose(g2.anterior_posterior, factor * g1.anterior_posterior, rtol=1e-12, atol=1e-9)


def test_swing_samples_are_exactly_zero():
    traj = gait_traj()
    mask = np.arange(300) % 110 < 68
    g = inverse_dynamics(traj, ANTH, mask)
    assert np.all(g.vertical[~mask] == 0.0) and np.all(g.anterior_posterior[~mask] == 0.0)


def test_time_reversal_reverses_ap_pattern():
    traj = gait_traj()
    mask = np.ones(300, bool)
    fwd = inverse_dynamics(traj, ANTH, mask)
    rev = inverse_dynamics(traj.reversed(), ANTH, mask)
    lo, hi = 15, 285
    assert np.allclose(rev.anterior_posterior[lo:hi], fwd.anterior_posterior[::-1][lo:hi], atol=1e-9)
    assert np.array_equal(np.sign(np.round(rev.anterior_posterior[lo:hi], 6)),
                          np.sign(np.round(fwd.anterior_posterior[::-1][lo:hi], 6)))


def test_short_trajectory_and_mask_errors():
    traj = JointTrajectory([0.0, 1.0], [0.0, 1.0], [0.0, 1.0])
    with pytest.raises(ValueError):
        inverse_dynamics(traj, ANTH, [True, True])
    with pytest.raises(ValueError):
        inverse_dynamics(gait_traj(), ANTH, np.ones(10, bool))


def test_second_derivative_of_quadratic_is_exact():
    t = np.arange(20) * 0.01
    assert np.allclose(second_derivative(3 * t ** 2 + t, 0.01), 6.0, atol=1e-8)


def test_forward_kinematics_segment_lengths():
    kin = forward_kinematics(gait_traj(), ANTH)
    assert np.allclose(np.linalg.norm(kin.knee - kin.hip, axis=1), 0.42)
    assert np.allclose(np.linalg.norm(kin.ankle - kin.knee, axis=1), 0.42)


def test_load_shares_partition_and_handover():
    a = np.array([1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 1, 1], bool)
    b = np.array([0, 0, 0, 1, 1, 1, 1, 1, 1, 1, 1, 1], bool)
    s = load_shares(a, b, 100.0)
    assert np.all(s[:3] == 1.0) and np.all(s[6:10] == 0.0)
    # b has just struck, so it takes over during the first double support
    assert np.all(np.diff(s[2:7]) <= 0)
    assert np.all((s >= 0) & (s <= 1))
    assert np.all(s[10:] >= 0.0) and s[11] > s[10]


@pytest.mark.parametrize("gait", ["normal", "toe_walking", "flexed_knee", "foot_drag"])
def test_periodic_gait_mean_vertical_force_is_body_weight(gait):
    subject = make_subject(3, 11)
    rec = synth_trial(gait, subject, FloorModel(noise_std=0.0), TrialSeeds(11, 5, 6), n_cycles=3)
    strikes = rec.events.foot_strike_times["R"]
    t = rec.grf["R"].times
    sel = (t >= strikes[0]) & (t < strikes[-1])
    total = rec.grf["R"].vertical[sel] + rec.grf["L"].vertical[sel]
    weight = subject.anthropometry.body_mass * G
    assert abs(total.mean() - weight) / weight < 0.02


def test_synthesized_vertical_force_is_nonnegative_in_stance(small_records):
    for rec in small_records:
        for g in rec.grf.values():
            assert g.vertical[g.stance_mask].min() >= 0.0
