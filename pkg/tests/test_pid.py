import numpy as np
import pytest

from dptestbed.kinematics import wrap_angle
from dptestbed.pid import GainSet, PidState, discrete_pid, pid_step
from dptestbed.reference import ReferenceState

H = 0.1


def table_gains():
    return GainSet()  # shipped defaults are the tuned shuttle-tanker gains


def test_zero_error_zero_force():
    gains = table_gains()
    state = PidState()
    for _ in range(20):
        tau, state = discrete_pid(np.zeros(3), state, gains, H)
        assert np.array_equal(tau, np.zeros(3))


def test_first_step_hand_evaluation():
    gains = table_gains()
    tau, state = discrete_pid(np.array([1.0, 0.0, 0.0]), PidState(), gains, H)
    expected = 400.0 * 1.0 + 0.05 * (1.0 * H) + 2000.0 * (1.0 - 0.0) / H
    assert tau[0] == expected
    assert expected == pytest.approx(20400.005, abs=1e-9)
    assert tau[1] == 0.0 and tau[2] == 0.0
    assert state.accum[0] == pytest.approx(H)


def test_constant_error_integral_sum():
    gains = table_gains()
    e = np.array([0.5, -0.2, 0.01])
    state = PidState()
    k = 40
    for _ in range(k):
        tau, state = discrete_pid(e, state, gains, H)
    assert state.accum == pytest.approx(e * k * H, rel=1e-12)
    integral_term = gains.ki * e * k * H
    deriv_free = gains.kp * e + integral_term  # derivative is zero after step 1
    assert tau == pytest.approx(deriv_free, rel=1e-12)


def test_antiwindup_clamps_integral_term():
    gains = GainSet(ki=(10.0, 10.0, 10.0))
    limit = np.array([50.0, 50.0, 50.0])
    state = PidState()
    e = np.array([100.0, -100.0, 100.0])
    for _ in range(200):
        _, state = discrete_pid(e, state, gains, H, integral_limit=limit)
        term = gains.ki * state.accum
        assert np.all(np.abs(term) <= limit + 1e-9)
    # integral term sits at the clamp, not beyond
    assert gains.ki[0] * state.accum[0] == pytest.approx(50.0)
    assert gains.ki[1] * state.accum[1] == pytest.approx(-50.0)


def test_windup_recovers_quickly_after_reversal():
    gains = GainSet(ki=(10.0, 0.0, 0.0))
    limit = np.array([50.0, np.inf, np.inf])
    state = PidState()
    for _ in range(500):
        _, state = discrete_pid(np.array([100.0, 0, 0]), state, gains, H, limit)
    flips = 0
    e = np.array([-100.0, 0, 0])
    while gains.ki[0] * state.accum[0] > -50.0 + 1e-9 and flips < 20:
        _, state = discrete_pid(e, state, gains, H, limit)
        flips += 1
    assert flips <= 2  # clamped sum cannot store hours of windup


def test_pid_step_is_stabilizing():
    # vessel sits north of the target: surge command must push south (negative)
    ref = ReferenceState()
    tau, _ = pid_step(np.array([5.0, 0.0, 0.0]), ref, table_gains(), H, PidState())
    assert tau[0] < 0.0
    tau, _ = pid_step(np.array([0.0, 0.0, 0.2]), ref, table_gains(), H, PidState())
    assert tau[2] < 0.0


def test_heading_error_wraps():
    ref = ReferenceState(eta_d=np.array([0.0, 0.0, np.radians(179.0)]))
    eta_o = np.array([0.0, 0.0, np.radians(-179.0)])
    tau, _ = pid_step(eta_o, ref, table_gains(), H, PidState())
    # observed minus desired wraps to +2 deg, stabilizing moment is negative
    assert tau[2] < 0.0
    err = wrap_angle(eta_o[2] - ref.eta_d[2])
    assert err == pytest.approx(np.radians(2.0))


def test_frame_consistency_under_world_rotation():
    gains = table_gains()
    chi = 0.83
    eta_o = np.array([3.0, -2.0, 0.4])
    ref = ReferenceState(eta_d=np.array([1.0, 1.0, 0.1]))

    rot = np.array([[np.cos(chi), -np.sin(chi)], [np.sin(chi), np.cos(chi)]])
    eta_rot = np.concatenate([rot @ eta_o[:2], [eta_o[2] + chi]])
    ref_rot = ReferenceState(
        eta_d=np.concatenate([rot @ ref.eta_d[:2], [ref.eta_d[2] + chi]])
    )

    tau_a, _ = pid_step(eta_o, ref, gains, H, PidState())
    tau_b, _ = pid_step(eta_rot, ref_rot, gains, H, PidState())
    assert np.allclose(tau_a, tau_b, rtol=1e-9)


def test_gain_hot_swap_keeps_state():
    e = np.array([1.0, 0.0, 0.0])
    state = PidState()
    g1 = table_gains()
    for _ in range(10):
        _, state = discrete_pid(e, state, g1, H)
    accum_before = state.accum.copy()
    g2 = GainSet(kp=(800.0, 400.0, 400000.0))
    tau, state = discrete_pid(e, state, g2, H)
    assert np.array_equal(state.accum, accum_before + e * H)
    expected_surge = 800.0 * 1.0 + g2.ki[0] * state.accum[0]  # derivative zero
    assert tau[0] == pytest.approx(expected_surge, rel=1e-12)


def test_gain_validation():
    with pytest.raises(ValueError):
        GainSet(kp=(-1.0, 0.0, 0.0))
    with pytest.raises(ValueError):
        GainSet(omega=(0.0, 0.05, 0.05))
    with pytest.raises(ValueError):
        GainSet(kp=(1.0, 2.0))
