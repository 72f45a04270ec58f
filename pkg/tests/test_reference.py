import numpy as np
import pytest

from dptestbed.reference import ReferenceLimits, ReferenceState, Setpoint, reference_step

DELTA = np.ones(3)
OMEGA = np.full(3, 0.05)


def drive(ref, sp, n, h=0.5, delta=DELTA, omega=OMEGA, limits=None):
    hist = []
    for _ in range(n):
        ref = reference_step(ref, sp, delta, omega, h, limits)
        hist.append(ref.eta_d.copy())
    return ref, np.asarray(hist)


def test_setpoint_is_exact_fixed_point():
    sp = Setpoint(10.0, -5.0, 0.3)
    ref = ReferenceState.at(sp)
    out, hist = drive(ref, sp, 100)
    assert np.array_equal(out.eta_d, sp.as_array())
    assert np.array_equal(out.eta_d_dot, np.zeros(3))
    assert np.array_equal(out.eta_d_ddot, np.zeros(3))


def test_step_response_monotone_no_overshoot():
    sp = Setpoint(40.0, 0.0, 0.0)
    ref = ReferenceState()
    _, hist = drive(ref, sp, 2500, h=0.5)
    x = hist[:, 0]
    assert np.all(np.diff(x) >= -1e-12)
    assert x.max() <= 40.0 * 1.01


def test_settles_within_twenty_time_constants():
    sp = Setpoint(40.0, -25.0, 1.0)
    ref = ReferenceState()
    t_settle = 20.0 / OMEGA.min()
    n = int(np.ceil(t_settle / 0.5))
    out, _ = drive(ref, sp, n)
    err = np.abs(out.eta_d - sp.as_array())
    step = np.abs(sp.as_array())
    assert np.all(err <= 0.001 * step)


def test_heading_takes_short_way_round():
    ref = ReferenceState(eta_d=np.array([0.0, 0.0, np.radians(170.0)]))
    sp = Setpoint(0.0, 0.0, np.radians(-170.0))
    _, hist = drive(ref, sp, 4000)
    psi = hist[:, 2]
    # path crosses the +-pi seam instead of sweeping back through zero
    assert np.abs(psi).min() > np.radians(150.0)
    assert psi[-1] == pytest.approx(np.radians(-170.0), abs=1e-4)


def test_velocity_limit_clamps():
    sp = Setpoint(1000.0, 0.0, 0.0)
    limits = ReferenceLimits(vel=np.array([2.0, 2.0, 0.05]))
    ref = ReferenceState()
    _, hist = drive(ref, sp, 1200, limits=limits)
    speeds = np.diff(hist[:, 0]) / 0.5
    assert speeds.max() <= 2.0 + 1e-9


def test_invalid_step_rejected():
    with pytest.raises(ValueError):
        reference_step(ReferenceState(), Setpoint(), DELTA, OMEGA, 0.0)


def test_setpoint_normalizes_heading():
    assert Setpoint(psi=np.radians(370.0)).psi == pytest.approx(np.radians(10.0))
    with pytest.raises(ValueError):
        Setpoint(x=np.nan)
