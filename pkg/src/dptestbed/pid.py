"""Discrete PID motion controller for the horizontal-plane DOFs.

The control law on an error sequence e(k) is

    tau(k) = K_P e(k) + K_I sum_{i<=k} e(i) h + K_D (e(k) - e(k-1)) / h

with e(-1) = 0. Units: K_P in kN/m (kN m/rad for heading), K_I per second of
that, K_D per 1/s; tau comes out in kN and kN m.

Sign convention: the tracking error is observed minus desired, rotated into
the body frame; the gains act on the NEGATED error so that positive gains are
stabilizing. `discrete_pid` evaluates the textbook formula on whatever error
it is given; `pid_step` applies the DP sign convention on top.

Anti-windup: the integral term is clamped per axis; the running sum is
clamped consistently so the controller backs off immediately when the error
reverses.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .kinematics import rotate_ned_to_body_2d, wrap_angle
from .reference import ReferenceState

# Gains from closed-loop tuning of the shuttle tanker (x, y, psi).
ST_KP = (400.0, 400.0, 400000.0)
ST_KI = (0.05, 0.05, 2.0)
ST_KD = (2000.0, 2000.0, 200000.0)


@dataclass
class GainSet:
    """Diagonal PID gains plus the reference-filter shape parameters."""

    kp: np.ndarray = field(default_factory=lambda: np.array(ST_KP))
    ki: np.ndarray = field(default_factory=lambda: np.array(ST_KI))
    kd: np.ndarray = field(default_factory=lambda: np.array(ST_KD))
    delta: np.ndarray = field(default_factory=lambda: np.ones(3))
    omega: np.ndarray = field(default_factory=lambda: np.full(3, 0.05))

    def __post_init__(self):
        for name in ("kp", "ki", "kd", "delta", "omega"):
            val = np.asarray(getattr(self, name), dtype=float).copy()
            if val.shape != (3,):
                raise ValueError(f"{name} must have 3 entries")
            setattr(self, name, val)
        if np.any(self.kp < 0) or np.any(self.ki < 0) or np.any(self.kd < 0):
            raise ValueError("PID gains must be non-negative")
        if np.any(self.omega <= 0):
            raise ValueError("reference natural frequencies must be positive")
        if np.any(self.delta < 0):
            raise ValueError("reference damping ratios must be non-negative")


@dataclass
class PidState:
    """Integrator sum (error * h) and previous error, body frame."""

    accum: np.ndarray = field(default_factory=lambda: np.zeros(3))
    prev_error: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def copy(self) -> "PidState":
        return PidState(self.accum.copy(), self.prev_error.copy())


def discrete_pid(
    error: np.ndarray,
    state: PidState,
    gains: GainSet,
    h: float,
    integral_limit: np.ndarray | None = None,
) -> tuple[np.ndarray, PidState]:
    """One evaluation of the discrete PID law on `error` (3,).

    Returns the force/moment (kN, kN, kN m) and the advanced state. The
    integral-term clamp, when given, caps |K_I * sum| per axis.
    """
    if h <= 0.0:
        raise ValueError("h must be positive")
    e = np.asarray(error, dtype=float)
    accum = state.accum + e * h
    if integral_limit is not None:
        lim = np.asarray(integral_limit, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            accum_cap = np.where(gains.ki > 0, lim / np.where(gains.ki > 0, gains.ki, 1.0), np.inf)
        accum = np.clip(accum, -accum_cap, accum_cap)
    tau = gains.kp * e + gains.ki * accum + gains.kd * (e - state.prev_error) / h
    return tau, PidState(accum=accum, prev_error=e)


def pid_step(
    eta_o: np.ndarray,
    ref: ReferenceState,
    gains: GainSet,
    h: float,
    state: PidState,
    integral_limit: np.ndarray | None = None,
) -> tuple[np.ndarray, PidState]:
    """Body-frame stabilizing force from an observed (x, y, psi) measurement.

    The planar error is rotated into the body frame at the observed heading;
    the heading error is wrapped to (-pi, pi].
    """
    eta_o = np.asarray(eta_o, dtype=float)
    err_ned = eta_o[:2] - ref.eta_d[:2]
    err_body = rotate_ned_to_body_2d(eta_o[2], err_ned)
    err = np.array([
        err_body[0], err_body[1], wrap_angle(eta_o[2] - ref.eta_d[2])
    ])
    return discrete_pid(-err, state, gains, h, integral_limit)
