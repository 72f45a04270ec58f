"""Third-order reference filter for setpoint shaping.

Each controlled axis (north, east, heading) runs the cascade of a first-order
low-pass with a critically tunable mass-damper-spring system:

    eta_d''' + (2 Delta + I) Omega eta_d'' + (2 Delta + I) Omega^2 eta_d'
        + Omega^3 eta_d = Omega^3 r

which rises smoothly from rest and settles without overshoot for Delta = I.
The heading axis wraps the setpoint to the nearest equivalent angle before
integrating, so commands never unwind through +-180 deg.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .kinematics import wrap_angle


@dataclass(frozen=True)
class Setpoint:
    """Target north/east position (m) and heading (rad)."""

    x: float = 0.0
    y: float = 0.0
    psi: float = 0.0

    def __post_init__(self):
        if not np.all(np.isfinite([self.x, self.y, self.psi])):
            raise ValueError("setpoint must be finite")
        object.__setattr__(self, "psi", float(wrap_angle(self.psi)))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.psi])


@dataclass
class ReferenceState:
    """Filtered reference pose and its first two derivatives (3 axes)."""

    eta_d: np.ndarray = field(default_factory=lambda: np.zeros(3))
    eta_d_dot: np.ndarray = field(default_factory=lambda: np.zeros(3))
    eta_d_ddot: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        self.eta_d = np.asarray(self.eta_d, dtype=float).copy()
        self.eta_d_dot = np.asarray(self.eta_d_dot, dtype=float).copy()
        self.eta_d_ddot = np.asarray(self.eta_d_ddot, dtype=float).copy()

    @classmethod
    def at(cls, setpoint: Setpoint) -> "ReferenceState":
        return cls(eta_d=setpoint.as_array())

    def copy(self) -> "ReferenceState":
        return ReferenceState(self.eta_d, self.eta_d_dot, self.eta_d_ddot)


@dataclass(frozen=True)
class ReferenceLimits:
    """Optional clamps on reference velocity/acceleration per axis."""

    vel: np.ndarray | None = None
    acc: np.ndarray | None = None


def reference_step(
    ref: ReferenceState,
    setpoint: Setpoint,
    delta: np.ndarray,
    omega: np.ndarray,
    h: float,
    limits: ReferenceLimits | None = None,
) -> ReferenceState:
    """Advance the filter one step of size h (RK4 on the companion form)."""
    if h <= 0.0:
        raise ValueError("h must be positive")
    delta = np.asarray(delta, dtype=float)
    omega = np.asarray(omega, dtype=float)

    r = setpoint.as_array().copy()
    # nearest equivalent heading target relative to the current reference
    r[2] = ref.eta_d[2] + wrap_angle(r[2] - ref.eta_d[2])

    a1 = (2.0 * delta + 1.0) * omega
    a2 = (2.0 * delta + 1.0) * omega**2
    a3 = omega**3

    vel_cap = None if limits is None else limits.vel
    acc_cap = None if limits is None else limits.acc

    def sat(vec, cap):
        if cap is None:
            return vec
        cap = np.asarray(cap, dtype=float)
        return np.clip(vec, -cap, cap)

    def deriv(p, v, a):
        # saturation inside the stages keeps the generated path within limits
        v = sat(v, vel_cap)
        a = sat(a, acc_cap)
        return v, a, a3 * r - a1 * a - a2 * v - a3 * p

    p0, v0, a0 = ref.eta_d, ref.eta_d_dot, ref.eta_d_ddot
    k1 = deriv(p0, v0, a0)
    k2 = deriv(p0 + 0.5 * h * k1[0], v0 + 0.5 * h * k1[1], a0 + 0.5 * h * k1[2])
    k3 = deriv(p0 + 0.5 * h * k2[0], v0 + 0.5 * h * k2[1], a0 + 0.5 * h * k2[2])
    k4 = deriv(p0 + h * k3[0], v0 + h * k3[1], a0 + h * k3[2])
    p1 = p0 + (h / 6.0) * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
    v1 = v0 + (h / 6.0) * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
    a1_ = a0 + (h / 6.0) * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])

    v1 = sat(v1, vel_cap)
    a1_ = sat(a1_, acc_cap)

    p1[2] = wrap_angle(p1[2])
    return ReferenceState(p1, v1, a1_)
