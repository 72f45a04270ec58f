"""Rigid-body kinematics for a 6-DOF marine craft.

Conventions (SNAME / Fossen):
  - earth-fixed NED frame {n}: x north, y east, z down
  - body-fixed frame {b}: x forward, y starboard, z down
  - pose eta = [x, y, z, phi, theta, psi], ZYX Euler angles in rad
  - velocity nu = [u, v, w, p, q, r] in {b}

All angles are kept in (-pi, pi].
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

DOF_NAMES = ("x", "y", "z", "phi", "theta", "psi")
GIMBAL_MARGIN = 1e-6


class GimbalLock(ValueError):
    """Pitch too close to +-90 deg for the Euler-rate transform."""


def wrap_angle(a):
    """Wrap an angle (or array of angles) to (-pi, pi]."""
    w = -((-np.asarray(a) + np.pi) % (2.0 * np.pi) - np.pi)
    return w


@dataclass(frozen=True)
class Pose6:
    """Position in {n} (m) and ZYX Euler attitude (rad)."""

    x: float = 0.0
    y: float = 0.0
    z: float = 0.0
    phi: float = 0.0
    theta: float = 0.0
    psi: float = 0.0

    def __post_init__(self):
        vec = (self.x, self.y, self.z, self.phi, self.theta, self.psi)
        if not all(np.isfinite(vec)):
            raise ValueError(f"non-finite pose: {vec}")

    @classmethod
    def from_array(cls, arr) -> "Pose6":
        arr = np.asarray(arr, dtype=float)
        ang = wrap_angle(arr[3:6])
        return cls(arr[0], arr[1], arr[2], ang[0], ang[1], ang[2])

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.x, self.y, self.z, self.phi, self.theta, self.psi], dtype=float
        )

    def normalized(self) -> "Pose6":
        return replace(
            self,
            phi=float(wrap_angle(self.phi)),
            theta=float(wrap_angle(self.theta)),
            psi=float(wrap_angle(self.psi)),
        )


@dataclass(frozen=True)
class BodyVel6:
    """Linear (m/s) and angular (rad/s) velocity in {b}."""

    u: float = 0.0
    v: float = 0.0
    w: float = 0.0
    p: float = 0.0
    q: float = 0.0
    r: float = 0.0

    def __post_init__(self):
        vec = (self.u, self.v, self.w, self.p, self.q, self.r)
        if not all(np.isfinite(vec)):
            raise ValueError(f"non-finite velocity: {vec}")

    @classmethod
    def from_array(cls, arr) -> "BodyVel6":
        arr = np.asarray(arr, dtype=float)
        return cls(*arr[:6])

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.u, self.v, self.w, self.p, self.q, self.r], dtype=float
        )


@dataclass(frozen=True)
class PerturbedVel6:
    """Velocity perturbation about the mean motion, in the seakeeping frame {s}.

    For station keeping (mean forward speed U = 0) the perturbation equals the
    body velocity componentwise.
    """

    du: float = 0.0
    dv: float = 0.0
    dw: float = 0.0
    dp: float = 0.0
    dq: float = 0.0
    dr: float = 0.0
    U: float = 0.0

    @classmethod
    def from_body(cls, nu: BodyVel6, U: float = 0.0,
                  dpsi: float = 0.0, dtheta: float = 0.0) -> "PerturbedVel6":
        """Subtract the mean velocity U*[1, -dpsi, dtheta, 0, 0, 0]."""
        mean = np.array([U, -U * dpsi, U * dtheta, 0.0, 0.0, 0.0])
        d = nu.as_array() - mean
        return cls(*d, U=U)

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.du, self.dv, self.dw, self.dp, self.dq, self.dr], dtype=float
        )


def rotation_body_to_ned(phi: float, theta: float, psi: float) -> np.ndarray:
    """ZYX Euler rotation matrix R such that v_ned = R @ v_body."""
    cph, sph = np.cos(phi), np.sin(phi)
    cth, sth = np.cos(theta), np.sin(theta)
    cps, sps = np.cos(psi), np.sin(psi)
    return np.array([
        [cps * cth, -sps * cph + cps * sth * sph, sps * sph + cps * cph * sth],
        [sps * cth, cps * cph + sph * sth * sps, -cps * sph + sth * sps * cph],
        [-sth, cth * sph, cth * cph],
    ])


def euler_rate_matrix(phi: float, theta: float) -> np.ndarray:
    """T such that [phi_dot, theta_dot, psi_dot] = T @ [p, q, r]."""
    if abs(theta) >= np.pi / 2 - GIMBAL_MARGIN:
        raise GimbalLock(f"pitch {theta:.6f} rad too close to +-pi/2")
    cph, sph = np.cos(phi), np.sin(phi)
    cth, tth = np.cos(theta), np.tan(theta)
    return np.array([
        [1.0, sph * tth, cph * tth],
        [0.0, cph, -sph],
        [0.0, sph / cth, cph / cth],
    ])


def transform_matrix(eta: Pose6) -> np.ndarray:
    """6x6 J(Theta) mapping body velocity to NED pose rates."""
    J = np.zeros((6, 6))
    J[:3, :3] = rotation_body_to_ned(eta.phi, eta.theta, eta.psi)
    J[3:, 3:] = euler_rate_matrix(eta.phi, eta.theta)
    return J


def kinematic_transform(eta: Pose6, nu: BodyVel6) -> np.ndarray:
    """Pose rate eta_dot = J(Theta) @ nu.

    Raises GimbalLock when |theta| >= pi/2 - 1e-6.
    """
    return transform_matrix(eta) @ nu.as_array()


def rotate_ned_to_body_2d(psi: float, err_ned: np.ndarray) -> np.ndarray:
    """Rotate a planar (x, y) NED vector into the body frame at heading psi."""
    cps, sps = np.cos(psi), np.sin(psi)
    return np.array([
        cps * err_ned[0] + sps * err_ned[1],
        -sps * err_ned[0] + cps * err_ned[1],
    ])
