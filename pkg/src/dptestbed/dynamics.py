"""Time-domain 6-DOF vessel response with fluid-memory effects.

Equation of motion (body/seakeeping frame, perturbations about the mean
state):

    [M_RB + A(inf)] dv_dot + integral R(tau) dv(t - tau) dtau + C (eta - eta_eq)
        = F_thruster + F_environment

The convolution runs over the last T_c seconds of perturbed velocity, kept in
a ring buffer inside `VesselState`. Time stepping is fixed-step RK4 with the
memory force and the external forces frozen across the step; the kinematics
J(Theta) and the restoring term are re-evaluated at each stage.

Units: the hydrodynamic matrices are SI (kg, N); the force arguments follow
the controller-side convention of kN and kN m and are converted internally.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hydrodb import HydroDatabase
from .kinematics import BodyVel6, Pose6, kinematic_transform, wrap_angle
from .retardation import RetardationKernel, infinite_added_mass

KN_TO_N = 1e3
CONDITION_LIMIT = 1e12


class SingularMassMatrix(ValueError):
    """M_RB + A(inf) is numerically singular."""


@dataclass
class VesselState:
    """Vessel pose/velocity plus the velocity history feeding the convolution.

    vel_history has shape (n_lags, 6) with the oldest sample first and the
    current perturbed velocity last; samples are spaced by the kernel step.
    """

    t: float
    eta: Pose6
    nu: BodyVel6
    vel_history: np.ndarray

    @classmethod
    def at_rest(
        cls,
        kernel: RetardationKernel,
        eta: Pose6 = Pose6(),
        nu: BodyVel6 = BodyVel6(),
        t: float = 0.0,
        U: float = 0.0,
        eta_eq: np.ndarray | None = None,
    ) -> "VesselState":
        """State with the history primed as if moving steadily forever."""
        dv = _perturbed_velocity(eta, nu, U, eta_eq)
        hist = np.tile(dv, (len(kernel.tau_grid), 1))
        return cls(t=t, eta=eta, nu=nu, vel_history=hist)


def _perturbed_velocity(eta: Pose6, nu: BodyVel6, U: float,
                        eta_eq: np.ndarray | None) -> np.ndarray:
    nu_arr = nu.as_array()
    if U == 0.0:
        return nu_arr
    eq = np.zeros(6) if eta_eq is None else eta_eq
    dpsi = float(wrap_angle(eta.psi - eq[5]))
    dtheta = float(wrap_angle(eta.theta - eq[4]))
    mean = np.array([U, -U * dpsi, U * dtheta, 0.0, 0.0, 0.0])
    return nu_arr - mean


class CumminsModel:
    """Precomputed stepping context for one vessel.

    Owns the inverted total mass matrix and the weighted kernel samples; the
    mutable state lives outside (single-writer stepping, shareable snapshots).
    """

    def __init__(
        self,
        db: HydroDatabase,
        kernel: RetardationKernel,
        a_inf: np.ndarray | None = None,
        eta_eq: np.ndarray | None = None,
        U: float = 0.0,
    ):
        self.db = db
        self.kernel = kernel
        self.a_inf = infinite_added_mass(db, kernel) if a_inf is None else a_inf
        self.total_mass = db.mass_rb + self.a_inf
        cond = np.linalg.cond(self.total_mass)
        if not np.isfinite(cond) or cond > CONDITION_LIMIT:
            raise SingularMassMatrix(
                f"M_RB + A(inf) condition number {cond:.3e}"
            )
        self.mass_inv = np.linalg.inv(self.total_mass)
        self.restoring = db.restoring
        self.eta_eq = np.zeros(6) if eta_eq is None else np.asarray(eta_eq, float)
        self.U = float(U)

        h = kernel.step
        w = np.ones(len(kernel.tau_grid))
        w[0] = w[-1] = 0.5
        # reversed so the newest history sample (last row) meets R(0)
        self._weighted_kernel = (h * w[:, None, None] * kernel.matrices)[::-1]

    @property
    def step_size(self) -> float:
        return self.kernel.step

    def memory_force(self, vel_history: np.ndarray) -> np.ndarray:
        """Trapezoidal convolution of the kernel with the velocity history (N)."""
        return np.einsum("kij,kj->i", self._weighted_kernel, vel_history)

    def kinetic_energy(self, state: VesselState) -> float:
        dv = state.vel_history[-1]
        return 0.5 * float(dv @ self.total_mass @ dv)

    def _derivative(self, eta_arr, nu_arr, force_n, mu_n):
        eta = Pose6(*eta_arr)
        nu = BodyVel6(*nu_arr)
        eta_dot = kinematic_transform(eta, nu)
        rest = self.restoring @ (eta_arr - self.eta_eq)
        dv_dot = self.mass_inv @ (force_n - mu_n - rest)
        nu_dot = dv_dot + self.U * np.array(
            [0.0, -nu_arr[5], nu_arr[4], 0.0, 0.0, 0.0]
        )
        return eta_dot, nu_dot

    def step(
        self,
        state: VesselState,
        f_thruster: np.ndarray,
        f_environment: np.ndarray,
        h: float | None = None,
    ) -> VesselState:
        """Advance one step of size h (default: the kernel lag spacing).

        f_thruster and f_environment are 6-vectors in kN / kN m, held
        constant over the step together with the memory force.
        """
        if h is None:
            h = self.kernel.step
        if abs(h - self.kernel.step) > 1e-9 * self.kernel.step:
            raise ValueError(
                f"step {h!r} does not match kernel lag spacing {self.kernel.step!r}"
            )
        force_n = KN_TO_N * (
            np.asarray(f_thruster, float) + np.asarray(f_environment, float)
        )
        mu_n = self.memory_force(state.vel_history)

        e0 = state.eta.as_array()
        n0 = state.nu.as_array()
        k1e, k1n = self._derivative(e0, n0, force_n, mu_n)
        k2e, k2n = self._derivative(
            e0 + 0.5 * h * k1e, n0 + 0.5 * h * k1n, force_n, mu_n
        )
        k3e, k3n = self._derivative(
            e0 + 0.5 * h * k2e, n0 + 0.5 * h * k2n, force_n, mu_n
        )
        k4e, k4n = self._derivative(e0 + h * k3e, n0 + h * k3n, force_n, mu_n)
        e1 = e0 + (h / 6.0) * (k1e + 2.0 * k2e + 2.0 * k3e + k4e)
        n1 = n0 + (h / 6.0) * (k1n + 2.0 * k2n + 2.0 * k3n + k4n)

        eta1 = Pose6.from_array(e1)
        nu1 = BodyVel6.from_array(n1)
        dv1 = _perturbed_velocity(eta1, nu1, self.U, self.eta_eq)
        hist = np.empty_like(state.vel_history)
        hist[:-1] = state.vel_history[1:]
        hist[-1] = dv1
        return VesselState(t=state.t + h, eta=eta1, nu=nu1, vel_history=hist)


def step_dynamics(
    state: VesselState,
    kernel: RetardationKernel,
    db: HydroDatabase,
    f_thruster: np.ndarray,
    f_environment: np.ndarray,
    h: float,
    U: float = 0.0,
    a_inf: np.ndarray | None = None,
    eta_eq: np.ndarray | None = None,
) -> VesselState:
    """One-shot step; builds a model context each call (use CumminsModel in loops)."""
    model = CumminsModel(db, kernel, a_inf=a_inf, eta_eq=eta_eq, U=U)
    return model.step(state, f_thruster, f_environment, h)
