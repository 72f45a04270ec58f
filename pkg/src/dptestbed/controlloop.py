"""DP control stack: measurement in, thruster commands out.

One `ControlStack.step` per plant state runs the bound algorithm of each
slot: reference filter ("third-order" or "direct"), motion controller ("pid"
or "pd") and thrust allocator ("qp-sqp" or "pseudoinverse"). Slots and gains
come from the parameter registry and are re-read at every step boundary, so
edits and algorithm switches take effect on the next step without touching
controller state (unless the configured switch policy resets the
integrator). All quantities are full scale.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .allocation import (
    AllocationProblem,
    AllocationSettings,
    AllocationWeights,
    allocate,
)
from .kinematics import wrap_angle
from .pid import GainSet, PidState, pid_step
from .reference import ReferenceLimits, ReferenceState, Setpoint, reference_step
from .registry import ParamRegistry
from .thrusters import ThrusterLayout, build_config_matrix

FILTER_ALGORITHMS = ("third-order", "direct")
CONTROLLER_ALGORITHMS = ("pid", "pd")
ALLOCATOR_ALGORITHMS = ("qp-sqp", "pseudoinverse")

# sized to the hull's weakest axis: sway authority ~800 kN on ~4e7 kg gives
# 0.02 m/s^2, so the shaped path must ask for less than that with margin
DEFAULT_REFERENCE_LIMITS = ReferenceLimits(
    vel=np.array([0.6, 0.3, 0.015]),
    acc=np.array([0.02, 0.006, 0.0015]),
)


@dataclass
class ControlOutput:
    """Everything one control step produced (telemetry payload)."""

    t: float
    u: np.ndarray
    alpha: np.ndarray
    s: np.ndarray
    tau_pid: np.ndarray
    tau_achieved: np.ndarray
    eta_d: np.ndarray
    eta_o: np.ndarray
    param_version: int


def gains_from_values(values: dict) -> GainSet:
    def triple(prefix):
        return np.array([values[f"{prefix}.x"], values[f"{prefix}.y"],
                         values[f"{prefix}.psi"]])

    return GainSet(
        kp=triple("pid.kp"), ki=triple("pid.ki"), kd=triple("pid.kd"),
        delta=triple("ref.delta"), omega=triple("ref.omega"),
    )


def weights_from_values(values: dict) -> AllocationWeights:
    return AllocationWeights(
        q=np.array([values["alloc.q.x"], values["alloc.q.y"], values["alloc.q.psi"]]),
        omega_angle=values["alloc.omega_angle"],
        rho=values["alloc.rho"],
        epsilon=values["alloc.epsilon"],
    )


class ControlStack:
    """Reference filter + PID + allocation behind one lockstep interface."""

    def __init__(
        self,
        layout: ThrusterLayout,
        registry: ParamRegistry | None = None,
        h: float = 0.5,
        setpoint: Setpoint = Setpoint(),
        reference_limits: ReferenceLimits = DEFAULT_REFERENCE_LIMITS,
        reset_integrator_on_switch: bool = True,
        allocation_settings: AllocationSettings = AllocationSettings(),
    ):
        self.layout = layout
        self.registry = registry if registry is not None else ParamRegistry()
        self.h = float(h)
        self.setpoint = setpoint
        self.reference_limits = reference_limits
        self.reset_integrator_on_switch = reset_integrator_on_switch
        self.allocation_settings = allocation_settings

        self.ref_state = ReferenceState.at(setpoint)
        self.pid_state = PidState()
        self.u = np.zeros(layout.m)
        self.alpha = layout.default_angles()
        self._capability = layout.capability()
        self._filtered: np.ndarray | None = None
        self._last_slots = self.registry.snapshot().slots

    def reset(self, eta_o) -> None:
        """Re-anchor the reference at a measured pose; clear controller state."""
        eta_o = np.asarray(eta_o, dtype=float)
        self.ref_state = ReferenceState(eta_d=eta_o[:3])
        self.pid_state = PidState()
        self._filtered = None

    def set_setpoint(self, setpoint: Setpoint) -> None:
        self.setpoint = setpoint

    def _lowpass(self, eta_o: np.ndarray, cutoff_hz: float) -> np.ndarray:
        if cutoff_hz <= 0.0:
            self._filtered = None
            return eta_o
        if self._filtered is None:
            self._filtered = eta_o.copy()
            return eta_o
        a = 1.0 - np.exp(-2.0 * np.pi * cutoff_hz * self.h)
        f = self._filtered
        f[:2] += a * (eta_o[:2] - f[:2])
        f[2] = wrap_angle(f[2] + a * wrap_angle(eta_o[2] - f[2]))
        return f.copy()

    def step(self, t: float, eta: np.ndarray, nu: np.ndarray) -> ControlOutput:
        """One lockstep cycle: full-scale pose/velocity in, command out."""
        snap = self.registry.snapshot()
        if snap.slots != self._last_slots:
            if self.reset_integrator_on_switch:
                self.pid_state = PidState()
            self._last_slots = snap.slots
        gains = gains_from_values(snap.values)
        weights = weights_from_values(snap.values)

        eta = np.asarray(eta, dtype=float)
        nu = np.asarray(nu, dtype=float)
        eta_o = np.array([eta[0], eta[1], eta[5]])
        eta_o = self._lowpass(eta_o, snap.values["ctl.measurement_lowpass_hz"])

        # reference shaping
        filt = snap.slots["filter"]
        if filt == "direct":
            self.ref_state = ReferenceState.at(self.setpoint)
        else:
            self.ref_state = reference_step(
                self.ref_state, self.setpoint, gains.delta, gains.omega,
                self.h, self.reference_limits,
            )

        # motion control
        ctl = snap.slots["controller"]
        if ctl == "pd":
            gains = GainSet(kp=gains.kp, ki=np.zeros(3), kd=gains.kd,
                            delta=gains.delta, omega=gains.omega)
        limit = snap.values["ctl.integral_fraction"] * self._capability
        tau_pid, self.pid_state = pid_step(
            eta_o, self.ref_state, gains, self.h, self.pid_state, limit
        )

        # allocation
        alloc = snap.slots["allocator"]
        problem = AllocationProblem(
            tau_demand=tau_pid, u0=self.u, alpha0=self.alpha, weights=weights
        )
        if alloc == "pseudoinverse":
            u, alpha, s, tau_ach = self._pinv_allocate(problem)
        else:
            res = allocate(problem, self.layout, self.allocation_settings)
            u, alpha, s, tau_ach = res.u, res.alpha, res.s, res.tau_achieved

        self.u, self.alpha = u, alpha
        return ControlOutput(
            t=t, u=u, alpha=alpha, s=s, tau_pid=tau_pid, tau_achieved=tau_ach,
            eta_d=self.ref_state.eta_d.copy(), eta_o=eta_o.copy(),
            param_version=snap.version,
        )

    def _pinv_allocate(self, problem: AllocationProblem):
        """Clipped pseudo-inverse fallback: angles stay put, thrusts least-squares."""
        b = build_config_matrix(problem.alpha0, self.layout)
        u = np.linalg.pinv(b) @ problem.tau_demand
        u_min, u_max = self.layout.u_bounds()
        du = np.array([th.du_max for th in self.layout.thrusters])
        u = np.clip(u, np.maximum(u_min, problem.u0 - du),
                    np.minimum(u_max, problem.u0 + du))
        tau_ach = b @ u
        return u, problem.alpha0.copy(), problem.tau_demand - tau_ach, tau_ach
