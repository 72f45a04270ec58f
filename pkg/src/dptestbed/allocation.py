"""Thrust allocation by sequential convexification of the nonlinear program.

For demanded wrench tau the allocator minimizes

    J(alpha, u, s) = sum_i |u_i|^(3/2)
                   + (alpha - alpha0)^T Omega (alpha - alpha0)
                   + s^T Q s
                   + rho / (eps + det(B(alpha) B(alpha)^T))

with B(alpha) u + s = tau and box/slew limits on u and alpha. Each control
step solves a few convex QP subproblems: B and the singularity term are
linearized about the current iterate, the 3/2-power cost is replaced by a
convex quadratic matched in value and slope, and the slack is eliminated
through the equality constraint, leaving a pure box QP. A candidate step is
only accepted if it lowers the true objective, so J is non-increasing over
the inner iterations.

Fixed-angle thrusters never enter the angle decision vector. Reported slack
is the exact residual tau - B(alpha) u of the returned solution.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .kinematics import wrap_angle
from .qp import solve_box_qp
from .thrusters import ThrusterLayout, build_config_matrix, config_column_derivative

CURVATURE_FLOOR = 1e-6
FD_STEP = 1e-4


class Infeasible(RuntimeError):
    """The slack-relaxed subproblem failed; indicates a solver bug."""


@dataclass(frozen=True)
class AllocationWeights:
    """Objective weights: slack penalty Q, angle-change Omega, singularity rho/eps."""

    q: np.ndarray = field(default_factory=lambda: np.array([1e4, 1e4, 1e4]))
    omega_angle: float = 10.0
    rho: float = 1.0
    epsilon: float = 1e-3

    def __post_init__(self):
        object.__setattr__(self, "q", np.asarray(self.q, dtype=float))
        if np.any(self.q < 0) or self.omega_angle < 0 or self.rho < 0:
            raise ValueError("weights must be non-negative")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")


@dataclass(frozen=True)
class AllocationSettings:
    """Iteration policy: lockstep control steps vs steady-state solves."""

    max_iter: int = 3
    honor_rate_limits: bool = True
    trust_alpha: float = 0.5        # rad per inner iteration when rates are off
    multi_start: bool = False
    tol: float = 1e-10

    @classmethod
    def steady_state(cls, max_iter: int = 60) -> "AllocationSettings":
        """Converged solve ignoring slew limits (capability studies, oracles)."""
        return cls(max_iter=max_iter, honor_rate_limits=False, multi_start=True)


@dataclass
class AllocationProblem:
    tau_demand: np.ndarray
    u0: np.ndarray
    alpha0: np.ndarray
    weights: AllocationWeights = field(default_factory=AllocationWeights)

    def __post_init__(self):
        self.tau_demand = np.asarray(self.tau_demand, dtype=float)
        self.u0 = np.asarray(self.u0, dtype=float)
        self.alpha0 = np.asarray(self.alpha0, dtype=float)


@dataclass
class AllocationResult:
    u: np.ndarray
    alpha: np.ndarray
    s: np.ndarray
    tau_achieved: np.ndarray
    iterations: int
    converged: bool
    objective: float
    objective_trace: list[float] = field(default_factory=list)


def singularity_cost(alpha: np.ndarray, layout: ThrusterLayout,
                     weights: AllocationWeights) -> float:
    if weights.rho == 0.0:
        return 0.0
    b = build_config_matrix(alpha, layout)
    det = float(np.linalg.det(b @ b.T))
    return weights.rho / (weights.epsilon + det)


def evaluate_objective(u: np.ndarray, alpha: np.ndarray,
                       problem: AllocationProblem,
                       layout: ThrusterLayout) -> float:
    """True (non-convex) objective at a candidate point; angle deltas wrapped."""
    b = build_config_matrix(alpha, layout)
    s = problem.tau_demand - b @ u
    steer = layout.steerable_indices
    dalpha = wrap_angle(alpha[steer] - problem.alpha0[steer])
    w = problem.weights
    return float(
        np.sum(np.abs(u) ** 1.5)
        + w.omega_angle * np.sum(dalpha**2)
        + s @ (w.q * s)
        + singularity_cost(alpha, layout, w)
    )


def _power_quadratic(u_c: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Slope and curvature of sum |u|^1.5 matched at the linearization point."""
    g = 1.5 * np.sign(u_c) * np.sqrt(np.abs(u_c))
    h = 0.75 / np.sqrt(np.maximum(np.abs(u_c), 1.0))
    return g, np.maximum(h, CURVATURE_FLOOR)


def _singularity_gradient(alpha: np.ndarray, steer: list[int],
                          layout: ThrusterLayout,
                          weights: AllocationWeights) -> np.ndarray:
    grad = np.zeros(len(steer))
    if weights.rho == 0.0:
        return grad
    for j, idx in enumerate(steer):
        up = alpha.copy()
        dn = alpha.copy()
        up[idx] += FD_STEP
        dn[idx] -= FD_STEP
        grad[j] = (
            singularity_cost(up, layout, weights)
            - singularity_cost(dn, layout, weights)
        ) / (2.0 * FD_STEP)
    return grad


def _step_bounds(problem: AllocationProblem, layout: ThrusterLayout,
                 settings: AllocationSettings,
                 u_c: np.ndarray, alpha_c: np.ndarray,
                 steer: list[int]) -> tuple[np.ndarray, np.ndarray]:
    """Box on [du, dalpha] combining absolute limits, slew limits and trust."""
    u_min, u_max = layout.u_bounds()
    lo_u, hi_u = u_min.copy(), u_max.copy()
    if settings.honor_rate_limits:
        du = np.array([t.du_max for t in layout.thrusters])
        lo_u = np.maximum(lo_u, problem.u0 - du)
        hi_u = np.minimum(hi_u, problem.u0 + du)
    lo = np.concatenate([lo_u - u_c, np.zeros(len(steer))])
    hi = np.concatenate([hi_u - u_c, np.zeros(len(steer))])
    for j, idx in enumerate(steer):
        t = layout.thrusters[idx]
        lo_a, hi_a = t.alpha_min, t.alpha_max
        if settings.honor_rate_limits:
            lo_a = max(lo_a, problem.alpha0[idx] - t.dalpha_max)
            hi_a = min(hi_a, problem.alpha0[idx] + t.dalpha_max)
            lo[len(u_c) + j] = lo_a - alpha_c[idx]
            hi[len(u_c) + j] = hi_a - alpha_c[idx]
        else:
            lo[len(u_c) + j] = max(lo_a - alpha_c[idx], -settings.trust_alpha)
            hi[len(u_c) + j] = min(hi_a - alpha_c[idx], settings.trust_alpha)
    # the current point must stay admissible; guard against rounding
    lo = np.minimum(lo, 0.0)
    hi = np.maximum(hi, 0.0)
    return lo, hi


def _solve_from(problem: AllocationProblem, layout: ThrusterLayout,
                settings: AllocationSettings,
                u_start: np.ndarray, alpha_start: np.ndarray):
    steer = layout.steerable_indices
    m, n = layout.m, len(steer)
    w = problem.weights
    qd = w.q

    u_c = u_start.copy()
    alpha_c = alpha_start.copy()
    j_cur = evaluate_objective(u_c, alpha_c, problem, layout)
    trace = [j_cur]
    iters = 0
    converged = False

    for _ in range(settings.max_iter):
        iters += 1
        b = build_config_matrix(alpha_c, layout)
        resid = problem.tau_demand - b @ u_c
        jac_a = np.zeros((3, n))
        for j, idx in enumerate(steer):
            jac_a[:, j] = (
                config_column_derivative(alpha_c[idx], layout.thrusters[idx])
                * u_c[idx]
            )
        gmat = np.hstack([b, jac_a])

        g_pow, h_pow = _power_quadratic(u_c)
        p = 2.0 * gmat.T @ (qd[:, None] * gmat)
        p[:m, :m] += np.diag(h_pow)
        p[m:, m:] += 2.0 * w.omega_angle * np.eye(n)
        qvec = -2.0 * gmat.T @ (qd * resid)
        qvec[:m] += g_pow
        if n:
            qvec[m:] += 2.0 * w.omega_angle * (alpha_c[steer] - problem.alpha0[steer])
            qvec[m:] += _singularity_gradient(alpha_c, steer, layout, w)

        lo, hi = _step_bounds(problem, layout, settings, u_c, alpha_c, steer)
        sol = solve_box_qp(p, qvec, lo, hi)
        z = sol.x

        step_norm = np.abs(z).max(initial=0.0)
        if step_norm <= settings.tol * (1.0 + np.abs(u_c).max(initial=0.0)):
            converged = True
            break

        accepted = False
        for _ in range(8):
            u_new = u_c + z[:m]
            alpha_new = alpha_c.copy()
            alpha_new[steer] += z[m:]
            j_new = evaluate_objective(u_new, alpha_new, problem, layout)
            if j_new <= j_cur + 1e-12 * (1.0 + abs(j_cur)):
                u_c, alpha_c, j_cur = u_new, alpha_new, j_new
                trace.append(j_cur)
                accepted = True
                break
            z = 0.5 * z
        if not accepted:
            converged = True
            break

    return u_c, alpha_c, j_cur, trace, iters, converged


def _start_candidates(problem: AllocationProblem, layout: ThrusterLayout):
    """Warm start plus the best postures from a coarse azimuth-angle scan."""
    steer = layout.steerable_indices
    u_min, u_max = layout.u_bounds()
    tau = problem.tau_demand

    yield problem.u0.copy(), problem.alpha0.copy()
    if not steer:
        return

    grid = np.radians(np.arange(-180.0, 180.0, 10.0))
    scored = []
    for combo in np.stack(np.meshgrid(*[grid] * len(steer)), -1).reshape(-1, len(steer)):
        alpha = problem.alpha0.copy()
        alpha[steer] = combo
        b = build_config_matrix(alpha, layout)
        u_p = np.linalg.lstsq(b, tau, rcond=None)[0]
        # probe along the null space so each posture is judged near its own
        # best thrust split, not at the minimum-norm one
        _, sv, vt = np.linalg.svd(b)
        null = vt[3:]
        best = None
        for frac in np.linspace(-1.0, 1.0, 9):
            u = u_p if not len(null) else u_p + frac * 200.0 * null.sum(axis=0)
            u = np.clip(u, u_min, u_max)
            j = evaluate_objective(u, alpha, problem, layout)
            if best is None or j < best[0]:
                best = (j, u)
        scored.append((best[0], best[1], alpha))
    scored.sort(key=lambda item: item[0])
    for _, u, alpha in scored[:8]:
        yield u.copy(), alpha.copy()


def allocate(problem: AllocationProblem, layout: ThrusterLayout,
             settings: AllocationSettings = AllocationSettings()) -> AllocationResult:
    """Distribute the demanded wrench over the thrusters.

    Lockstep mode (default) keeps every constraint of the rate-limited
    program and runs a fixed small number of inner iterations; steady-state
    mode iterates to convergence from several starts with slew limits
    relaxed.
    """
    if problem.u0.shape != (layout.m,) or problem.alpha0.shape != (layout.m,):
        raise ValueError("u0/alpha0 must match the layout size")

    best = None
    starts = (
        _start_candidates(problem, layout)
        if settings.multi_start and not settings.honor_rate_limits
        else [(problem.u0.copy(), problem.alpha0.copy())]
    )
    total_iters = 0
    for u_start, alpha_start in starts:
        out = _solve_from(problem, layout, settings, u_start, alpha_start)
        total_iters += out[4]
        if best is None or out[2] < best[2]:
            best = out
    if best is None:
        raise Infeasible("no allocation start point produced a solution")

    u, alpha, j_best, trace, _, converged = best
    b = build_config_matrix(alpha, layout)
    tau_achieved = b @ u
    s = problem.tau_demand - tau_achieved
    if not np.all(np.isfinite(u)) or not np.all(np.isfinite(alpha)):
        raise Infeasible("allocation produced non-finite outputs")
    return AllocationResult(
        u=u, alpha=alpha, s=s, tau_achieved=tau_achieved,
        iterations=total_iters, converged=converged,
        objective=j_best, objective_trace=trace,
    )
