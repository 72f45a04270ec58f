"""Dense active-set solver for small box-constrained convex QPs.

    minimize 1/2 x^T P x + q^T x    subject to  lb <= x <= ub

P must be symmetric positive definite (the allocation subproblems guarantee
this by construction). Problems here have at most ~10 variables, so exact
dense linear algebra per active-set change is the fast and deterministic
choice; no external solver is involved.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class QPResult:
    x: np.ndarray
    converged: bool
    iterations: int


def solve_box_qp(
    P: np.ndarray,
    q: np.ndarray,
    lb: np.ndarray,
    ub: np.ndarray,
    x0: np.ndarray | None = None,
    max_iter: int = 200,
    tol: float = 1e-11,
) -> QPResult:
    """Primal active-set iteration on the bound constraints.

    Starts from the clipped x0 (or the box-projected origin), alternates
    Newton solves on the free set with bound activation along the step and
    single-constraint release on multiplier sign.
    """
    P = np.asarray(P, dtype=float)
    q = np.asarray(q, dtype=float)
    lb = np.asarray(lb, dtype=float)
    ub = np.asarray(ub, dtype=float)
    n = len(q)
    if np.any(lb > ub + 1e-15):
        raise ValueError("infeasible box: lb > ub")

    x = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float).copy()
    x = np.clip(x, lb, ub)
    pinned = lb == ub  # permanently fixed variables
    at_lo = (x <= lb) | pinned
    at_hi = (x >= ub) & ~at_lo

    scale = max(1.0, np.abs(q).max(), np.abs(P).max())
    for it in range(1, max_iter + 1):
        free = ~(at_lo | at_hi)
        d = np.zeros(n)
        if free.any():
            rhs = -(q[free] + P[np.ix_(free, ~free)] @ x[~free])
            x_target = np.linalg.solve(P[np.ix_(free, free)], rhs)
            d[free] = x_target - x[free]

        if np.abs(d).max(initial=0.0) <= tol * max(1.0, np.abs(x).max()):
            # stationary on the free set; check bound multipliers
            g = P @ x + q
            viol_lo = np.where(at_lo & ~pinned, -g, -np.inf)
            viol_hi = np.where(at_hi & ~pinned, g, -np.inf)
            worst = max(viol_lo.max(initial=-np.inf), viol_hi.max(initial=-np.inf))
            if worst <= tol * scale:
                return QPResult(x=x, converged=True, iterations=it)
            if viol_lo.max(initial=-np.inf) >= viol_hi.max(initial=-np.inf):
                at_lo[int(np.argmax(viol_lo))] = False
            else:
                at_hi[int(np.argmax(viol_hi))] = False
            continue

        # longest step inside the box along d
        t = 1.0
        blocker = -1
        block_side_hi = False
        for i in np.nonzero(free)[0]:
            if d[i] > 0 and x[i] + d[i] > ub[i]:
                ti = (ub[i] - x[i]) / d[i]
                if ti < t:
                    t, blocker, block_side_hi = ti, i, True
            elif d[i] < 0 and x[i] + d[i] < lb[i]:
                ti = (lb[i] - x[i]) / d[i]
                if ti < t:
                    t, blocker, block_side_hi = ti, i, False
        x = x + t * d
        if blocker >= 0:
            if block_side_hi:
                x[blocker] = ub[blocker]
                at_hi[blocker] = True
            else:
                x[blocker] = lb[blocker]
                at_lo[blocker] = True

    return QPResult(x=x, converged=False, iterations=max_iter)
