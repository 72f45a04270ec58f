"""Fluid-memory kernel from frequency-dependent radiation damping.

The time-domain radiation force is a convolution of past velocity with the
retardation matrix R(tau). R is the cosine transform of the damping curves,

    R(tau) = c(tau) * integral 4 B(f) cos(2 pi f tau) df,

with an exponential cutoff window c(tau) = exp(-3 tau / T_c) that forces the
kernel to (numerically) zero by the cutoff time T_c. The infinite-frequency
added mass follows from the kernel and A(f) at a reference frequency:

    A(inf) = A(f) + 1/(2 pi f) * integral_0^Tc R(s) sin(2 pi f s) ds.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .hydrodb import HydroDatabase, check_frequency_grid

DECAY_RATIO_LIMIT = 1e-3


def trapezoid_weights(x: np.ndarray) -> np.ndarray:
    """Quadrature weights w with sum(w * y) = trapz(y, x), any ascending grid."""
    x = np.asarray(x, dtype=float)
    w = np.zeros_like(x)
    w[0] = 0.5 * (x[1] - x[0])
    w[-1] = 0.5 * (x[-1] - x[-2])
    w[1:-1] = 0.5 * (x[2:] - x[:-2])
    return w


@dataclass
class RetardationKernel:
    """Sampled memory kernel R(tau) on a uniform lag grid.

    tau_grid runs 0, h, 2h, ..., T_c; matrices holds R at each lag.
    """

    tau_grid: np.ndarray
    matrices: np.ndarray
    cutoff_time: float

    def __post_init__(self):
        self.tau_grid = np.asarray(self.tau_grid, dtype=float)
        self.matrices = np.asarray(self.matrices, dtype=float)

    @property
    def step(self) -> float:
        return float(self.tau_grid[1] - self.tau_grid[0])

    def decay_ratio(self) -> float:
        """|R(T_c)| / |R(0)| in Frobenius norm (0 if the kernel is zero)."""
        r0 = np.linalg.norm(self.matrices[0])
        if r0 == 0.0:
            return 0.0
        return float(np.linalg.norm(self.matrices[-1]) / r0)

    @classmethod
    def zero(cls, cutoff_time: float, h: float) -> "RetardationKernel":
        n = int(np.ceil(cutoff_time / h - 1e-12))
        tau = h * np.arange(n + 1)
        return cls(tau, np.zeros((n + 1, 6, 6)), float(tau[-1]))


def compute_retardation(
    db: HydroDatabase,
    cutoff_time: float = 60.0,
    h: float = 0.5,
    apply_cutoff: bool = True,
) -> RetardationKernel:
    """Cosine-transform the damping curves onto a uniform lag grid.

    The Fourier integral is evaluated entrywise by the trapezoidal rule over
    the database frequency grid, at lags 0, h, ..., T_c (T_c rounded up to a
    whole number of steps). `apply_cutoff=False` skips the exponential window
    (used when comparing against closed-form kernels).
    """
    if cutoff_time <= 0.0 or h <= 0.0:
        raise ValueError("cutoff_time and h must be positive")
    check_frequency_grid(db.freq_grid)

    n = int(np.ceil(cutoff_time / h - 1e-12))
    tau = h * np.arange(n + 1)
    f = db.freq_grid
    wf = trapezoid_weights(f)
    # (n_tau, n_f) cosine table contracted against the (n_f, 6, 6) damping stack
    cos_tbl = np.cos(2.0 * np.pi * np.outer(tau, f))
    matrices = np.einsum("tf,fij->tij", cos_tbl * wf, 4.0 * db.damping)
    if apply_cutoff:
        window = np.exp(-3.0 * tau / tau[-1])
        matrices *= window[:, None, None]

    kernel = RetardationKernel(tau, matrices, float(tau[-1]))
    ratio = kernel.decay_ratio()
    if ratio > DECAY_RATIO_LIMIT:
        warnings.warn(
            f"retardation kernel has not decayed at T_c={tau[-1]:g}s "
            f"(|R(T_c)|/|R(0)| = {ratio:.2e}); consider a longer cutoff",
            stacklevel=2,
        )
    return kernel


def infinite_added_mass(
    db: HydroDatabase,
    kernel: RetardationKernel,
    f_ref: float | None = None,
) -> np.ndarray:
    """A(inf) from A(f_ref) plus the sine-transformed kernel correction.

    With `f_ref=None` the estimate is averaged over the top three grid
    frequencies to wash out truncation noise; passing an explicit `f_ref`
    (which must be a grid frequency) disables the averaging.
    """
    if f_ref is None:
        refs = db.freq_grid[-3:]
    else:
        hits = np.nonzero(
            np.abs(db.freq_grid - f_ref) <= 1e-9 * max(1.0, abs(f_ref))
        )[0]
        if not len(hits):
            raise ValueError(f"f_ref={f_ref!r} is not on the frequency grid")
        refs = db.freq_grid[hits[:1]]

    tau = kernel.tau_grid
    out = np.zeros((6, 6))
    for f in refs:
        sin_tbl = np.sin(2.0 * np.pi * f * tau)
        corr = np.trapezoid(
            kernel.matrices * sin_tbl[:, None, None], tau, axis=0
        ) / (2.0 * np.pi * f)
        k = int(np.argmin(np.abs(db.freq_grid - f)))
        out += db.added_mass[k] + corr
    return out / len(refs)
