"""Irregular sea state synthesis and first-order wave loads.

A JONSWAP spectrum (peak enhancement 3.3) is discretized into equal-energy
components; the resulting harmonic set drives the force RAOs of the
hydrodynamic database. Directions follow marine "coming from" convention in
the NED frame; the RAO lookup works in heading-relative coordinates.

The spectrum shape is evaluated in nondimensional frequency f' = f * Tp and
amplitudes are normalized to m0 = (Hs/4)^2 exactly, so realizations at
different Froude scales share bin boundaries and phases.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .hydrodb import HydroDatabase
from .kinematics import Pose6, wrap_angle

JONSWAP_GAMMA = 3.3
# nondimensional band f*Tp covered by the discretization
_BAND_LO, _BAND_HI = 0.5, 6.0
_BAND_POINTS = 4096


class RAOOutOfRange(ValueError):
    """Wave component frequency falls outside the RAO grid by more than 10%."""


@dataclass(frozen=True)
class EnvironmentSpec:
    """Wave / wind / current description; directions are NED 'coming from', rad."""

    hs: float = 0.0
    tp: float = 8.0
    wave_dir: float = 0.0
    wind_speed: float = 0.0
    wind_dir: float = 0.0
    current_speed: float = 0.0
    current_dir: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.hs < 0.0:
            raise ValueError("Hs must be >= 0")
        if self.tp <= 0.0:
            raise ValueError("Tp must be > 0")
        if self.wind_speed < 0.0 or self.current_speed < 0.0:
            raise ValueError("speeds must be >= 0")

    def collinear(self, direction: float) -> "EnvironmentSpec":
        """Same magnitudes with all three directions set to `direction`."""
        return EnvironmentSpec(
            hs=self.hs, tp=self.tp, wave_dir=direction,
            wind_speed=self.wind_speed, wind_dir=direction,
            current_speed=self.current_speed, current_dir=direction,
            seed=self.seed,
        )


@dataclass
class WaveRealization:
    """Discrete harmonic components of one sea-state realization."""

    amplitude: np.ndarray = field(default_factory=lambda: np.zeros(0))
    frequency: np.ndarray = field(default_factory=lambda: np.zeros(0))
    direction: np.ndarray = field(default_factory=lambda: np.zeros(0))
    phase: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def zeroth_moment(self) -> float:
        return float(np.sum(0.5 * self.amplitude**2))

    def __len__(self) -> int:
        return len(self.amplitude)


def jonswap_shape(fp_ratio: np.ndarray, gamma: float = JONSWAP_GAMMA) -> np.ndarray:
    """Unnormalized JONSWAP density against f/fp (peak enhancement gamma)."""
    x = np.asarray(fp_ratio, dtype=float)
    sigma = np.where(x <= 1.0, 0.07, 0.09)
    peak = np.exp(-((x - 1.0) ** 2) / (2.0 * sigma**2))
    with np.errstate(divide="ignore", over="ignore"):
        base = np.where(x > 0, x**-5.0 * np.exp(-1.25 * x**-4.0), 0.0)
    return base * gamma**peak


def realize_spectrum(spec: EnvironmentSpec, n_components: int = 100) -> WaveRealization:
    """Equal-energy JONSWAP discretization, deterministic for a given seed.

    Every component carries m0/n of variance; frequencies sit at the energy
    medians of their bins. Total m0 equals (Hs/4)^2 by construction.
    """
    if n_components < 20:
        raise ValueError("need at least 20 components")
    rng = np.random.default_rng(spec.seed)
    phases = rng.uniform(0.0, 2.0 * np.pi, n_components)

    # energy quantiles of the nondimensional shape
    x = np.linspace(_BAND_LO, _BAND_HI, _BAND_POINTS)
    dens = jonswap_shape(x)
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(x))])
    cum /= cum[-1]
    targets = (np.arange(n_components) + 0.5) / n_components
    x_med = np.interp(targets, cum, x)

    freq = x_med / spec.tp
    amp = np.full(n_components, (spec.hs / 4.0) * np.sqrt(2.0 / n_components))
    direction = np.full(n_components, float(spec.wave_dir))
    return WaveRealization(amplitude=amp, frequency=freq,
                           direction=direction, phase=phases)


def _interp_rao(db: HydroDatabase, freq: np.ndarray, rel_dir: np.ndarray) -> np.ndarray:
    """Bilinear complex interpolation of the force RAO table, (n, 6)."""
    if not db.force_rao.size:
        raise RAOOutOfRange("database carries no RAO table")
    f_grid = db.freq_grid
    lo, hi = f_grid[0], f_grid[-1]
    if np.any(freq < 0.9 * lo) or np.any(freq > 1.1 * hi):
        bad = freq[(freq < 0.9 * lo) | (freq > 1.1 * hi)]
        raise RAOOutOfRange(
            f"component frequencies {bad} outside RAO grid [{lo:g}, {hi:g}] by >10%"
        )
    fq = np.clip(freq, lo, hi)

    # wraparound direction axis
    dirs = np.concatenate([db.rao_dirs, [db.rao_dirs[0] + 2.0 * np.pi]])
    table = np.concatenate([db.force_rao, db.force_rao[:1]], axis=0)
    rel = np.asarray(rel_dir, dtype=float)
    rel = np.where(rel < dirs[0], rel + 2.0 * np.pi, rel)

    di = np.clip(np.searchsorted(dirs, rel, side="right") - 1, 0, len(dirs) - 2)
    fi = np.clip(np.searchsorted(f_grid, fq, side="right") - 1, 0, len(f_grid) - 2)
    td = (rel - dirs[di]) / (dirs[di + 1] - dirs[di])
    tf = (fq - f_grid[fi]) / (f_grid[fi + 1] - f_grid[fi])
    td = td[:, None]
    tf = tf[:, None]
    c00 = table[di, fi]
    c01 = table[di, fi + 1]
    c10 = table[di + 1, fi]
    c11 = table[di + 1, fi + 1]
    return (
        c00 * (1 - td) * (1 - tf)
        + c01 * (1 - td) * tf
        + c10 * td * (1 - tf)
        + c11 * td * tf
    )


def wave_force(real: WaveRealization, db: HydroDatabase, eta: Pose6,
               t: float) -> np.ndarray:
    """First-order wave load at time t, kN / kN m in the body frame.

    Superposes RAO-scaled harmonics; each component's heading enters relative
    to the current vessel heading.
    """
    if len(real) == 0:
        return np.zeros(6)
    rel_dir = wrap_angle(real.direction - eta.psi)
    rao = _interp_rao(db, real.frequency, rel_dir)
    carrier = np.exp(1j * (2.0 * np.pi * real.frequency * t + real.phase))
    force_n = np.real(rao * (real.amplitude * carrier)[:, None]).sum(axis=0)
    return force_n / 1e3
