"""Quadratic wind and current loads from direction-dependent coefficients.

Per axis: F = 1/2 rho C(beta) A V_rel^2, with beta the coming-from direction
of the relative flow measured from the bow (positive toward starboard).
Current acts on the underwater hull against the relative water velocity;
wind acts on the windage areas against the relative (apparent) wind.

Coefficient tables are sampled every 10 degrees and interpolated linearly
with wraparound; a file override uses whitespace columns
`direction_deg  Cx  Cy  Cn` with '#' comments.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hydrodb import (
    RHO_AIR,
    RHO_WATER,
    ST_BEAM,
    ST_DRAUGHT,
    ST_FRONTAL_AREA,
    ST_FREEBOARD_AREA,
    ST_LENGTH,
)
from .kinematics import BodyVel6, Pose6


@dataclass
class CoefficientTable:
    """Cx/Cy/Cn against coming-from direction (deg, ascending, wraps at 360)."""

    directions_deg: np.ndarray
    cx: np.ndarray
    cy: np.ndarray
    cn: np.ndarray

    def __post_init__(self):
        self.directions_deg = np.asarray(self.directions_deg, dtype=float)
        self.cx = np.asarray(self.cx, dtype=float)
        self.cy = np.asarray(self.cy, dtype=float)
        self.cn = np.asarray(self.cn, dtype=float)
        if np.any(np.diff(self.directions_deg) <= 0):
            raise ValueError("coefficient directions must be ascending")

    def coefficients(self, beta_rad: float) -> tuple[float, float, float]:
        beta = np.degrees(beta_rad) % 360.0
        d = np.concatenate([self.directions_deg, [self.directions_deg[0] + 360.0]])
        out = []
        for col in (self.cx, self.cy, self.cn):
            v = np.concatenate([col, col[:1]])
            out.append(float(np.interp(beta, d, v)))
        return out[0], out[1], out[2]


def default_coefficient_table(cx_peak: float = 0.70, cy_peak: float = 0.90,
                              cn_peak: float = 0.15) -> CoefficientTable:
    """Smooth sinusoid-based curves: even Cx, odd Cy, double-lobed Cn."""
    d = np.arange(0.0, 360.0, 10.0)
    b = np.radians(d)
    return CoefficientTable(
        directions_deg=d,
        cx=-cx_peak * np.cos(b),
        cy=-cy_peak * np.sin(b),
        cn=-cn_peak * np.sin(2.0 * b),
    )


def parse_coefficient_table(text: str) -> CoefficientTable:
    rows = []
    for ln in text.splitlines():
        ln = ln.split("#", 1)[0].strip()
        if not ln:
            continue
        toks = [float(t) for t in ln.split()]
        if len(toks) != 4:
            raise ValueError(f"coefficient row needs 4 columns, got {ln!r}")
        rows.append(toks)
    arr = np.asarray(rows, dtype=float)
    return CoefficientTable(arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3])


def load_coefficient_table(path) -> CoefficientTable:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_coefficient_table(fh.read())


@dataclass(frozen=True)
class HullWindage:
    """Reference areas (m^2) and length (m) for the drag formulas."""

    frontal_wind: float = ST_FRONTAL_AREA
    lateral_wind: float = ST_FREEBOARD_AREA
    frontal_current: float = ST_BEAM * ST_DRAUGHT
    lateral_current: float = ST_LENGTH * ST_DRAUGHT
    length: float = ST_LENGTH


def _drag_force(rel_body: np.ndarray, rho: float, table: CoefficientTable,
                a_frontal: float, a_lateral: float, length: float) -> np.ndarray:
    speed = float(np.hypot(rel_body[0], rel_body[1]))
    if speed < 1e-12:
        return np.zeros(3)
    beta = np.arctan2(-rel_body[1], -rel_body[0])  # coming-from, off the bow
    cx, cy, cn = table.coefficients(beta)
    q = 0.5 * rho * speed**2
    return q * np.array([cx * a_frontal, cy * a_lateral, cn * a_lateral * length])


def wind_current_force(
    spec,
    eta: Pose6,
    nu: BodyVel6,
    wind_table: CoefficientTable | None = None,
    current_table: CoefficientTable | None = None,
    windage: HullWindage = HullWindage(),
    rho_water: float = RHO_WATER,
    rho_air: float = RHO_AIR,
) -> np.ndarray:
    """Summed wind + current load, kN / kN m in the body frame (surge, sway, yaw)."""
    wind_table = wind_table or default_coefficient_table()
    current_table = current_table or default_coefficient_table()

    cps, sps = np.cos(eta.psi), np.sin(eta.psi)
    rot = np.array([[cps, sps], [-sps, cps]])  # NED -> body
    vel_body = np.array([nu.u, nu.v])

    def rel_flow(speed, coming_from):
        flow_ned = speed * np.array(
            [np.cos(coming_from + np.pi), np.sin(coming_from + np.pi)]
        )
        return rot @ flow_ned - vel_body

    f3 = _drag_force(
        rel_flow(spec.current_speed, spec.current_dir), rho_water,
        current_table, windage.frontal_current, windage.lateral_current,
        windage.length,
    )
    f3 += _drag_force(
        rel_flow(spec.wind_speed, spec.wind_dir), rho_air,
        wind_table, windage.frontal_wind, windage.lateral_wind,
        windage.length,
    )
    out = np.zeros(6)
    out[0], out[1], out[5] = f3 / 1e3
    return out
