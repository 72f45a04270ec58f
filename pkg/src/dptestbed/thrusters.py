"""Thruster geometry, limits, and the force configuration matrix.

A thruster at (x, y) relative to the centre of gravity with thrust u (kN) at
angle alpha (rad, 0 = ahead, positive toward starboard) contributes

    [u cos(alpha), u sin(alpha), u (x sin(alpha) - y cos(alpha))]

to the surge/sway/yaw wrench. Lateral and main thrusters have their angle
locked (90 deg and 0 deg); azimuth thrusters steer freely subject to
per-step slew limits.

Layout file: whitespace columns with '#' comments,

    name kind x y u_min u_max du_max alpha_deg dalpha_deg

where kind is azimuth|lateral|main, du_max is kN per control step,
alpha_deg is the locked angle ('-' for azimuth) and dalpha_deg the per-step
slew for steerable units.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

KINDS = ("azimuth", "lateral", "main")


@dataclass(frozen=True)
class Thruster:
    name: str
    kind: str
    x: float
    y: float
    u_min: float
    u_max: float
    du_max: float
    alpha_fixed: float | None = None
    dalpha_max: float = 0.0
    alpha_min: float = -np.inf
    alpha_max: float = np.inf

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown thruster kind {self.kind!r}")
        if self.kind != "azimuth" and self.alpha_fixed is None:
            raise ValueError(f"{self.name}: fixed-angle thruster needs alpha_fixed")
        if not (self.u_min <= 0.0 <= self.u_max):
            raise ValueError(f"{self.name}: thrust range must bracket zero")
        if self.du_max <= 0.0:
            raise ValueError(f"{self.name}: du_max must be positive")

    @property
    def steerable(self) -> bool:
        return self.kind == "azimuth"


@dataclass
class ThrusterLayout:
    thrusters: list[Thruster] = field(default_factory=list)

    def __post_init__(self):
        if not self.thrusters:
            raise ValueError("layout needs at least one thruster")
        self._lx = np.array([t.x for t in self.thrusters])
        self._ly = np.array([t.y for t in self.thrusters])

    @property
    def m(self) -> int:
        return len(self.thrusters)

    @property
    def steerable_indices(self) -> list[int]:
        return [i for i, t in enumerate(self.thrusters) if t.steerable]

    def default_angles(self) -> np.ndarray:
        """Locked angles for fixed units, 0 for azimuths."""
        return np.array([
            t.alpha_fixed if t.alpha_fixed is not None else 0.0
            for t in self.thrusters
        ])

    def u_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return (
            np.array([t.u_min for t in self.thrusters]),
            np.array([t.u_max for t in self.thrusters]),
        )

    def capability(self) -> np.ndarray:
        """Rough per-axis wrench capability (kN, kN, kN m) for clamp sizing."""
        fx = fy = mn = 0.0
        for t in self.thrusters:
            top = max(abs(t.u_min), abs(t.u_max))
            if t.steerable:
                fx += top
                fy += top
                mn += top * np.hypot(t.x, t.y)
            else:
                ca, sa = np.cos(t.alpha_fixed), np.sin(t.alpha_fixed)
                fx += top * abs(ca)
                fy += top * abs(sa)
                mn += top * abs(t.x * sa - t.y * ca)
        return np.array([fx, fy, mn])


def build_config_matrix(alpha: np.ndarray, layout: ThrusterLayout) -> np.ndarray:
    """3 x m thrust configuration matrix B(alpha)."""
    alpha = np.asarray(alpha, dtype=float)
    if alpha.shape != (layout.m,):
        raise ValueError(f"alpha must have {layout.m} entries")
    ca, sa = np.cos(alpha), np.sin(alpha)
    out = np.empty((3, layout.m))
    out[0] = ca
    out[1] = sa
    out[2] = layout._lx * sa - layout._ly * ca
    return out


def config_column_derivative(alpha_j: float, thruster: Thruster) -> np.ndarray:
    """d/d alpha of one configuration-matrix column."""
    ca, sa = np.cos(alpha_j), np.sin(alpha_j)
    return np.array([-sa, ca, thruster.x * ca + thruster.y * sa])


def st_layout(rate_divisor: float = 4.0, dalpha_deg: float = 6.0) -> ThrusterLayout:
    """Four-thruster shuttle-tanker arrangement.

    Bow lateral unit, two azimuths, stern main propeller; positions and
    capacities per the vessel data sheet. Lateral/azimuth thrust is symmetric,
    the main screw is forward-only. Slew defaults: full thrust range in
    `rate_divisor` steps and `dalpha_deg` per step, sized for the quick
    belt-steered actuators this testbed mirrors (12 deg/s and a 2 s thrust
    ramp full scale at the 0.5 s step).
    """
    da = np.radians(dalpha_deg)

    def t(name, kind, x, u_cap, reverse=True, alpha_fixed=None, dalpha=0.0):
        return Thruster(
            name=name, kind=kind, x=x, y=0.0,
            u_min=-u_cap if reverse else 0.0, u_max=u_cap,
            du_max=u_cap / rate_divisor,
            alpha_fixed=alpha_fixed, dalpha_max=dalpha,
        )

    return ThrusterLayout([
        t("No1", "lateral", 60.59, 246.0, alpha_fixed=np.pi / 2),
        t("No2", "azimuth", 57.00, 275.0, dalpha=da),
        t("No3", "azimuth", -40.34, 275.0, dalpha=da),
        t("No4", "main", -61.17, 480.0, reverse=False, alpha_fixed=0.0),
    ])


def format_layout(layout: ThrusterLayout) -> str:
    lines = ["# name kind x y u_min u_max du_max alpha_deg dalpha_deg"]
    for t in layout.thrusters:
        alpha = "-" if t.alpha_fixed is None else repr(float(np.degrees(t.alpha_fixed)))
        lines.append(
            f"{t.name} {t.kind} {t.x!r} {t.y!r} {t.u_min!r} {t.u_max!r} "
            f"{t.du_max!r} {alpha} {float(np.degrees(t.dalpha_max))!r}"
        )
    return "\n".join(lines) + "\n"


def parse_layout(text: str) -> ThrusterLayout:
    thrusters = []
    for ln in text.splitlines():
        ln = ln.split("#", 1)[0].strip()
        if not ln:
            continue
        toks = ln.split()
        if len(toks) != 9:
            raise ValueError(f"layout row needs 9 columns, got {ln!r}")
        name, kind = toks[0], toks[1]
        x, y, u_min, u_max, du_max = (float(v) for v in toks[2:7])
        alpha_fixed = None if toks[7] == "-" else float(np.radians(float(toks[7])))
        dalpha = float(np.radians(float(toks[8])))
        thrusters.append(Thruster(
            name=name, kind=kind, x=x, y=y, u_min=u_min, u_max=u_max,
            du_max=du_max, alpha_fixed=alpha_fixed, dalpha_max=dalpha,
        ))
    return ThrusterLayout(thrusters)


def load_layout(path) -> ThrusterLayout:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_layout(fh.read())


def save_layout(layout: ThrusterLayout, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_layout(layout))
