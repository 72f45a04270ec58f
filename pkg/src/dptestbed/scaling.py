"""Froude-similarity conversions between model scale and full scale.

Keeping the Froude number V/sqrt(L g) equal between scales fixes every
conversion factor in terms of the length ratio lambda and the water density
ratio gamma (full/model):

    length x lambda          angle x 1
    lin_velocity x sqrt(lambda)      ang_velocity x 1/sqrt(lambda)
    force x gamma lambda^3   moment x gamma lambda^4
    time x sqrt(lambda)      mass x gamma lambda^3

The controller always works at full scale; conversion happens only at the
plant boundary. `scale_database` / `scale_layout` / `scale_environment`
produce consistent model-scale copies of the physics inputs so that a scaled
plant behaves exactly like the full-scale one after conversion.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from .hydrodb import HydroDatabase


class UnknownKind(ValueError):
    """Quantity kind without a defined similarity factor."""


@dataclass(frozen=True)
class ScaleSpec:
    """Length ratio lambda = L_full / L_model and density ratio gamma."""

    lam: float = 1.0
    gamma: float = 1.0

    def __post_init__(self):
        if self.lam <= 0.0 or self.gamma <= 0.0:
            raise ValueError("lambda and gamma must be positive")

    @property
    def is_identity(self) -> bool:
        return self.lam == 1.0 and self.gamma == 1.0


def dimension_factor(spec: ScaleSpec, mass: int = 0, length: int = 0,
                     time: int = 0) -> float:
    """Full/model ratio for a quantity of dimension M^mass L^length T^time."""
    return (spec.gamma * spec.lam**3) ** mass * spec.lam ** (length + 0.5 * time)


_KIND_DIMS = {
    "length": dict(length=1),
    "angle": dict(),
    "lin_velocity": dict(length=1, time=-1),
    "ang_velocity": dict(time=-1),
    "force": dict(mass=1, length=1, time=-2),
    "moment": dict(mass=1, length=2, time=-2),
    "time": dict(time=1),
    "mass": dict(mass=1),
}

KINDS = tuple(_KIND_DIMS)


def conversion_factor(kind: str, spec: ScaleSpec) -> float:
    try:
        dims = _KIND_DIMS[kind]
    except KeyError:
        raise UnknownKind(f"no similarity factor for kind {kind!r}") from None
    return dimension_factor(spec, **dims)


def to_full_scale(value, kind: str, spec: ScaleSpec):
    """Convert a model-scale quantity (scalar or array) to full scale."""
    return value * conversion_factor(kind, spec)


def to_model_scale(value, kind: str, spec: ScaleSpec):
    """Convert a full-scale quantity (scalar or array) to model scale."""
    return value / conversion_factor(kind, spec)


def _dof_length_exponent():
    # translational DOFs carry no extra arm, rotational ones one factor of length
    return np.array([0, 0, 0, 1, 1, 1])


def scale_database(db: "HydroDatabase", spec: ScaleSpec) -> "HydroDatabase":
    """Model-scale copy of a full-scale hydrodynamic database."""
    from .hydrodb import HydroDatabase

    if spec.is_identity:
        return db
    p = _dof_length_exponent()
    lam, gamma = spec.lam, spec.gamma
    mass_fac = gamma * lam**3 * lam ** (p[:, None] + p[None, :])
    damp_fac = mass_fac / np.sqrt(lam)
    rest_fac = gamma * lam**2 * lam ** (p[:, None] + p[None, :])
    rao_fac = gamma * lam**2 * lam**p
    freq_fac = 1.0 / np.sqrt(lam)

    return HydroDatabase(
        freq_grid=db.freq_grid / freq_fac,
        added_mass=db.added_mass / mass_fac,
        damping=db.damping / damp_fac,
        restoring=db.restoring / rest_fac,
        mass_rb=db.mass_rb / mass_fac,
        rao_dirs=db.rao_dirs.copy(),
        force_rao=db.force_rao / rao_fac,
    )


def scale_environment(env, spec: ScaleSpec):
    """Model-scale copy of an EnvironmentSpec (directions and seed unchanged)."""
    if spec.is_identity:
        return env
    return replace(
        env,
        hs=to_model_scale(env.hs, "length", spec),
        tp=to_model_scale(env.tp, "time", spec),
        wind_speed=to_model_scale(env.wind_speed, "lin_velocity", spec),
        current_speed=to_model_scale(env.current_speed, "lin_velocity", spec),
    )


def scale_layout(layout, spec: ScaleSpec):
    """Model-scale copy of a ThrusterLayout (angles untouched)."""
    from .thrusters import ThrusterLayout

    if spec.is_identity:
        return layout
    thrusters = []
    for t in layout.thrusters:
        thrusters.append(
            replace(
                t,
                x=to_model_scale(t.x, "length", spec),
                y=to_model_scale(t.y, "length", spec),
                u_min=to_model_scale(t.u_min, "force", spec),
                u_max=to_model_scale(t.u_max, "force", spec),
                du_max=to_model_scale(t.du_max, "force", spec),
            )
        )
    return ThrusterLayout(thrusters)
