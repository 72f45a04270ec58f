"""Dynamic-positioning vessel testbed.

Time-domain 6-DOF simulator with fluid-memory effects, a DP control stack
(reference filter, PID, QP thrust allocation), Froude-scale conversion, a
lockstep plant protocol, a supervision service and an experiment harness.
"""

__version__ = "0.1.0"

from .controlloop import ControlStack
from .dynamics import CumminsModel, VesselState
from .hydrodb import HydroDatabase, load_hydro_database, synthetic_st_database
from .kinematics import BodyVel6, Pose6
from .plant import PlantConfig, PlantServer, PlantSim, build_plant
from .reference import Setpoint
from .registry import ParamRegistry
from .retardation import RetardationKernel, compute_retardation, infinite_added_mass
from .scaling import ScaleSpec, to_full_scale, to_model_scale
from .thrusters import ThrusterLayout, st_layout
from .waves import EnvironmentSpec

__all__ = [
    "BodyVel6",
    "ControlStack",
    "CumminsModel",
    "EnvironmentSpec",
    "HydroDatabase",
    "ParamRegistry",
    "PlantConfig",
    "PlantServer",
    "PlantSim",
    "Pose6",
    "RetardationKernel",
    "ScaleSpec",
    "Setpoint",
    "ThrusterLayout",
    "VesselState",
    "build_plant",
    "compute_retardation",
    "infinite_added_mass",
    "load_hydro_database",
    "st_layout",
    "synthetic_st_database",
    "to_full_scale",
    "to_model_scale",
]
