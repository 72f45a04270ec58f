"""Vessel plant: physics stepping plus the lockstep session over the wire.

`PlantSim` is pure physics at whatever scale its inputs carry: Cummins
dynamics, synthesized environment loads, and a first-order thrust lag so the
controller sees realistic actuation. `build_plant` assembles one from
full-scale inputs, Froude-scaling everything down when a model-scale plant is
requested; the session layer then converts states up to full scale and
commands back down, so the controller always talks full scale.

Session shape (per connection): plant HELLO, controller HELLO, then strictly
alternating STATE -> CMD at the shared time step until BYE. The TCP server
hosts any number of independent sessions, one fresh simulation each.
"""

from __future__ import annotations

import socket
import threading
from dataclasses import dataclass, field

import numpy as np

from .controlloop import ControlOutput, ControlStack
from .dynamics import CumminsModel, VesselState
from .kinematics import Pose6
from .retardation import RetardationKernel, compute_retardation
from .scaling import (
    ScaleSpec,
    scale_database,
    scale_environment,
    scale_layout,
    to_full_scale,
    to_model_scale,
)
from .thrusters import ThrusterLayout, build_config_matrix
from .hydrodb import RHO_AIR, RHO_WATER, HydroDatabase
from .waves import EnvironmentSpec, WaveRealization, realize_spectrum, wave_force
from .windcurrent import HullWindage, wind_current_force
from .wire import (
    MessageStream,
    ProtocolViolation,
    WireTimeout,
    check_hello,
    make_ack,
    make_bye,
    make_cmd,
    make_hello,
    make_state,
)

_LIN = [0, 1, 2]
_ANG = [3, 4, 5]


@dataclass
class PlantConfig:
    """Full-scale description of the plant to be built."""

    db: HydroDatabase
    layout: ThrusterLayout
    env: EnvironmentSpec = EnvironmentSpec()
    h: float = 0.5
    cutoff_time: float = 60.0
    thruster_lag: float = 1.0
    n_wave_components: int = 100
    eta0: np.ndarray = field(default_factory=lambda: np.zeros(6))
    U: float = 0.0
    windage: HullWindage = field(default_factory=HullWindage)


class PlantSim:
    """One vessel with environment and actuators, stepped in lockstep."""

    def __init__(
        self,
        db: HydroDatabase,
        layout: ThrusterLayout,
        env: EnvironmentSpec,
        h: float,
        cutoff_time: float,
        thruster_lag: float = 1.0,
        n_wave_components: int = 100,
        eta0=None,
        U: float = 0.0,
        kernel: RetardationKernel | None = None,
        windage: HullWindage = HullWindage(),
        rho_water: float = RHO_WATER,
        rho_air: float = RHO_AIR,
    ):
        self.db = db
        self.layout = layout
        self.env = env
        self.h = float(h)
        if kernel is None:
            kernel = compute_retardation(db, cutoff_time, h)
        self.model = CumminsModel(db, kernel, U=U)
        pose = Pose6() if eta0 is None else Pose6.from_array(np.asarray(eta0))
        self.state = VesselState.at_rest(kernel, eta=pose, U=U)
        self.realization = (
            realize_spectrum(env, n_wave_components)
            if env.hs > 0.0 else WaveRealization()
        )
        self.u_actual = np.zeros(layout.m)
        self.alpha_actual = layout.default_angles()
        self.thruster_lag = float(thruster_lag)
        self.windage = windage
        self.rho_water = rho_water
        self.rho_air = rho_air
        self.steps = 0

    @property
    def m(self) -> int:
        return self.layout.m

    def state_vectors(self) -> tuple[float, np.ndarray, np.ndarray]:
        return self.state.t, self.state.eta.as_array(), self.state.nu.as_array()

    def environment_force(self) -> np.ndarray:
        f = wind_current_force(
            self.env, self.state.eta, self.state.nu,
            windage=self.windage, rho_water=self.rho_water, rho_air=self.rho_air,
        )
        if len(self.realization):
            f = f + wave_force(self.realization, self.db, self.state.eta, self.state.t)
        return f

    def apply_command(self, u_cmd, alpha_cmd) -> None:
        """Actuate (through the thrust lag) and advance one step."""
        u_cmd = np.asarray(u_cmd, dtype=float)
        alpha_cmd = np.asarray(alpha_cmd, dtype=float)
        if u_cmd.shape != (self.m,) or alpha_cmd.shape != (self.m,):
            raise ValueError(f"command must carry {self.m} thrusters")
        if self.thruster_lag > 0.0:
            gain = 1.0 - np.exp(-self.h / self.thruster_lag)
        else:
            gain = 1.0
        self.u_actual = self.u_actual + gain * (u_cmd - self.u_actual)
        self.alpha_actual = alpha_cmd

        tau3 = build_config_matrix(self.alpha_actual, self.layout) @ self.u_actual
        f_thr = np.zeros(6)
        f_thr[0], f_thr[1], f_thr[5] = tau3
        f_env = self.environment_force()
        self.state = self.model.step(self.state, f_thr, f_env, self.h)
        self.steps += 1


def build_plant(cfg: PlantConfig, scale: ScaleSpec = ScaleSpec()) -> PlantSim:
    """Plant from full-scale inputs, converted down when scale.lam != 1."""
    if scale.is_identity:
        return PlantSim(
            db=cfg.db, layout=cfg.layout, env=cfg.env, h=cfg.h,
            cutoff_time=cfg.cutoff_time, thruster_lag=cfg.thruster_lag,
            n_wave_components=cfg.n_wave_components, eta0=cfg.eta0, U=cfg.U,
            windage=cfg.windage,
        )
    eta0 = np.asarray(cfg.eta0, dtype=float).copy()
    eta0[_LIN] = to_model_scale(eta0[_LIN], "length", scale)
    area = scale.lam**2
    windage = HullWindage(
        frontal_wind=cfg.windage.frontal_wind / area,
        lateral_wind=cfg.windage.lateral_wind / area,
        frontal_current=cfg.windage.frontal_current / area,
        lateral_current=cfg.windage.lateral_current / area,
        length=to_model_scale(cfg.windage.length, "length", scale),
    )
    return PlantSim(
        db=scale_database(cfg.db, scale),
        layout=scale_layout(cfg.layout, scale),
        env=scale_environment(cfg.env, scale),
        h=to_model_scale(cfg.h, "time", scale),
        cutoff_time=to_model_scale(cfg.cutoff_time, "time", scale),
        thruster_lag=to_model_scale(cfg.thruster_lag, "time", scale),
        n_wave_components=cfg.n_wave_components,
        eta0=eta0,
        U=to_model_scale(cfg.U, "lin_velocity", scale),
        windage=windage,
        rho_water=RHO_WATER / scale.gamma,
        rho_air=RHO_AIR / scale.gamma,
    )


def run_lockstep_inprocess(
    sim: PlantSim,
    stack: ControlStack,
    n_steps: int,
    on_output=None,
) -> list[ControlOutput]:
    """Default fast path: plant and controller coupled without the wire."""
    outputs = []
    for _ in range(n_steps):
        t, eta, nu = sim.state_vectors()
        out = stack.step(t, eta, nu)
        sim.apply_command(out.u, out.alpha)
        outputs.append(out)
        if on_output is not None:
            on_output(out, sim)
    return outputs


# ---------------------------------------------------------------------------
# wire sessions
# ---------------------------------------------------------------------------


class PlantSession:
    """Plant side of one lockstep session; owns scale conversion."""

    def __init__(self, sim: PlantSim, stream: MessageStream,
                 scale: ScaleSpec = ScaleSpec(), h_full: float | None = None,
                 max_steps: int | None = None):
        self.sim = sim
        self.stream = stream
        self.scale = scale
        self.h_full = to_full_scale(sim.h, "time", scale) if h_full is None else h_full
        self.max_steps = max_steps

    def _state_to_full(self):
        t, eta, nu = self.sim.state_vectors()
        if self.scale.is_identity:
            return t, eta, nu
        s = self.scale
        eta = eta.copy()
        nu = nu.copy()
        t = to_full_scale(t, "time", s)
        eta[_LIN] = to_full_scale(eta[_LIN], "length", s)
        nu[_LIN] = to_full_scale(nu[_LIN], "lin_velocity", s)
        nu[_ANG] = to_full_scale(nu[_ANG], "ang_velocity", s)
        return t, eta, nu

    def _cmd_to_model(self, u_full):
        if self.scale.is_identity:
            return np.asarray(u_full, dtype=float)
        return to_model_scale(np.asarray(u_full, dtype=float), "force", self.scale)

    def run(self) -> int:
        """Serve until BYE, peer loss, or the step limit; returns steps served."""
        try:
            self.stream.send(make_hello(
                "plant", lam=self.scale.lam, gamma=self.scale.gamma,
                m=self.sim.m, h=self.h_full,
            ))
            check_hello(self.stream.recv(), "controller")
            while self.max_steps is None or self.sim.steps < self.max_steps:
                t_full, eta, nu = self._state_to_full()
                try:
                    self.stream.send(make_state(t_full, eta, nu))
                except (BrokenPipeError, ConnectionError):
                    return self.sim.steps  # peer already went away
                msg = self._await_cmd(t_full)
                if msg is None:
                    return self.sim.steps
                u = self._cmd_to_model(msg["u"])
                self.sim.apply_command(u, np.asarray(msg["alpha"], dtype=float))
            self.stream.send(make_bye("step limit reached"))
            return self.sim.steps
        except ProtocolViolation as exc:
            try:
                self.stream.send(make_bye(f"protocol violation: {exc}"))
            except OSError:
                pass
            raise
        finally:
            self.stream.close()

    def _await_cmd(self, t_expected: float):
        while True:
            msg = self.stream.recv()
            kind = msg["kind"]
            if kind == "BYE":
                return None
            if kind == "PARAM":
                self._apply_param(msg)
                continue
            if kind != "CMD":
                raise ProtocolViolation(
                    f"expected CMD for t={t_expected!r}, got {kind}"
                )
            if len(msg.get("u", ())) != self.sim.m or len(msg.get("alpha", ())) != self.sim.m:
                raise ProtocolViolation(
                    f"CMD carries {len(msg.get('u', ()))} thrusters, plant has {self.sim.m}"
                )
            if abs(msg["t"] - t_expected) > 1e-9 * max(1.0, abs(t_expected)):
                raise ProtocolViolation(
                    f"CMD t={msg['t']!r} does not answer STATE t={t_expected!r}"
                )
            return msg

    def _apply_param(self, msg: dict) -> None:
        known = {"plant.thruster_lag"}
        params = msg.get("params", {})
        bad = set(params) - known
        if bad:
            self.stream.send(make_ack("PARAM", False, f"unknown: {sorted(bad)}"))
            return
        if "plant.thruster_lag" in params:
            self.sim.thruster_lag = float(params["plant.thruster_lag"])
        self.stream.send(make_ack("PARAM", True))


class PlantServer:
    """TCP host for independent plant sessions (one fresh sim per connection)."""

    def __init__(self, sim_factory, host: str = "127.0.0.1", port: int = 0,
                 scale: ScaleSpec = ScaleSpec(), timeout: float = 5.0,
                 max_steps: int | None = None):
        self.sim_factory = sim_factory
        self.scale = scale
        self.timeout = timeout
        self.max_steps = max_steps
        self._listener = socket.create_server((host, port))
        self._listener.settimeout(0.2)
        self._threads: list[threading.Thread] = []
        self._stop = threading.Event()
        self._accept_thread: threading.Thread | None = None
        self.errors: list[Exception] = []

    @property
    def address(self) -> tuple[str, int]:
        return self._listener.getsockname()[:2]

    def start(self) -> "PlantServer":
        self._accept_thread = threading.Thread(target=self._accept_loop, daemon=True)
        self._accept_thread.start()
        return self

    def _accept_loop(self) -> None:
        while not self._stop.is_set():
            try:
                conn, _ = self._listener.accept()
            except socket.timeout:
                continue
            except OSError:
                break
            th = threading.Thread(target=self._serve, args=(conn,), daemon=True)
            th.start()
            self._threads.append(th)

    def _serve(self, conn: socket.socket) -> None:
        stream = MessageStream(conn, timeout=self.timeout)
        session = PlantSession(
            self.sim_factory(), stream, scale=self.scale, max_steps=self.max_steps
        )
        try:
            session.run()
        except Exception as exc:  # session errors must not kill the server
            self.errors.append(exc)

    def wait(self) -> None:
        """Block until the server is stopped (serve-forever semantics)."""
        if self._accept_thread is not None:
            self._accept_thread.join()

    def stop(self) -> None:
        self._stop.set()
        self._listener.close()
        if self._accept_thread is not None:
            self._accept_thread.join(timeout=2.0)
        for th in self._threads:
            th.join(timeout=2.0)


@dataclass
class ControllerLog:
    """Per-cycle record of a controller session."""

    times: list[float] = field(default_factory=list)
    states: list[np.ndarray] = field(default_factory=list)
    outputs: list[ControlOutput] = field(default_factory=list)


def run_controller(
    stream: MessageStream,
    stack: ControlStack,
    n_steps: int | None = None,
    anchor_first_state: bool = False,
    on_output=None,
) -> ControllerLog:
    """Controller side of a lockstep session over an open stream."""
    hello = check_hello(stream.recv(), "plant")
    if hello["m"] != stack.layout.m:
        stream.send(make_bye(f"layout mismatch: plant m={hello['m']}"))
        stream.close()
        raise ProtocolViolation(
            f"plant announces {hello['m']} thrusters, controller has {stack.layout.m}"
        )
    stream.send(make_hello(
        "controller", lam=1.0, gamma=hello["gamma"],
        m=stack.layout.m, h=hello["h"],
    ))
    stack.h = float(hello["h"])

    log = ControllerLog()
    served = 0
    try:
        while n_steps is None or served < n_steps:
            msg = stream.recv()
            if msg["kind"] == "BYE":
                return log
            if msg["kind"] != "STATE":
                raise ProtocolViolation(f"expected STATE, got {msg['kind']}")
            t = float(msg["t"])
            eta = np.asarray(msg["eta"], dtype=float)
            nu = np.asarray(msg["nu"], dtype=float)
            if anchor_first_state and served == 0:
                stack.reset(np.array([eta[0], eta[1], eta[5]]))
            out = stack.step(t, eta, nu)
            stream.send(make_cmd(t, out.u, out.alpha))
            log.times.append(t)
            log.states.append(np.concatenate([eta, nu]))
            log.outputs.append(out)
            if on_output is not None:
                on_output(out)
            served += 1
        stream.send(make_bye("controller done"))
        # polite close: wait for the peer to wind down so its in-flight
        # STATE is never sent into a closed socket
        try:
            while True:
                stream.recv()
        except (ProtocolViolation, WireTimeout, OSError):
            pass
    finally:
        stream.close()
    return log


def connect_controller(host: str, port: int, timeout: float = 5.0,
                       tap=None) -> MessageStream:
    sock = socket.create_connection((host, port), timeout=timeout)
    return MessageStream(sock, timeout=timeout, tap=tap)
