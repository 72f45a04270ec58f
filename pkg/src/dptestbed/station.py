"""Supervision service: live telemetry out, operator commands in.

A `StationRunner` owns the control-loop thread (in-process plant plus
control stack). The loop never blocks on callers: commands arrive through a
bounded queue drained once per step boundary and are acknowledged with the
step index at which they took effect; telemetry frames fan out to bounded
per-subscriber queues, and a subscriber that stops draining is dropped
rather than stalling the loop.

`create_app` wraps a runner in HTTP + WebSocket endpoints:

    GET  /state      latest telemetry frame
    GET  /params     parameter snapshot with bounds and slot bindings
    POST /command    CommandEnvelope -> ack {ok, applied_step, version} | rejection
    WS   /telemetry  snapshot message, then one frame per control step
"""

from __future__ import annotations

import csv
import json
import queue
import threading
import time
from dataclasses import asdict, dataclass, field

from fastapi import FastAPI, WebSocket
from fastapi.responses import JSONResponse, Response
from starlette.concurrency import run_in_threadpool
from starlette.websockets import WebSocketDisconnect

from .controlloop import (
    ALLOCATOR_ALGORITHMS,
    CONTROLLER_ALGORITHMS,
    FILTER_ALGORITHMS,
    ControlStack,
)
from .plant import PlantSim
from .reference import Setpoint
from .registry import InvalidValue, UnknownParam

SUBSCRIBER_BUFFER = 256
COMMAND_KINDS = ("set_setpoint", "set_param", "switch_algorithm", "start", "stop")

_SLOT_ALGORITHMS = {
    "filter": FILTER_ALGORITHMS,
    "controller": CONTROLLER_ALGORITHMS,
    "allocator": ALLOCATOR_ALGORITHMS,
}


class WrongPhase(RuntimeError):
    """Command not applicable in the current runner phase or mode."""


@dataclass
class TelemetryFrame:
    """One control step's worth of observable state."""

    t: float
    step: int
    eta: list
    nu: list
    eta_d: list
    setpoint: list
    tau_pid: list
    u: list
    alpha: list
    s: list
    env: dict
    param_version: int

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, separators=(",", ":"),
                          allow_nan=False)

    @classmethod
    def from_json(cls, text: str) -> "TelemetryFrame":
        return cls(**json.loads(text))


@dataclass
class _Subscriber:
    queue: "queue.Queue[str]" = field(
        default_factory=lambda: queue.Queue(maxsize=SUBSCRIBER_BUFFER)
    )
    alive: bool = True


class StationRunner:
    """Single control session under supervision."""

    def __init__(
        self,
        sim: PlantSim,
        stack: ControlStack,
        max_steps: int | None = None,
        pace: float = 0.0,
        setpoint_script: list[tuple[float, Setpoint]] | None = None,
        log_path=None,
    ):
        self.sim = sim
        self.stack = stack
        self.max_steps = max_steps
        self.pace = float(pace)  # wall seconds per step; 0 = free run
        self.script = sorted(setpoint_script or [], key=lambda it: it[0])
        self.log_path = log_path

        self.phase = "idle"  # idle -> running -> closed
        self.step_count = 0
        self.latest: TelemetryFrame | None = None
        self.command_log: list[dict] = []

        self._commands: "queue.Queue[tuple[dict, dict, threading.Event]]" = (
            queue.Queue(maxsize=64)
        )
        self._subscribers: list[_Subscriber] = []
        self._sub_lock = threading.Lock()
        self._stop_flag = threading.Event()
        self._thread: threading.Thread | None = None
        self._log_fh = None
        self._log_writer = None

    # ------------------------------------------------------------- lifecycle

    def start(self) -> None:
        if self.phase != "idle":
            raise WrongPhase(f"cannot start from phase {self.phase!r}")
        if self.log_path is not None:
            self._log_fh = open(self.log_path, "w", newline="", encoding="utf-8")
            self._log_writer = csv.writer(self._log_fh)
            self._log_writer.writerow(["step", "kind", "payload", "request_id"])
        self.phase = "running"
        self._thread = threading.Thread(target=self._loop, daemon=True)
        self._thread.start()

    def join(self, timeout: float | None = None) -> None:
        if self._thread is not None:
            self._thread.join(timeout)

    def close(self) -> None:
        self._stop_flag.set()
        self.join(timeout=5.0)
        self.phase = "closed"
        if self._log_fh is not None:
            self._log_fh.close()
            self._log_fh = None

    # ------------------------------------------------------------- commands

    def submit(self, envelope: dict, timeout: float = 5.0) -> dict:
        """Queue a command and wait for its step-boundary ack."""
        kind = envelope.get("kind")
        if kind not in COMMAND_KINDS:
            return {"ok": False, "error": "UnknownCommand", "detail": str(kind)}
        if kind == "start":
            try:
                self.start()
            except WrongPhase as exc:
                return {"ok": False, "error": "WrongPhase", "detail": str(exc)}
            return {"ok": True, "applied_step": self.step_count,
                    "version": self.stack.registry.version}
        if self.phase != "running":
            return {"ok": False, "error": "WrongPhase",
                    "detail": f"session is {self.phase}"}
        result: dict = {}
        done = threading.Event()
        try:
            self._commands.put((envelope, result, done), timeout=timeout)
        except queue.Full:
            return {"ok": False, "error": "Busy", "detail": "command queue full"}
        if not done.wait(timeout):
            return {"ok": False, "error": "Timeout", "detail": "no ack from loop"}
        return result

    def _apply_command(self, envelope: dict) -> dict:
        kind = envelope["kind"]
        payload = envelope.get("payload", {})
        registry = self.stack.registry
        try:
            if kind == "stop":
                self._stop_flag.set()
            elif kind == "set_setpoint":
                if self.script:
                    raise WrongPhase("scripted run: manual setpoints are locked")
                sp = Setpoint(float(payload["x"]), float(payload["y"]),
                              float(payload["psi"]))
                self.stack.set_setpoint(sp)
            elif kind == "set_param":
                registry.set_params(payload)
            elif kind == "switch_algorithm":
                slot = payload["slot"]
                algorithm = payload["algorithm"]
                if algorithm not in _SLOT_ALGORITHMS.get(slot, ()):
                    raise InvalidValue(
                        f"unknown algorithm {algorithm!r} for slot {slot!r}"
                    )
                registry.set_slot(slot, algorithm)
        except (UnknownParam, InvalidValue, WrongPhase, KeyError, ValueError) as exc:
            return {"ok": False, "error": type(exc).__name__, "detail": str(exc)}
        record = {
            "step": self.step_count, "kind": kind, "payload": payload,
            "request_id": envelope.get("request_id"),
        }
        self.command_log.append(record)
        if self._log_writer is not None:
            self._log_writer.writerow(
                [record["step"], kind, json.dumps(payload, sort_keys=True),
                 record["request_id"]]
            )
            self._log_fh.flush()
        return {"ok": True, "applied_step": self.step_count,
                "version": registry.version}

    # ------------------------------------------------------------ telemetry

    def subscribe(self) -> _Subscriber:
        sub = _Subscriber()
        snapshot = self.snapshot_message()
        sub.queue.put_nowait(snapshot)
        with self._sub_lock:
            self._subscribers.append(sub)
        return sub

    def unsubscribe(self, sub: _Subscriber) -> None:
        sub.alive = False
        with self._sub_lock:
            if sub in self._subscribers:
                self._subscribers.remove(sub)

    def snapshot_message(self) -> str:
        snap = self.stack.registry.snapshot()
        bounds = {
            name: [self.stack.registry.bounds(name).lo,
                   self.stack.registry.bounds(name).hi]
            for name in snap.values
        }
        layout = self.stack.layout
        return json.dumps({
            "kind": "snapshot",
            "phase": self.phase,
            "params": snap.values,
            "slots": snap.slots,
            "version": snap.version,
            "bounds": bounds,
            "layout": {
                "names": [t.name for t in layout.thrusters],
                "kinds": [t.kind for t in layout.thrusters],
                "u_max": [t.u_max for t in layout.thrusters],
            },
            "frame": None if self.latest is None else asdict(self.latest),
        }, sort_keys=True, separators=(",", ":"))

    def _publish(self, frame: TelemetryFrame) -> None:
        self.latest = frame
        with self._sub_lock:
            subs = list(self._subscribers)
        if not subs:
            return
        text = json.dumps({"kind": "frame", "frame": asdict(frame)},
                          sort_keys=True, separators=(",", ":"))
        dead = []
        for sub in subs:
            try:
                sub.queue.put_nowait(text)
            except queue.Full:
                sub.alive = False
                dead.append(sub)
        if dead:
            with self._sub_lock:
                for sub in dead:
                    if sub in self._subscribers:
                        self._subscribers.remove(sub)

    # ----------------------------------------------------------------- loop

    def _loop(self) -> None:
        script_idx = 0
        try:
            while not self._stop_flag.is_set():
                if self.max_steps is not None and self.step_count >= self.max_steps:
                    break
                wall_start = time.monotonic()

                while True:
                    try:
                        envelope, result, done = self._commands.get_nowait()
                    except queue.Empty:
                        break
                    result.update(self._apply_command(envelope))
                    done.set()

                t, eta, nu = self.sim.state_vectors()
                while script_idx < len(self.script) and self.script[script_idx][0] <= t:
                    self.stack.set_setpoint(self.script[script_idx][1])
                    script_idx += 1

                out = self.stack.step(t, eta, nu)
                self.sim.apply_command(out.u, out.alpha)
                self.step_count += 1

                env = self.sim.env
                frame = TelemetryFrame(
                    t=float(t), step=self.step_count,
                    eta=[float(v) for v in eta], nu=[float(v) for v in nu],
                    eta_d=[float(v) for v in out.eta_d],
                    setpoint=[self.stack.setpoint.x, self.stack.setpoint.y,
                              self.stack.setpoint.psi],
                    tau_pid=[float(v) for v in out.tau_pid],
                    u=[float(v) for v in out.u],
                    alpha=[float(v) for v in out.alpha],
                    s=[float(v) for v in out.s],
                    env={"hs": env.hs, "tp": env.tp,
                         "wave_dir": env.wave_dir, "wind_speed": env.wind_speed,
                         "wind_dir": env.wind_dir,
                         "current_speed": env.current_speed,
                         "current_dir": env.current_dir, "seed": env.seed},
                    param_version=out.param_version,
                )
                self._publish(frame)

                if self.pace > 0.0:
                    leftover = self.pace - (time.monotonic() - wall_start)
                    if leftover > 0:
                        time.sleep(leftover)
        finally:
            self.phase = "closed"
            # unblock any commands that raced the shutdown
            while True:
                try:
                    _, result, done = self._commands.get_nowait()
                except queue.Empty:
                    break
                result.update({"ok": False, "error": "WrongPhase",
                               "detail": "session closed"})
                done.set()


def create_app(runner: StationRunner):
    """FastAPI application bound to one runner."""
    app = FastAPI(title="dptestbed station", version="1")

    @app.get("/state")
    def state():
        if runner.latest is None:
            return JSONResponse({"detail": "no telemetry yet"}, status_code=404)
        return Response(runner.latest.to_json(), media_type="application/json")

    @app.get("/params")
    def params():
        return Response(runner.snapshot_message(), media_type="application/json")

    @app.post("/command")
    async def command(envelope: dict):
        ack = await run_in_threadpool(runner.submit, envelope)
        return JSONResponse(ack)

    @app.websocket("/telemetry")
    async def telemetry(ws: WebSocket):
        await ws.accept()
        sub = runner.subscribe()
        try:
            while sub.alive:
                try:
                    text = await run_in_threadpool(sub.queue.get, True, 0.5)
                except queue.Empty:
                    if runner.phase == "closed" and sub.queue.empty():
                        break
                    continue
                await ws.send_text(text)
        except WebSocketDisconnect:
            pass
        finally:
            runner.unsubscribe(sub)
            try:
                await ws.close()
            except RuntimeError:
                pass

    return app
