"""Golden wire-protocol session for conformance checking.

Runs a fixed 3-cycle lockstep session (pinned vessel, sea state, gains and
seed) over a local socket pair and captures every frame from the plant's
viewpoint. The resulting transcript (one line per frame: direction tag plus
hex dump) ships with the package; an implementation change that alters any
byte on the wire shows up as a transcript mismatch.

Transcript line format:

    P>C 000000427b22...      frame sent by the plant
    C>P 000000387b22...      frame sent by the controller
"""

from __future__ import annotations

import socket
import threading
from importlib import resources

import numpy as np

from .controlloop import ControlStack
from .hydrodb import synthetic_st_database
from .plant import PlantConfig, PlantSession, build_plant, run_controller
from .thrusters import st_layout
from .waves import EnvironmentSpec
from .wire import MessageStream

GOLDEN_RESOURCE = "data/wire_conformance.txt"
_CYCLES = 3


def _fixture_config() -> PlantConfig:
    env = EnvironmentSpec(
        hs=1.5, tp=8.0, wave_dir=np.radians(45.0),
        wind_speed=5.0, wind_dir=np.radians(45.0),
        current_speed=0.5, current_dir=np.radians(45.0),
        seed=7,
    )
    return PlantConfig(
        db=synthetic_st_database(n_freq=32),
        layout=st_layout(),
        env=env,
        cutoff_time=30.0,
        n_wave_components=40,
    )


def record_golden_session() -> str:
    """Replay the pinned session and return its transcript text."""
    sim = build_plant(_fixture_config())
    lines: list[str] = []

    def tap(direction: str, frame: bytes) -> None:
        tag = "P>C" if direction == ">" else "C>P"
        lines.append(f"{tag} {frame.hex()}")

    a, b = socket.socketpair()
    plant_stream = MessageStream(a, timeout=10.0, tap=tap)
    ctl_stream = MessageStream(b, timeout=10.0)

    errors: list[Exception] = []

    def serve():
        try:
            PlantSession(sim, plant_stream).run()
        except Exception as exc:
            errors.append(exc)

    th = threading.Thread(target=serve, daemon=True)
    th.start()
    run_controller(ctl_stream, ControlStack(st_layout()), n_steps=_CYCLES)
    th.join(timeout=10.0)
    if errors:
        raise errors[0]
    return "\n".join(lines) + "\n"


def load_golden_transcript() -> str:
    return resources.files("dptestbed").joinpath(GOLDEN_RESOURCE).read_text()


def write_golden_transcript(path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(record_golden_session())
