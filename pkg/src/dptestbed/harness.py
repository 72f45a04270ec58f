"""Batch experiment driver: position keeping, capability sweeps, box manoeuvres.

Every run couples a fresh in-process plant (or, with `wire=True`, a TCP
session against a local plant server) to a fresh control stack, records
per-step time series, and reduces them to a `RunSummary` over the
post-settle window. Outputs are plain CSV plus a manifest carrying the
scenario hash, so identical scenarios reproduce bit-for-bit.

Reported statistics: offsets are tracking errors against the filtered
reference; mean forces are signed means of the achieved wrench; allocation
error is the 95th-percentile slack per axis relative to the same percentile
of the demand (axes carrying less than 1% of capability are reported
against that floor instead).
"""

from __future__ import annotations

import hashlib
import json
import threading
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .controlloop import ControlStack, ControlOutput
from .hydrodb import HydroDatabase
from .kinematics import wrap_angle
from .plant import (
    PlantConfig,
    PlantServer,
    PlantSim,
    build_plant,
    connect_controller,
    run_controller,
)
from .reference import Setpoint
from .registry import ParamRegistry
from .thrusters import ThrusterLayout, build_config_matrix
from .waves import EnvironmentSpec

TIMESERIES_NAME = "timeseries_{tag}.csv"
SWEEP_SUMMARY_NAME = "sweep.csv"
TRAJECTORY_NAME = "trajectory.csv"
MANIFEST_NAME = "manifest.json"

SWEEP_COLUMNS = (
    "direction_deg,max_pos_offset_m,max_heading_offset_deg,"
    "mean_thrust_x_kn,mean_thrust_y_kn,mean_moment_knm,"
    "alloc_err_x,alloc_err_y,alloc_err_n,steps"
)


class MissingArtifact(FileNotFoundError):
    """Run directory lacks the artifacts a report needs."""


@dataclass
class ScenarioSpec:
    """One experiment description (full scale)."""

    kind: str = "position_keeping"
    env: EnvironmentSpec = field(default_factory=EnvironmentSpec)
    duration: float = 1800.0
    settle: float = 300.0
    h: float = 0.5
    seed: int = 0
    direction_step_deg: float = 15.0
    square_side: float = 40.0
    corner_dwell: float = 400.0
    setpoint: Setpoint = field(default_factory=Setpoint)
    n_wave_components: int = 100
    cutoff_time: float = 60.0
    thruster_lag: float = 1.0
    wire: bool = False
    param_overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("position_keeping", "capability_sweep", "four_corner"):
            raise ValueError(f"unknown scenario kind {self.kind!r}")
        if self.duration <= self.settle:
            raise ValueError("duration must exceed the settle window")

    def canonical(self) -> dict:
        out = asdict(self)
        out["setpoint"] = [self.setpoint.x, self.setpoint.y, self.setpoint.psi]
        out["env"] = asdict(self.env)
        return out

    def config_hash(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


@dataclass
class RunSummary:
    """Post-settle statistics of one run."""

    direction_deg: float | None
    max_pos_offset: float
    max_heading_offset_deg: float
    mean_thrust_x: float
    mean_thrust_y: float
    mean_moment: float
    alloc_err: tuple[float, float, float]
    steps: int
    files: dict = field(default_factory=dict)


@dataclass
class RunHistory:
    """Raw per-step arrays of one run."""

    t: np.ndarray
    eta: np.ndarray       # (n, 6)
    nu: np.ndarray        # (n, 6)
    eta_d: np.ndarray     # (n, 3)
    tau_pid: np.ndarray   # (n, 3)
    tau_ach: np.ndarray   # (n, 3)
    u: np.ndarray         # (n, m)
    alpha: np.ndarray     # (n, m)
    s: np.ndarray         # (n, 3)

    @classmethod
    def from_outputs(cls, states: list, outputs: list[ControlOutput]) -> "RunHistory":
        arr = np.asarray(states)
        return cls(
            t=np.array([o.t for o in outputs]),
            eta=arr[:, :6],
            nu=arr[:, 6:],
            eta_d=np.array([o.eta_d for o in outputs]),
            tau_pid=np.array([o.tau_pid for o in outputs]),
            tau_ach=np.array([o.tau_achieved for o in outputs]),
            u=np.array([o.u for o in outputs]),
            alpha=np.array([o.alpha for o in outputs]),
            s=np.array([o.s for o in outputs]),
        )

    def tracking_error(self) -> tuple[np.ndarray, np.ndarray]:
        pos = np.hypot(self.eta[:, 0] - self.eta_d[:, 0],
                       self.eta[:, 1] - self.eta_d[:, 1])
        head = np.degrees(np.abs(wrap_angle(self.eta[:, 5] - self.eta_d[:, 2])))
        return pos, head

    def configuration_determinant(self, layout: ThrusterLayout) -> np.ndarray:
        """det(B B^T) of the thrust configuration at every step."""
        out = np.empty(len(self.t))
        for k in range(len(self.t)):
            b = build_config_matrix(self.alpha[k], layout)
            out[k] = np.linalg.det(b @ b.T)
        return out


def _derived_env(spec: ScenarioSpec, direction_rad: float | None,
                 seed_offset: int = 0) -> EnvironmentSpec:
    env = spec.env
    if direction_rad is not None:
        env = env.collinear(direction_rad)
    if seed_offset or spec.seed:
        env = EnvironmentSpec(**{**asdict(env), "seed": env.seed + spec.seed + seed_offset})
    return env


def _make_stack(spec: ScenarioSpec, layout: ThrusterLayout,
                setpoint: Setpoint) -> ControlStack:
    registry = ParamRegistry()
    if spec.param_overrides:
        registry.set_params(spec.param_overrides)
    return ControlStack(layout, registry=registry, h=spec.h, setpoint=setpoint)


def _drive(spec: ScenarioSpec, sim: PlantSim, stack: ControlStack,
           n_steps: int, script=None) -> RunHistory:
    states = []
    outputs = []
    script = sorted(script or [], key=lambda it: it[0])
    idx = 0
    if spec.wire:
        if script:
            raise ValueError("wire mode does not support setpoint scripts")
        server = PlantServer(lambda: sim, max_steps=n_steps, timeout=60.0).start()
        try:
            host, port = server.address
            stream = connect_controller(host, port, timeout=60.0)
            log = run_controller(stream, stack, n_steps=n_steps)
            states, outputs = log.states, log.outputs
        finally:
            server.stop()
    else:
        for _ in range(n_steps):
            t, eta, nu = sim.state_vectors()
            while idx < len(script) and script[idx][0] <= t:
                stack.set_setpoint(script[idx][1])
                idx += 1
            out = stack.step(t, eta, nu)
            sim.apply_command(out.u, out.alpha)
            states.append(np.concatenate([eta, nu]))
            outputs.append(out)
    return RunHistory.from_outputs(states, outputs)


def _summarize(spec: ScenarioSpec, hist: RunHistory, layout: ThrusterLayout,
               direction_deg: float | None) -> RunSummary:
    window = hist.t >= spec.settle
    pos_err, head_err = hist.tracking_error()
    capability = layout.capability()
    floor = 0.01 * capability
    p95_s = np.percentile(np.abs(hist.s[window]), 95, axis=0)
    p95_tau = np.percentile(np.abs(hist.tau_pid[window]), 95, axis=0)
    ratios = p95_s / np.maximum(p95_tau, floor)
    return RunSummary(
        direction_deg=direction_deg,
        max_pos_offset=float(pos_err[window].max()),
        max_heading_offset_deg=float(head_err[window].max()),
        mean_thrust_x=float(hist.tau_ach[window, 0].mean()),
        mean_thrust_y=float(hist.tau_ach[window, 1].mean()),
        mean_moment=float(hist.tau_ach[window, 2].mean()),
        alloc_err=tuple(float(r) for r in ratios),
        steps=int(window.sum()),
    )


def _write_timeseries(path: Path, hist: RunHistory, layout: ThrusterLayout) -> None:
    m = layout.m
    cols = (["t"]
            + [f"eta_{n}" for n in ("x", "y", "z", "phi", "theta", "psi")]
            + [f"nu_{n}" for n in ("u", "v", "w", "p", "q", "r")]
            + ["refx", "refy", "refpsi"]
            + ["taupid_x", "taupid_y", "taupid_n"]
            + ["tauach_x", "tauach_y", "tauach_n"]
            + [f"u_{i+1}" for i in range(m)]
            + [f"alpha_{i+1}" for i in range(m)]
            + ["s_x", "s_y", "s_n", "det"])
    data = np.hstack([
        hist.t[:, None], hist.eta, hist.nu, hist.eta_d,
        hist.tau_pid, hist.tau_ach, hist.u, hist.alpha, hist.s,
        hist.configuration_determinant(layout)[:, None],
    ])
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(cols) + "\n")
        for row in data:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def _write_manifest(out_dir: Path, spec: ScenarioSpec, extra: dict) -> None:
    manifest = {
        "package": "dptestbed",
        "version": __version__,
        "config_hash": spec.config_hash(),
        "scenario": spec.canonical(),
        **extra,
    }
    (out_dir / MANIFEST_NAME).write_text(
        json.dumps(manifest, sort_keys=True, indent=2) + "\n"
    )


def run_position_keeping(
    spec: ScenarioSpec, db: HydroDatabase, layout: ThrusterLayout,
    direction_rad: float | None = None, seed_offset: int = 0,
    out_dir: Path | None = None, tag: str = "pk",
) -> tuple[RunSummary, RunHistory]:
    env = _derived_env(spec, direction_rad, seed_offset)
    cfg = PlantConfig(
        db=db, layout=layout, env=env, h=spec.h, cutoff_time=spec.cutoff_time,
        thruster_lag=spec.thruster_lag, n_wave_components=spec.n_wave_components,
        eta0=np.array([spec.setpoint.x, spec.setpoint.y, 0, 0, 0, spec.setpoint.psi]),
    )
    sim = build_plant(cfg)
    stack = _make_stack(spec, layout, spec.setpoint)
    n_steps = int(round(spec.duration / spec.h))
    hist = _drive(spec, sim, stack, n_steps)
    direction_deg = None if direction_rad is None else float(np.degrees(direction_rad))
    summary = _summarize(spec, hist, layout, direction_deg)
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        ts = out_dir / TIMESERIES_NAME.format(tag=tag)
        _write_timeseries(ts, hist, layout)
        summary.files["timeseries"] = str(ts)
    return summary, hist


def run_capability_sweep(
    spec: ScenarioSpec, db: HydroDatabase, layout: ThrusterLayout,
    out_dir: Path | None = None, workers: int = 1,
) -> list[RunSummary]:
    directions = np.arange(0.0, 360.0, spec.direction_step_deg)
    results: list[RunSummary | None] = [None] * len(directions)

    def one(i: int) -> None:
        tag = f"dir{int(round(directions[i])):03d}"
        summary, _ = run_position_keeping(
            spec, db, layout, direction_rad=float(np.radians(directions[i])),
            seed_offset=i, out_dir=out_dir, tag=tag,
        )
        results[i] = summary

    if workers > 1:
        threads = []
        for i in range(len(directions)):
            th = threading.Thread(target=one, args=(i,))
            th.start()
            threads.append(th)
            if len(threads) >= workers:
                threads.pop(0).join()
        for th in threads:
            th.join()
    else:
        for i in range(len(directions)):
            one(i)

    summaries = [r for r in results if r is not None]
    if len(summaries) != len(directions):
        raise RuntimeError("sweep aborted; partial results preserved")
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        path = out_dir / SWEEP_SUMMARY_NAME
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(SWEEP_COLUMNS + "\n")
            for s in summaries:
                fh.write(",".join(repr(float(v)) for v in (
                    s.direction_deg, s.max_pos_offset, s.max_heading_offset_deg,
                    s.mean_thrust_x, s.mean_thrust_y, s.mean_moment,
                    *s.alloc_err, s.steps,
                )) + "\n")
        _write_manifest(out_dir, spec, {"directions": len(summaries)})
    return summaries


def four_corner_script(spec: ScenarioSpec) -> list[tuple[float, Setpoint]]:
    side = spec.square_side
    corners = [(0.0, 0.0), (side, 0.0), (side, side), (0.0, side), (0.0, 0.0)]
    return [
        (spec.settle + k * spec.corner_dwell, Setpoint(x, y, spec.setpoint.psi))
        for k, (x, y) in enumerate(corners)
    ]


def run_four_corner(
    spec: ScenarioSpec, db: HydroDatabase, layout: ThrusterLayout,
    out_dir: Path | None = None,
) -> tuple[RunSummary, RunHistory]:
    script = four_corner_script(spec)
    total = script[-1][0] + spec.corner_dwell
    n_steps = int(round(total / spec.h))
    cfg = PlantConfig(
        db=db, layout=layout, env=spec.env, h=spec.h,
        cutoff_time=spec.cutoff_time, thruster_lag=spec.thruster_lag,
        n_wave_components=spec.n_wave_components,
    )
    sim = build_plant(cfg)
    stack = _make_stack(spec, layout, Setpoint(0.0, 0.0, spec.setpoint.psi))
    hist = _drive(spec, sim, stack, n_steps, script=script)
    summary = _summarize(spec, hist, layout, None)
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        ts = out_dir / TRAJECTORY_NAME
        _write_timeseries(ts, hist, layout)
        summary.files["trajectory"] = str(ts)
        _write_manifest(out_dir, spec, {
            "corners": [[sp.x, sp.y] for _, sp in script],
            "corner_times": [t for t, _ in script],
        })
    return summary, hist


# ---------------------------------------------------------------------------
# reporting
# ---------------------------------------------------------------------------


def corner_steady_errors(hist: RunHistory, script: list[tuple[float, Setpoint]],
                         dwell: float) -> list[float]:
    """Tracking error near the end of each corner dwell (steady window)."""
    pos_err, _ = hist.tracking_error()
    out = []
    for t_cmd, _sp in script:
        t_end = t_cmd + dwell
        window = (hist.t >= t_end - 0.25 * dwell) & (hist.t < t_end)
        if window.any():
            out.append(float(pos_err[window].max()))
    return out


def report(run_dir, out_dir=None) -> dict:
    """Reduce a finished run directory to analysis tables.

    Emits `report_summary.csv` plus, for sweeps, `polar.csv` (per-direction
    offsets/forces) and `thrust_utilization.csv` (mean |u|/u_max per
    thruster). Raises MissingArtifact when the directory has nothing to
    report on.
    """
    run_dir = Path(run_dir)
    out_dir = run_dir if out_dir is None else Path(out_dir)
    manifest_path = run_dir / MANIFEST_NAME
    sweep_path = run_dir / SWEEP_SUMMARY_NAME
    traj_path = run_dir / TRAJECTORY_NAME
    if not manifest_path.exists() and not sweep_path.exists() and not traj_path.exists():
        raise MissingArtifact(f"nothing to report in {run_dir}")
    out_dir.mkdir(parents=True, exist_ok=True)

    produced = {}
    lines = ["metric,value"]
    manifest = {}
    if manifest_path.exists():
        manifest = json.loads(manifest_path.read_text())
        lines.append(f"config_hash,{manifest['config_hash']}")

    if sweep_path.exists():
        rows = sweep_path.read_text().strip().splitlines()
        header = rows[0].split(",")
        data = np.array([[float(v) for v in r.split(",")] for r in rows[1:]])
        polar = out_dir / "polar.csv"
        polar.write_text("\n".join(rows) + "\n")
        produced["polar"] = str(polar)
        dirs = data[:, 0]
        lines.append(f"directions,{len(dirs)}")
        lines.append(f"max_offset_worst,{float(data[:, 1].max())!r}")
        lines.append(f"max_offset_worst_dir,{float(dirs[np.argmax(data[:, 1])])!r}")
        lines.append(f"mean_ty_peak_dir,{float(dirs[np.argmax(np.abs(data[:, 4]))])!r}")
        lines.append(f"mean_mn_peak_dir,{float(dirs[np.argmax(np.abs(data[:, 5]))])!r}")
        lines.append(f"alloc_err_x_worst,{float(data[:, 6].max())!r}")
        lines.append(f"alloc_err_y_worst,{float(data[:, 7].max())!r}")
        lines.append(f"alloc_err_n_worst,{float(data[:, 8].max())!r}")
        del header

    ts_files = sorted(run_dir.glob("timeseries_*.csv"))
    if traj_path.exists():
        ts_files.append(traj_path)
    if ts_files:
        util = _thrust_utilization(ts_files)
        util_path = out_dir / "thrust_utilization.csv"
        with open(util_path, "w", encoding="utf-8") as fh:
            fh.write("thruster,mean_abs_u_kn,peak_abs_u_kn\n")
            for name, mean_u, peak_u in util:
                fh.write(f"{name},{mean_u!r},{peak_u!r}\n")
        produced["thrust_utilization"] = str(util_path)

    if traj_path.exists():
        data, cols = _read_csv(traj_path)
        x, y = data[:, cols.index("eta_x")], data[:, cols.index("eta_y")]
        rx, ry = data[:, cols.index("refx")], data[:, cols.index("refy")]
        err = np.hypot(x - rx, y - ry)
        lines.append(f"trajectory_points,{len(x)}")
        lines.append(f"x_extent,{float(x.max() - x.min())!r}")
        lines.append(f"y_extent,{float(y.max() - y.min())!r}")
        lines.append(f"peak_tracking_error,{float(err.max())!r}")

    summary_path = out_dir / "report_summary.csv"
    summary_path.write_text("\n".join(lines) + "\n")
    produced["summary"] = str(summary_path)
    return produced


def _read_csv(path) -> tuple[np.ndarray, list[str]]:
    rows = Path(path).read_text().strip().splitlines()
    cols = rows[0].split(",")
    data = np.array([[float(v) for v in r.split(",")] for r in rows[1:]])
    return data, cols


def _thrust_utilization(ts_files) -> list[tuple[str, float, float]]:
    sums: dict[str, list] = {}
    for path in ts_files:
        data, cols = _read_csv(path)
        for name in cols:
            if name.startswith("u_"):
                vals = np.abs(data[:, cols.index(name)])
                entry = sums.setdefault(name, [0.0, 0, 0.0])
                entry[0] += vals.sum()
                entry[1] += len(vals)
                entry[2] = max(entry[2], float(vals.max()))
    return [
        (name, float(entry[0] / entry[1]), float(entry[2]))
        for name, entry in sorted(sums.items())
    ]
