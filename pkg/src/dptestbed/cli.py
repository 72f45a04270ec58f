"""Command-line front end for the testbed.

Subcommands:

    sweep          position-keeping capability sweep over environment headings
    four-corner    square box manoeuvre through the reference filter
    report         reduce a finished run directory to analysis tables
    serve-plant    host the lockstep plant on TCP for external controllers
    serve-station  run a supervised live session with HTTP/WebSocket access
    write-defaults emit the synthetic vessel database, layout, coefficient
                   table and an example scenario config
    conformance    regenerate or check the wire-protocol golden transcript

Every run-producing subcommand takes a YAML config (see `write-defaults`
for a template); CLI flags override the file.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np
import yaml

from .conformance import load_golden_transcript, record_golden_session
from .controlloop import ControlStack
from .harness import (
    MissingArtifact,
    ScenarioSpec,
    report,
    run_capability_sweep,
    run_four_corner,
)
from .hydrodb import load_hydro_database, save_hydro_database, synthetic_st_database
from .plant import PlantConfig, PlantServer, build_plant
from .reference import Setpoint
from .registry import ParamRegistry
from .scaling import ScaleSpec
from .station import StationRunner, create_app
from .thrusters import load_layout, save_layout, st_layout
from .waves import EnvironmentSpec
from .windcurrent import default_coefficient_table

EXAMPLE_CONFIG = """\
# dptestbed scenario configuration (full-scale quantities)
vessel:
  database: synthetic        # or a path to a hydro database file
  layout: st-default         # or a path to a layout file
environment:
  hs: 1.5                    # significant wave height, m
  tp: 8.0                    # peak period, s
  wave_dir_deg: 45.0         # coming-from, deg from north
  wind_speed: 5.0            # m/s
  wind_dir_deg: 45.0
  current_speed: 0.5         # m/s
  current_dir_deg: 45.0
  seed: 0
scenario:
  kind: capability_sweep     # position_keeping | capability_sweep | four_corner
  duration: 1200.0           # s
  settle: 300.0              # statistics start, s
  h: 0.5                     # control step, s
  direction_step_deg: 15.0
  square_side: 40.0          # four-corner, m
  corner_dwell: 400.0        # four-corner, s per corner
  seed: 0
  n_wave_components: 100
  cutoff_time: 60.0          # retardation kernel span, s
  wire: false                # true: run through the TCP protocol path
params: {}                   # registry overrides, e.g. pid.kp.x: 450.0
scale:
  lambda: 1.0
  gamma: 1.0
"""


def load_config(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        cfg = yaml.safe_load(fh) or {}
    return cfg


def build_inputs(cfg: dict):
    vessel = cfg.get("vessel", {})
    db_src = vessel.get("database", "synthetic")
    db = synthetic_st_database() if db_src == "synthetic" else load_hydro_database(db_src)
    layout_src = vessel.get("layout", "st-default")
    layout = st_layout() if layout_src == "st-default" else load_layout(layout_src)

    e = cfg.get("environment", {})
    env = EnvironmentSpec(
        hs=float(e.get("hs", 0.0)),
        tp=float(e.get("tp", 8.0)),
        wave_dir=float(np.radians(e.get("wave_dir_deg", 0.0))),
        wind_speed=float(e.get("wind_speed", 0.0)),
        wind_dir=float(np.radians(e.get("wind_dir_deg", 0.0))),
        current_speed=float(e.get("current_speed", 0.0)),
        current_dir=float(np.radians(e.get("current_dir_deg", 0.0))),
        seed=int(e.get("seed", 0)),
    )

    s = cfg.get("scenario", {})
    spec = ScenarioSpec(
        kind=s.get("kind", "position_keeping"),
        env=env,
        duration=float(s.get("duration", 1800.0)),
        settle=float(s.get("settle", 300.0)),
        h=float(s.get("h", 0.5)),
        seed=int(s.get("seed", 0)),
        direction_step_deg=float(s.get("direction_step_deg", 15.0)),
        square_side=float(s.get("square_side", 40.0)),
        corner_dwell=float(s.get("corner_dwell", 400.0)),
        n_wave_components=int(s.get("n_wave_components", 100)),
        cutoff_time=float(s.get("cutoff_time", 60.0)),
        thruster_lag=float(s.get("thruster_lag", 1.0)),
        wire=bool(s.get("wire", False)),
        param_overrides=dict(cfg.get("params", {}) or {}),
    )
    sc = cfg.get("scale", {})
    scale = ScaleSpec(lam=float(sc.get("lambda", 1.0)),
                      gamma=float(sc.get("gamma", 1.0)))
    return db, layout, spec, scale


def _cmd_sweep(args) -> int:
    db, layout, spec, _ = build_inputs(load_config(args.config))
    spec.kind = "capability_sweep"
    spec.wire = spec.wire or args.wire
    out_dir = Path(args.out)
    summaries = run_capability_sweep(spec, db, layout, out_dir=out_dir,
                                     workers=args.workers)
    worst = max(summaries, key=lambda s: s.max_pos_offset)
    print(f"sweep: {len(summaries)} directions -> {out_dir}")
    print(f"worst offset {worst.max_pos_offset:.3f} m at {worst.direction_deg:.0f} deg")
    return 0


def _cmd_four_corner(args) -> int:
    db, layout, spec, _ = build_inputs(load_config(args.config))
    spec.kind = "four_corner"
    out_dir = Path(args.out)
    summary, hist = run_four_corner(spec, db, layout, out_dir=out_dir)
    pos_err, head_err = hist.tracking_error()
    print(f"four-corner -> {out_dir}")
    print(f"peak tracking error {pos_err.max():.2f} m, "
          f"heading error {head_err.max():.2f} deg")
    return 0


def _cmd_report(args) -> int:
    try:
        produced = report(args.run, args.out)
    except MissingArtifact as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for name, path in produced.items():
        print(f"{name}: {path}")
    return 0


def _cmd_serve_plant(args) -> int:
    cfg = load_config(args.config) if args.config else {}
    db, layout, spec, scale = build_inputs(cfg)
    if args.scale_lambda is not None:
        scale = ScaleSpec(lam=args.scale_lambda, gamma=args.scale_gamma)
    plant_cfg = PlantConfig(
        db=db, layout=layout, env=spec.env, h=spec.h,
        cutoff_time=spec.cutoff_time, thruster_lag=spec.thruster_lag,
        n_wave_components=spec.n_wave_components,
    )
    server = PlantServer(
        lambda: build_plant(plant_cfg, scale),
        host=args.host, port=args.port, scale=scale,
        timeout=args.timeout, max_steps=args.max_steps,
    ).start()
    host, port = server.address
    print(f"plant listening on {host}:{port} "
          f"(lambda={scale.lam:g}, h={spec.h:g}s, m={layout.m})")
    try:
        server.wait()
    except KeyboardInterrupt:
        server.stop()
    return 0


def _cmd_serve_station(args) -> int:
    import uvicorn

    cfg = load_config(args.config) if args.config else {}
    db, layout, spec, _ = build_inputs(cfg)
    plant_cfg = PlantConfig(
        db=db, layout=layout, env=spec.env, h=spec.h,
        cutoff_time=spec.cutoff_time, thruster_lag=spec.thruster_lag,
        n_wave_components=spec.n_wave_components,
    )
    sim = build_plant(plant_cfg)
    registry = ParamRegistry()
    if spec.param_overrides:
        registry.set_params(spec.param_overrides)
    stack = ControlStack(layout, registry=registry, h=spec.h,
                         setpoint=Setpoint())
    pace = spec.h / args.speedup if args.speedup > 0 else 0.0
    runner = StationRunner(sim, stack, max_steps=args.steps, pace=pace,
                           log_path=args.log)
    if args.autostart:
        runner.start()
    app = create_app(runner)
    print(f"station on http://{args.host}:{args.port} "
          f"(speedup x{args.speedup:g}, autostart={args.autostart})")
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    runner.close()
    return 0


def _cmd_write_defaults(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_hydro_database(synthetic_st_database(), out / "st_synthetic.hdb",
                        comment="synthetic shuttle-tanker database, full scale, SI")
    save_layout(st_layout(), out / "st.layout")
    table = default_coefficient_table()
    with open(out / "wind_current_coefficients.txt", "w", encoding="utf-8") as fh:
        fh.write("# direction_deg Cx Cy Cn\n")
        for i, d in enumerate(table.directions_deg):
            fh.write(f"{float(d)!r} {float(table.cx[i])!r} "
                     f"{float(table.cy[i])!r} {float(table.cn[i])!r}\n")
    (out / "scenario.yaml").write_text(EXAMPLE_CONFIG)
    for name in ("st_synthetic.hdb", "st.layout",
                 "wind_current_coefficients.txt", "scenario.yaml"):
        print(out / name)
    return 0


def _cmd_conformance(args) -> int:
    transcript = record_golden_session()
    if args.write:
        Path(args.write).write_text(transcript)
        print(f"wrote {args.write}")
        return 0
    golden = load_golden_transcript()
    if transcript == golden:
        print("conformance OK: session is byte-identical to the golden transcript")
        return 0
    print("conformance FAILED: wire bytes deviate from the golden transcript",
          file=sys.stderr)
    return 1


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dptestbed", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True)

    sweep = sub.add_parser("sweep", help="capability sweep over headings")
    sweep.add_argument("--config", required=True)
    sweep.add_argument("--out", required=True)
    sweep.add_argument("--workers", type=int, default=1)
    sweep.add_argument("--wire", action="store_true",
                       help="run each session through the TCP protocol path")
    sweep.set_defaults(fn=_cmd_sweep)

    fc = sub.add_parser("four-corner", help="box manoeuvre test")
    fc.add_argument("--config", required=True)
    fc.add_argument("--out", required=True)
    fc.set_defaults(fn=_cmd_four_corner)

    rep = sub.add_parser("report", help="summarize a finished run directory")
    rep.add_argument("--run", required=True)
    rep.add_argument("--out", default=None)
    rep.set_defaults(fn=_cmd_report)

    sp = sub.add_parser("serve-plant", help="host the lockstep plant on TCP")
    sp.add_argument("--config", default=None)
    sp.add_argument("--host", default="127.0.0.1")
    sp.add_argument("--port", type=int, default=40450)
    sp.add_argument("--scale-lambda", type=float, default=None)
    sp.add_argument("--scale-gamma", type=float, default=1.0)
    sp.add_argument("--timeout", type=float, default=5.0)
    sp.add_argument("--max-steps", type=int, default=None)
    sp.set_defaults(fn=_cmd_serve_plant)

    ss = sub.add_parser("serve-station", help="run a supervised live session")
    ss.add_argument("--config", default=None)
    ss.add_argument("--host", default="127.0.0.1")
    ss.add_argument("--port", type=int, default=8710)
    ss.add_argument("--speedup", type=float, default=1.0,
                    help="simulation speed relative to real time (0 = free run)")
    ss.add_argument("--steps", type=int, default=None)
    ss.add_argument("--log", default=None, help="command audit CSV path")
    ss.add_argument("--no-autostart", dest="autostart", action="store_false")
    ss.set_defaults(fn=_cmd_serve_station)

    wd = sub.add_parser("write-defaults", help="emit default input files")
    wd.add_argument("--out", required=True)
    wd.set_defaults(fn=_cmd_write_defaults)

    cf = sub.add_parser("conformance", help="check the golden wire transcript")
    cf.add_argument("--write", default=None,
                    help="write the freshly recorded transcript to this path")
    cf.set_defaults(fn=_cmd_conformance)
    return p


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
