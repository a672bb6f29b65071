"""Command-line front end for the whole workflow.

Exit codes are part of the contract so scripts can branch on them:
0 success, 1 usage error, 2 validation or data-integrity failure,
3 runtime failure. Flags override config-file values; the config file
overrides built-in defaults.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .autopilot import run_loop, write_trace, read_trace
from .config import (AppConfig, ConfigError, default_config, load_config,
                     resolve_track)
from .datastore import Dataset, SessionFormatError, load_session
from .evalharness import (CRUISE_THROTTLE, ExpertLostError, score_episode,
                          synthesize_dataset)
from .nn.checkpoint import (CHECKPOINT_VERSION, CheckpointError,
                            load_checkpoint, save_checkpoint)
from .nn.model import default_architecture
from .nn.train import TrainingDiverged, train, write_loss_history
from .track import TrackFormatError, point_at_arc, tangent_at_arc
from .vehicle import VehicleState, check_fira_constraints

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_RUNTIME = 3


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; our contract says 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _load_app_config(args) -> AppConfig:
    if getattr(args, "config", None):
        return load_config(args.config)
    return default_config()


def _train_config(cfg: AppConfig, args):
    """Config-file [train] values with CLI flags layered on top."""
    overrides = {}
    for flag, field in (("epochs", "epochs"), ("batch_size", "batch_size"),
                        ("seed", "seed")):
        value = getattr(args, flag, None)
        if value is not None:
            overrides[field] = value
    return dataclasses.replace(cfg.train, **overrides) if overrides else cfg.train


def _start_state(track, speed_mps: float = 0.0) -> VehicleState:
    x, y = point_at_arc(track, 0.0)
    return VehicleState(x_m=x, y_m=y, heading_rad=tangent_at_arc(track, 0.0),
                        speed_mps=speed_mps)


# -- subcommands ------------------------------------------------------------

def cmd_drive(args) -> int:
    from .teleop import TeleopSim, serve

    cfg = _load_app_config(args)
    track = resolve_track(cfg.track_path)
    model = None
    if args.model:
        params, arch = load_checkpoint(args.model)
        model = (params, arch)
    ui_dir = args.ui
    if ui_dir is None and Path("frontend/dist/index.html").is_file():
        ui_dir = "frontend/dist"
    sim = TeleopSim(track, cfg.vehicle, cfg.camera, cfg.pilot,
                    sessions_dir=args.sessions, model=model,
                    track_id=cfg.track_path)
    print(f"serving teleop on http://{args.host}:{args.port}/ "
          f"(mode: {sim.mode})")
    serve(sim, host=args.host, port=args.port, ui_dir=ui_dir)
    return EXIT_OK


def cmd_synth(args) -> int:
    cfg = _load_app_config(args)
    track = resolve_track(cfg.track_path)
    episodes = synthesize_dataset(
        track, args.samples, args.seed, args.out,
        noise_level=args.noise, vehicle=cfg.vehicle, camera=cfg.camera,
        rate_hz=cfg.pilot.loop_rate_hz, track_id=cfg.track_path)
    print(f"wrote {args.samples} records over {episodes} episode(s) "
          f"to {args.out}")
    return EXIT_OK


def _load_datasets(dirs: list[str]):
    sets = []
    for d in dirs:
        if not (Path(d) / "manifest.json").is_file():
            print(f"no records found: {d} is not a session directory",
                  file=sys.stderr)
            return None
        sets.append(load_session(d))
    data = Dataset.concatenate(sets) if len(sets) > 1 else sets[0]
    if data.images.shape[0] == 0:
        print("no records found", file=sys.stderr)
        return None
    return data


def cmd_train(args) -> int:
    cfg = _load_app_config(args)
    dirs = [p for chunk in args.data for p in chunk.split(",") if p]
    data = _load_datasets(dirs)
    if data is None:
        return EXIT_VALIDATION
    tcfg = _train_config(cfg, args)
    arch = default_architecture()
    print(f"training on {data.images.shape[0]} records "
          f"({tcfg.epochs} epochs, batch {tcfg.batch_size}, "
          f"seed {tcfg.seed})")
    result = train(data, tcfg, arch=arch, log=print)
    save_checkpoint(args.out, result.params, arch)
    csv_path = Path(args.out).with_suffix(".losses.csv")
    write_loss_history(csv_path, result.history)
    print(f"best epoch {result.best_epoch} "
          f"(val {result.best_val_loss:.6f}); wrote {args.out} and {csv_path}")
    return EXIT_OK


def cmd_autopilot(args) -> int:
    cfg = _load_app_config(args)
    track = resolve_track(cfg.track_path)
    params, arch = load_checkpoint(args.model)
    out = Path(args.out)
    completed_all = True
    # laps are timed from a rolling start at the cruise speed the training
    # data was driven at, like a flying lap past the start line
    cruise = cfg.vehicle.max_speed_mps * CRUISE_THROTTLE
    for ep in range(args.episodes):
        start_arc = track.length_m * ep / args.episodes
        sx, sy = point_at_arc(track, start_arc)
        start = VehicleState(x_m=sx, y_m=sy,
                             heading_rad=tangent_at_arc(track, start_arc),
                             speed_mps=cruise)
        result = run_loop(params, arch, track, cfg.vehicle, cfg.camera,
                          start, rate_hz=cfg.pilot.loop_rate_hz,
                          max_steps=args.max_steps,
                          steering_trim=cfg.pilot.steering_trim,
                          throttle_scale=cfg.pilot.throttle_scale)
        path = out if args.episodes == 1 else \
            out.with_name(f"{out.stem}-{ep}{out.suffix}")
        write_trace(path, result.trace)
        metrics = score_episode(result.trace, track,
                                dt_s=1.0 / cfg.pilot.loop_rate_hz)
        word = "completed" if result.completed else "DNF"
        print(f"episode {ep}: {word} in {result.steps} steps, "
              f"avg {metrics.avg_speed_mps:.2f} m/s, "
              f"offtrack events {metrics.offtrack_events}; wrote {path}")
        completed_all = completed_all and result.completed
    return EXIT_OK


def cmd_eval(args) -> int:
    cfg = _load_app_config(args)
    track = resolve_track(cfg.track_path)
    dt = 1.0 / cfg.pilot.loop_rate_hz
    if args.trace:
        trace = read_trace(args.trace)
    else:
        params, arch = load_checkpoint(args.model)
        start = _start_state(track,
                             cfg.vehicle.max_speed_mps * CRUISE_THROTTLE)
        result = run_loop(params, arch, track, cfg.vehicle, cfg.camera,
                          start, rate_hz=cfg.pilot.loop_rate_hz,
                          steering_trim=cfg.pilot.steering_trim,
                          throttle_scale=cfg.pilot.throttle_scale)
        trace = result.trace
    metrics = score_episode(trace, track, dt_s=dt)
    print(metrics.to_json())
    verdict = "lap completed" if metrics.completed else "lap not completed"
    print(f"{verdict}: {metrics.distance_m:.1f} m at "
          f"{metrics.avg_speed_mps:.2f} m/s avg, "
          f"{metrics.offtrack_events} off-track event(s)")
    return EXIT_OK


def cmd_dataset_stats(args) -> int:
    data = load_session(args.data)
    n = data.images.shape[0]
    print(f"records: {n}")
    m = data.manifest
    print(f"image size: {m.image_width}x{m.image_height}  "
          f"rate: {m.record_rate_hz} Hz  track: {m.track_id}")
    edges = np.linspace(-1.0, 1.0, 11)
    for li, name in ((0, "steering"), (1, "throttle")):
        hist, _ = np.histogram(data.labels[:, li], bins=edges)
        bars = " ".join(str(int(c)) for c in hist)
        print(f"{name} histogram [-1,1) x10: {bars}")
    print("integrity: OK")
    return EXIT_OK


def cmd_check(args) -> int:
    cfg = _load_app_config(args)
    resolve_track(cfg.track_path)
    report = check_fira_constraints(cfg.vehicle)
    if report.passed:
        print("FIRA constraints: PASS")
        print(f"  length {cfg.vehicle.length_mm} mm, "
              f"width {cfg.vehicle.width_mm} mm, "
              f"height {cfg.vehicle.height_mm} mm")
        return EXIT_OK
    print("FIRA constraints: FAIL")
    for v in report.violations:
        print(f"  {v}")
    return EXIT_VALIDATION


# -- parser -----------------------------------------------------------------

def build_parser() -> _Parser:
    p = _Parser(prog="pilotstack",
                description="Record, train and replay a camera-to-steering "
                            "driving policy on a simulated track.")
    p.add_argument("--version", action="version",
                   version=f"pilotstack {__version__} "
                           f"(checkpoint format v{CHECKPOINT_VERSION})")
    sub = p.add_subparsers(dest="cmd", metavar="COMMAND")

    def add(name, func, help_text):
        sp = sub.add_parser(name, help=help_text)
        sp.set_defaults(func=func)
        sp.add_argument("--config", help="TOML config file")
        return sp

    sp = add("drive", cmd_drive, "serve the browser teleop cockpit")
    sp.add_argument("--model", help="checkpoint for autopilot mode")
    sp.add_argument("--host", default="127.0.0.1")
    sp.add_argument("--port", type=int, default=8321)
    sp.add_argument("--sessions", default="sessions",
                    help="directory that recording sessions go under")
    sp.add_argument("--ui", help="built UI bundle directory")

    sp = add("synth", cmd_synth, "record the scripted expert driving")
    sp.add_argument("--samples", type=int, required=True)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--noise", type=float, default=0.1,
                    help="uniform steering noise amplitude")

    sp = add("train", cmd_train, "fit the driving network on sessions")
    sp.add_argument("--data", action="append", required=True,
                    help="session directory (repeat or comma-separate)")
    sp.add_argument("--out", required=True, help="checkpoint path")
    sp.add_argument("--epochs", type=int, help="override config epochs")
    sp.add_argument("--batch-size", type=int, dest="batch_size",
                    help="override config batch size")
    sp.add_argument("--seed", type=int, help="override config seed")

    sp = add("autopilot", cmd_autopilot, "drive the track with a checkpoint")
    sp.add_argument("--model", required=True)
    sp.add_argument("--episodes", type=int, default=1)
    sp.add_argument("--out", required=True, help="trace path (.jsonl)")
    sp.add_argument("--max-steps", type=int, default=2000, dest="max_steps")

    sp = add("eval", cmd_eval, "score a trace or run and score a model")
    group = sp.add_mutually_exclusive_group(required=True)
    group.add_argument("--trace")
    group.add_argument("--model")

    sp = sub.add_parser("dataset", help="dataset utilities")
    dsub = sp.add_subparsers(dest="dataset_cmd", metavar="SUBCOMMAND")
    dsp = dsub.add_parser("stats", help="count, histograms, integrity")
    dsp.set_defaults(func=cmd_dataset_stats)
    dsp.add_argument("--data", required=True, help="session directory")

    sp = add("check", cmd_check, "validate config and size limits")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not hasattr(args, "func"):
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except (ConfigError, SessionFormatError, TrackFormatError,
            CheckpointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (TrainingDiverged, ExpertLostError) as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
