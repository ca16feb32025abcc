"""Command-line front end: single runs, speed/surface sweeps, and
controller comparisons, with CSV outputs for downstream plotting."""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace
from pathlib import Path

from . import scenario
from .scenario import (CONTROLLERS, MPH, RunResult, ScenarioAbort,
                       ScenarioConfig, build_config, load_config)
from .tyre import SURFACES, RoadSchedule

DEFAULT_OUT = "out"


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad flags; the contract reserves 2 for runtime aborts
    def error(self, message: str):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


def _build_parser() -> _Parser:
    parser = _Parser(prog="abslab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p: _Parser) -> None:
        p.add_argument("--config", help="TOML or JSON scenario file")
        p.add_argument("--controller", choices=CONTROLLERS)
        p.add_argument("--seed", type=int)
        p.add_argument("--speed", type=float, help="initial speed in m/s")
        p.add_argument("--speed-mph", type=float, help="initial speed in mph")
        p.add_argument("--surface", help="road preset: dry, wet or snow")
        p.add_argument("--out", help="output directory (default $ABS_LAB_OUT_DIR or ./out)")
        p.add_argument("--quiet", action="store_true")

    run_p = sub.add_parser("run", help="simulate one braking manoeuvre")
    common(run_p)

    sweep_p = sub.add_parser("sweep", help="batch of runs over speeds, surfaces, seeds")
    common(sweep_p)
    sweep_p.add_argument("--speeds", help="comma list of initial speeds in m/s")
    sweep_p.add_argument("--speeds-mph", help="comma list of initial speeds in mph")
    sweep_p.add_argument("--surfaces", help="comma list of road presets")
    sweep_p.add_argument("--seeds", type=int, default=1,
                         help="number of seeds per point, starting at --seed")
    sweep_p.add_argument("--workers", type=int, default=1)
    sweep_p.add_argument("--traces", action="store_true",
                         help="also write a trace CSV per run")

    cmp_p = sub.add_parser("compare",
                           help="same scenario and seed under every controller")
    common(cmp_p)
    return parser


def _base_config(args) -> ScenarioConfig:
    have_speed = any(v is not None for v in (
        args.speed, args.speed_mph,
        getattr(args, "speeds", None), getattr(args, "speeds_mph", None)))
    if args.config is not None:
        cfg = load_config(args.config)
    else:
        if not have_speed:
            raise ValueError("need --config or an initial speed flag")
        cfg = build_config({"initial_speed": 1.0}, name="cli")

    if args.speed is not None and args.speed_mph is not None:
        raise ValueError("give --speed or --speed-mph, not both")
    if args.speed is not None:
        cfg = replace(cfg, initial_speed=float(args.speed))
    elif args.speed_mph is not None:
        cfg = replace(cfg, initial_speed=float(args.speed_mph) * MPH)
    if args.controller is not None:
        cfg = replace(cfg, controller=args.controller)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.surface is not None:
        if args.surface not in SURFACES:
            raise ValueError(f"unknown surface {args.surface!r}")
        cfg = replace(cfg, road=RoadSchedule.constant(SURFACES[args.surface]))
    return cfg


def _out_dir(args, cfg: ScenarioConfig) -> Path:
    root = args.out or cfg.output or os.environ.get("ABS_LAB_OUT_DIR") or DEFAULT_OUT
    path = Path(root)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _summary_line(res: RunResult) -> str:
    m = res.metrics
    if m.stopped:
        stop = f"stopped in {m.stopping_time:.3f} s over {m.stopping_distance:.2f} m"
    else:
        stop = f"timed out at {m.sim_time:.1f} s after {m.distance_travelled:.1f} m"
    return (f"{m.name}: {m.controller} on {m.road} from {m.initial_speed:.2f} m/s "
            f"(seed {m.seed}) {stop}, {m.lock_events} lock events")


def _cmd_run(args) -> int:
    cfg = _base_config(args)
    out = _out_dir(args, cfg)
    try:
        res = scenario.run(cfg)
    except ScenarioAbort as exc:
        scenario.write_trace(out / f"{cfg.name}_trace.csv", exc.partial_trace)
        print(f"aborted: {exc}", file=sys.stderr)
        return 2
    scenario.write_trace(out / f"{cfg.name}_trace.csv", res.trace)
    scenario.write_metrics(out / f"{cfg.name}_metrics.csv", [res.metrics])
    if not args.quiet:
        print(_summary_line(res))
    return 0


def _parse_list(text: str | None, scale: float = 1.0) -> list[float] | None:
    if text is None:
        return None
    return [float(v) * scale for v in text.split(",") if v.strip()]


def _cmd_sweep(args) -> int:
    base = _base_config(args)
    speeds = _parse_list(args.speeds) or []
    speeds += _parse_list(args.speeds_mph, MPH) or []
    if not speeds:
        speeds = [base.initial_speed]
    if args.surfaces:
        roads = []
        for name in args.surfaces.split(","):
            name = name.strip()
            if name not in SURFACES:
                raise ValueError(f"unknown surface {name!r}")
            roads.append((name, RoadSchedule.constant(SURFACES[name])))
    else:
        roads = [(scenario.surface_label(base.road), base.road)]
    if args.seeds < 1:
        raise ValueError("--seeds must be at least 1")

    configs = []
    for v in speeds:
        for rname, road in roads:
            for s in range(args.seeds):
                configs.append(replace(
                    base, initial_speed=v, road=road, seed=base.seed + s,
                    name=f"{base.name}_{rname}_{v:g}ms_s{base.seed + s}"))
    out = _out_dir(args, base)
    try:
        results = scenario.sweep(configs, workers=args.workers)
    except ScenarioAbort as exc:
        print(f"aborted: {exc}", file=sys.stderr)
        return 2
    scenario.write_metrics(out / f"{base.name}_sweep_metrics.csv",
                           [r.metrics for r in results])
    for r in results:
        if args.traces:
            scenario.write_trace(out / f"{r.metrics.name}_trace.csv", r.trace)
        if not args.quiet:
            print(_summary_line(r))
    return 0


def _cmd_compare(args) -> int:
    cfg = _base_config(args)
    out = _out_dir(args, cfg)
    try:
        results = scenario.compare(cfg)
    except ScenarioAbort as exc:
        print(f"aborted: {exc}", file=sys.stderr)
        return 2
    scenario.write_metrics(out / f"{cfg.name}_compare_metrics.csv",
                           [r.metrics for r in results])
    for r in results:
        scenario.write_trace(out / f"{r.metrics.name}_trace.csv", r.trace)
    ref = results[0].metrics
    print(f"{'controller':<12}{'stop_time_s':>12}{'stop_dist_m':>12}"
          f"{'time_vs_dcee':>14}{'dist_vs_dcee':>14}")
    for r in results:
        m = r.metrics
        dt_pct = 100.0 * (m.stopping_time - ref.stopping_time) / ref.stopping_time
        dd_pct = 100.0 * (m.stopping_distance - ref.stopping_distance) / ref.stopping_distance
        print(f"{m.controller:<12}{m.stopping_time:>12.3f}{m.stopping_distance:>12.2f}"
              f"{dt_pct:>+13.1f}%{dd_pct:>+13.1f}%")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "sweep":
            return _cmd_sweep(args)
        return _cmd_compare(args)
    except (ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
