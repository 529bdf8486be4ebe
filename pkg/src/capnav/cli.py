"""Command line front end: batch runs, characterizations, and serving.

Every subcommand reads the same flat key=value configuration (defaults,
then --config file, then --set overrides, in that order), echoes the
effective configuration next to its outputs, and is deterministic given
that configuration; only `serve` without --script touches the wall
clock.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import (
    RunConfig,
    apply_overrides,
    default_config,
    entrance_ring_positions,
    load_config,
    write_effective,
)
from .dynamics import simulate_trajectory
from .errors import CapnavError
from .hyperthermia import load_heating_csv, slp_from_curve
from .locomotion import RollingModel, max_counterflow, rolling_velocity
from .magnetics import CapabilityEnvelope, default_capsule_curve
from .session import (
    Scenario,
    SessionServer,
    create_session,
    default_dissolution,
    encode_message,
    load_script,
    run_script,
)
from .sweep import (
    export_longform_csv,
    export_matrix_csv,
    run_factorial,
    success_trend_by_gradient,
    success_trend_by_velocity,
)


def _forbid_rng() -> None:
    """Replace the usual RNG entry points with tripwires.

    A run under --seedless proves its results never touched a random
    source; the simulator is deterministic by construction.
    """
    import random as stdlib_random

    import numpy.random as np_random

    def banned(*_args, **_kwargs):
        raise RuntimeError("random number generation is disabled by --seedless")

    stdlib_names = (
        "random", "uniform", "randint", "randrange", "choice", "choices",
        "shuffle", "sample", "gauss", "normalvariate", "getrandbits",
        "betavariate", "expovariate", "triangular", "lognormvariate",
    )
    numpy_names = (
        "default_rng", "seed", "random", "rand", "randn", "randint",
        "random_sample", "uniform", "normal", "choice", "permutation",
        "shuffle", "standard_normal",
    )
    for name in stdlib_names:
        if hasattr(stdlib_random, name):
            setattr(stdlib_random, name, banned)
    for name in numpy_names:
        if hasattr(np_random, name):
            setattr(np_random, name, banned)


def _prepare(args) -> tuple[RunConfig, Path | None]:
    config = default_config()
    if args.config is not None:
        load_config(args.config, config)
    apply_overrides(config, args.set)
    if args.seedless:
        _forbid_rng()
    out_dir = None
    if args.out is not None:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        write_effective(config, str(out_dir / "effective_config.txt"))
    return config, out_dir


def _scenario_from_config(config: RunConfig) -> Scenario:
    geometry = config.geometry()
    fluid = config.fluid()
    capsule = config.capsule()
    return Scenario(
        geometry=geometry,
        fluid=fluid,
        capsule=capsule,
        flow=config.flow(geometry, fluid),
        curve=default_capsule_curve(),
        envelope=CapabilityEnvelope(),
        mode=config["session.mode"],
        entrance_index=config["session.entrance_index"],
        entrance_count=config["design.entrance_count"],
        rolling=RollingModel.calibrated() if config["session.mode"] == "rolling" else None,
        dissolution=default_dissolution(capsule),
        limits=config.limits(),
        control=config.control(),
    )


def _cmd_simulate(args) -> int:
    config, out_dir = _prepare(args)
    geometry = config.geometry()
    fluid = config.fluid()
    capsule = config.capsule()
    flow = config.flow(geometry, fluid)
    command = config.command()
    entrances = entrance_ring_positions(config)
    index = config["simulate.entrance_index"]
    if not 0 <= index < len(entrances):
        raise CapnavError(f"simulate.entrance_index {index} outside the entrance ring")
    trajectory = simulate_trajectory(
        geometry,
        flow,
        command,
        default_capsule_curve(),
        capsule,
        fluid,
        entrances[index],
        limits=config.limits(),
        control=config.control(),
    )
    if out_dir is not None:
        trajectory.to_csv(str(out_dir / "trajectory.csv"))
    print(
        f"outcome={trajectory.outcome} transit_time_s={trajectory.transit_time!r} "
        f"wall_contacts={trajectory.wall_contacts}"
    )
    return 0


def _cmd_sweep(args) -> int:
    config, out_dir = _prepare(args)
    result = run_factorial(
        design=config.design(),
        geometry=config.geometry(),
        fluid=config.fluid(),
        capsule=config.capsule(),
        limits=config.limits(),
        control=config.control(),
        split_fraction=config["flow.split_fraction"],
        workers=args.workers,
    )
    if out_dir is not None:
        export_matrix_csv(result, str(out_dir / "success_matrix.csv"))
        export_longform_csv(result, str(out_dir / "trajectories.csv"))
    by_velocity = success_trend_by_velocity(result)
    by_gradient = success_trend_by_gradient(result)
    print(f"cells={result.design.cells} trajectories={result.design.trajectories}")
    print("trend_gradient_vs_success_per_velocity=" + ",".join(f"{t!r}" for t in by_velocity))
    print("trend_velocity_vs_success_per_gradient=" + ",".join(f"{t!r}" for t in by_gradient))
    for gi, gradient in enumerate(result.design.gradients_tpm):
        row = " ".join(f"{v:.3f}" for v in result.success_matrix[gi])
        print(f"gradient_tpm={gradient!r} success={row}")
    return 0


def _cmd_rolling(args) -> int:
    config, out_dir = _prepare(args)
    model = RollingModel.calibrated()
    diameter = config["rolling.diameter"]
    frequencies = config["rolling.frequencies"]
    velocities = [rolling_velocity(model, diameter, f) for f in frequencies]
    if out_dir is not None:
        with open(out_dir / "rolling.csv", "w", encoding="utf-8") as fh:
            fh.write("frequency_hz,velocity_mps\n")
            for f, v in zip(frequencies, velocities):
                fh.write(f"{f!r},{v!r}\n")
    top = max(velocities)
    print(f"max_velocity_mps={top!r} at_frequency_hz={frequencies[velocities.index(top)]!r}")
    return 0


def _cmd_counterflow(args) -> int:
    config, out_dir = _prepare(args)
    capsule = config.capsule()
    fluid = config.fluid()
    curve = default_capsule_curve()
    gradients = config["counterflow.gradients_tpm"]
    values = [
        max_counterflow(
            capsule,
            fluid,
            curve,
            g,
            field_t=config["counterflow.field_t"],
            tube_diameter=config["counterflow.tube_diameter"],
        )
        for g in gradients
    ]
    if out_dir is not None:
        with open(out_dir / "counterflow.csv", "w", encoding="utf-8") as fh:
            fh.write("gradient_tpm,max_mean_velocity_mps\n")
            for g, v in zip(gradients, values):
                fh.write(f"{g!r},{v!r}\n")
    print(f"max_counterflow_mps={values[-1]!r} at_gradient_tpm={gradients[-1]!r}")
    return 0


def _cmd_slp(args) -> int:
    config, _ = _prepare(args)
    times, temps = load_heating_csv(args.heating_csv)
    value = slp_from_curve(
        times,
        temps,
        config["slp.concentration_g_per_ml"],
        window_s=config["slp.window_s"],
    )
    print(f"slp_w_per_g={value!r}")
    return 0


def _cmd_serve(args) -> int:
    config, out_dir = _prepare(args)
    scenario = _scenario_from_config(config)
    if args.script is not None:
        session = create_session(scenario, config["session.time_dilation"])
        events = load_script(args.script)
        transcript = run_script(session, events, args.until)
        lines = "".join(encode_message(m) for m in transcript)
        sys.stdout.write(lines)
        if out_dir is not None:
            (out_dir / "transcript.jsonl").write_text(lines, encoding="utf-8")
        return 0

    static_dir = args.static
    if static_dir is None:
        bundled = Path.cwd() / "frontend" / "dist"
        static_dir = str(bundled) if bundled.is_dir() else None
    server = SessionServer(
        scenario,
        time_dilation=config["session.time_dilation"],
        host=config["session.host"],
        port=config["session.port"],
        snapshot_hz=config["session.snapshot_hz"],
        static_dir=static_dir,
    )
    server.start()
    print(f"serving session {server.session.id} on {server.host}:{server.port}")
    try:
        while True:
            server._threads[1].join(timeout=1.0)
    except KeyboardInterrupt:
        pass
    finally:
        server.stop()
    return 0


def _build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--config", metavar="PATH", help="key=value configuration file")
    shared.add_argument("--out", metavar="DIR", help="directory for CSV and config echo")
    shared.add_argument("--workers", type=int, default=1, metavar="N",
                        help="parallel workers where supported")
    shared.add_argument("--seedless", action="store_true",
                        help="make any random number use an error")
    shared.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override one configuration key (repeatable)")

    parser = argparse.ArgumentParser(
        prog="capnav",
        description="Capsule navigation simulator: trajectories, sweeps, locomotion, heating, sessions.",
    )
    sub = parser.add_subparsers(dest="subcommand")

    p = sub.add_parser("simulate", parents=[shared],
                       help="integrate one capsule trajectory, write CSV")
    p.set_defaults(func=_cmd_simulate)
    p = sub.add_parser("sweep", parents=[shared],
                       help="run the factorial velocity / gradient design")
    p.set_defaults(func=_cmd_sweep)
    p = sub.add_parser("rolling", parents=[shared],
                       help="rolling velocity over rotation frequency")
    p.set_defaults(func=_cmd_rolling)
    p = sub.add_parser("counterflow", parents=[shared],
                       help="largest counterflow held per gradient")
    p.set_defaults(func=_cmd_counterflow)
    p = sub.add_parser("slp", parents=[shared],
                       help="specific loss power from a heating curve CSV")
    p.add_argument("heating_csv", help="CSV with header t_seconds,temp_celsius")
    p.set_defaults(func=_cmd_slp)
    p = sub.add_parser("serve", parents=[shared],
                       help="run a live session server (or a script, no network)")
    p.add_argument("--script", metavar="PATH",
                   help="stamped protocol messages; run without network and exit")
    p.add_argument("--until", type=float, default=5.0, metavar="SECONDS",
                   help="simulated span for --script runs")
    p.add_argument("--static", metavar="DIR",
                   help="directory served over plain HTTP (console bundle)")
    p.set_defaults(func=_cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    parser = _build_parser()
    if not argv:
        parser.print_usage(sys.stderr)
        return 2
    args = parser.parse_args(argv)
    if getattr(args, "func", None) is None:
        parser.print_usage(sys.stderr)
        return 2
    try:
        return args.func(args)
    except CapnavError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
