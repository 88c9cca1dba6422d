"""Command line interface.

Subcommands map one-to-one onto the library's entry points:

  plan          feasibility numbers and layout validation for a deployment
  simulate      handover scenarios (static, driving, pedestrian, outdoor)
  sweep         reacquisition and error versus controlled clock offset
  calibrate     delay measurement, correction and residual statistics
  sync-compare  worst-case sync error across connection and server types

Every command reads the JSON config (``--config`` flag, else the
GPSIMLAB_CONFIG environment variable, else built-in defaults), writes
its artifacts under ``--out`` and prints a short summary. Runs are
deterministic for a given config and seed; repeating one rewrites
byte-identical artifacts.

Exit codes: 0 success, 1 the deployment or scenario failed its own
feasibility or success checks, 2 bad configuration or arguments, 3
unexpected runtime failure.
"""

import argparse
import dataclasses
import math
import os
import sys
from pathlib import Path

from . import __version__
from . import receiver as rcv
from . import scenarios as sc
from .calibration import (
    SimDelayModel,
    calibrate,
    export_samples_csv,
    import_samples_csv,
    measure_sim_delay,
)
from .config import Config, ConfigError, config_to_dict, default_config, load_config
from .ntp import run_sync_comparison
from .placement import (
    DeploymentGeometry,
    SpeedProfile,
    blockage_time,
    can_update,
    kmh_to_ms,
    max_separation,
    min_coverage_radius,
    min_radius_for_separation,
    ms_to_kmh,
    reception_time,
    slow_path_speed_bound,
    validate_deployment,
)
from .reports import format_table, write_csv, write_json
from .rng import stream
from .timebase import ErrorBudget, TimeOffset, within_budget

EXIT_OK = 0
EXIT_INFEASIBLE = 1
EXIT_CONFIG = 2
EXIT_RUNTIME = 3

CONFIG_ENV_VAR = "GPSIMLAB_CONFIG"

SCENARIOS = ("static", "driving", "pedestrian", "outdoor")


def _load(args: argparse.Namespace) -> Config:
    path = args.config or os.environ.get(CONFIG_ENV_VAR)
    if path:
        return load_config(path)
    return default_config()


def _delay_model(cfg: Config) -> SimDelayModel:
    dm = cfg.delay_model
    return SimDelayModel(
        mean_delay=TimeOffset.from_millis(dm.mean_delay_ms),
        wander_sigma=TimeOffset.from_millis(dm.wander_sigma_ms),
        noise_sigma=TimeOffset.from_millis(dm.noise_sigma_ms),
    )


def _budget(cfg: Config) -> ErrorBudget:
    return ErrorBudget(limit=TimeOffset.from_millis(cfg.budget.limit_ms))


def _fix_rows(result: sc.ScenarioResult):
    for f in result.fixes:
        yield (
            f.t_s,
            float(f.position[0]),
            float(f.position[1]),
            float(f.position[2]),
            f.clock_bias_s,
            f.source,
            "" if f.coverage is None else f.coverage,
        )


def _transition_rows(result: sc.ScenarioResult):
    for r in result.transitions:
        yield (r.t_s, r.mode, r.signal, r.offset_ms, "" if r.coverage is None else r.coverage)


def _write_run_artifacts(out: Path, name: str, result: sc.ScenarioResult) -> list[Path]:
    paths = [out / f"{name}.json", out / f"{name}_fixes.csv", out / f"{name}_transitions.csv"]
    write_json(paths[0], result.to_dict())
    write_csv(
        paths[1],
        ("t_s", "x_m", "y_m", "z_m", "clock_bias_s", "source", "coverage"),
        _fix_rows(result),
    )
    write_csv(
        paths[2],
        ("t_s", "mode", "signal", "offset_ms", "coverage"),
        _transition_rows(result),
    )
    return paths


def _announce(paths) -> None:
    for p in paths:
        print(f"wrote {p}")


# ------------------------------------------------------------------- plan


def cmd_plan(cfg: Config, args: argparse.Namespace) -> int:
    dep = cfg.deployment
    profile = rcv.PROFILES[dep.receiver]
    timing = rcv.planning_timing(profile)
    v = kmh_to_ms(dep.max_speed_kmh)
    geometry = DeploymentGeometry(dep.radius_m, dep.separation_m, v)

    # the separation term of the radius floor, shown separately from the
    # speed term so a planner can see which constraint binds
    sep_floor = dep.separation_m / (2.0 * (1.0 + timing.t_max_s / timing.t_acq_s))
    derived = {
        "reception_time_s": reception_time(dep.radius_m, v),
        "blockage_time_s": blockage_time(dep.separation_m, dep.radius_m, v),
        "min_coverage_radius_m": min_coverage_radius(v, timing.t_reacq_s),
        "radius_floor_separation_m": sep_floor,
        "min_radius_m": min_radius_for_separation(dep.separation_m, timing, v),
        "max_separation_m": max_separation(dep.radius_m, timing),
        "slow_path_speed_bound_kmh": ms_to_kmh(
            slow_path_speed_bound(dep.radius_m, timing.t_acq_s)
        ),
    }
    update = can_update(v, geometry, timing)
    centers = [0.0, dep.separation_m, 2.0 * dep.separation_m]
    report = validate_deployment(centers, dep.radius_m, SpeedProfile.constant(v), timing)

    out = Path(args.out)
    payload = {
        "inputs": {
            "radius_m": dep.radius_m,
            "separation_m": dep.separation_m,
            "max_speed_kmh": dep.max_speed_kmh,
            "receiver": dep.receiver,
            "t_reacq_s": timing.t_reacq_s,
            "t_max_s": timing.t_max_s,
            "t_acq_s": timing.t_acq_s,
        },
        "derived": derived,
        "update_check": {"ok": update.ok, "reason": update.reason},
        "layout_report": report.to_dict(),
    }
    write_json(out / "plan.json", payload)

    rows = [(k, f"{v_:.3f}" if isinstance(v_, float) else v_) for k, v_ in sorted(derived.items())]
    rows.append(("update_ok", update.ok))
    rows.append(("layout_ok", report.ok))
    table = format_table(("quantity", "value"), rows)
    (out / "plan.txt").parent.mkdir(parents=True, exist_ok=True)
    (out / "plan.txt").write_text(table)

    radii = [10.0 + 5.0 * i for i in range(39)]
    write_csv(
        out / "reception_curve.csv",
        ("radius_m", "reception_time_s", "reacq_fits"),
        (
            (r, reception_time(r, v), timing.t_reacq_s <= reception_time(r, v))
            for r in radii
        ),
    )
    d0 = 2.0 * dep.radius_m
    seps = [d0 + 20.0 * i for i in range(int((1000.0 - d0) // 20.0) + 1)]
    write_csv(
        out / "blockage_curve.csv",
        ("separation_m", "blockage_time_s", "within_t_max"),
        (
            (d, blockage_time(d, dep.radius_m, v), blockage_time(d, dep.radius_m, v) <= timing.t_max_s)
            for d in seps
        ),
    )
    _announce([out / "plan.json", out / "plan.txt", out / "reception_curve.csv", out / "blockage_curve.csv"])
    print(table, end="")

    ok = update.ok and report.ok
    if args.strict:
        ok = ok and all(g.blockage_s <= timing.t_max_s for g in report.gap_checks)
    return EXIT_OK if ok else EXIT_INFEASIBLE


# --------------------------------------------------------------- simulate


def _handover_params(cfg: Config) -> sc.StaticHandoverParams:
    h = cfg.handover
    return sc.StaticHandoverParams(
        live_s=h.live_s,
        blocked_s=h.blocked_s,
        sim_s=h.sim_s,
        pr_noise_m=h.pr_noise_m,
        n_sats=h.n_sats,
    )


def _check_draws(results: list[sc.ScenarioResult], budget: ErrorBudget, strict: bool) -> int:
    ok = all(all(r.handover_success.values()) for r in results)
    if strict:
        ok = ok and all(
            within_budget(d.error, budget) for r in results for d in r.clock_draws.values()
        )
    return EXIT_OK if ok else EXIT_INFEASIBLE


def cmd_simulate(cfg: Config, args: argparse.Namespace) -> int:
    out = Path(args.out)
    budget = _budget(cfg)
    delay_model = _delay_model(cfg)
    seed = args.seed

    if args.scenario == "static":
        profile = rcv.PROFILES[cfg.deployment.receiver]
        params = _handover_params(cfg)
        if args.clock == "all":
            trials = args.trials or cfg.handover.trials
            matrix = sc.run_static_handover_matrix(
                trials=trials, seed=seed, profile=profile, params=params, delay_model=delay_model
            )
            write_json(out / "handover_matrix.json", matrix.to_dict())
            write_csv(
                out / "handover_matrix.csv",
                ("clock", "median_p95_m", "median_avg_m", "max_m"),
                ((c.label, c.median_p95_m, c.median_avg_m, c.max_m) for c in matrix.cells),
            )
            _announce([out / "handover_matrix.json", out / "handover_matrix.csv"])
            print(
                format_table(
                    ("clock", "median p95 [m]", "median avg [m]"),
                    [(c.label, f"{c.median_p95_m:.3f}", f"{c.median_avg_m:.3f}") for c in matrix.cells],
                ),
                end="",
            )
            return EXIT_OK if matrix.ordering_ok_every_trial else EXIT_INFEASIBLE
        config = sc.CLOCK_CONFIGS_BY_LABEL[args.clock]
        result = sc.run_static_handover(config, profile, seed, params, delay_model)
        _announce(_write_run_artifacts(out, "handover", result))
        return _check_draws([result], budget, args.strict)

    if args.scenario in ("driving", "pedestrian"):
        base = (
            sc.default_driving_scenario()
            if args.scenario == "driving"
            else sc.default_pedestrian_scenario()
        )
        if args.clock == "all" and args.scenario == "driving":
            matrix = sc.run_traversal_matrix(
                base, trials=args.trials or 5, seed=seed, delay_model=delay_model
            )
            write_json(out / "traversal_matrix.json", matrix.to_dict())
            write_csv(
                out / "traversal_matrix.csv",
                ("clock", "median_avg_m", "handover_success_all"),
                ((c.label, c.median_avg_m, c.handover_success_all) for c in matrix.cells),
            )
            _announce([out / "traversal_matrix.json", out / "traversal_matrix.csv"])
            ok = matrix.ordering_ok_every_trial and all(c.handover_success_all for c in matrix.cells)
            return EXIT_OK if ok else EXIT_INFEASIBLE
        if args.clock != "all":
            base = dataclasses.replace(base, clock=sc.CLOCK_CONFIGS_BY_LABEL[args.clock])
        result = sc.run_dynamic_traversal(base, seed, delay_model)
        _announce(_write_run_artifacts(out, args.scenario, result))
        return _check_draws([result], budget, args.strict)

    comparison = sc.run_outdoor_comparison(seed=seed, delay_model=delay_model)
    write_json(out / "outdoor.json", comparison.to_dict())
    _announce([out / "outdoor.json"])
    print(
        f"live avg {comparison.live.avg_m:.3f} m, simulated avg "
        f"{comparison.simulated.avg_m:.3f} m, fit_for_outdoor_use={comparison.fit_for_outdoor_use}"
    )
    return EXIT_OK if comparison.fit_for_outdoor_use else EXIT_INFEASIBLE


# ------------------------------------------------------------------ sweep


def _sweep_offsets(cfg: Config) -> list[TimeOffset]:
    sw = cfg.sweep
    n = int(math.floor((sw.max_offset_ms - sw.min_offset_ms) / sw.step_ms + 1e-9)) + 1
    return [TimeOffset.from_millis(sw.min_offset_ms + i * sw.step_ms) for i in range(n)]


def cmd_sweep(cfg: Config, args: argparse.Namespace) -> int:
    profile = rcv.PROFILES[args.receiver or cfg.deployment.receiver]
    result = sc.run_offset_sweep(
        offsets=_sweep_offsets(cfg),
        profile=profile,
        trials=args.trials or cfg.sweep.trials,
        seed=args.seed,
        pr_noise_m=cfg.handover.pr_noise_m,
        n_sats=cfg.handover.n_sats,
    )
    out = Path(args.out)
    write_json(out / "sweep.json", result.to_dict())
    write_csv(
        out / "sweep.csv",
        ("offset_ms", "mean_reacq_s", "std_reacq_s", "mean_error_m", "std_error_m"),
        (
            (r.offset_ms, r.mean_reacq_s, r.std_reacq_s, r.mean_error_m, r.std_error_m)
            for r in result.rows
        ),
    )
    _announce([out / "sweep.json", out / "sweep.csv"])
    print(
        format_table(
            ("offset [ms]", "reacq [s]", "pos err [m]"),
            [(f"{r.offset_ms:+.0f}", f"{r.mean_reacq_s:.2f}", f"{r.mean_error_m:.2f}") for r in result.rows],
        ),
        end="",
    )
    return EXIT_OK


# -------------------------------------------------------------- calibrate


def cmd_calibrate(cfg: Config, args: argparse.Namespace) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    model = _delay_model(cfg)
    if args.samples_csv:
        samples = import_samples_csv(args.samples_csv)
    else:
        samples = measure_sim_delay(
            model, cfg.delay_model.sample_count, stream(args.seed, "cli", "calibrate")
        )
        export_samples_csv(out / "delay_samples.csv", samples)
    result = calibrate(samples)
    payload = {
        "correction_ms": result.correction.millis,
        "sample_stddev_ms": result.sample_stddev.millis,
        "residual_bound_ms": result.residual_bound.millis,
        "sample_count": result.sample_count,
    }
    write_json(out / "calibration.json", payload)
    paths = [out / "calibration.json"]
    if not args.samples_csv:
        paths.append(out / "delay_samples.csv")
    _announce(paths)
    print(
        f"correction {result.correction.millis:.3f} ms over {result.sample_count} samples, "
        f"residual bound {result.residual_bound.millis:.3f} ms"
    )
    return EXIT_OK


# ----------------------------------------------------------- sync-compare


def cmd_sync_compare(cfg: Config, args: argparse.Namespace) -> int:
    cells = run_sync_comparison(duration_s=cfg.sync.duration_s, seed=args.seed)
    out = Path(args.out)
    write_json(
        out / "sync_compare.json",
        [
            {
                "connection_type": c.connection,
                "server_type": c.server_type,
                "est_max_ntp_error_ms": c.est_max_error_ms,
                "max_abs_offset_ms": c.max_abs_offset_ms,
                "bound_held": c.bound_held,
            }
            for c in cells
        ],
    )
    write_csv(
        out / "sync_compare.csv",
        ("connection_type", "server_type", "est_max_ntp_error_ms"),
        ((c.connection, c.server_type, c.est_max_error_ms) for c in cells),
    )
    _announce([out / "sync_compare.json", out / "sync_compare.csv"])
    print(
        format_table(
            ("connection", "server", "est max err [ms]", "bound held"),
            [
                (c.connection, c.server_type, f"{c.est_max_error_ms:.3f}", c.bound_held)
                for c in cells
            ],
        ),
        end="",
    )
    if args.strict and not all(c.bound_held for c in cells):
        return EXIT_INFEASIBLE
    return EXIT_OK


# ------------------------------------------------------------------- main


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--config",
        default=None,
        help=f"JSON config path (default: ${CONFIG_ENV_VAR} if set, else built-ins)",
    )
    common.add_argument("--seed", type=int, default=0, help="base seed (default 0)")
    common.add_argument("--out", default="out", help="artifact directory (default ./out)")
    common.add_argument(
        "--format",
        choices=("json", "csv"),
        default="json",
        help="kept for symmetry; every command writes both formats",
    )
    common.add_argument(
        "--strict",
        action="store_true",
        help="escalate soft failures (budget excursions, slow-path gaps, bound misses)",
    )

    parser = argparse.ArgumentParser(
        prog="gpsimlab",
        description="Deployment planning and handover simulation for indoor satnav coverage.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("plan", parents=[common], help="feasibility report for the configured deployment")

    sim = sub.add_parser("simulate", parents=[common], help="run a handover scenario")
    sim.add_argument("--scenario", choices=SCENARIOS, required=True)
    sim.add_argument(
        "--clock",
        choices=tuple(sc.CLOCK_CONFIGS_BY_LABEL) + ("all",),
        default="all",
        help="clock pipeline (default: all applicable)",
    )
    sim.add_argument("--trials", type=int, default=None, help="override trial count")

    sw = sub.add_parser("sweep", parents=[common], help="reacquisition vs controlled clock offset")
    sw.add_argument("--receiver", choices=tuple(rcv.PROFILES), default=None)
    sw.add_argument("--trials", type=int, default=None, help="override trial count")

    cal = sub.add_parser("calibrate", parents=[common], help="delay calibration statistics")
    cal.add_argument("--samples-csv", default=None, help="calibrate from an existing sample CSV")

    sub.add_parser("sync-compare", parents=[common], help="sync error across connection and server types")
    return parser


_COMMANDS = {
    "plan": cmd_plan,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "calibrate": cmd_calibrate,
    "sync-compare": cmd_sync_compare,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _load(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return _COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # pragma: no cover - defensive
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
