"""Command-line interface.

Each command reads a JSON config (plus optional dotted-path overrides),
dispatches to the corresponding library operation, writes its outputs
atomically into the output directory, and finishes with a machine-readable
``manifest.json`` recording the config hash, package and library versions,
and wall time.  Exit codes: 0 success, 2 config error, 3 numerical failure,
4 validation failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from dataclasses import asdict, replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .config import RunConfig, apply_overrides, block_value, load_config, validate_config
from .dynamics import (
    adiabaticity_metric,
    propagate,
    propagate_semiclassical,
    rwa_ratio,
)
from .errors import ConfigError, PropagationError, ValidationError
from .explore import default_workers, design_pulses, robustness_scan
from .model import SemiclassicalParams
from .serialize import (
    atomic_write_text,
    json_dumps,
    write_intersections_csv,
    write_scan_csv,
    write_scan_summary_json,
    write_surfaces_csv,
    write_trajectory_csv,
)
from .spectra import locate_intersections, predict_transfer, surface_grid

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_VALIDATION = 4

COMMANDS = (
    "surfaces",
    "intersections",
    "propagate",
    "predict",
    "scan",
    "design",
    "oracle-compare",
    "check",
)


def _config_sha256(config: dict) -> str:
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def _write_manifest(out_dir: Path, command: str, config: dict, outputs: list[str],
                    wall_time: float, extra: dict | None = None) -> None:
    payload = {
        "schema_version": 1,
        "command": command,
        "config_sha256": _config_sha256(config),
        "package_version": __version__,
        "python_version": sys.version.split()[0],
        "numpy_version": np.__version__,
        "scipy_version": scipy.__version__,
        "wall_time_s": wall_time,
        "outputs": outputs,
        "created_utc": datetime.now(timezone.utc).isoformat(),
    }
    if extra:
        payload.update(extra)
    atomic_write_text(out_dir / "manifest.json", json_dumps(payload))


def _cmd_surfaces(run: RunConfig, config: dict, out_dir: Path, args) -> list[str]:
    g_range = block_value(config, "surfaces", "g_range", "pair")
    omega_range = block_value(config, "surfaces", "omega_range", "pair")
    resolution = block_value(config, "surfaces", "resolution", "integer", default=61, required=False)
    offset = bool(
        args.display_offset
        or block_value(config, "surfaces", "display_offset", "bool", default=False, required=False)
    )
    grid = surface_grid(run.model, g_range, omega_range, resolution)
    write_surfaces_csv(grid, out_dir / "surfaces.csv", include_offset_column=offset)
    return ["surfaces.csv"]


def _cmd_intersections(run: RunConfig, config: dict, out_dir: Path, args) -> list[str]:
    plane = block_value(config, "intersections", "plane", "string")
    field_max = block_value(config, "intersections", "field_max", "number")
    scan_points = block_value(config, "intersections", "scan_points", "integer", default=2000, required=False)
    records = locate_intersections(run.model, plane, field_max, scan_points=scan_points)
    write_intersections_csv(records, out_dir / "intersections.csv")
    return ["intersections.csv"]


def _cmd_propagate(run: RunConfig, config: dict, out_dir: Path, args) -> list[str]:
    sampling = block_value(config, "propagate", "sampling", "integer", default=2000, required=False)
    rtol = block_value(config, "propagate", "rtol", "number", default=1e-9, required=False)
    atol = block_value(config, "propagate", "atol", "number", default=1e-11, required=False)
    record = propagate(run.model, run.schedule, sampling=sampling, rtol=rtol, atol=atol)
    write_trajectory_csv(record, out_dir / "trajectory.csv")
    return ["trajectory.csv"]


def _cmd_predict(run: RunConfig, config: dict, out_dir: Path, args) -> list[str]:
    import warnings as _warnings

    from .spectra import NearThresholdWarning, exchange_plane_thresholds, maser_plane_thresholds

    near = False
    with _warnings.catch_warnings(record=True) as caught:
        _warnings.simplefilter("always", NearThresholdWarning)
        n = predict_transfer(run.model, abs(run.schedule.g_max), abs(run.schedule.omega_max))
        near = any(issubclass(w.category, NearThresholdWarning) for w in caught)
    payload = {
        "predicted_n": n,
        "near_threshold": near,
        "g_thresholds": exchange_plane_thresholds(run.model),
        "omega_thresholds": maser_plane_thresholds(run.model),
        "g_max": run.schedule.g_max,
        "omega_max": run.schedule.omega_max,
    }
    atomic_write_text(out_dir / "predict.json", json_dumps(payload))
    return ["predict.json"]


def _cmd_scan(run: RunConfig, config: dict, out_dir: Path, args) -> list[str]:
    g_range = block_value(config, "scan", "g_range", "pair")
    omega_range = block_value(config, "scan", "omega_range", "pair")
    resolution = block_value(config, "scan", "resolution", "integer", default=32, required=False)
    target_n = block_value(config, "scan", "target_n", "integer", default=1, required=False)
    level = block_value(config, "scan", "plateau_level", "number", default=0.95, required=False)
    result = robustness_scan(
        run.model,
        run.schedule,
        g_range,
        omega_range,
        resolution=resolution,
        target_n=target_n,
        workers=args.workers,
        plateau_level=level,
    )
    write_scan_csv(result, out_dir / "scan.csv")
    write_scan_summary_json(result, out_dir / "scan_summary.json")
    return ["scan.csv", "scan_summary.json"]


def _cmd_design(run: RunConfig, config: dict, out_dir: Path, args) -> list[str]:
    target_n = block_value(config, "design", "target_n", "integer")
    t_int = block_value(config, "design", "t_int", "number", required=False)
    tau = block_value(config, "design", "tau", "number", required=False)
    if t_int is None or tau is None:
        if run.schedule is None:
            raise ConfigError("design needs t_int and tau (in the design or schedule block)")
        t_int = run.schedule.t_int if t_int is None else t_int
        tau = run.schedule.tau if tau is None else tau
    result = design_pulses(run.model, target_n, t_int, tau)
    payload = {
        "target_n": result.target_n,
        "schedule": asdict(result.schedule),
        "g_threshold_below": result.g_threshold_below,
        "g_threshold_above": result.g_threshold_above,
        "omega_threshold": result.omega_threshold,
        "predicted_n": result.predicted_n,
        "achieved_population": result.achieved_population,
        "adiabaticity": asdict(result.adiabaticity),
    }
    atomic_write_text(out_dir / "design.json", json_dumps(payload))
    return ["design.json"]


def _cmd_oracle_compare(run: RunConfig, config: dict, out_dir: Path, args) -> list[str]:
    omega_m = block_value(config, "oracle", "omega_m", "number", default=200.0, required=False)
    theta_0 = block_value(config, "oracle", "theta_0", "number", default=0.0, required=False)
    steps = block_value(config, "oracle", "steps_per_period", "integer", default=20, required=False)
    sc = SemiclassicalParams.from_model(run.model, omega_m=omega_m, theta_0=theta_0)
    effective = propagate(run.model, run.schedule, sampling=2)
    lab = propagate_semiclassical(sc, run.model, run.schedule, sampling=2, steps_per_period=steps)
    diff = float(np.abs(effective.final_populations - lab.final_populations).max())
    payload = {
        "omega_m": omega_m,
        "theta_0": theta_0,
        "effective_final_populations": [float(p) for p in effective.final_populations],
        "semiclassical_final_populations": [float(p) for p in lab.final_populations],
        "max_abs_difference": diff,
    }
    atomic_write_text(out_dir / "oracle_compare.json", json_dumps(payload))
    return ["oracle_compare.json"]


def _cmd_check(run: RunConfig, config: dict, out_dir: Path, args) -> list[str]:
    report = adiabaticity_metric(run.model, run.schedule)
    warnings_list = []
    if not report.passed:
        warnings_list.append(
            "adiabaticity products do not all exceed 10; the transfer may not be adiabatic"
        )
    payload = {
        "model_valid": True,
        "schedule_valid": True,
        "window": [run.schedule.t_start, run.schedule.t_end],
        "adiabaticity": asdict(report),
        "warnings": warnings_list,
    }
    if "oracle" in config:
        omega_m = block_value(config, "oracle", "omega_m", "number", default=200.0, required=False)
        theta_0 = block_value(config, "oracle", "theta_0", "number", default=0.0, required=False)
        sc = SemiclassicalParams.from_model(run.model, omega_m=omega_m, theta_0=theta_0)
        ratio = rwa_ratio(sc, run.schedule)
        payload["rwa_ratio"] = ratio
        if ratio >= 0.05:
            raise ValidationError(
                f"peak coupling / atomic frequency = {ratio:.3f} exceeds the "
                "rotating-wave validity bound 0.05"
            )
    if run.physical_summary is not None:
        payload["physical"] = run.physical_summary
    atomic_write_text(out_dir / "check.json", json_dumps(payload))
    return ["check.json"]


_HANDLERS = {
    "surfaces": (_cmd_surfaces, False),
    "intersections": (_cmd_intersections, False),
    "propagate": (_cmd_propagate, True),
    "predict": (_cmd_predict, True),
    "scan": (_cmd_scan, True),
    "design": (_cmd_design, False),
    "oracle-compare": (_cmd_oracle_compare, True),
    "check": (_cmd_check, True),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fockgen",
        description="Photon-number state preparation by two-color delayed-pulse "
        "adiabatic passage: surfaces, degeneracies, propagation, and scans.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="path to the JSON run configuration")
        p.add_argument("--out", default=".", help="output directory (default: current)")
        p.add_argument(
            "--set",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="dotted-path config override, repeatable (e.g. model.n_max=9)",
        )
        p.add_argument(
            "--workers",
            type=int,
            default=None,
            help=f"worker process count for scans (default: $FOCKGEN_WORKERS or 1)",
        )
        if name == "surfaces":
            p.add_argument(
                "--display-offset",
                action="store_true",
                help="add the energy_plus_g display column to surfaces.csv",
            )
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if not hasattr(args, "display_offset"):
        args.display_offset = False
    if args.workers is None:
        args.workers = default_workers()
    started = time.perf_counter()
    try:
        config = load_config(args.config)
        apply_overrides(config, args.set)
        handler, needs_schedule = _HANDLERS[args.command]
        run = validate_config(config, need_schedule=needs_schedule)
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        outputs = handler(run, config, out_dir, args)
        extra = {"physical": run.physical_summary} if run.physical_summary else None
        _write_manifest(
            out_dir, args.command, config, outputs, time.perf_counter() - started, extra
        )
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PropagationError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValidationError as exc:
        print(f"validation failure: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
