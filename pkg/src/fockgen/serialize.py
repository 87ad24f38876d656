"""File formats for the command-line interface.

Every float is written in its shortest round-trip decimal form (``repr``),
locale independent with a ``.`` separator, so identical inputs produce
byte-identical files and every file re-parses to exactly the values that
produced it.  Data files carry no timestamps; those live in the run manifest
only.  All writes are atomic (temp file in the target directory, then rename).
"""

from __future__ import annotations

import csv
import json
import os
import tempfile
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .dynamics import TrajectoryRecord
from .errors import ConfigError
from .explore import PlateauRectangle, ScanFailure, ScanResult
from .spectra import IntersectionRecord, SurfaceGrid


def _fmt(x: float) -> str:
    return repr(float(x))


def atomic_write_text(path: str | Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(header: list[str], rows) -> str:
    import io

    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


def write_surfaces_csv(grid: SurfaceGrid, path: str | Path, include_offset_column: bool = False) -> None:
    """Columns ``g, omega, sheet_index, energy`` plus an ``energy_plus_g``
    display column on request.  Expects a raw (offset-free) grid."""
    if grid.display_offset_applied:
        raise ConfigError("serialize raw grids; the display offset is added as an extra column")
    header = ["g", "omega", "sheet_index", "energy"]
    if include_offset_column:
        header.append("energy_plus_g")
    rows = []
    for i, g in enumerate(grid.g_axis):
        for j, w in enumerate(grid.omega_axis):
            for k in range(grid.sheets.shape[2]):
                row = [_fmt(g), _fmt(w), str(k), _fmt(grid.sheets[i, j, k])]
                if include_offset_column:
                    row.append(_fmt(grid.sheets[i, j, k] + g))
                rows.append(row)
    atomic_write_text(path, _csv_text(header, rows))


def read_surfaces_csv(path: str | Path) -> SurfaceGrid:
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader)
        if header[:4] != ["g", "omega", "sheet_index", "energy"]:
            raise ConfigError(f"unexpected surfaces header: {header}")
        data = [(float(r[0]), float(r[1]), int(r[2]), float(r[3])) for r in reader]
    g_axis = np.array(sorted({r[0] for r in data}))
    omega_axis = np.array(sorted({r[1] for r in data}))
    dim = max(r[2] for r in data) + 1
    sheets = np.empty((len(g_axis), len(omega_axis), dim))
    g_pos = {g: i for i, g in enumerate(g_axis)}
    w_pos = {w: j for j, w in enumerate(omega_axis)}
    for g, w, k, e in data:
        sheets[g_pos[g], w_pos[w], k] = e
    return SurfaceGrid(g_axis=g_axis, omega_axis=omega_axis, sheets=sheets)


def write_intersections_csv(records: list[IntersectionRecord], path: str | Path) -> None:
    header = ["plane", "field_value", "sheet_lower", "sheet_upper", "residual_gap"]
    rows = [
        [r.plane, _fmt(r.field_value), str(r.surface_pair[0]), str(r.surface_pair[1]), _fmt(r.residual_gap)]
        for r in records
    ]
    atomic_write_text(path, _csv_text(header, rows))


def read_intersections_csv(path: str | Path) -> list[IntersectionRecord]:
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        next(reader)
        return [
            IntersectionRecord(
                plane=r[0],
                field_value=float(r[1]),
                surface_pair=(int(r[2]), int(r[3])),
                residual_gap=float(r[4]),
            )
            for r in reader
        ]


def trajectory_columns(dim: int) -> list[str]:
    labels = []
    for n in range(dim // 2):
        labels.append(f"P_minus_{n}")
        labels.append(f"P_plus_{n}")
    return ["t"] + labels + ["norm_drift"]


def write_trajectory_csv(record: TrajectoryRecord, path: str | Path) -> None:
    """Columns ``t, P_minus_0, P_plus_0, ..., norm_drift``."""
    header = trajectory_columns(record.dim)
    rows = []
    for k in range(len(record.times)):
        row = [_fmt(record.times[k])]
        row.extend(_fmt(p) for p in record.populations[k])
        row.append(_fmt(record.norm_drift[k]))
        rows.append(row)
    atomic_write_text(path, _csv_text(header, rows))


def read_trajectory_csv(path: str | Path) -> TrajectoryRecord:
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader)
        dim = len(header) - 2
        if header != trajectory_columns(dim):
            raise ConfigError(f"unexpected trajectory header: {header}")
        times, pops, drift = [], [], []
        for r in reader:
            times.append(float(r[0]))
            pops.append([float(x) for x in r[1 : 1 + dim]])
            drift.append(float(r[-1]))
    return TrajectoryRecord(
        times=np.array(times),
        populations=np.array(pops),
        norm_drift=np.array(drift),
        final_state=None,
    )


def write_scan_csv(result: ScanResult, path: str | Path) -> None:
    """Long format: ``g_max, omega_max, population, predicted_n``."""
    header = ["g_max", "omega_max", "population", "predicted_n"]
    rows = []
    for i, g in enumerate(result.g_max_axis):
        for j, w in enumerate(result.omega_max_axis):
            rows.append(
                [_fmt(g), _fmt(w), _fmt(result.population_map[i, j]), str(result.predictor_map[i, j])]
            )
    atomic_write_text(path, _csv_text(header, rows))


def read_scan_csv(path: str | Path, target_n: int, plateau_level: float = 0.95) -> ScanResult:
    """Rebuild a scan result from the long-format CSV.

    Only the serialized fields come back: the full per-point distributions
    are not stored in the CSV, so ``final_populations`` is NaN-filled, and
    the plateau is recomputed from the population map.
    """
    from .explore import largest_plateau

    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader)
        if header != ["g_max", "omega_max", "population", "predicted_n"]:
            raise ConfigError(f"unexpected scan header: {header}")
        data = [(float(r[0]), float(r[1]), float(r[2]), int(r[3])) for r in reader]
    g_axis = np.array(sorted({r[0] for r in data}))
    omega_axis = np.array(sorted({r[1] for r in data}))
    pop = np.full((len(g_axis), len(omega_axis)), np.nan)
    pred = np.zeros((len(g_axis), len(omega_axis)), dtype=int)
    g_pos = {g: i for i, g in enumerate(g_axis)}
    w_pos = {w: j for j, w in enumerate(omega_axis)}
    for g, w, p, n in data:
        pop[g_pos[g], w_pos[w]] = p
        pred[g_pos[g], w_pos[w]] = n
    return ScanResult(
        g_max_axis=g_axis,
        omega_max_axis=omega_axis,
        target_n=target_n,
        population_map=pop,
        predictor_map=pred,
        final_populations=np.full(pop.shape + (0,), np.nan),
        failures=(),
        plateau_level=plateau_level,
        plateau=largest_plateau(pop, g_axis, omega_axis, level=plateau_level),
    )


def json_dumps(payload) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def write_scan_summary_json(result: ScanResult, path: str | Path) -> None:
    payload = {
        "target_n": result.target_n,
        "plateau_level": result.plateau_level,
        "g_max_range": [float(result.g_max_axis[0]), float(result.g_max_axis[-1])],
        "omega_max_range": [float(result.omega_max_axis[0]), float(result.omega_max_axis[-1])],
        "resolution": [len(result.g_max_axis), len(result.omega_max_axis)],
        "plateau": asdict(result.plateau) if result.plateau else None,
        "failures": [asdict(f) for f in result.failures],
    }
    if result.plateau is not None:
        payload["plateau"]["g_extent"] = result.plateau.g_extent
        payload["plateau"]["omega_extent"] = result.plateau.omega_extent
    atomic_write_text(path, json_dumps(payload))


def read_scan_summary_json(path: str | Path) -> dict:
    with open(path) as handle:
        return json.load(handle)


def plateau_from_summary(payload: dict) -> PlateauRectangle | None:
    raw = payload.get("plateau")
    if raw is None:
        return None
    return PlateauRectangle(
        g_lo=raw["g_lo"],
        g_hi=raw["g_hi"],
        omega_lo=raw["omega_lo"],
        omega_hi=raw["omega_hi"],
        g_center=raw["g_center"],
        omega_center=raw["omega_center"],
        cells=tuple(raw["cells"]),
    )


__all__ = [
    "atomic_write_text",
    "json_dumps",
    "plateau_from_summary",
    "read_intersections_csv",
    "read_scan_csv",
    "read_scan_summary_json",
    "read_surfaces_csv",
    "read_trajectory_csv",
    "trajectory_columns",
    "write_intersections_csv",
    "write_scan_csv",
    "write_scan_summary_json",
    "write_surfaces_csv",
    "write_trajectory_csv",
]
