"""Amplitude-space exploration: robustness scans and automated pulse design.

A scan propagates the same delayed-pulse sequence once per grid point of peak
amplitudes and records the final population of the target photon-number
state, mirroring how robust the transfer is against amplitude miscalibration.
Pulse design places the cavity amplitude between two neighboring crossing
thresholds and gives the drive enough amplitude to clear its own descent
crossings, then validates the result by propagation.
"""

from __future__ import annotations

import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .dynamics import (
    AdiabaticityReport,
    PulseSchedule,
    adiabaticity_metric,
    propagate,
)
from .errors import PropagationError, ValidationError
from .model import ModelParams, flat_index
from .spectra import (
    NearThresholdWarning,
    exchange_plane_thresholds,
    maser_plane_thresholds,
    predict_transfer,
)

PLATEAU_LEVEL = 0.95
WORKERS_ENV_VAR = "FOCKGEN_WORKERS"


@dataclass(frozen=True)
class PlateauRectangle:
    """Largest axis-aligned rectangle of grid points above the plateau level."""

    g_lo: float
    g_hi: float
    omega_lo: float
    omega_hi: float
    g_center: float
    omega_center: float
    cells: tuple[int, int]

    @property
    def g_extent(self) -> float:
        return self.g_hi - self.g_lo

    @property
    def omega_extent(self) -> float:
        return self.omega_hi - self.omega_lo


@dataclass(frozen=True)
class ScanFailure:
    i: int
    j: int
    message: str


@dataclass(frozen=True)
class ScanResult:
    """Final-population map of one target state over a peak-amplitude grid.

    ``population_map[i, j]`` is the final population of the target state at
    ``(g_max_axis[i], omega_max_axis[j])`` (NaN where the propagation
    failed); ``predictor_map`` holds the crossing-count prediction and
    ``final_populations`` the full final distribution per point.
    """

    g_max_axis: np.ndarray
    omega_max_axis: np.ndarray
    target_n: int
    population_map: np.ndarray
    predictor_map: np.ndarray
    final_populations: np.ndarray
    failures: tuple[ScanFailure, ...]
    plateau_level: float
    plateau: PlateauRectangle | None

    def __post_init__(self):
        shape = (len(self.g_max_axis), len(self.omega_max_axis))
        if self.population_map.shape != shape or self.predictor_map.shape != shape:
            raise ValidationError("scan maps inconsistent with the amplitude axes")
        finite = self.population_map[np.isfinite(self.population_map)]
        if finite.size and (finite.min() < -1e-8 or finite.max() > 1.0 + 1e-8):
            raise ValidationError("populations must lie in [0, 1]")


def largest_plateau(
    population_map: np.ndarray,
    g_axis: np.ndarray,
    omega_axis: np.ndarray,
    level: float = PLATEAU_LEVEL,
) -> PlateauRectangle | None:
    """Largest axis-aligned rectangle whose grid points all exceed ``level``.

    Uses the stack-of-histograms maximal-rectangle method with a fixed
    row-major tie break, so the result is deterministic.  Assumes uniformly
    spaced axes (which :func:`robustness_scan` always produces).
    """
    with np.errstate(invalid="ignore"):
        mask = population_map > level
    ng, nw = mask.shape
    best = None  # (area_cells, i0, i1, j0, j1)
    heights = np.zeros(nw, dtype=int)
    for i in range(ng):
        heights = np.where(mask[i], heights + 1, 0)
        stack: list[int] = []  # column indices with increasing heights
        for j in range(nw + 1):
            h = heights[j] if j < nw else 0
            while stack and heights[stack[-1]] >= h:
                top = stack.pop()
                height = int(heights[top])
                left = stack[-1] + 1 if stack else 0
                width = j - left
                area = height * width
                if height > 0 and (best is None or area > best[0]):
                    best = (area, i - height + 1, i, left, j - 1)
            if j < nw:
                stack.append(j)
    if best is None or best[0] == 0:
        return None
    _, i0, i1, j0, j1 = best
    return PlateauRectangle(
        g_lo=float(g_axis[i0]),
        g_hi=float(g_axis[i1]),
        omega_lo=float(omega_axis[j0]),
        omega_hi=float(omega_axis[j1]),
        g_center=float(0.5 * (g_axis[i0] + g_axis[i1])),
        omega_center=float(0.5 * (omega_axis[j0] + omega_axis[j1])),
        cells=(i1 - i0 + 1, j1 - j0 + 1),
    )


def _scan_point(job):
    """Propagate one grid point; importable at module level for worker pools."""
    params, template, g, w, rtol, atol = job
    schedule = replace(template, g_max=g, omega_max=w)
    record = propagate(params, schedule, sampling=2, rtol=rtol, atol=atol)
    return record.final_populations


def default_workers() -> int:
    value = os.environ.get(WORKERS_ENV_VAR, "")
    try:
        return max(1, int(value))
    except ValueError:
        return 1


def robustness_scan(
    params: ModelParams,
    template: PulseSchedule,
    g_range: tuple[float, float],
    omega_range: tuple[float, float],
    resolution: int | tuple[int, int] = 32,
    target_n: int = 1,
    workers: int | None = None,
    rtol: float = 1e-9,
    atol: float = 1e-11,
    plateau_level: float = PLATEAU_LEVEL,
) -> ScanResult:
    """Map the final target-state population over a grid of peak amplitudes.

    The template fixes the pulse width, delay, and window; only the peak
    amplitudes vary.  Grid points are independent propagations, so the maps
    are bit-identical no matter how the work is distributed; failures at
    isolated points are recorded per point (NaN in the map) instead of
    aborting the scan.
    """
    if isinstance(resolution, int):
        resolution = (resolution, resolution)
    ng, nw = resolution
    if ng < 2 or nw < 2:
        raise ValidationError(f"resolution must be >= 2 per axis, got {resolution}")
    if not 0 <= target_n <= params.n_max:
        raise ValidationError(f"target_n must be in [0, {params.n_max}], got {target_n}")
    g_lo, g_hi = map(float, g_range)
    w_lo, w_hi = map(float, omega_range)
    if not (g_lo < g_hi and w_lo < w_hi):
        raise ValidationError(f"ranges must be non-degenerate, got {g_range}, {omega_range}")

    g_axis = np.linspace(g_lo, g_hi, ng)
    omega_axis = np.linspace(w_lo, w_hi, nw)
    jobs = [
        (params, template, float(g), float(w), rtol, atol)
        for g in g_axis
        for w in omega_axis
    ]

    if workers is None:
        workers = default_workers()
    final = np.full((ng, nw, params.dim), np.nan)
    failures: list[ScanFailure] = []
    if workers > 1:
        # fixed chunking in row-major order keeps aggregation deterministic
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = pool.map(_scan_point_safe, jobs, chunksize=max(1, len(jobs) // (4 * workers)))
            outcomes = list(results)
    else:
        outcomes = [_scan_point_safe(job) for job in jobs]
    for flat, outcome in enumerate(outcomes):
        i, j = divmod(flat, nw)
        if isinstance(outcome, str):
            failures.append(ScanFailure(i=i, j=j, message=outcome))
        else:
            final[i, j] = outcome

    target_index = flat_index("-", target_n)
    population_map = final[:, :, target_index]
    predictor_map = np.empty((ng, nw), dtype=int)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NearThresholdWarning)
        for i, g in enumerate(g_axis):
            for j, w in enumerate(omega_axis):
                predictor_map[i, j] = predict_transfer(params, abs(g), abs(w))

    plateau = largest_plateau(population_map, g_axis, omega_axis, level=plateau_level)
    return ScanResult(
        g_max_axis=g_axis,
        omega_max_axis=omega_axis,
        target_n=target_n,
        population_map=population_map,
        predictor_map=predictor_map,
        final_populations=final,
        failures=tuple(failures),
        plateau_level=plateau_level,
        plateau=plateau,
    )


def _scan_point_safe(job):
    try:
        return _scan_point(job)
    except (PropagationError, ValidationError) as exc:
        return str(exc)


@dataclass(frozen=True)
class DesignResult:
    """A designed schedule plus the evidence it was designed from."""

    schedule: PulseSchedule
    target_n: int
    g_threshold_below: float
    g_threshold_above: float
    omega_threshold: float
    predicted_n: int
    adiabaticity: AdiabaticityReport
    achieved_population: float


def design_pulses(
    params: ModelParams,
    target_n: int,
    t_int: float,
    tau: float,
    rtol: float = 1e-9,
    atol: float = 1e-11,
) -> DesignResult:
    """Choose peak amplitudes that transfer ``target_n`` photons.

    The cavity amplitude is the geometric midpoint of the two thresholds
    bracketing the target crossing count; the drive amplitude is 1.5 times
    the highest descent threshold the path must clear.  The design is then
    validated by an actual propagation whose achieved population is stored
    in the result.
    """
    if target_n < 1:
        raise ValidationError(f"target_n must be >= 1 (got {target_n}); nothing to design")
    if params.n_max < target_n + 2:
        raise ValidationError(
            f"n_max = {params.n_max} leaves no headroom above target_n = {target_n}; "
            f"use n_max >= {target_n + 6}"
        )
    g_thresholds = exchange_plane_thresholds(params, target_n + 1)
    if len(g_thresholds) < target_n + 1:
        raise ValidationError(
            f"no crossing thresholds exist for target_n = {target_n} at these detunings"
        )
    omega_thresholds = maser_plane_thresholds(params, target_n)
    if len(omega_thresholds) < target_n:
        raise ValidationError(
            f"the drive plane has no descent threshold of order {target_n} at these "
            "detunings; the transfer path does not exist"
        )
    g_below, g_above = g_thresholds[target_n - 1], g_thresholds[target_n]
    g_max = float(np.sqrt(g_below * g_above))
    omega_max = 1.5 * omega_thresholds[target_n - 1]

    schedule = PulseSchedule(g_max=g_max, omega_max=omega_max, t_int=t_int, tau=tau)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NearThresholdWarning)
        predicted = predict_transfer(params, g_max, omega_max)
    record = propagate(params, schedule, sampling=2, rtol=rtol, atol=atol)
    achieved = float(record.final_populations[flat_index("-", target_n)])
    return DesignResult(
        schedule=schedule,
        target_n=target_n,
        g_threshold_below=g_below,
        g_threshold_above=g_above,
        omega_threshold=omega_thresholds[target_n - 1],
        predicted_n=predicted,
        adiabaticity=adiabaticity_metric(params, schedule),
        achieved_population=achieved,
    )
