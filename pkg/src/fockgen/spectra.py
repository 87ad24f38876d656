"""Dressed-energy surfaces, degeneracy location, and the transfer predictor.

The sorted eigenvalues of the reduced Hamiltonian form sheets over the plane
of instantaneous amplitudes ``(G, Omega)``.  Neighboring sheets touch at
isolated points on the two boundary planes (``Omega = 0`` and ``G = 0``);
those touching points are what a slow pulse sequence must cross to move
photons into the cavity, so locating them accurately is the heart of the
path design.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .model import HermitianOperator, ModelParams, build_effective_hamiltonian, flat_index

PLANE_EXCHANGE = "omega=0"  # scan along G with the drive off
PLANE_MASER = "g=0"         # scan along Omega with the cavity coupling off
_PLANES = (PLANE_EXCHANGE, PLANE_MASER)

DEGENERACY_GAP = 1e-8
REFINE_XTOL = 1e-10


class NearThresholdWarning(UserWarning):
    """Peak amplitude sits close to a degeneracy threshold; the crossing-count
    prediction is unreliable there."""


class DegeneracyScanWarning(UserWarning):
    """Degeneracies closer than the scan step may have been merged; a finer
    local rescan was triggered."""


def eigen_decompose(h: HermitianOperator | np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and orthonormal eigenvectors of a Hermitian matrix.

    Accepts either a :class:`HermitianOperator` or a raw array; raw arrays are
    validated for Hermiticity first.
    """
    if not isinstance(h, HermitianOperator):
        h = HermitianOperator.from_array(h)
    values, vectors = np.linalg.eigh(h.entries)
    return values, vectors


def _eigenvalues_at(params: ModelParams, g: float, omega: float) -> np.ndarray:
    return np.linalg.eigvalsh(build_effective_hamiltonian(params, g, omega).entries)


@dataclass(frozen=True)
class SurfaceGrid:
    """Sorted eigenvalue sheets sampled on a rectangular amplitude grid.

    ``sheets[i, j, k]`` is the k-th (ascending) eigenvalue at
    ``(g_axis[i], omega_axis[j])``.  When ``display_offset_applied`` is set,
    each stored value has had the local ``G`` added to it; that offset is a
    display convention only and never feeds back into any computation.
    """

    g_axis: np.ndarray
    omega_axis: np.ndarray
    sheets: np.ndarray
    display_offset_applied: bool = False

    def __post_init__(self):
        if self.sheets.shape[:2] != (len(self.g_axis), len(self.omega_axis)):
            raise ValidationError(
                f"sheet grid {self.sheets.shape} inconsistent with axes "
                f"({len(self.g_axis)}, {len(self.omega_axis)})"
            )


def surface_grid(
    params: ModelParams,
    g_range: tuple[float, float],
    omega_range: tuple[float, float],
    resolution: int | tuple[int, int],
    display_offset: bool = False,
) -> SurfaceGrid:
    """Eigenvalue sheets over a rectangular ``(G, Omega)`` window."""
    if isinstance(resolution, int):
        resolution = (resolution, resolution)
    ng, nw = resolution
    if ng < 2 or nw < 2:
        raise ValidationError(f"resolution must be >= 2 per axis, got {resolution}")
    g_lo, g_hi = map(float, g_range)
    w_lo, w_hi = map(float, omega_range)
    if not (g_lo < g_hi and w_lo < w_hi):
        raise ValidationError(f"ranges must be non-degenerate, got {g_range}, {omega_range}")

    g_axis = np.linspace(g_lo, g_hi, ng)
    omega_axis = np.linspace(w_lo, w_hi, nw)
    sheets = np.empty((ng, nw, params.dim))
    for i, g in enumerate(g_axis):
        for j, w in enumerate(omega_axis):
            sheets[i, j] = _eigenvalues_at(params, g, w)
    if display_offset:
        sheets = sheets + g_axis[:, None, None]
    return SurfaceGrid(
        g_axis=g_axis,
        omega_axis=omega_axis,
        sheets=sheets,
        display_offset_applied=display_offset,
    )


@dataclass(frozen=True)
class IntersectionRecord:
    """A located degeneracy of two neighboring sorted sheets on a boundary plane."""

    plane: str
    field_value: float
    surface_pair: tuple[int, int]
    residual_gap: float

    def __post_init__(self):
        if self.plane not in _PLANES:
            raise ValidationError(f"plane must be one of {_PLANES}, got {self.plane!r}")
        lo, hi = self.surface_pair
        if hi != lo + 1:
            raise ValidationError(f"surface pair must be adjacent, got {self.surface_pair}")
        if not self.residual_gap < DEGENERACY_GAP:
            raise ValidationError(
                f"residual gap {self.residual_gap:.3e} too large for a degeneracy"
            )


def _normalize_plane(plane: str) -> str:
    key = plane.strip().lower().replace(" ", "")
    if key in ("omega=0", "w=0"):
        return PLANE_EXCHANGE
    if key == "g=0":
        return PLANE_MASER
    raise ValidationError(f"plane must be one of {_PLANES}, got {plane!r}")


def _plane_eigenvalues(params: ModelParams, plane: str, x: float) -> np.ndarray:
    if plane == PLANE_EXCHANGE:
        return _eigenvalues_at(params, x, 0.0)
    return _eigenvalues_at(params, 0.0, x)


def _refine_minimum(gap, lo: float, hi: float) -> tuple[float, float]:
    """Shrink a bracket around the minimum of a V-shaped gap function."""
    while hi - lo > REFINE_XTOL:
        third = (hi - lo) / 3.0
        m1, m2 = lo + third, hi - third
        if gap(m1) <= gap(m2):
            hi = m2
        else:
            lo = m1
    x = 0.5 * (lo + hi)
    return x, gap(x)


def locate_intersections(
    params: ModelParams,
    plane: str,
    field_max: float,
    scan_points: int = 2000,
) -> list[IntersectionRecord]:
    """Find every adjacent-sheet degeneracy along one boundary plane.

    The gap between each pair of neighboring sorted sheets is scanned on a
    uniform grid over ``(0, field_max]``; every local minimum is refined by
    bracket shrinking to ``1e-10`` in the field coordinate, and minima whose
    refined gap falls below ``1e-8`` are reported as degeneracies.  Candidate
    minima that stay suspiciously shallow trigger a finer local rescan so
    that two crossings closer than the scan step are not merged silently.
    """
    plane = _normalize_plane(plane)
    if not (field_max > 0):
        raise ValidationError(f"field_max must be positive, got {field_max}")
    if scan_points < 16:
        raise ValidationError(f"scan_points must be >= 16, got {scan_points}")

    step = field_max / scan_points
    axis = np.linspace(step, field_max, scan_points)
    values = np.empty((scan_points, params.dim))
    for k, x in enumerate(axis):
        values[k] = _plane_eigenvalues(params, plane, x)
    gaps = np.diff(values, axis=1)  # (scan_points, dim - 1)

    records: list[IntersectionRecord] = []
    for pair in range(params.dim - 1):
        g = gaps[:, pair]

        def pair_gap(x, _pair=pair):
            lam = _plane_eigenvalues(params, plane, x)
            return lam[_pair + 1] - lam[_pair]

        interior = np.flatnonzero((g[1:-1] <= g[:-2]) & (g[1:-1] <= g[2:])) + 1
        # collapse tied runs (flat gap plateaus) to their first point
        interior = [k for k in interior if g[k] < g[k - 1] or k == 1]
        candidates = list(interior)
        if scan_points >= 2 and g[-1] < g[-2]:
            candidates.append(scan_points - 1)

        found: list[tuple[float, float]] = []
        for k in candidates:
            lo = axis[max(k - 1, 0)]
            hi = axis[min(k + 1, scan_points - 1)]
            # a sharp crossing descends at its local slope, so its sampled
            # minimum is at most ~slope*step; skip shallow flat minima
            slope = max(abs(g[k] - g[max(k - 1, 0)]), abs(g[min(k + 1, scan_points - 1)] - g[k])) / step
            if g[k] > 2.0 * slope * step + 1e-6:
                continue
            x_star, gap_star = _refine_minimum(pair_gap, lo, hi)
            if gap_star < DEGENERACY_GAP:
                found.append((x_star, gap_star))
            elif gap_star < 1e-3:
                # shallow but nonzero: may be two crossings merged within one
                # scan cell; rescan the bracket at a much finer step
                warnings.warn(
                    f"pair {pair} on plane {plane}: shallow gap {gap_star:.2e} near "
                    f"x = {x_star:.6f}; rescanning locally at step/50",
                    DegeneracyScanWarning,
                    stacklevel=2,
                )
                fine = np.linspace(lo, hi, 101)
                fg = np.array([pair_gap(x) for x in fine])
                for kk in np.flatnonzero((fg[1:-1] <= fg[:-2]) & (fg[1:-1] <= fg[2:])) + 1:
                    x2, gap2 = _refine_minimum(pair_gap, fine[kk - 1], fine[kk + 1])
                    if gap2 < DEGENERACY_GAP:
                        found.append((x2, gap2))

        # deduplicate refinements that converged to the same point
        found.sort()
        kept: list[tuple[float, float]] = []
        for x_star, gap_star in found:
            if kept and abs(x_star - kept[-1][0]) < 10 * REFINE_XTOL:
                continue
            kept.append((x_star, gap_star))
        if any(b - a < 2 * step for (a, _), (b, _) in zip(kept, kept[1:])):
            warnings.warn(
                f"pair {pair} on plane {plane}: degeneracies closer than twice the "
                f"scan step {step:.3e}; results near that spacing may be incomplete",
                DegeneracyScanWarning,
                stacklevel=2,
            )
        for x_star, gap_star in kept:
            records.append(
                IntersectionRecord(
                    plane=plane,
                    field_value=x_star,
                    surface_pair=(pair, pair + 1),
                    residual_gap=gap_star,
                )
            )

    records.sort(key=lambda r: (r.field_value, r.surface_pair))
    return records


def exchange_plane_thresholds(params: ModelParams, count: int | None = None) -> list[float]:
    """Closed-form field values where the flat lowest level meets the
    descending branch of the n-th exchange block on the ``Omega = 0`` plane.

    With the drive off, the block coupling ``(+, n-1)`` and ``(-, n)`` has a
    zero eigenvalue exactly at ``G^2 = delta (delta (n - 1) + delta_m)``.
    """
    if count is None:
        count = params.n_max
    out = []
    for n in range(1, count + 1):
        radicand = params.delta * (params.delta * (n - 1) + params.delta_m)
        if radicand > 0:
            out.append(float(np.sqrt(radicand)))
    return out


def maser_plane_thresholds(params: ModelParams, count: int | None = None) -> list[float]:
    """Closed-form field values where dressed pairs from blocks ``k`` apart
    become degenerate on the ``G = 0`` plane: ``Omega^2 = (k delta)^2 - delta_m^2``.
    """
    if count is None:
        count = params.n_max
    out = []
    for k in range(1, count + 1):
        radicand = (k * params.delta) ** 2 - params.delta_m**2
        if radicand > 0:
            out.append(float(np.sqrt(radicand)))
    return out


def predict_transfer(params: ModelParams, g_max: float, omega_max: float) -> int:
    """Crossing-count estimate of the final exchanged-photon number.

    Counts how many ``Omega = 0``-plane thresholds lie strictly below
    ``g_max``; a nonzero count additionally requires ``omega_max`` to clear
    the first ``G = 0``-plane threshold, otherwise the prediction is 0.  The
    descent crossings are assumed to be traversed diabatically, so this is a
    cheap screening heuristic; the propagator is the ground truth.
    """
    if g_max < 0 or omega_max < 0:
        raise ValidationError("peak amplitudes must be non-negative for prediction")
    g_thresholds = exchange_plane_thresholds(params, params.n_max + 1)
    for g_star in g_thresholds:
        if g_star > 0 and abs(g_max - g_star) / g_star < 0.05:
            warnings.warn(
                f"g_max = {g_max} is within 5% of the threshold {g_star:.6f}; "
                "the crossing-count prediction is unreliable there",
                NearThresholdWarning,
                stacklevel=2,
            )
            break
    crossed = sum(1 for g_star in g_thresholds if g_star < g_max)
    if crossed == 0:
        return 0
    omega_thresholds = maser_plane_thresholds(params, 1)
    if not omega_thresholds or omega_max <= omega_thresholds[0]:
        return 0
    return min(crossed, params.n_max)


@dataclass(frozen=True)
class FollowedSheet:
    """An adiabatic state tracked along a parametric path by eigenvector overlap."""

    values: np.ndarray
    vectors: np.ndarray
    sheet_indices: np.ndarray
    overlaps: np.ndarray


def follow_sheet(
    params: ModelParams,
    path: np.ndarray,
    start_sheet: int,
) -> FollowedSheet:
    """Track one adiabatic state along ``path`` (an array of ``(g, omega)``
    points) starting from the ``start_sheet``-th sorted sheet.

    Across each step the follower picks the eigenvector with the largest
    overlap against the previous one, so the state's identity is preserved
    through regions where the plain ascending sort would relabel it.
    """
    path = np.asarray(path, dtype=float)
    if path.ndim != 2 or path.shape[1] != 2:
        raise ValidationError(f"path must have shape (npoints, 2), got {path.shape}")
    if not 0 <= start_sheet < params.dim:
        raise ValidationError(f"start_sheet must be in [0, {params.dim}), got {start_sheet}")

    values = np.empty(len(path))
    indices = np.empty(len(path), dtype=int)
    overlaps = np.empty(len(path))
    vectors = np.empty((len(path), params.dim), dtype=complex)

    current = None
    for k, (g, w) in enumerate(path):
        lam, vec = eigen_decompose(build_effective_hamiltonian(params, g, w))
        if current is None:
            idx = start_sheet
            overlaps[k] = 1.0
        else:
            scores = np.abs(current.conj() @ vec)
            idx = int(np.argmax(scores))
            overlaps[k] = scores[idx]
        current = vec[:, idx]
        vectors[k] = current
        values[k] = lam[idx]
        indices[k] = idx
    return FollowedSheet(values=values, vectors=vectors, sheet_indices=indices, overlaps=overlaps)


def lowest_state_residual(params: ModelParams, g: float) -> float:
    """Residual of the uncoupled lowest state on the ``Omega = 0`` plane.

    With the drive off, the state ``(-, 0)`` is an exact zero-energy
    eigenvector for every cavity amplitude; this returns ``|H v|`` for it.
    """
    h = build_effective_hamiltonian(params, g, 0.0).entries
    v = np.zeros(params.dim)
    v[flat_index("-", 0)] = 1.0
    return float(np.linalg.norm(h @ v))
