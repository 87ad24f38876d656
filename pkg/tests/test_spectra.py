"""Eigen-decomposition, surface grids, degeneracy location, and the predictor."""

import math
import warnings

import numpy as np
import pytest

from fockgen import (
    HermitianOperator,
    ModelParams,
    NearThresholdWarning,
    ValidationError,
    build_effective_hamiltonian,
    eigen_decompose,
    exchange_plane_thresholds,
    follow_sheet,
    locate_intersections,
    maser_plane_thresholds,
    predict_transfer,
    surface_grid,
)
from fockgen.spectra import lowest_state_residual


def brute_force_thresholds(params, plane, field_max, samples=30000):
    """Independent oracle: dense scan of the smallest adjacent gap; every local
    minimum below 1e-3 marks a crossing to within one sample step."""
    xs = np.linspace(field_max / samples, field_max, samples)
    gaps = np.empty(samples)
    for i, x in enumerate(xs):
        if plane == "omega=0":
            h = build_effective_hamiltonian(params, x, 0.0).entries
        else:
            h = build_effective_hamiltonian(params, 0.0, x).entries
        gaps[i] = np.diff(np.linalg.eigvalsh(h)).min()
    hits = [
        xs[i]
        for i in range(1, samples - 1)
        if gaps[i] <= gaps[i - 1] and gaps[i] <= gaps[i + 1] and gaps[i] < 1e-3
    ]
    return hits


class TestEigenDecompose:
    def test_zero_field_spectrum(self):
        p = ModelParams(delta=1.0, delta_m=0.5, n_max=1)
        values, _ = eigen_decompose(build_effective_hamiltonian(p, 0.0, 0.0))
        assert np.allclose(values, [0.0, 0.5, 1.0, 1.5], atol=1e-13)

    def test_two_level_drive_block(self):
        h = HermitianOperator.from_array([[0.5, 0.25], [0.25, 0.0]])
        values, _ = eigen_decompose(h)
        s = math.sqrt(0.5**2 + 0.5**2)
        assert values == pytest.approx([0.25 - s / 2, 0.25 + s / 2], abs=1e-12)
        assert values[0] == pytest.approx(0.25 - 0.35355, abs=1e-5)
        assert values[1] == pytest.approx(0.25 + 0.35355, abs=1e-5)

    def test_scaled_identity(self):
        values, vectors = eigen_decompose(3.7 * np.eye(5))
        assert np.allclose(values, 3.7, atol=0)
        assert np.allclose(vectors.conj().T @ vectors, np.eye(5), atol=1e-12)

    def test_residual_and_orthonormality(self):
        p = ModelParams(delta=1.0, delta_m=0.5, n_max=5)
        h = build_effective_hamiltonian(p, 0.8, 1.3)
        values, vectors = eigen_decompose(h)
        assert np.all(np.diff(values) >= 0)
        assert np.abs(vectors.conj().T @ vectors - np.eye(p.dim)).max() < 1e-10
        residual = np.abs(h.entries @ vectors - vectors * values).max()
        assert residual < 1e-10 * np.linalg.norm(h.entries)

    def test_non_hermitian_rejected(self):
        with pytest.raises(ValidationError):
            eigen_decompose(np.array([[0.0, 1.0], [0.0, 0.0]]))


class TestSurfaceGrid:
    def setup_method(self):
        self.params = ModelParams(delta=1.0, delta_m=0.5, n_max=4)

    def test_zero_field_corner(self):
        grid = surface_grid(self.params, (0.0, 1.0), (0.0, 1.0), 3)
        expected = sorted(
            [n + 0.0 for n in range(5)] + [n + 0.5 for n in range(5)]
        )
        assert np.allclose(grid.sheets[0, 0], expected, atol=1e-12)

    def test_drive_only_block_values_appear(self):
        grid = surface_grid(self.params, (0.0, 1.0), (0.0, 0.5), (3, 2))
        sheets = grid.sheets[0, 1]  # G=0, Omega=0.5
        for target in (0.60355, -0.10355):
            assert np.abs(sheets - target).min() < 1e-5

    def test_exchange_only_block_values_appear(self):
        grid = surface_grid(self.params, (0.0, 0.5), (0.0, 1.0), (2, 3))
        sheets = grid.sheets[1, 0]  # G=0.5, Omega=0
        for target in (0.75 + 0.559017, 0.75 - 0.559017):
            assert np.abs(sheets - target).min() < 1e-6

    def test_sheets_sorted_and_continuous(self):
        grid = surface_grid(self.params, (0.0, 2.0), (0.0, 2.0), 41)
        assert np.all(np.diff(grid.sheets, axis=2) >= -1e-14)
        step = grid.g_axis[1] - grid.g_axis[0]
        jumps = np.abs(np.diff(grid.sheets, axis=0)).max()
        assert jumps < 10 * step  # sorted sheets move O(step) between nodes

    def test_display_offset_adds_g_everywhere(self):
        raw = surface_grid(self.params, (0.0, 2.0), (0.0, 1.0), 5)
        shifted = surface_grid(self.params, (0.0, 2.0), (0.0, 1.0), 5, display_offset=True)
        assert shifted.display_offset_applied
        assert np.allclose(shifted.sheets, raw.sheets + raw.g_axis[:, None, None], atol=0)

    def test_degenerate_range_rejected(self):
        with pytest.raises(ValidationError):
            surface_grid(self.params, (1.0, 1.0), (0.0, 1.0), 5)
        with pytest.raises(ValidationError):
            surface_grid(self.params, (0.0, 1.0), (0.0, 1.0), 1)


class TestLocateIntersections:
    @pytest.mark.parametrize("delta_m", [0.3, 0.5, 0.8])
    def test_exchange_plane_closed_forms(self, delta_m):
        params = ModelParams(delta=1.0, delta_m=delta_m, n_max=6)
        records = locate_intersections(params, "omega=0", 2.0)
        located = [r.field_value for r in records]
        for g_star in exchange_plane_thresholds(params, 3):
            assert min(abs(x - g_star) for x in located) < 1e-8

    @pytest.mark.parametrize("delta_m", [0.3, 0.5, 0.8])
    def test_maser_plane_closed_forms(self, delta_m):
        params = ModelParams(delta=1.0, delta_m=delta_m, n_max=6)
        records = locate_intersections(params, "g=0", 3.2)
        located = [r.field_value for r in records]
        for w_star in maser_plane_thresholds(params, 3):
            assert min(abs(x - w_star) for x in located) < 1e-8

    def test_exchange_plane_spacing_decreases(self):
        params = ModelParams(delta=1.0, delta_m=0.5, n_max=6)
        stars = exchange_plane_thresholds(params, 5)
        spacing = np.diff(stars)
        assert np.all(np.diff(spacing) < 0)

    def test_first_and_second_sheets_never_touch_on_drive_plane(self):
        params = ModelParams(delta=1.0, delta_m=0.5, n_max=6)
        records = locate_intersections(params, "g=0", 3.2)
        assert all(r.surface_pair != (0, 1) for r in records)

    def test_flat_level_crossings_have_the_expected_sheet_pairs(self):
        # the n-th exchange threshold is a crossing of sorted sheets (n-1, n)
        params = ModelParams(delta=1.0, delta_m=0.5, n_max=6)
        records = locate_intersections(params, "omega=0", 2.0)
        for n, g_star in enumerate(exchange_plane_thresholds(params, 3), start=1):
            match = [r for r in records if abs(r.field_value - g_star) < 1e-8]
            assert (n - 1, n) in [r.surface_pair for r in match]

    def test_brute_force_scan_agrees(self):
        params = ModelParams(delta=1.0, delta_m=0.5, n_max=3)
        oracle = brute_force_thresholds(params, "omega=0", 1.5)
        records = locate_intersections(params, "omega=0", 1.5)
        for x in oracle:
            assert min(abs(r.field_value - x) for r in records) < 1e-3

    def test_all_records_are_tight_degeneracies(self):
        params = ModelParams(delta=1.0, delta_m=0.5, n_max=6)
        for plane, cap in (("omega=0", 2.0), ("g=0", 3.2)):
            for r in locate_intersections(params, plane, cap):
                assert r.residual_gap < 1e-8
                assert 0 < r.field_value <= cap

    def test_invalid_inputs_rejected(self):
        params = ModelParams(delta=1.0, delta_m=0.5, n_max=3)
        with pytest.raises(ValidationError):
            locate_intersections(params, "omega=0", 0.0)
        with pytest.raises(ValidationError):
            locate_intersections(params, "diagonal", 1.0)


class TestExactLowestState:
    @pytest.mark.parametrize("g", [0.0, 0.3, 0.70710678, 1.9])
    def test_uncoupled_lowest_state_stays_exact(self, g):
        params = ModelParams(delta=1.0, delta_m=0.5, n_max=6)
        assert lowest_state_residual(params, g) < 1e-12


class TestPredictTransfer:
    def setup_method(self):
        self.params = ModelParams(delta=1.0, delta_m=0.5, n_max=7)

    def test_one_threshold_crossed(self):
        assert predict_transfer(self.params, 0.9, 1.5) == 1

    def test_below_first_threshold(self):
        assert predict_transfer(self.params, 0.5, 2.0) == 0

    def test_two_thresholds_crossed(self):
        assert predict_transfer(self.params, 1.5, 2.2) == 2

    def test_drive_below_first_descent_threshold_blocks_transfer(self):
        assert predict_transfer(self.params, 0.9, 0.5) == 0

    def test_near_threshold_warning(self):
        g_star = exchange_plane_thresholds(self.params, 1)[0]
        with pytest.warns(NearThresholdWarning):
            predict_transfer(self.params, 1.01 * g_star, 1.5)

    def test_no_warning_away_from_thresholds(self):
        with warnings.catch_warnings():
            warnings.simplefilter("error", NearThresholdWarning)
            predict_transfer(self.params, 0.9, 1.5)

    def test_negative_amplitudes_rejected(self):
        with pytest.raises(ValidationError):
            predict_transfer(self.params, -0.1, 1.0)


class TestFollowSheet:
    def test_overlap_stays_high_away_from_degeneracies(self):
        params = ModelParams(delta=1.0, delta_m=0.5, n_max=5)
        # an arc from drive-dominated to exchange-dominated coupling that
        # keeps a healthy gap to the nearest degeneracy
        theta = np.linspace(0.1, np.pi / 2 - 0.1, 80)
        path = np.column_stack([0.45 * np.sin(theta), 1.4 * np.cos(theta)])
        followed = follow_sheet(params, path, start_sheet=2)
        assert followed.overlaps.min() > 0.99

    def test_identity_follows_relabeling_through_a_crossing(self):
        params = ModelParams(delta=1.0, delta_m=0.5, n_max=5)
        g_star = exchange_plane_thresholds(params, 1)[0]
        path = np.column_stack([np.linspace(0.2, 1.1, 121), np.zeros(121)])
        followed = follow_sheet(params, path, start_sheet=0)
        # the tracked state starts as sorted sheet 0 and emerges as sheet 1
        assert followed.sheet_indices[0] == 0
        assert followed.sheet_indices[-1] == 1
        assert followed.overlaps.min() > 0.99
        crossing = path[np.argmax(followed.sheet_indices > 0), 0]
        assert abs(crossing - g_star) < 0.02
