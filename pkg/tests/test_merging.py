"""Boolean-lattice laws of merging and the two merged-parameter theorems."""

import math

import numpy as np
import pytest

from dotline.merging import (
    MergeWindow,
    merge_frames,
    merged_params_dynamic,
    merged_params_static,
)
from dotline.stimuli import DegradationParams, EdgeSpec, degrade_image, rasterize_edge


def random_frames(rng, n, shape=(40, 40), p=0.3):
    return [rng.random(shape) < p for _ in range(n)]


class TestMergeFrames:
    def test_identity(self):
        rng = np.random.default_rng(0)
        (f,) = random_frames(rng, 1)
        assert np.array_equal(merge_frames([f]), f)

    def test_absorbing_element(self):
        rng = np.random.default_rng(1)
        (f,) = random_frames(rng, 1)
        ones = np.ones_like(f)
        assert merge_frames([f, ones]).all()

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            merge_frames([])

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            merge_frames([np.zeros((3, 3), bool), np.zeros((4, 3), bool)])

    def test_lattice_laws(self):
        rng = np.random.default_rng(2)
        for _ in range(10):
            a, b, c = random_frames(rng, 3)
            # commutative, associative, idempotent
            assert np.array_equal(merge_frames([a, b]), merge_frames([b, a]))
            assert np.array_equal(
                merge_frames([merge_frames([a, b]), c]),
                merge_frames([a, merge_frames([b, c])]),
            )
            assert np.array_equal(merge_frames([a, a]), a)

    def test_merged_noise_density(self):
        # t iid noise frames at p_b = 0.005, t = 6: density ~ 0.0296
        rng = np.random.default_rng(3)
        shape = (300, 300)
        merged = merge_frames([rng.random(shape) < 0.005 for _ in range(6)])
        want = 1 - (1 - 0.005) ** 6
        sigma = math.sqrt(want * (1 - want) / merged.size)
        assert abs(merged.mean() - want) < 4 * sigma


class TestMergedParamsStatic:
    def test_identity_t1(self):
        p = DegradationParams(0.12, 0.34)
        assert merged_params_static(p, 1) == p

    def test_paper_worked_value(self):
        out = merged_params_static(DegradationParams(0.005, 0.1), 6)
        assert out.p_b == pytest.approx(1 - (1 - 0.005) ** 6, rel=1e-12)
        assert out.p_b == pytest.approx(0.0296, abs=2e-4)

    def test_formula_not_figure_rounding(self):
        # 1 - (1 - 0.365)^6 is ~0.9345, not 0.2; the theorem wins
        out = merged_params_static(DegradationParams(0.0, 0.365), 6)
        assert out.p_f == pytest.approx(0.9345, abs=1e-4)

    def test_invalid_t(self):
        with pytest.raises(ValueError):
            merged_params_static(DegradationParams(0.1, 0.1), 0)

    @pytest.mark.parametrize("seed", range(4))
    def test_monte_carlo_merge_oracle(self, seed):
        # merge t degradations of one static clean image; empirical
        # densities match the implied merged p_b and p1 within 4 sigma
        rng = np.random.default_rng(seed)
        p_b = float(rng.uniform(0.002, 0.05))
        p_f = float(rng.uniform(0.05, 0.4))
        t = int(rng.integers(2, 11))
        params = DegradationParams(p_b, p_f)
        spec = EdgeSpec((150.0, 150.0), float(rng.uniform(0, 2 * math.pi)), 200.0, 3.0)
        clean = rasterize_edge(spec, (300, 300))
        reps = 30
        fg_hits = bg_hits = 0
        fg_n = int(clean.sum()) * reps
        bg_n = int((~clean).sum()) * reps
        for _ in range(reps):
            merged = merge_frames(
                [degrade_image(clean, params, rng) for _ in range(t)]
            )
            fg_hits += int(merged[clean].sum())
            bg_hits += int(merged[~clean].sum())
        m = merged_params_static(params, t)
        p1m = m.p_b + m.p_f - m.p_b * m.p_f
        sig_fg = math.sqrt(p1m * (1 - p1m) / fg_n)
        sig_bg = math.sqrt(m.p_b * (1 - m.p_b) / bg_n)
        assert abs(fg_hits / fg_n - p1m) < 4 * sig_fg
        assert abs(bg_hits / bg_n - m.p_b) < 4 * sig_bg


class TestMergedParamsDynamic:
    def test_identity_t1(self):
        p = DegradationParams(0.12, 0.34)
        assert merged_params_dynamic(p, 1) == (p, 1)

    def test_foreground_parameter_constant(self):
        out, width = merged_params_dynamic(DegradationParams(0.005, 0.05), 8)
        assert out.p_f == 0.05
        assert width == 8

    def test_background_merges(self):
        out, width = merged_params_dynamic(DegradationParams(0.005, 0.1), 6)
        assert out.p_b == pytest.approx(1 - 0.995**6, rel=1e-12)
        assert width == 6

    @pytest.mark.parametrize("t", [2, 5, 8])
    def test_monte_carlo_vertical_edge(self, t):
        # a vertical unit edge moving 1 px/frame rightward: merged clean
        # support is a width-t column block and the merged marginals obey
        # (p_b^M, p_f^M = p_f)
        rng = np.random.default_rng(t)
        params = DegradationParams(0.01, 0.15)
        spec = EdgeSpec(
            (150.5, 150.0), math.pi / 2, 200.0, 1.0, velocity=1.0, direction_sign=1
        )
        canvas = (300, 300)
        frames_clean = [rasterize_edge(spec, canvas, j) for j in range(t)]
        clean_union = merge_frames(frames_clean)
        assert clean_union.sum() == 200 * t  # exact columns, no overlap
        reps = 30
        fg_hits = bg_hits = 0
        fg_n = int(clean_union.sum()) * reps
        bg_n = int((~clean_union).sum()) * reps
        for _ in range(reps):
            merged = merge_frames(
                [degrade_image(c, params, rng) for c in frames_clean]
            )
            fg_hits += int(merged[clean_union].sum())
            bg_hits += int(merged[~clean_union].sum())
        m, width = merged_params_dynamic(params, t)
        assert width == t
        p1m = m.p_b + m.p_f - m.p_b * m.p_f
        sig_fg = math.sqrt(p1m * (1 - p1m) / fg_n)
        sig_bg = math.sqrt(m.p_b * (1 - m.p_b) / bg_n)
        assert abs(fg_hits / fg_n - p1m) < 4 * sig_fg
        assert abs(bg_hits / bg_n - m.p_b) < 4 * sig_bg

    def test_oblique_motion_relaxed(self):
        # digitization overlap makes the law approximate off-axis; allow 6 sigma
        rng = np.random.default_rng(99)
        t = 6
        params = DegradationParams(0.01, 0.15)
        spec = EdgeSpec(
            (150.0, 150.0), 0.5, 200.0, 1.0, velocity=1.0, direction_sign=1
        )
        canvas = (300, 300)
        frames_clean = [rasterize_edge(spec, canvas, j) for j in range(t)]
        clean_union = merge_frames(frames_clean)
        reps = 30
        fg_hits = 0
        fg_n = int(clean_union.sum()) * reps
        for _ in range(reps):
            merged = merge_frames(
                [degrade_image(c, params, rng) for c in frames_clean]
            )
            fg_hits += int(merged[clean_union].sum())
        m, _ = merged_params_dynamic(params, t)
        p1m = m.p_b + m.p_f - m.p_b * m.p_f
        sig_fg = math.sqrt(p1m * (1 - p1m) / fg_n)
        assert abs(fg_hits / fg_n - p1m) < 6 * sig_fg


class TestMergeWindow:
    def test_validation(self):
        with pytest.raises(ValueError):
            MergeWindow(0)

    def test_alignments(self):
        assert MergeWindow(8, "past-only").start(10) == 3
        assert MergeWindow(8, "future-only").start(10) == 10
        assert MergeWindow(8, "centered").start(10) == 6
