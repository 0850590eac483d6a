"""Rasterization geometry and degradation statistics."""

import math

import numpy as np
import pytest

from dotline.stimuli import (
    DegradationParams,
    EdgeSpec,
    GeometryError,
    VideoSpec,
    degrade_image,
    degrade_video,
    foreground_density,
    rasterize_edge,
    sample_pose,
)


def brute_force_raster(spec: EdgeSpec, canvas, frame_index=0):
    """Per-pixel distance check, deliberately naive."""
    w_img, h_img = canvas
    mid = spec.midpoint_at(frame_index)
    ux, uy = math.cos(spec.angle), math.sin(spec.angle)
    out = np.zeros((h_img, w_img), dtype=bool)
    for r in range(h_img):
        for c in range(w_img):
            dx = c + 0.5 - mid[0]
            dy = r + 0.5 - mid[1]
            along = dx * ux + dy * uy
            across = -dx * uy + dy * ux
            out[r, c] = (
                abs(along) <= spec.length / 2 and abs(across) <= spec.width / 2
            )
    return out


class TestRasterize:
    def test_zero_length_rejected(self):
        with pytest.raises(GeometryError):
            EdgeSpec((50.0, 50.0), 0.0, 0.0)

    def test_out_of_bounds_rejected(self):
        spec = EdgeSpec((10.0, 50.0), 0.0, 100.0)
        with pytest.raises(GeometryError):
            rasterize_edge(spec, (100, 100))

    def test_horizontal_unit_edge(self):
        # length 10 centered at x=50: pixel centers 45.5..54.5 -> cols 45..54
        spec = EdgeSpec((50.0, 20.5), 0.0, 10.0, 1.0)
        img = rasterize_edge(spec, (100, 40))
        rows, cols = np.nonzero(img)
        assert len(rows) == 10
        assert set(rows) == {20}
        assert sorted(cols) == list(range(45, 55))

    def test_diagonal_edge_against_brute_force(self):
        # exactly 45 deg is a digitization resonance: the unit-width band
        # catches only the main diagonal, 200/sqrt(2) ~ 142 pixels
        spec = EdgeSpec((150.0, 150.0), math.pi / 4, 200.0, 1.0)
        img = rasterize_edge(spec, (300, 300))
        assert np.array_equal(img, brute_force_raster(spec, (300, 300)))
        assert img.sum() == 142

    def test_generic_angle_count_near_band_area(self):
        # off resonance the count tracks the band area L*w = 200
        spec = EdgeSpec((150.0, 150.0), 0.7, 200.0, 1.0)
        img = rasterize_edge(spec, (300, 300))
        assert np.array_equal(img, brute_force_raster(spec, (300, 300)))
        assert 180 <= img.sum() <= 220

    @pytest.mark.parametrize("seed", range(6))
    def test_random_poses_match_brute_force(self, seed):
        rng = np.random.default_rng(seed)
        spec = sample_pose(rng, (120, 120), 60.0, width=float(rng.integers(1, 5)))
        img = rasterize_edge(spec, (120, 120))
        assert np.array_equal(img, brute_force_raster(spec, (120, 120)))

    def test_displaced_frame(self):
        spec = EdgeSpec((60.0, 60.5), 0.0, 40.0, 1.0, velocity=1.0, direction_sign=1)
        img0 = rasterize_edge(spec, (120, 120), 0)
        img3 = rasterize_edge(spec, (120, 120), 3)
        # horizontal edge moving orthogonally: rows shift by 3
        assert np.array_equal(np.roll(img0, 3, axis=0), img3)


class TestForegroundDensity:
    def test_identities(self):
        assert foreground_density(DegradationParams(0.0, 0.3)) == 0.3
        assert foreground_density(DegradationParams(0.3, 0.0)) == 0.3

    def test_worked_value(self):
        assert foreground_density(DegradationParams(0.005, 0.2)) == pytest.approx(
            0.204, abs=1e-12
        )

    def test_range(self):
        p = DegradationParams(0.4, 0.7)
        val = foreground_density(p)
        assert max(p.p_b, p.p_f) <= val <= 1.0

    def test_invalid(self):
        with pytest.raises(ValueError):
            DegradationParams(-0.1, 0.5)
        with pytest.raises(ValueError):
            DegradationParams(0.1, 1.5)


class TestDegradeImage:
    def test_zero_params_all_black(self):
        clean = np.ones((20, 20), dtype=bool)
        out = degrade_image(clean, DegradationParams(0.0, 0.0), np.random.default_rng(0))
        assert not out.any()

    def test_certain_background_all_white(self):
        clean = np.zeros((20, 20), dtype=bool)
        out = degrade_image(clean, DegradationParams(1.0, 0.3), np.random.default_rng(0))
        assert out.all()

    def test_foreground_marginal_monte_carlo(self):
        # all-foreground 100x100: density within 4 sigma of p1 = 0.204
        clean = np.ones((100, 100), dtype=bool)
        rng = np.random.default_rng(42)
        out = degrade_image(clean, DegradationParams(0.005, 0.2), rng)
        p1 = 0.204
        sigma = math.sqrt(p1 * (1 - p1) / 10000)
        assert abs(out.mean() - p1) < 4 * sigma

    def test_background_marginal_monte_carlo(self):
        # >= 1e5 background pixels within 4 sigma of p_b
        clean = np.zeros((400, 300), dtype=bool)
        rng = np.random.default_rng(43)
        out = degrade_image(clean, DegradationParams(0.03, 0.9), rng)
        sigma = math.sqrt(0.03 * 0.97 / clean.size)
        assert abs(out.mean() - 0.03) < 4 * sigma

    def test_preserves_shape_and_dtype(self):
        clean = np.zeros((7, 13), dtype=bool)
        out = degrade_image(clean, DegradationParams(0.5, 0.5), np.random.default_rng(1))
        assert out.shape == (7, 13)
        assert out.dtype == bool


class TestDegradeVideo:
    def test_noise_spec_none_zero_pb(self):
        video = VideoSpec(fps=3, duration=1.0, jump_period=2)
        frames = degrade_video(
            None, video, DegradationParams(0.0, 0.0), (30, 30), np.random.default_rng(0)
        )
        assert len(frames) == 3
        assert not any(f.any() for f in frames)

    def test_deterministic_foreground(self):
        spec = EdgeSpec((50.0, 50.0), 0.3, 40.0)
        video = VideoSpec(fps=5, duration=1.0, jump_period=100)
        frames = degrade_video(
            spec, video, DegradationParams(0.0, 1.0), (100, 100), np.random.default_rng(0)
        )
        clean = rasterize_edge(spec, (100, 100))
        for f in frames:
            assert np.array_equal(f, clean)

    def test_jump_count(self):
        # 10 s at 30 fps -> 300 frames, ceil(300/16) = 19 pose segments
        spec = EdgeSpec((150.0, 150.0), 1.0, 200.0)
        video = VideoSpec(fps=30, duration=10.0, jump_period=16)
        rng = np.random.default_rng(5)
        frames = degrade_video(spec, video, DegradationParams(0.0, 1.0), (300, 300), rng)
        assert len(frames) == 300
        distinct = 1
        for a, b in zip(frames[:-1], frames[1:]):
            if not np.array_equal(a, b):
                distinct += 1
        assert distinct == math.ceil(300 / 16)

    def test_video_spec_validation(self):
        with pytest.raises(ValueError):
            VideoSpec(fps=30, duration=0.0)
        with pytest.raises(ValueError):
            VideoSpec(jump_period=0)


class TestDeterminism:
    def test_same_seed_same_frames(self):
        spec = EdgeSpec((150.0, 150.0), 0.4, 200.0, velocity=1.0)
        video = VideoSpec(fps=10, duration=2.0, jump_period=4)
        params = DegradationParams(0.01, 0.1)
        a = degrade_video(spec, video, params, (300, 300), np.random.default_rng(11))
        b = degrade_video(spec, video, params, (300, 300), np.random.default_rng(11))
        assert all(np.array_equal(x, y) for x, y in zip(a, b))
