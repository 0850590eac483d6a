"""Shared fixtures: the regenerated video bank and its detector curves."""

import numpy as np
import pytest

from dotline.detector import DetectorConfig, detect_in_video
from dotline.evaluation import TprCurve, build_tpr_curve
from dotline.stimuli import DegradationParams, VideoSpec, degrade_video, sample_pose

VIDEO_PF_GRID = tuple(round(0.015 + 0.005 * i, 4) for i in range(12))
VIDEOS_PER_CONFIG = 10  # desk-scale rerun of the 20-per-config set
VIDEO_PB = 0.005
PREFIX_FRAMES = 16  # first jump segment; detection only reads the first n_f


@pytest.fixture(scope="session")
def static_video_bank():
    """Edge + noise video prefixes mirroring the static-video dataset.

    Only the first jump segment (16 frames) is materialized: the
    whole-video decision reads the first n_f <= 16 frames, and the RNG
    stream of a truncated video is identical to the full one's prefix.
    """
    video = VideoSpec(fps=30.0, duration=PREFIX_FRAMES / 30.0, jump_period=16)
    canvas = (300, 300)
    stimuli = []  # (stimulus_id, frames, has_edge, p_f)
    index = 0
    for p_f in VIDEO_PF_GRID:
        params = DegradationParams(VIDEO_PB, p_f)
        for _ in range(VIDEOS_PER_CONFIG):
            rng = np.random.default_rng((20_000, index))
            pose = sample_pose(rng, canvas, 200.0)
            frames = degrade_video(pose, video, params, canvas, rng)
            stimuli.append((f"v{index:04d}", frames, True, p_f))
            index += 1
    noise = DegradationParams(VIDEO_PB, 0.0)
    for _ in range(len(VIDEO_PF_GRID) * VIDEOS_PER_CONFIG):
        rng = np.random.default_rng((20_000, index))
        frames = degrade_video(None, video, noise, canvas, rng)
        stimuli.append((f"v{index:04d}", frames, False, None))
        index += 1
    return stimuli


@pytest.fixture(scope="session")
def video_detector_curves(static_video_bank):
    """TPR curves of the w=8 detector for n_f in {1, 2, 4, 6, 8, 10}.

    One decision per video: the first n_f-frame merge, per the
    single-merge evaluation.
    """
    manifest = {sid: (has, p_f) for sid, _, has, p_f in static_video_bank}
    curves: dict[int, TprCurve] = {}
    for n_f in (1, 2, 4, 6, 8, 10):
        merged_pb = 1.0 - (1.0 - VIDEO_PB) ** n_f
        config = DetectorConfig(
            edge_length=200.0,
            widths=(8.0,),
            epsilon=1.0,
            n_f=n_f,
            oracle_p_b=merged_pb,
            seed=77,
        )
        outcomes = []
        for idx, (sid, frames, _, _) in enumerate(static_video_bank):
            rng = np.random.default_rng((30_000 + n_f, idx))
            dets = detect_in_video(frames, config, rng=rng, max_steps=1)
            outcomes.append((sid, dets[0].candidate is not None))
        curves[n_f] = build_tpr_curve(outcomes, manifest)
    return curves
