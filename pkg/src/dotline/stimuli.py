"""Clean edge rasterization and the two-density Bernoulli degradation.

Images are boolean numpy arrays of shape ``(height, width)``; pixel
``(row, col)`` has its center at continuous coordinates
``(x, y) = (col + 0.5, row + 0.5)``, so an image of width W covers the
continuous domain ``[0, W] x [0, H]``.

Degradation draws an iid Bernoulli(p_b) field over the whole frame, an
independent Bernoulli(p_f) field restricted to the clean foreground, and
ORs the two.  A foreground pixel is therefore white with probability
``p1 = p_b + p_f - p_b * p_f``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class GeometryError(ValueError):
    """Raised when a requested segment pose does not fit the canvas."""


@dataclass(frozen=True)
class DegradationParams:
    """Background and extra-foreground appearance probabilities."""

    p_b: float
    p_f: float

    def __post_init__(self):
        if not 0.0 <= self.p_b <= 1.0:
            raise ValueError(f"p_b={self.p_b} outside [0, 1]")
        if not 0.0 <= self.p_f <= 1.0:
            raise ValueError(f"p_f={self.p_f} outside [0, 1]")


def foreground_density(params: DegradationParams) -> float:
    """On-foreground marginal ``p1 = p_b + p_f - p_b * p_f``."""
    return params.p_b + params.p_f - params.p_b * params.p_f


@dataclass(frozen=True)
class EdgeSpec:
    """A thick straight segment, optionally translating between frames.

    ``midpoint`` is in continuous image coordinates, ``angle`` in radians
    (direction of the segment axis), ``velocity`` in pixels/frame
    orthogonal to the axis.  Paper-faithful datasets use velocity 0
    (static) or 1 (dynamic).
    """

    midpoint: tuple[float, float]
    angle: float
    length: float
    width: float = 1.0
    velocity: float = 0.0
    direction_sign: int = 1

    def __post_init__(self):
        if self.length <= 0:
            raise GeometryError(f"length={self.length} must be > 0")
        if self.width <= 0:
            raise GeometryError(f"width={self.width} must be > 0")
        if self.direction_sign not in (-1, 1):
            raise ValueError("direction_sign must be +1 or -1")

    def midpoint_at(self, frame_index: int) -> tuple[float, float]:
        """Midpoint displaced by ``frame_index`` frames of orthogonal motion."""
        off = frame_index * self.velocity * self.direction_sign
        nx, ny = -math.sin(self.angle), math.cos(self.angle)
        return (self.midpoint[0] + off * nx, self.midpoint[1] + off * ny)


def _axes(angle: float) -> tuple[np.ndarray, np.ndarray]:
    u = np.array([math.cos(angle), math.sin(angle)])
    n = np.array([-math.sin(angle), math.cos(angle)])
    return u, n


def _check_inside(mid, angle, length, width, canvas) -> None:
    w_img, h_img = canvas
    u, n = _axes(angle)
    half = 0.5 * length * np.abs(u) + 0.5 * width * np.abs(n)
    lo = np.asarray(mid) - half
    hi = np.asarray(mid) + half
    if lo[0] < 0 or lo[1] < 0 or hi[0] > w_img or hi[1] > h_img:
        raise GeometryError(
            f"segment (mid={tuple(mid)}, angle={angle:.4f}, L={length}, w={width}) "
            f"exits the {w_img}x{h_img} canvas"
        )


def rasterize_edge(
    spec: EdgeSpec, canvas: tuple[int, int], frame_index: int = 0
) -> np.ndarray:
    """Rasterize the segment at its pose for ``frame_index``.

    A pixel is foreground iff its center lies within ``width/2`` of the
    segment axis and within ``length/2`` of the midpoint along the axis
    (both bounds inclusive).

    Parameters
    ----------
    spec : EdgeSpec
    canvas : (width, height) in pixels
    frame_index : int
        Frames of orthogonal displacement applied before rasterizing.

    Returns
    -------
    np.ndarray of bool, shape (height, width)
    """
    w_img, h_img = canvas
    mid = spec.midpoint_at(frame_index)
    _check_inside(mid, spec.angle, spec.length, spec.width, canvas)
    u, n = _axes(spec.angle)
    xs = np.arange(w_img) + 0.5 - mid[0]
    ys = np.arange(h_img) + 0.5 - mid[1]
    gx, gy = np.meshgrid(xs, ys)
    along = gx * u[0] + gy * u[1]
    across = gx * n[0] + gy * n[1]
    return (np.abs(along) <= spec.length / 2.0) & (np.abs(across) <= spec.width / 2.0)


def degrade_image(
    clean: np.ndarray, params: DegradationParams, rng: np.random.Generator
) -> np.ndarray:
    """Apply the two-field Bernoulli degradation to one clean frame.

    The background field is drawn first over the full frame, then the
    foreground field over the clean support, regardless of parameter
    values, so the RNG stream layout is independent of (p_b, p_f).
    """
    clean = np.asarray(clean, dtype=bool)
    background = rng.random(clean.shape) < params.p_b
    foreground = (rng.random(clean.shape) < params.p_f) & clean
    return background | foreground


@dataclass(frozen=True)
class VideoSpec:
    """Timing and jump layout for a stimulus video."""

    fps: float = 30.0
    duration: float = 10.0
    jump_period: int = 16
    seed: int = 0

    def __post_init__(self):
        if self.frame_count < 1:
            raise ValueError("frame count must be >= 1")
        if self.jump_period < 1:
            raise ValueError("jump_period must be >= 1")

    @property
    def frame_count(self) -> int:
        return round(self.fps * self.duration)


# Pose midpoints are drawn from the central [100, 200]^2 region of a
# 300x300 canvas; other canvas sizes scale the region to the central third.
def _midpoint_region(canvas: tuple[int, int]) -> tuple[float, float, float, float]:
    w_img, h_img = canvas
    return (w_img / 3.0, 2.0 * w_img / 3.0, h_img / 3.0, 2.0 * h_img / 3.0)


def sample_pose(
    rng: np.random.Generator,
    canvas: tuple[int, int],
    length: float,
    width: float = 1.0,
    velocity: float = 0.0,
    sample_direction: bool = False,
) -> EdgeSpec:
    """Draw a uniformly random pose: midpoint in the central region, angle
    uniform in [0, 2pi), optionally a random translation direction."""
    x0, x1, y0, y1 = _midpoint_region(canvas)
    mid = (rng.uniform(x0, x1), rng.uniform(y0, y1))
    angle = rng.uniform(0.0, 2.0 * math.pi)
    sign = 1
    if sample_direction:
        sign = 1 if rng.random() < 0.5 else -1
    return EdgeSpec(mid, angle, length, width, velocity, sign)


def degrade_video(
    spec: EdgeSpec | None,
    video: VideoSpec,
    params: DegradationParams,
    canvas: tuple[int, int],
    rng: np.random.Generator,
) -> list[np.ndarray]:
    """Generate the degraded frames of one stimulus video.

    Every ``jump_period`` frames the pose is resampled: midpoint and angle
    always, and additionally the translation direction when the edge is
    dynamic (``velocity != 0``).  Frames are degraded independently.
    ``spec = None`` yields pure-noise frames (background field only).

    The initial pose is ``spec`` itself; resampled poses keep its length,
    width and velocity.
    """
    n_frames = video.frame_count
    frames: list[np.ndarray] = []
    pose = spec
    w_img, h_img = canvas
    for t in range(n_frames):
        if spec is not None and t % video.jump_period == 0 and t > 0:
            pose = sample_pose(
                rng,
                canvas,
                spec.length,
                spec.width,
                spec.velocity,
                sample_direction=spec.velocity != 0,
            )
        if pose is None:
            clean = np.zeros((h_img, w_img), dtype=bool)
        else:
            clean = rasterize_edge(pose, canvas, t % video.jump_period)
        frames.append(degrade_image(clean, params, rng))
    return frames
