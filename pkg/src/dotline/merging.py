"""Temporal integration: boolean-union merging and the merged-parameter laws.

Merging ``t`` independent degradations of a static clean image is itself
a degradation of that image with parameters

    p_b^M = 1 - (1 - p_b)^t,    p_f^M = 1 - (1 - p_f)^t.

For a unit-width edge translating orthogonally at 1 pixel/frame, each
foreground pixel of the merged clean rectangle (width ``t``) is traversed
in exactly one frame, so

    p_b^M = 1 - (1 - p_b)^t,    p_f^M = p_f,

exact for axis-aligned motion; oblique motion deviates slightly through
digitization overlap.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Literal, Sequence

import numpy as np

from .stimuli import DegradationParams


@dataclass(frozen=True)
class MergeWindow:
    """Sliding-window layout for temporal integration."""

    n_f: int
    alignment: Literal["past-only", "centered", "future-only"] = "centered"

    def __post_init__(self):
        if self.n_f < 1:
            raise ValueError("n_f must be >= 1")

    def start(self, t: int) -> int:
        """First frame index of the window evaluated at time step ``t``."""
        if self.alignment == "past-only":
            return t - self.n_f + 1
        if self.alignment == "future-only":
            return t
        return t - self.n_f // 2


def merge_frames(frames: Sequence[np.ndarray] | Iterable[np.ndarray]) -> np.ndarray:
    """Pixelwise OR of a nonempty sequence of equal-size boolean frames."""
    it = iter(frames)
    try:
        first = next(it)
    except StopIteration:
        raise ValueError("merge_frames requires at least one frame") from None
    out = np.asarray(first, dtype=bool).copy()
    for frame in it:
        frame = np.asarray(frame, dtype=bool)
        if frame.shape != out.shape:
            raise ValueError(f"frame shape {frame.shape} != {out.shape}")
        out |= frame
    return out


def merged_params_static(params: DegradationParams, t: int) -> DegradationParams:
    """Degradation parameters of a ``t``-frame merge of a static scene."""
    if t < 1:
        raise ValueError("t must be >= 1")
    return DegradationParams(
        1.0 - (1.0 - params.p_b) ** t,
        1.0 - (1.0 - params.p_f) ** t,
    )


def merged_params_dynamic(
    params: DegradationParams, t: int
) -> tuple[DegradationParams, int]:
    """Merged parameters and clean width for a unit-speed moving edge.

    Assumes width-1 edge, 1 pixel/frame orthogonal translation; the
    merged clean foreground is a rectangle of width ``t``.
    """
    if t < 1:
        raise ValueError("t must be >= 1")
    merged = DegradationParams(1.0 - (1.0 - params.p_b) ** t, params.p_f)
    return merged, t
