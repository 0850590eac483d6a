"""A contrario straight-line detection on merged random-dot frames.

The candidate space is sparse: every unordered pair of white pixels at
distance <= L_e supports a family of oriented rectangles of length L_e
(one per width, slid along the pair's axis in 1-pixel steps between the
two extreme positions that still cover both supports).  A candidate is
epsilon-meaningful when

    NFA = N_T * P(Bin(n_w - 2, p_b) >= k) <= epsilon

with N_T = N_w * M(M-1)/2 from the observed white count M, k the white
count inside the rectangle excluding the two supports, and
n_w = round(L_e * w) the nominal rectangle pixel count.  Only the single
best meaningful candidate is returned.

Count semantics: a pixel center at axis coordinates (u, v) relative to
the rectangle center belongs to the rectangle iff

    -L/2 <= u < L/2   and   -w/2 <= v < w/2

(half-open on the leading edges so adjacent slides never share a
boundary pixel).  Out-of-image area contributes nothing; the observed k
is clamped to n_w - 2.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .binom import log_binomial_tail_table, n_tests
from .merging import merge_frames


@dataclass(frozen=True)
class DetectorConfig:
    """Inputs of the detection algorithm."""

    edge_length: float
    widths: tuple[float, ...] = (8.0,)
    epsilon: float = 1.0
    n_f: int = 1
    ransac_iterations: int | None = 2000  # None = enumerate all valid pairs
    oracle_p_b: float = 0.005
    seed: int = 0

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be > 0")
        if not self.widths:
            raise ValueError("widths must be nonempty")
        if any(w < 1 for w in self.widths):
            raise ValueError("every width must be >= 1")
        if self.edge_length < 2:
            raise ValueError("edge_length must be >= 2")
        object.__setattr__(self, "widths", tuple(float(w) for w in self.widths))


@dataclass(frozen=True)
class Rect:
    """Oriented rectangle: center, axis angle, length along the axis, width."""

    center: tuple[float, float]
    angle: float
    length: float
    width: float

    def endpoints(self) -> tuple[tuple[float, float], tuple[float, float]]:
        ux, uy = math.cos(self.angle), math.sin(self.angle)
        cx, cy = self.center
        h = self.length / 2.0
        return (cx - h * ux, cy - h * uy), (cx + h * ux, cy + h * uy)


@dataclass(frozen=True)
class Candidate:
    """A scored rectangle hypothesis supported by two white pixels."""

    support: tuple[tuple[int, int], tuple[int, int]]  # (x, y) pixel indices
    rect: Rect
    k: int
    n: int
    log10_nfa: float

    @property
    def nfa(self) -> float:
        return 10.0**self.log10_nfa if np.isfinite(self.log10_nfa) else 0.0


@dataclass(frozen=True)
class Detection:
    """Single-output decision for one merged frame."""

    candidate: Candidate | None
    n_tests: float
    time_index: int = 0
    m_white: int = 0
    n_meaningful: int = 0  # (pair, width) minima that passed epsilon


def count_in_rect(
    image: np.ndarray,
    rect: Rect,
    exclude: Sequence[tuple[int, int]] = (),
) -> int:
    """White pixels whose centers fall in ``rect``, excluding supports.

    ``exclude`` holds (x, y) pixel indices.  The rectangle may exit the
    image; the outside area contributes nothing.
    """
    image = np.asarray(image, dtype=bool)
    rows, cols = np.nonzero(image)
    xs = cols + 0.5 - rect.center[0]
    ys = rows + 0.5 - rect.center[1]
    ux, uy = math.cos(rect.angle), math.sin(rect.angle)
    u = xs * ux + ys * uy
    v = -xs * uy + ys * ux
    inside = (
        (u >= -rect.length / 2.0)
        & (u < rect.length / 2.0)
        & (v >= -rect.width / 2.0)
        & (v < rect.width / 2.0)
    )
    count = int(inside.sum())
    for ex, ey in exclude:
        if not image[ey, ex]:
            continue
        x = ex + 0.5 - rect.center[0]
        y = ey + 0.5 - rect.center[1]
        uu = x * ux + y * uy
        vv = -x * uy + y * ux
        if (
            -rect.length / 2.0 <= uu < rect.length / 2.0
            and -rect.width / 2.0 <= vv < rect.width / 2.0
        ):
            count -= 1
    return count


def slide_offsets(d: float, length: float) -> np.ndarray:
    """Rectangle-center offsets along the pair axis (origin at support 1).

    Offsets run in 1-pixel steps from ``d - L/2`` (second support at the
    leading end) to ``L/2`` (first support at the trailing end), both
    extremes included.
    """
    lo = d - length / 2.0
    hi = length / 2.0
    steps = int(math.floor(hi - lo))
    offs = lo + np.arange(steps + 1, dtype=float)
    if offs[-1] < hi:
        offs = np.append(offs, hi)
    return offs


def _candidate_sort_key(c: Candidate):
    # Deterministic preference order among epsilon-meaningful candidates:
    # smallest NFA, then smallest k, then support coordinates, then width,
    # then center position along the axis.
    return (c.log10_nfa, c.k, c.support, c.rect.width, c.rect.center)


def _iter_all_pairs(coords: np.ndarray, max_dist: float) -> Iterator[tuple[int, int]]:
    m = len(coords)
    for i in range(m - 1):
        d = np.hypot(coords[i + 1 :, 0] - coords[i, 0], coords[i + 1 :, 1] - coords[i, 1])
        for j in np.nonzero(d <= max_dist)[0]:
            yield i, int(i + 1 + j)


def _sample_pairs(
    coords: np.ndarray,
    max_dist: float,
    n_iter: int,
    rng: np.random.Generator,
    max_attempts_factor: int = 200,
) -> Iterator[tuple[int, int]]:
    # Uniform over unordered white pairs at distance <= L_e via rejection.
    m = len(coords)
    attempts_left = max_attempts_factor * n_iter
    produced = 0
    while produced < n_iter and attempts_left > 0:
        i, j = rng.integers(0, m, size=2)
        attempts_left -= 1
        if i == j:
            continue
        dx = coords[i, 0] - coords[j, 0]
        dy = coords[i, 1] - coords[j, 1]
        if dx * dx + dy * dy > max_dist * max_dist:
            continue
        produced += 1
        yield (int(i), int(j)) if i < j else (int(j), int(i))


def detect_in_merged(
    image: np.ndarray,
    config: DetectorConfig,
    rng: np.random.Generator | None = None,
    time_index: int = 0,
) -> Detection:
    """Run the sparse a contrario line search on one merged frame.

    Returns the minimum-NFA candidate among all sampled (pair, width)
    minima that pass ``epsilon``, or no candidate.  Images with fewer
    than two white pixels return no candidate.
    """
    if rng is None:
        rng = np.random.default_rng(config.seed)
    image = np.asarray(image, dtype=bool)
    length = float(config.edge_length)
    rows, cols = np.nonzero(image)
    m = len(rows)
    n_t = n_tests(m, len(config.widths))
    if m < 2:
        return Detection(None, n_t, time_index, m, 0)
    coords = np.column_stack([cols + 0.5, rows + 0.5]).astype(float)
    pix = np.column_stack([cols, rows])  # integer (x, y)
    log_nt = math.log10(n_t)
    log_eps = math.log10(config.epsilon)

    tables = {}
    n_trials = {}
    for w in config.widths:
        n_w = round(length * w)
        n_trials[w] = n_w - 2
        tables[w] = log_binomial_tail_table(n_w - 2, config.oracle_p_b)

    if config.ransac_iterations is None:
        pairs = _iter_all_pairs(coords, length)
    else:
        pairs = _sample_pairs(coords, length, config.ransac_iterations, rng)

    best: Candidate | None = None
    best_key = None
    n_meaningful = 0
    for i, j in pairs:
        p1 = coords[i]
        p2 = coords[j]
        dvec = p2 - p1
        d = float(np.hypot(dvec[0], dvec[1]))
        ux, uy = dvec[0] / d, dvec[1] / d
        angle = math.atan2(uy, ux)
        rel = coords - p1
        u = rel[:, 0] * ux + rel[:, 1] * uy
        v = -rel[:, 0] * uy + rel[:, 1] * ux
        offs = slide_offsets(d, length)
        lows = offs - length / 2.0
        highs = offs + length / 2.0
        # support pixels never count toward k
        keep = np.ones(m, dtype=bool)
        keep[i] = keep[j] = False
        sup_sorted = tuple(sorted([tuple(map(int, pix[i])), tuple(map(int, pix[j]))]))
        for w in config.widths:
            band = keep & (v >= -w / 2.0) & (v < w / 2.0)
            us = np.sort(u[band])
            ks = np.searchsorted(us, highs, side="left") - np.searchsorted(
                us, lows, side="left"
            )
            n = n_trials[w]
            ks = np.minimum(ks, n)
            table = tables[w]
            log_nfas = log_nt + table[ks]
            # Among slides tied at the minimum, the median offset centers
            # the window on the supporting cluster (ties are long runs
            # when the baseline is short).
            tied = np.flatnonzero(log_nfas == log_nfas.min())
            best_slide = int(tied[len(tied) // 2])
            if log_nfas[best_slide] <= log_eps:
                n_meaningful += 1
                center = (
                    p1[0] + offs[best_slide] * ux,
                    p1[1] + offs[best_slide] * uy,
                )
                cand = Candidate(
                    support=sup_sorted,
                    rect=Rect(center, angle, length, w),
                    k=int(ks[best_slide]),
                    n=n,
                    log10_nfa=float(log_nfas[best_slide]),
                )
                key = _candidate_sort_key(cand)
                if best_key is None or key < best_key:
                    best, best_key = cand, key
    return Detection(best, n_t, time_index, m, n_meaningful)


def detect_in_video(
    frames: Sequence[np.ndarray],
    config: DetectorConfig,
    stride: int | None = None,
    rng: np.random.Generator | None = None,
    max_steps: int | None = None,
) -> list[Detection]:
    """Merge each window of ``n_f`` frames and detect in it.

    Windows start at 0, stride, 2*stride, ...; each detection is stamped
    with the window's center frame.  ``stride=None`` defaults to ``n_f``
    (disjoint windows); ``stride=1`` gives the dense sliding output.
    ``max_steps=1`` evaluates only the first window, the whole-video
    shortcut used when one decision per video suffices.
    """
    n_f = config.n_f
    if len(frames) < n_f:
        raise ValueError(f"need at least n_f={n_f} frames, got {len(frames)}")
    if stride is None:
        stride = n_f
    if stride < 1:
        raise ValueError("stride must be >= 1")
    if rng is None:
        rng = np.random.default_rng(config.seed)
    out = []
    for start in range(0, len(frames) - n_f + 1, stride):
        if max_steps is not None and len(out) >= max_steps:
            break
        merged = merge_frames(frames[start : start + n_f])
        out.append(
            detect_in_merged(merged, config, rng, time_index=start + n_f // 2)
        )
    return out


def detection_record(det: Detection) -> dict:
    """JSON-serializable record of one detection (one log line)."""
    rec: dict = {
        "time_index": det.time_index,
        "n_tests": det.n_tests,
        "m_white": det.m_white,
        "n_meaningful": det.n_meaningful,
        "detected": det.candidate is not None,
    }
    if det.candidate is not None:
        c = det.candidate
        rec.update(
            support=[list(c.support[0]), list(c.support[1])],
            center=[c.rect.center[0], c.rect.center[1]],
            angle=c.rect.angle,
            width=c.rect.width,
            length=c.rect.length,
            k=c.k,
            n=c.n,
            log10_nfa=c.log10_nfa,
        )
    return rec


def detection_from_record(rec: dict) -> Detection:
    """Inverse of :func:`detection_record`."""
    cand = None
    if rec.get("detected"):
        cand = Candidate(
            support=(tuple(rec["support"][0]), tuple(rec["support"][1])),
            rect=Rect(
                (rec["center"][0], rec["center"][1]),
                rec["angle"],
                rec["length"],
                rec["width"],
            ),
            k=rec["k"],
            n=rec["n"],
            log10_nfa=rec["log10_nfa"],
        )
    return Detection(
        cand,
        rec["n_tests"],
        rec.get("time_index", 0),
        rec.get("m_white", 0),
        rec.get("n_meaningful", 0),
    )


def write_detection_log(path, detections: Sequence[Detection]) -> None:
    """Write detections as line-delimited JSON."""
    with open(path, "w") as f:
        for det in detections:
            f.write(json.dumps(detection_record(det)) + "\n")
