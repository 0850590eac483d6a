"""Scoring of human and algorithmic responses, grids, TPR curves, L2 fit.

A click answer is a hit when the clicked pair is nearly parallel to the
true segment (0.1 rad), both clicks are close to its axis (15 px, plus
half the merged width in the dynamic-merged case), and neither click
overshoots the segment extent (half length + 20 px static, half diagonal
+ 20 px dynamic-merged).  Everything else - rejection, timeout, any
failed test - scores 0.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .detector import Detection
from .stimuli import EdgeSpec

ANGLE_TOL = 0.1  # rad
AXIS_TOL = 15.0  # px
EXTENT_TOL = 20.0  # px
RESPONSE_TIME_LIMIT = 10.0  # s


@dataclass(frozen=True)
class ClickResponse:
    """One click-task answer: zero, one or two in-image clicks."""

    stimulus_id: str
    clicks: tuple[tuple[float, float], ...]
    elapsed: float = 0.0
    timed_out: bool = False

    def __post_init__(self):
        if len(self.clicks) > 2:
            raise ValueError("at most two in-image clicks")
        if not self.timed_out and self.elapsed > RESPONSE_TIME_LIMIT:
            raise ValueError("elapsed exceeds the time limit without timeout")


@dataclass(frozen=True)
class YesNoResponse:
    """One yes-no-task answer."""

    stimulus_id: str
    answer: str  # yes | no | timeout
    elapsed: float = 0.0

    def __post_init__(self):
        if self.answer not in ("yes", "no", "timeout"):
            raise ValueError(f"bad answer {self.answer!r}")
        if self.answer != "timeout" and self.elapsed > RESPONSE_TIME_LIMIT:
            raise ValueError("elapsed exceeds the time limit without timeout")


def _angle_diff_mod_pi(a: float, b: float) -> float:
    d = (a - b) % math.pi
    return min(d, math.pi - d)


def _click_tests(
    clicks: Sequence[tuple[float, float]],
    truth: EdgeSpec,
    case: str,
    merged_width: float,
) -> bool:
    (x1, y1), (x2, y2) = clicks
    click_angle = math.atan2(y2 - y1, x2 - x1)
    if _angle_diff_mod_pi(click_angle, truth.angle) > ANGLE_TOL:
        return False
    ux, uy = math.cos(truth.angle), math.sin(truth.angle)
    mx, my = truth.midpoint
    if case == "static":
        axis_tol = AXIS_TOL
        extent_tol = truth.length / 2.0 + EXTENT_TOL
    else:  # dynamic-merged: clicks may land anywhere on the t-wide band
        axis_tol = merged_width / 2.0 + AXIS_TOL
        extent_tol = math.hypot(truth.length, merged_width) / 2.0 + EXTENT_TOL
    for cx, cy in clicks:
        dx, dy = cx - mx, cy - my
        if abs(-dx * uy + dy * ux) > axis_tol:
            return False
        if math.hypot(dx, dy) > extent_tol:
            return False
    return True


def score_click(
    response: ClickResponse, truth: EdgeSpec | None, case: str = "static"
) -> int:
    """0-1 score of one click answer against the ground-truth segment."""
    if case not in ("static", "dynamic-merged"):
        raise ValueError(f"unknown case {case!r}")
    if truth is None:
        return 0  # nothing to hit
    if response.timed_out or len(response.clicks) < 2:
        return 0
    merged_width = truth.width if case == "dynamic-merged" else 0.0
    return 1 if _click_tests(response.clicks, truth, case, merged_width) else 0


def score_detection(det: Detection, truth: EdgeSpec, case: str = "static") -> int:
    """0-1 score of a detector output, via the click geometry tests."""
    if det.candidate is None:
        return 0
    e1, e2 = det.candidate.rect.endpoints()
    pseudo = ClickResponse(stimulus_id="", clicks=(e1, e2))
    return score_click(pseudo, truth, case)


@dataclass
class PerformanceGrid:
    """Mean 0-1 score and sample count per (p_b, p_f) cell."""

    cells: dict[tuple[float, float], tuple[float, int]] = field(default_factory=dict)

    def mean(self, p_b: float, p_f: float) -> float:
        return self.cells[(p_b, p_f)][0]

    def count(self, p_b: float, p_f: float) -> int:
        return self.cells[(p_b, p_f)][1]

    def p_b_values(self) -> list[float]:
        return sorted({k[0] for k in self.cells})

    def column(self, p_b: float) -> list[tuple[float, float]]:
        """Sorted (p_f, mean score) pairs at this p_b."""
        return sorted(
            (pf, v[0]) for (pb, pf), v in self.cells.items() if pb == p_b
        )


def build_grid(
    scored: Iterable[tuple[str, int]],
    manifest_params: Mapping[str, tuple[float, float]],
) -> PerformanceGrid:
    """Average scores per degradation configuration.

    ``scored`` yields (stimulus id, 0-1 score); ``manifest_params`` maps
    each id to its (p_b, p_f).
    """
    sums: dict[tuple[float, float], list[float]] = {}
    for sid, score in sorted(scored):
        if sid not in manifest_params:
            raise KeyError(f"stimulus {sid!r} not in manifest")
        key = manifest_params[sid]
        acc = sums.setdefault(key, [0.0, 0])
        acc[0] += score
        acc[1] += 1
    grid = PerformanceGrid()
    for key, (total, count) in sums.items():
        grid.cells[key] = (total / count, count)
    return grid


def empirical_threshold(grid: PerformanceGrid, p_b: float) -> float:
    """Balance point v: misses at/above v match hits below v.

    Scores above the sampled p_f range are taken as saturated (hit
    probability 1), so they contribute no misses; candidate v values are
    the sampled grid points, ties resolved toward the smaller v.
    """
    column = grid.column(p_b)
    if len(column) < 2:
        raise ValueError(f"need >= 2 p_f samples at p_b={p_b}")
    pfs = [pf for pf, _ in column]
    scores = [s for _, s in column]
    best_v, best_gap = None, None
    for v in pfs:
        misses_above = sum(1.0 - s for pf, s in zip(pfs, scores) if pf >= v)
        hits_below = sum(s for pf, s in zip(pfs, scores) if pf < v)
        gap = abs(misses_above - hits_below)
        if best_gap is None or gap < best_gap:
            best_v, best_gap = v, gap
    return best_v


@dataclass(frozen=True)
class TprCurve:
    """True-positive rate per p_f, with the global confusion matrix."""

    p_f: tuple[float, ...]
    tpr: tuple[float, ...]
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def fpr(self) -> float:
        denom = self.fp + self.tn
        return self.fp / denom if denom else 0.0

    def as_vector(self) -> np.ndarray:
        return np.asarray(self.tpr)


def build_tpr_curve(
    outcomes: Iterable[tuple[str, bool]],
    manifest_entries: Mapping[str, tuple[bool, float | None]],
) -> TprCurve:
    """Aggregate yes/no outcomes into a TPR-vs-p_f curve.

    ``outcomes`` yields (stimulus id, answered yes); timeouts must
    already be mapped to "no".  ``manifest_entries`` maps ids to
    (has_edge, p_f), p_f being None for pure-noise stimuli.
    """
    per_pf: dict[float, list[int]] = {}
    tp = fp = tn = fn = 0
    for sid, yes in sorted(outcomes):
        if sid not in manifest_entries:
            raise KeyError(f"stimulus {sid!r} not in manifest")
        has_edge, p_f = manifest_entries[sid]
        if has_edge:
            acc = per_pf.setdefault(float(p_f), [0, 0])
            acc[0] += 1 if yes else 0
            acc[1] += 1
            tp += 1 if yes else 0
            fn += 0 if yes else 1
        else:
            fp += 1 if yes else 0
            tn += 0 if yes else 1
    pfs = sorted(per_pf)
    rates = tuple(per_pf[pf][0] / per_pf[pf][1] for pf in pfs)
    return TprCurve(tuple(pfs), rates, tp, fp, tn, fn)


def l2_curve_distance(a: TprCurve, b: TprCurve) -> float:
    """Euclidean distance between two performance vectors on one grid."""
    if a.p_f != b.p_f:
        raise ValueError("curves are sampled on different p_f grids")
    return float(np.linalg.norm(a.as_vector() - b.as_vector()))


def fit_integration(
    subject: TprCurve, family: Mapping[int, TprCurve]
) -> list[tuple[int, float]]:
    """Rank integration depths by L2 closeness to the subject's curve.

    Returns the full ascending ranking (n_f, distance); ties prefer the
    smaller n_f.
    """
    if not family:
        raise ValueError("family must be nonempty")
    ranked = sorted(
        ((n_f, l2_curve_distance(subject, curve)) for n_f, curve in family.items()),
        key=lambda item: (item[1], item[0]),
    )
    return ranked


def write_grid_csv(path, grid: PerformanceGrid, header_lines: Sequence[str] = ()):
    """PerformanceGrid as CSV: p_b, p_f, mean_score, count."""
    with open(path, "w", newline="") as f:
        for line in header_lines:
            f.write(f"# {line}\n")
        writer = csv.writer(f)
        writer.writerow(["p_b", "p_f", "mean_score", "count"])
        for (p_b, p_f) in sorted(grid.cells):
            mean, count = grid.cells[(p_b, p_f)]
            writer.writerow([f"{p_b:g}", f"{p_f:g}", f"{mean:.6f}", count])


def write_tpr_csv(path, curve: TprCurve, header_lines: Sequence[str] = ()):
    """TprCurve as CSV with a trailing confusion-matrix comment block."""
    with open(path, "w", newline="") as f:
        for line in header_lines:
            f.write(f"# {line}\n")
        f.write(f"# confusion tp={curve.tp} fp={curve.fp} tn={curve.tn} fn={curve.fn}\n")
        writer = csv.writer(f)
        writer.writerow(["p_f", "tpr"])
        for p_f, tpr in zip(curve.p_f, curve.tpr):
            writer.writerow([f"{p_f:g}", f"{tpr:.6f}"])


def read_tpr_csv(path) -> TprCurve:
    """Read a curve written by :func:`write_tpr_csv`."""
    pfs: list[float] = []
    rates: list[float] = []
    confusion = {"tp": 0, "fp": 0, "tn": 0, "fn": 0}
    with open(path) as f:
        for line in f:
            line = line.strip()
            if line.startswith("# confusion"):
                for part in line.split()[2:]:
                    key, val = part.split("=")
                    confusion[key] = int(val)
                continue
            if not line or line.startswith("#") or line.startswith("p_f"):
                continue
            a, b = line.split(",")
            pfs.append(float(a))
            rates.append(float(b))
    return TprCurve(tuple(pfs), tuple(rates), **confusion)
