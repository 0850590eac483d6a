"""Closed-form a priori performance predictors for the line detector.

Everything here is a deterministic function of the degradation
parameters: the expected white count, the expected test count, the
expected on-edge count at the true candidate position, and the resulting
predicted NFA surface whose epsilon contour is the predicted decision
curve in the (p_b, p_f) plane.

The dynamic (moving-edge) case reuses the static formulas with the clean
width replaced by the number of merged frames ``t`` and the background
parameter replaced by its merged value; the caller provides those via
:class:`PredictionContext` and the params.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .binom import log_binomial_tail
from .stimuli import DegradationParams, foreground_density


@dataclass(frozen=True)
class PredictionContext:
    """Geometry entering the closed forms.

    ``clean_width`` is the clean foreground thickness: the edge width
    ``w_e`` in the static case, the merge count ``t`` in the dynamic
    case.  ``candidate_width`` is the detector window width ``w``.
    """

    image_side: int
    edge_length: float
    clean_width: float
    candidate_width: float
    n_widths: int = 1
    epsilon: float = 1.0

    def __post_init__(self):
        if self.edge_length * max(self.clean_width, self.candidate_width) >= (
            self.image_side**2
        ):
            raise ValueError("edge area must be smaller than the image")

    @property
    def n_window(self) -> int:
        """Nominal candidate-window pixel count, round(L_e * w)."""
        return round(self.edge_length * self.candidate_width)

    @property
    def effective_width(self) -> float:
        """Clean thickness captured by the window, min(clean_width, w)."""
        return min(self.clean_width, self.candidate_width)


def expected_white_count(ctx: PredictionContext, params: DegradationParams) -> float:
    """E(M): expected white pixels in the whole degraded image."""
    p1 = foreground_density(params)
    edge_px = ctx.edge_length * ctx.clean_width
    return edge_px * p1 + (ctx.image_side**2 - edge_px) * params.p_b


def expected_n_tests(ctx: PredictionContext, params: DegradationParams) -> float:
    """E(N_T) = N_w * (E(M^2) - E(M)) / 2 with independent on/off-edge counts."""
    p1 = foreground_density(params)
    a = ctx.edge_length * ctx.clean_width  # on-edge pixels
    b = ctx.image_side**2 - a  # off-edge pixels
    e_me = a * p1
    e_me2 = a * p1 + a * (a - 1) * p1 * p1
    e_mb = b * params.p_b
    e_mb2 = b * params.p_b + b * (b - 1) * params.p_b**2
    e_m = e_me + e_mb
    e_m2 = e_me2 + e_mb2 + 2.0 * e_me * e_mb
    return 0.5 * (e_m2 - e_m) * ctx.n_widths


def expected_on_edge_count(ctx: PredictionContext, params: DegradationParams) -> float:
    """Expected window count at the true location, supports excluded.

    The window of ``n_w`` pixels covers the clean band over a fraction
    ``w_tilde / w``; the two support pixels are removed from the on-edge
    part.
    """
    p1 = foreground_density(params)
    n_w = ctx.n_window
    frac = ctx.effective_width / ctx.candidate_width
    return (frac * n_w - 2) * p1 + (1.0 - frac) * n_w * params.p_b


def on_edge_count_sigma(ctx: PredictionContext, params: DegradationParams) -> float:
    """Spread statistic quoted alongside the on-edge count estimate.

    This reproduces the source model's printed expression, which squares
    the two binomial variances before summing under the root; see
    :func:`on_edge_count_std` for the plain standard deviation of the
    count.  The printed form matches the model's quoted numeric examples,
    so it is kept as the primary surface.
    """
    p1 = foreground_density(params)
    n_w = ctx.n_window
    frac = ctx.effective_width / ctx.candidate_width
    var_edge = frac * n_w * p1 * (1.0 - p1)
    var_back = (1.0 - frac) * n_w * params.p_b * (1.0 - params.p_b)
    return math.hypot(var_edge, var_back)


def on_edge_count_std(ctx: PredictionContext, params: DegradationParams) -> float:
    """Standard deviation of the on-edge window count (sum of variances)."""
    p1 = foreground_density(params)
    n_w = ctx.n_window
    frac = ctx.effective_width / ctx.candidate_width
    var = frac * n_w * p1 * (1.0 - p1) + (1.0 - frac) * n_w * params.p_b * (
        1.0 - params.p_b
    )
    return math.sqrt(var)


def predicted_log_nfa(ctx: PredictionContext, params: DegradationParams) -> float:
    """log10 of the predicted NFA at the true-edge candidate.

    The expected on-edge count is rounded up before the tail evaluation,
    conservative toward non-detection.
    """
    n_t = expected_n_tests(ctx, params)
    if n_t <= 0:
        return math.inf  # no tests: nothing can be epsilon-meaningful
    k_hat = math.ceil(expected_on_edge_count(ctx, params))
    n = ctx.n_window - 2
    k_hat = min(max(k_hat, 0), n + 1)
    return math.log10(n_t) + log_binomial_tail(k_hat, n, params.p_b)


def predicted_nfa(ctx: PredictionContext, params: DegradationParams) -> float:
    """Linear-scale predicted NFA (may underflow for deep detections)."""
    lg = predicted_log_nfa(ctx, params)
    if lg == math.inf:
        return math.inf
    return 10.0**lg


@dataclass(frozen=True)
class DecisionCurve:
    """Per-p_b threshold p_f* where the predicted NFA crosses epsilon."""

    p_b: tuple[float, ...]
    p_f_star: tuple[float | None, ...]  # None: no crossing within [0, 1]
    width: float
    case: str
    epsilon: float


def _threshold_for_pb(
    ctx: PredictionContext, p_b: float, epsilon: float, tol: float
) -> float | None:
    log_eps = math.log10(epsilon)

    def g(p_f: float) -> float:
        return predicted_log_nfa(ctx, DegradationParams(p_b, p_f)) - log_eps

    lo, hi = 0.0, 1.0
    g_lo, g_hi = g(lo), g(hi)
    if g_lo <= 0:  # already meaningful with no foreground signal
        return 0.0
    if g_hi > 0:  # curve exits the [0, 1] range: no decision possible
        return None
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if g(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def decision_curve(
    ctx: PredictionContext,
    case: str,
    p_b_grid,
    epsilon: float | None = None,
    clean_widths=None,
    tol: float = 1e-4,
) -> DecisionCurve:
    """Bisect the predicted-NFA epsilon crossing along each p_b column.

    ``case`` is ``"static"`` (clean width fixed at ``ctx.clean_width``)
    or ``"dynamic"`` (each p_b column carries its own merged clean width,
    passed via ``clean_widths``, typically ``t = 1..len(grid)`` with
    ``p_b_grid[i] = 1 - (1 - p_b1)^t``).
    """
    if case not in ("static", "dynamic"):
        raise ValueError(f"unknown case {case!r}")
    if epsilon is None:
        epsilon = ctx.epsilon
    p_b_grid = [float(p) for p in p_b_grid]
    if case == "dynamic":
        if clean_widths is None:
            raise ValueError("dynamic case needs clean_widths per p_b")
        clean_widths = [float(t) for t in clean_widths]
        if len(clean_widths) != len(p_b_grid):
            raise ValueError("clean_widths and p_b_grid lengths differ")
    thresholds = []
    for idx, p_b in enumerate(p_b_grid):
        col_ctx = ctx
        if case == "dynamic":
            col_ctx = replace(ctx, clean_width=clean_widths[idx])
        thresholds.append(_threshold_for_pb(col_ctx, p_b, epsilon, tol))
    return DecisionCurve(
        tuple(p_b_grid), tuple(thresholds), ctx.candidate_width, case, epsilon
    )


def bitstring_threshold(n_tests: float, length: int, p: float, epsilon: float) -> int:
    """Smallest count whose tail is epsilon-meaningful in the 1-D example.

    Returns the minimal ``k`` with ``n_tests * P(Bin(length, p) >= k) <=
    epsilon``, or ``length + 1`` when even ``k = length`` fails (the only
    admissible decision is to never reject).
    """
    if length < 1:
        raise ValueError("length must be >= 1")
    log_eps = math.log10(epsilon)
    log_nt = math.log10(n_tests) if n_tests > 0 else -math.inf
    for k in range(length + 1):
        if log_nt + log_binomial_tail(k, length, p) <= log_eps:
            return k
    return length + 1


def bitstring_success_probability(
    n_tests: float, length: int, p_b: float, p_f: float, epsilon: float
) -> float:
    """Probability that the true window's count reaches the threshold.

    The count on the true window is Bin(length, p1) with
    ``p1 = p_b + p_f - p_b p_f``; success is reaching the background
    threshold of :func:`bitstring_threshold`.
    """
    k_th = bitstring_threshold(n_tests, length, p_b, epsilon)
    if k_th > length:
        return 0.0
    p1 = p_b + p_f - p_b * p_f
    return 10.0 ** log_binomial_tail(k_th, length, p1)
