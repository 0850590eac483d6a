"""Random-dot edge stimuli, a contrario detection, and performance prediction."""

from .binom import log_binomial_tail, log_binomial_tail_table, log_nfa, n_tests, nfa
from .detector import (
    Candidate,
    Detection,
    DetectorConfig,
    Rect,
    count_in_rect,
    detect_in_merged,
    detect_in_video,
)
from .evaluation import (
    ClickResponse,
    PerformanceGrid,
    TprCurve,
    YesNoResponse,
    build_grid,
    build_tpr_curve,
    empirical_threshold,
    fit_integration,
    l2_curve_distance,
    score_click,
    score_detection,
)
from .merging import MergeWindow, merge_frames, merged_params_dynamic, merged_params_static
from .prediction import (
    DecisionCurve,
    PredictionContext,
    bitstring_success_probability,
    bitstring_threshold,
    decision_curve,
    expected_n_tests,
    expected_on_edge_count,
    expected_white_count,
    on_edge_count_sigma,
    on_edge_count_std,
    predicted_log_nfa,
    predicted_nfa,
)
from .stimuli import (
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

__version__ = "0.1.0"
