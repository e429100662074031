"""Smoothed residuals and their exact covariance for MARSS state-space models."""

from .harvey import HarveyResidualOutput, harvey_backward, harvey_standardize
from .kalman import FilterOutput, SmootherOutput, kalman_filter, kalman_smoother, standardized_innovations
from .linalg import NumericalError
from .model import (
    ModelSpec,
    ObservationSet,
    StateRealization,
    Violation,
    apply_mask,
    simulate,
    validate_model,
)
from .smoothations import (
    ResidualReport,
    StandardizedResiduals,
    cov_v_w_next,
    cov_v_w_same,
    flag_outliers,
    joint_residual_covariance,
    model_residual_variance,
    residual_report,
    standardize,
    state_residual_variance,
)
from .ymoments import ConditionalYMoments, conditional_y_moments

__version__ = "0.1.0"
