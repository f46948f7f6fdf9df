"""Kernel-type estimators of differential entropy with a uniform-in-bandwidth harness."""

__version__ = "0.1.0"

from .density import (
    DataSet,
    DensityEstimate,
    EvaluationGrid,
    kde_eval,
    kde_eval_grid,
    kde_eval_points,
    smoothed_density,
    smoothed_density_eval,
    sup_deviation,
)
from .errors import (
    DomainError,
    EntrokitError,
    GridSizeError,
    IsolatedPointsError,
    NumericalError,
    ParseError,
    QuadratureError,
)
from .estimators import (
    EntropyEstimate,
    EstimatorKind,
    ThresholdSchedule,
    centering_plugin,
    centering_resub,
    entropy_leave_one_out,
    entropy_plugin,
    entropy_resubstitution,
)
from .harness import (
    BandwidthGrid,
    BandwidthRule,
    CertaintyInterval,
    SweepReport,
    bandwidth_grid,
    bias_probe,
    certainty_interval,
    coverage_experiment,
    deviation_statistic,
    sweep,
)
from .kernels import KernelSpec, check_kernel, kernel_eval, kernel_moments, make_kernel, parse_kernel
from .models import DistributionModel, parse_model, sample, true_entropy

__all__ = [name for name in dir() if not name.startswith("_")]
