"""First-order nonsmooth optimization under locally bounded subgradient variation."""

__version__ = "0.1.0"

from .core import (
    AxisBox,
    CountingOracle,
    EuclideanBall,
    Oracle,
    RngStream,
    Vec,
    WholeSpace,
    project,
    sample_segment,
    sample_unit_ball,
    sample_unit_sphere,
)
from .testbed import (
    BenchFunction,
    build_function,
    make_linear,
    make_max_of_linear,
    make_quadratic_growth,
    make_shifted_abs,
    make_smooth_quadratic,
    make_staircase,
)
from .smoothing import (
    Estimate,
    SmoothingConfig,
    ball_gradient_estimate,
    gradient_variance,
    minibatch_gradient,
    smoothed_value,
    stokes_gradient_estimate,
)
from .analysis import (
    CheckResult,
    VariationReport,
    WidthReport,
    check_interpolation,
    check_smoothed_gradient_lipschitz,
    check_upper_quadratic,
    choose_radius,
    estimate_max_variation,
    estimate_mean_oscillation,
    mean_width_mc,
    mean_width_named,
    sample_goldstein_cloud,
)
from .agd_plus import (
    AgdState,
    ErrorLedger,
    GapCertificate,
    ScheduleConfig,
    SmoothedMode,
    agd_step,
    backtrack_step,
    det_step_size,
    run_agd,
    stochastic_step_size,
    weak_smooth_radius,
)
from .goldstein import (
    IngdCertificate,
    IngdConfig,
    accept_candidate,
    descent_test,
    inner_update,
    run_ingd,
    validate_certificate,
)
from .harness import (
    ConfigError,
    RoundsReport,
    depth_comparison,
    estimate_constants,
    run_experiment,
    run_subgradient_baseline,
)
