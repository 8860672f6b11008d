"""Automatic identification of sparse governing equations from noisy time series."""

__version__ = "0.1.0"

from .bench import (  # noqa: F401
    BenchmarkRecord,
    SweepSummary,
    TimingSummary,
    judge_success,
    run_case,
    sweep_n,
    sweep_snr,
    timing_run,
)
from .design import (  # noqa: F401
    DesignMatrix,
    MonomialBasis,
    build_design,
    enumerate_monomials,
    term_name,
    trim_degree,
)
from .errors import (  # noqa: F401
    ArgosError,
    ConvergenceError,
    DegenerateGridError,
    DivergenceError,
    InsufficientDataError,
    SingularFitError,
)
from .pipeline import (  # noqa: F401
    EquationModel,
    IdentifiedSystem,
    bic_score,
    bootstrap_ci,
    identify_system,
    point_estimate,
    select_final,
)
from .savgol import (  # noqa: F401
    FilterConfig,
    SmoothedSignal,
    auto_smooth,
    sg_apply,
    sg_weights,
    window_grid,
)
from .sparse_reg import (  # noqa: F401
    PathFit,
    PenaltySpec,
    adaptive_weights,
    cross_validate,
    lambda_grid,
    lasso_cd,
    ols_on_support,
    refine_lambda,
    ridge_closed_form,
    standardize,
)
from .systems import (  # noqa: F401
    SYSTEM_NAMES,
    NoiseSpec,
    SystemDescriptor,
    Trajectory,
    add_noise,
    get_system,
    integrate,
    rhs_eval,
    sample_initial_conditions,
)
