"""Bayes and maximum-likelihood threshold estimation for nonlinear TAR(1) series."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ContractError,
    ConvergenceError,
    ExpressionError,
    InputDomainError,
    InstabilityError,
    TarError,
    TruncationError,
)
from .estimators import (  # noqa: E402
    EstimationResult,
    Prior,
    bayes_estimate,
    estimate,
    ml_estimate,
    multi_threshold_estimate,
    posterior_density,
)
from .expr import RegimeFunction, parse_regime_expression  # noqa: E402
from .invariant import GridSpec, InvariantDensity, intensity_at_threshold, invariant_density  # noqa: E402
from .likelihood import (  # noqa: E402
    LikelihoodProfile,
    build_profile,
    log_likelihood,
    martingale_check,
    z_ratio,
)
from .limit import LimitLaw, limit_sample, risk_bound, sample_limit_draw  # noqa: E402
from .model import TarModel, Trajectory, regression_mean, simulate  # noqa: E402
from .noise import NoiseModel  # noqa: E402
from .conditions import check_conditions  # noqa: E402
