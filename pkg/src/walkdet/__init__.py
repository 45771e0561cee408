"""Detecting a Markov random walk hidden in Gaussian noise on a graph.

Spectral quantities of Hadamard powers of the transition matrix, the
large-deviations rate functions they induce, error-exponent bounds, the
exact likelihood-ratio detector and Monte Carlo exponent estimates.
"""

from .bounds import (
    ExponentBounds,
    ParametricPoint,
    all_bounds,
    genie_upper,
    parametric_curve,
    physics_lower,
    physics_lower_regular,
    sum_detector_lower,
    threshold_beta,
)
from .detector import (
    Decision,
    LlrResult,
    Observations,
    brute_force_llr,
    estimate_roc,
    log_likelihood_ratio,
    neyman_pearson,
    simulate_h0,
    simulate_h1,
)
from .errors import (
    ChainError,
    ConvergenceError,
    DimensionMismatch,
    Disconnected,
    InversionError,
    NegativeEntry,
    NotAperiodic,
    NotIrreducible,
    RowSumError,
    SizeTooSmall,
    StateOutOfRange,
    TooManyPaths,
    WalkdetError,
)
from .graphs import Graph, gen_cycle, gen_grid, gen_rgg, gen_watts_strogatz, uniform_walk_chain
from .ldp import EmpiricalMeasure, EntropyCurve, RatePoint, entropy_density, enumerate_path_measure, rate1, rate2
from .montecarlo import ExponentEstimate, convergence_trace, estimate_exponent
from .spectral import (
    MarkovChain,
    RhoRange,
    SpectralTriple,
    entropy_rate,
    hadamard_power,
    log_lambda,
    log_lambda_deriv,
    path_count_rate,
    path_log_prob,
    perron,
    rho_extremes,
    validate_chain,
)

__version__ = "0.1.0"
