"""Bernstein-type tail bounds for matrix martingales.

A library and CLI for working with square-integrable real symmetric matrix
martingales under the Bernstein moment condition: closed-form tail bounds,
trajectory generators whose moment condition is certified exactly, the
exponential trace supermartingale with its stopping time, and a Monte
Carlo / exact-enumeration harness that checks every inequality the bounds
rest on.

Hot kernels run under numba by default with a vectorized numpy fallback;
select with the ``MATMART_BACKEND`` environment variable (``numba``,
``numpy``, or ``auto``).
"""

__version__ = "0.1.0"

from ._backend import active_backend
from .bounds import (
    BernsteinParams,
    BoundReport,
    bernstein_rhs,
    generic_exponential_bound,
    lambda_cap,
    martingale_matrix_bound,
    matrix_bernstein_indep_bound,
    optimal_t,
    scalar_bernstein_bound,
    scalar_lambda,
    scalar_martingale_bound,
)
from .config import ExperimentConfig, format_generator, parse_config
from .errors import (
    ConfigError,
    ConvergenceError,
    DimensionMismatchError,
    MatmartError,
    NotPositiveDefiniteError,
    ParameterError,
)
from .simulate import (
    ConditionReport,
    GeneratorSpec,
    MartingalePath,
    check_bernstein_condition,
    check_path_invariants,
    generate_path,
    min_bernstein_c,
)
from .supermartingale import (
    CheckResult,
    SProcess,
    StoppedBatch,
    conditional_s_samples,
    event_a,
    lower_bound_check,
    s_final_samples,
    s_process,
    stopped_samples,
    stopping_time,
)
from .symmat import (
    SpectralDecomp,
    SymMat,
    eig_sym,
    lambda_max,
    lambda_min,
    mat_exp,
    mat_int_pow,
    mat_log,
    psd_order_leq,
    spectral_norm,
    trace,
)
from .verify import (
    LemmaReport,
    TailEstimate,
    exact_tail_enumeration,
    key_step_check,
    lemma_lieb_concavity,
    lemma_lieb_expectation,
    lemma_log_monotone,
    lemma_trace_monotone,
    mc_tail_experiment,
    mc_union_tail,
)

__all__ = [
    "BernsteinParams",
    "BoundReport",
    "CheckResult",
    "ConditionReport",
    "ConfigError",
    "ConvergenceError",
    "DimensionMismatchError",
    "ExperimentConfig",
    "GeneratorSpec",
    "LemmaReport",
    "MartingalePath",
    "MatmartError",
    "NotPositiveDefiniteError",
    "ParameterError",
    "SProcess",
    "SpectralDecomp",
    "StoppedBatch",
    "SymMat",
    "TailEstimate",
    "active_backend",
    "bernstein_rhs",
    "check_bernstein_condition",
    "check_path_invariants",
    "conditional_s_samples",
    "eig_sym",
    "event_a",
    "exact_tail_enumeration",
    "format_generator",
    "generate_path",
    "generic_exponential_bound",
    "key_step_check",
    "lambda_cap",
    "lambda_max",
    "lambda_min",
    "lemma_lieb_concavity",
    "lemma_lieb_expectation",
    "lemma_log_monotone",
    "lemma_trace_monotone",
    "lower_bound_check",
    "mat_exp",
    "mat_int_pow",
    "mat_log",
    "martingale_matrix_bound",
    "matrix_bernstein_indep_bound",
    "mc_tail_experiment",
    "mc_union_tail",
    "min_bernstein_c",
    "optimal_t",
    "parse_config",
    "psd_order_leq",
    "s_final_samples",
    "s_process",
    "scalar_bernstein_bound",
    "scalar_lambda",
    "scalar_martingale_bound",
    "spectral_norm",
    "stopped_samples",
    "stopping_time",
    "trace",
]
