"""Tail-risk estimation and change-point inference for dependent time series.

Nonparametric value-at-risk / expected shortfall / conditional tail moment
estimation with sectioning and self-normalized confidence intervals,
retrospective single and multiple change-point tests for the tail, and
Monte Carlo simulation of the pivotal limit distributions that supply
their critical values.
"""

from .changepoint import (
    MultipleChangeTraces,
    SingleChangeTraces,
    TestResult,
    TrimPolicy,
    multiple_change_statistic,
    multiple_change_test,
    single_change_statistic,
    single_change_test,
)
from .dgp import (
    DgpSpec,
    gen_ar1,
    gen_arch1,
    generate,
    inject_location_shift,
    make_stream,
    sample_normal,
    sample_student_t,
)
from .errors import (
    DegenerateIntervalError,
    DegenerateStatisticError,
    InvalidInputError,
    MissingTableError,
    TableMismatchError,
    TailShiftError,
)
from .estimators import (
    EsPrefixArrays,
    SegmentEsTable,
    TailSumIndex,
    build_tail_index,
    ctm_estimate,
    empirical_cdf,
    es_estimate,
    es_prefix_suffix,
    measure_estimate,
    measure_prefix_suffix,
    segment_es,
    segment_matrix,
    var_estimate,
    var_rank,
)
from .limitdist import (
    BrownianPath,
    CriticalValueTable,
    ensure_table,
    estimate_quantiles,
    interval_pivot,
    load_table,
    multiple_change_functional,
    save_table,
    simulate_path,
    single_change_functional,
)
from .selfnorm import IntervalResult, sectioning_interval, selfnorm_interval
from .series import (
    RiskSpec,
    SegmentRef,
    TailSide,
    TimeSeries,
    default_i_min,
    default_n_min,
    log_returns,
    to_upper_tail,
)

__version__ = "0.1.0"

__all__ = [
    "BrownianPath",
    "CriticalValueTable",
    "DegenerateIntervalError",
    "DegenerateStatisticError",
    "DgpSpec",
    "EsPrefixArrays",
    "IntervalResult",
    "InvalidInputError",
    "MissingTableError",
    "MultipleChangeTraces",
    "RiskSpec",
    "SegmentEsTable",
    "SegmentRef",
    "SingleChangeTraces",
    "TableMismatchError",
    "TailShiftError",
    "TailSide",
    "TailSumIndex",
    "TestResult",
    "TimeSeries",
    "TrimPolicy",
    "build_tail_index",
    "ctm_estimate",
    "default_i_min",
    "default_n_min",
    "empirical_cdf",
    "ensure_table",
    "es_estimate",
    "es_prefix_suffix",
    "estimate_quantiles",
    "gen_ar1",
    "gen_arch1",
    "generate",
    "inject_location_shift",
    "interval_pivot",
    "load_table",
    "log_returns",
    "make_stream",
    "measure_estimate",
    "measure_prefix_suffix",
    "multiple_change_functional",
    "multiple_change_statistic",
    "multiple_change_test",
    "sample_normal",
    "sample_student_t",
    "save_table",
    "sectioning_interval",
    "segment_es",
    "segment_matrix",
    "selfnorm_interval",
    "simulate_path",
    "single_change_functional",
    "single_change_statistic",
    "single_change_test",
    "to_upper_tail",
    "var_estimate",
    "var_rank",
]
