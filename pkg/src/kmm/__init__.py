"""Karatsuba matrix multiplication toolkit.

Exact multi-digit integer matrix multiplication with operation counting,
closed-form complexity and area models verified against instrumented
executions, and functional-cycle simulation of the fixed-precision and
precision-scalable systolic-array architectures built around it.
"""

from .algos import (
    AlgoResult,
    DigitParams,
    kmm_n,
    ksm_n,
    ksmm_n,
    mm1,
    mm_n,
    reference_product,
    sm_n,
)
from .bitmat import (
    BitWidthError,
    DigitSplit,
    DimensionError,
    KmmError,
    MatrixFormatError,
    OpCounter,
    UMatrix,
    counter_merge,
    digit_split,
    digit_sum,
    format_matrix,
    matrices_equal,
    parse_matrix,
    random_matrix,
    read_matrix,
    slice_high,
    slice_low,
    write_matrix,
)
from .costmodel import (
    AreaEstimate,
    OpBreakdown,
    RoofModel,
    area_kmm_mxu,
    area_ksmm_mxu,
    area_mm1_mxu,
    area_primitive,
    arith_counts,
    complexity_kmm_n,
    complexity_ksm_n,
    complexity_ksmm_n,
    complexity_mm_n,
    efficiency_roof,
    recursion_depth,
    select_recursion_levels,
)
from .sim import (
    ConfigError,
    DatapathWidthError,
    Mode,
    MxuConfig,
    MxuVariant,
    SimReport,
    SimRun,
    TileSchedule,
    build_schedule,
    gemm_driver,
    parse_sim_config,
    select_mode,
    simulate_fixed_kmm_mxu,
    simulate_mm1_mxu,
    simulate_ps_kmm_mxu,
)

__version__ = "0.1.0"
