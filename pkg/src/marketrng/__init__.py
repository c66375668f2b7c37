"""Randomness testing of binarised market return series.

Treats binary return sequences as the output of a random number
generator and applies the overlapping-permutations (generalized
serial) test, with chi-square significance assessment, a bit-exact
PCG64 baseline, and batch reporting utilities.
"""

from marketrng.serial import (
    BinarySequence,
    PatternCounts,
    PsiProfile,
    complement,
    count_overlapping_patterns,
    psi_profile,
    psi_square,
)
from marketrng.chi2 import ChiSquareAssessment, assess, chi2_critical, chi2_sf
from marketrng.pipeline import (
    ExperimentStream,
    PriceRecord,
    ReturnSeries,
    adjust_price,
    binarise_median,
    build_stream,
    clean_panel,
    compute_return_series,
    log_returns,
    monthly_column_sums,
    parse_prices,
)
from marketrng.rng import (
    LogisticState,
    Pcg64,
    Pcg64State,
    SyntheticSpec,
    logistic_bits,
    pcg64_bits,
    pcg64_next,
    rng_selftest,
    shape_synthetic,
)
from marketrng.report import (
    RecurrenceMatrix,
    StreamReport,
    emit_tables,
    kde_curve,
    recurrence_matrix,
    summarize_stream,
    trim_top_contributors,
)

__version__ = "0.1.0"

__all__ = [
    "BinarySequence",
    "PatternCounts",
    "PsiProfile",
    "complement",
    "count_overlapping_patterns",
    "psi_profile",
    "psi_square",
    "ChiSquareAssessment",
    "assess",
    "chi2_critical",
    "chi2_sf",
    "PriceRecord",
    "ReturnSeries",
    "ExperimentStream",
    "adjust_price",
    "binarise_median",
    "build_stream",
    "clean_panel",
    "compute_return_series",
    "log_returns",
    "monthly_column_sums",
    "parse_prices",
    "LogisticState",
    "Pcg64",
    "Pcg64State",
    "SyntheticSpec",
    "logistic_bits",
    "pcg64_bits",
    "pcg64_next",
    "rng_selftest",
    "shape_synthetic",
    "RecurrenceMatrix",
    "StreamReport",
    "emit_tables",
    "kde_curve",
    "recurrence_matrix",
    "summarize_stream",
    "trim_top_contributors",
    "__version__",
]
