"""Estimating sender and receiver community counts in directed networks.

A candidate pair ``(ks, kr)`` is fitted by spectral co-clustering and scored
by ``sigma_1(R) - 2``, where ``R`` is the entrywise-standardized residual of
the adjacency matrix. Two sequential searches over candidate pairs turn the
score into an estimate: :func:`digof` (decaying threshold) and :func:`rdigof`
(ratio of consecutive scores).
"""
__version__ = "0.1.0"

from ._accel import USE_NUMBA
from .data_io import analyze_network, parse_edge_list, preprocess
from .estimators import (
    CandidateSequence,
    EstimationTrace,
    StatisticCache,
    default_kmax,
    digof,
    full_trace,
    lex_sequence,
    ratio_sequence,
    rdigof,
)
from .gof import (
    GofResult,
    estimate_block_matrix,
    estimated_omega,
    ideal_statistic,
    residual_matrix,
    test_statistic,
)
from .model import (
    LabelVector,
    ScbmSpec,
    assign_balanced_labels,
    check_assumptions,
    community_separation,
    expected_adjacency,
    planted_block_matrix,
    planted_spec,
    sample_adjacency,
)
from .spectral import kmeans, largest_singular_value, spectral_cocluster, truncated_svd
