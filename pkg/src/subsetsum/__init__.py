"""Subset-sum decision solver built on sparse sumset kernels.

Decides whether a subset of positive integers sums to a target, with
one-sided error: certified-path yes answers are always correct, and
yes-instances are missed with small configurable probability.  Includes
exact DP oracles, dense/sparse diagnostics, and a CLI with a benchmark
harness (`subsetsum --help`).
"""

from .core import (
    Instance,
    InvalidInstanceError,
    InternalConsistencyError,
    NormalizeResult,
    OracleBudgetError,
    SolveOutcome,
    SolverConfig,
    SumSet,
    normalize,
    rng_stream,
)
from .sumset import DenseSignal, cap, dense_sumset, scale, sparse_sumset, sum_if_sparse, unscale
from .structure import (
    FactorTable,
    InstancePartition,
    extract_residue_set,
    factorize_all,
    find_almost_divisor,
    partition_instance,
    peel_divisors,
)
from .colorcoding import GroupFamily, GroupSumsets, build_group_sumsets, partition_groups
from .merge import DenseEvidence, assemble_dense_evidence, merge_group_sumsets, select_ap_generators
from .solver import (
    BranchReport,
    bounded_subset_sums,
    brute_force,
    dense_interval_set,
    fallback_dp,
    solve,
    solve_d_window,
)

__all__ = [
    "Instance",
    "SumSet",
    "SolverConfig",
    "SolveOutcome",
    "NormalizeResult",
    "normalize",
    "rng_stream",
    "InvalidInstanceError",
    "InternalConsistencyError",
    "OracleBudgetError",
    "DenseSignal",
    "dense_sumset",
    "sparse_sumset",
    "sum_if_sparse",
    "cap",
    "scale",
    "unscale",
    "FactorTable",
    "factorize_all",
    "find_almost_divisor",
    "peel_divisors",
    "extract_residue_set",
    "InstancePartition",
    "partition_instance",
    "GroupFamily",
    "GroupSumsets",
    "partition_groups",
    "build_group_sumsets",
    "DenseEvidence",
    "assemble_dense_evidence",
    "merge_group_sumsets",
    "select_ap_generators",
    "BranchReport",
    "bounded_subset_sums",
    "fallback_dp",
    "brute_force",
    "dense_interval_set",
    "solve_d_window",
    "solve",
]

__version__ = "0.1.0"
