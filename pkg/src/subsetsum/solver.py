"""Decision pipeline: normalize, split, group, merge, combine, decide.

The pipeline decides "is there a subset summing to t" with one-sided
error.  After normalization (t <= sigma/2) and a small-target gate
(below ~100 * w * log(w)^2 a word-packed DP is at least as fast as the
randomized machinery, and it is exact), the items are split into
leftover / residue / dense parts.  The leftover and residue parts have
sum O(sqrt(w*t) log w), so their complete subset-sum sets are computed
exactly by bounded bitset DP.  The dense part goes through the grouping
and merge stages, which either return a set of achievable sums inside
the target window (sparse path) or dense evidence (dense path).

  * sparse: the candidate set S = S_G + S_R + S_D is a subset of the
    instance's true subset sums by construction, so a yes answer is
    certified.  A witness is missed with probability at most ~5q.
  * dense: the evidence implies (through the residue set's modular
    coverage) that every multiple of the common divisor d inside
    [t - sqrt(w*t) log w, t] is achievable using the residue and dense
    parts, so the decision reduces to t in S_G + (that interval's
    d-multiples).  This implication leans on a non-constructive
    threshold constant; checked_mode cross-verifies such answers with
    the exact DP on small instances and flags any disagreement.

All randomness is drawn from streams derived from the configured seed,
so runs are reproducible bit for bit.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .core import (
    Instance,
    OracleBudgetError,
    SolveOutcome,
    SolverConfig,
    SumSet,
    ceil_log2,
    normalize,
    rng_stream,
)
from .colorcoding import (
    DenseTripSignal,
    build_group_sumsets,
    partition_groups,
    verify_group_family,
)
from .merge import DenseEvidence, evidence_from_color_trip, merge_group_sumsets
from .structure import partition_instance, verify_partition
from .sumset import cap, dense_sumset

logger = logging.getLogger(__name__)

FALLBACK_MAX_BITS = 1 << 31
CHECKED_ORACLE_BUDGET = 10**8


@dataclass
class BranchReport:
    """Diagnostics attached to a SolveOutcome."""

    branch: str
    divisor: int = 1
    window: int = 0
    s_g_size: int = 0
    s_r_size: int = 0
    s_d_size: int = 0
    s_rd_size: int = 0
    sigma_g: int = 0
    sigma_r: int = 0
    sigma_d: int = 0
    gate_reason: Optional[str] = None
    checked_disagreement: Optional[bool] = None


def _bits_to_values(mask: int) -> tuple[int, ...]:
    nbytes = (mask.bit_length() + 7) // 8
    if nbytes == 0:
        return ()
    raw = np.frombuffer(mask.to_bytes(nbytes, "little"), dtype=np.uint8)
    bits = np.unpackbits(raw, bitorder="little")
    return tuple(int(i) for i in np.nonzero(bits)[0])


def bounded_subset_sums(items: Sequence[int], cap_hi: int) -> SumSet:
    """Exact subset sums of items, restricted to [0, cap_hi].

    Word-packed DP: a bitmask over [0, cap_hi] is shifted and OR-ed once
    per item.  Complete and deterministic; meant for parts whose total
    sum is small.
    """
    if cap_hi < 0:
        raise ValueError("cap_hi must be >= 0")
    limit = (1 << (cap_hi + 1)) - 1
    mask = 1
    for x in items:
        if x <= cap_hi:
            mask |= (mask << x) & limit
    return SumSet(_bits_to_values(mask))


def fallback_dp(items: Sequence[int], t: int, max_bits: int = FALLBACK_MAX_BITS) -> bool:
    """Exact decision by bitset DP over [0, t]."""
    if t < 0:
        return False
    if t + 1 > max_bits:
        raise OracleBudgetError(f"DP budget exceeded: t+1 = {t + 1} bits")
    limit = (1 << (t + 1)) - 1
    mask = 1
    for x in items:
        if x <= t:
            mask |= (mask << x) & limit
            if (mask >> t) & 1:
                return True
    return (mask >> t) & 1 == 1


def bitset_dp_table(items: Sequence[int], t: int, max_bits: int = 1 << 34) -> bool:
    """Bitset DP that always fills the full [0, t] table.

    A sentinel bit above t keeps the mask at full width so every shift
    costs Theta(t / wordsize) regardless of the items, matching the
    textbook cost model.  Used as the benchmark baseline; fallback_dp is
    the faster early-exit variant used inside the solver.
    """
    if t < 0:
        return False
    if t + 2 > max_bits:
        raise OracleBudgetError(f"DP budget exceeded: t+2 = {t + 2} bits")
    sentinel = 1 << (t + 1)
    keep = (1 << (t + 1)) - 1
    mask = sentinel | 1
    for x in items:
        if x <= t:
            mask |= (mask << x) & keep
    return (mask >> t) & 1 == 1


def textbook_dp(items: Sequence[int], t: int) -> bool:
    """Reachable-sum set DP, the O(n*t) textbook formulation."""
    if t < 0:
        return False
    reach = {0}
    for x in items:
        reach |= {s + x for s in reach if s + x <= t}
        if t in reach:
            return True
    return t in reach


def brute_force(instance: Instance) -> bool:
    """Exhaustive decision for n <= 25 (meet-in-the-middle above 20)."""
    items, t = instance.items, instance.target
    n = len(items)
    if n > 25:
        raise OracleBudgetError("brute force capped at n = 25")
    if n <= 20:
        sums = {0}
        for x in items:
            sums |= {s + x for s in sums}
        return t in sums
    half = n // 2
    left = {0}
    for x in items[:half]:
        left |= {s + x for s in left}
    right = {0}
    for x in items[half:]:
        right |= {s + x for s in right}
    return any(t - s in right for s in left)


def small_target_gate(t: int, w: int) -> bool:
    """True when t < 100 * w * ceil(log2 w)^2, the regime where the
    exact DP is at least as fast as the randomized pipeline."""
    if w <= 1:
        return True
    return t < 100 * w * ceil_log2(w) ** 2


def dense_interval_set(d: int, t: int, w: int) -> SumSet:
    """All multiples of d in [t - floor(sqrt(w*t) log2 w), t].

    Used on the dense branch, where the evidence implies every such
    multiple is achievable by the residue and dense parts combined.
    """
    if d < 1:
        raise ValueError("divisor must be >= 1")
    width = int(math.sqrt(w * t) * math.log2(max(w, 2)))
    lo = max(t - width, 0)
    first = ((lo + d - 1) // d) * d
    return SumSet(tuple(range(first, t + 1, d)))


def solve_d_window(
    d_part: Sequence[int],
    t: int,
    w: int,
    n: int,
    config: SolverConfig,
    window: Optional[int] = None,
) -> Union[SumSet, DenseEvidence]:
    """Run the grouping and merge stages on the dense part.

    Sparse path: returns S, a subset of the true subset sums of d_part
    restricted to [t - window, t], containing any achievable value in
    that window with probability >= 1 - 3q - q.  Dense path: returns
    checkable DenseEvidence from whichever stage tripped its budget.
    Requires sigma(d_part) >= 3t/2.
    """
    q = config.q_for(n, t)
    if window is None:
        window = math.ceil(5 * math.sqrt(w * t) * math.log2(max(w, 2)))
    family = partition_groups(d_part, t, rng_stream(config.seed, "phase1"))
    if config.checked_mode:
        verify_group_family(family, d_part, t, w)
    staged = build_group_sumsets(
        family, t, w, n, q, config.c_ap,
        rng_stream(config.seed, "phase2"),
        budget_mult=config.budget_mult,
    )
    if isinstance(staged, DenseTripSignal):
        return evidence_from_color_trip(staged, t)
    merged = merge_group_sumsets(
        staged, family, t, w, n, q, config.c_ap,
        rng_stream(config.seed, "phase3"),
        eta_mult=config.eta_mult,
        budget_mult=config.budget_mult,
        window=window,
        checked=config.checked_mode,
    )
    if isinstance(merged, DenseEvidence):
        return merged
    return cap(merged, max(t - window, 0), t)


def solve(instance: Instance, config: Optional[SolverConfig] = None) -> SolveOutcome:
    """Decide the instance.

    Returns a SolveOutcome with the decision, the branch taken, the
    candidate set size and per-stage timings.  Yes answers on the sparse
    branch are certified correct; no answers may be wrong with
    probability at most ~5q on yes-instances.
    """
    if config is None:
        config = SolverConfig()
    timings: dict[str, int] = {}
    t_start = time.perf_counter_ns()

    def _mark(name: str, since: int) -> int:
        now = time.perf_counter_ns()
        timings[name] = now - since
        return now

    norm = normalize(instance)
    tick = _mark("normalize", t_start)
    if norm.trivial is not None:
        timings["total"] = time.perf_counter_ns() - t_start
        return SolveOutcome(
            decision=norm.trivial == "yes",
            branch="trivial",
            candidate_set_size=0,
            dense_evidence=None,
            seed=config.seed,
            timings=timings,
            report=BranchReport(branch="trivial", gate_reason=f"trivially {norm.trivial}"),
        )

    inst = norm.instance
    t, w, n = inst.target, inst.w, inst.n

    if config.fallback_only or small_target_gate(t, w):
        reason = "fallback_only" if config.fallback_only else "small target"
        decision = fallback_dp(inst.items, t)
        _mark("fallback_dp", tick)
        timings["total"] = time.perf_counter_ns() - t_start
        return SolveOutcome(
            decision=decision,
            branch="fallback-dp",
            candidate_set_size=0,
            dense_evidence=None,
            seed=config.seed,
            timings=timings,
            report=BranchReport(branch="fallback-dp", gate_reason=reason),
        )

    part = partition_instance(inst)
    if config.checked_mode:
        verify_partition(part, inst)
    tick = _mark("partition", tick)

    sigma_g = sum(part.leftover_part)
    sigma_r = sum(part.residue_part)
    sigma_d = sum(part.dense_part)

    if 2 * sigma_d < 3 * t:
        # Rounding slack in the split bounds can leave the dense part
        # short of the 3t/2 mass the merge stage needs; fall back.
        decision = fallback_dp(inst.items, t)
        _mark("fallback_dp", tick)
        timings["total"] = time.perf_counter_ns() - t_start
        return SolveOutcome(
            decision=decision,
            branch="fallback-dp",
            candidate_set_size=0,
            dense_evidence=None,
            seed=config.seed,
            timings=timings,
            report=BranchReport(branch="fallback-dp", gate_reason="dense part below 3t/2"),
        )

    s_g = bounded_subset_sums(part.leftover_part, sigma_g)
    s_r = bounded_subset_sums(part.residue_part, sigma_r)
    tick = _mark("bounded_sums", tick)

    window = max(
        math.ceil(5 * math.sqrt(w * t) * math.log2(max(w, 2))), sigma_g + sigma_r
    )
    result = solve_d_window(part.dense_part, t, w, n, config, window)
    tick = _mark("d_window", tick)

    report = BranchReport(
        branch="sparse",
        divisor=part.divisor,
        window=window,
        s_g_size=len(s_g),
        s_r_size=len(s_r),
        sigma_g=sigma_g,
        sigma_r=sigma_r,
        sigma_d=sigma_d,
    )

    if isinstance(result, DenseEvidence):
        report.branch = "dense"
        s_rd = dense_interval_set(part.divisor, t, w)
        report.s_rd_size = len(s_rd)
        candidates = dense_sumset(s_g, s_rd) if not s_rd.is_empty else SumSet.empty()
        decision = t in candidates
        if config.checked_mode and n * (t + 1) <= CHECKED_ORACLE_BUDGET:
            oracle = fallback_dp(inst.items, t)
            report.checked_disagreement = decision != oracle
            if report.checked_disagreement:
                logger.error(
                    "dense-branch decision %s disagrees with exact DP %s "
                    "(seed=%d, n=%d, t=%d)", decision, oracle, config.seed, n, t,
                )
        _mark("combine", tick)
        timings["total"] = time.perf_counter_ns() - t_start
        return SolveOutcome(
            decision=decision,
            branch="dense",
            candidate_set_size=len(candidates),
            dense_evidence=result,
            seed=config.seed,
            timings=timings,
            report=report,
        )

    report.s_d_size = len(result)
    if result.is_empty:
        candidates = SumSet.empty()
    else:
        candidates = dense_sumset(dense_sumset(s_g, s_r), result)
    decision = t in candidates
    _mark("combine", tick)
    timings["total"] = time.perf_counter_ns() - t_start
    return SolveOutcome(
        decision=decision,
        branch="sparse",
        candidate_set_size=len(candidates),
        dense_evidence=None,
        seed=config.seed,
        timings=timings,
        report=report,
    )
