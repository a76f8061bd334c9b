import math

import numpy as np
import pytest

from subsetsum.core import Instance, OracleBudgetError, SolverConfig, SumSet, rng_stream
from subsetsum.merge import DenseEvidence
from subsetsum.solver import (
    bitset_dp_table,
    bounded_subset_sums,
    brute_force,
    dense_interval_set,
    fallback_dp,
    small_target_gate,
    solve,
    solve_d_window,
    textbook_dp,
)

from oracles import subset_sum_decision, subset_sums


def test_bounded_subset_sums_examples():
    assert bounded_subset_sums((3, 5, 8), 16).values == (0, 3, 5, 8, 11, 13, 16)
    assert bounded_subset_sums((), 10).values == (0,)
    assert bounded_subset_sums((2, 2), 4).values == (0, 2, 4)


def test_bounded_subset_sums_random_oracle():
    rng = np.random.default_rng(13)
    for _ in range(60):
        n = int(rng.integers(0, 14))
        items = [int(v) for v in rng.integers(1, 50, size=n)]
        cap = int(rng.integers(0, 200))
        assert list(bounded_subset_sums(items, cap).values) == subset_sums(items, cap)


def test_fallback_dp_examples():
    assert not fallback_dp((1, 2, 5), 4)
    assert fallback_dp((1, 2, 5), 8)


def test_dp_variants_agree_with_bruteforce():
    rng = np.random.default_rng(14)
    for _ in range(120):
        n = int(rng.integers(1, 18))
        items = tuple(int(v) for v in rng.integers(1, 60, size=n))
        t = int(rng.integers(0, sum(items) + 2))
        expected = subset_sum_decision(items, t)
        assert fallback_dp(items, t) == expected
        assert bitset_dp_table(items, t) == expected
        assert textbook_dp(items, t) == expected
        if n <= 25:
            assert brute_force(Instance(items, t)) == expected


def test_brute_force_meet_in_middle_path():
    rng = np.random.default_rng(15)
    items = tuple(int(v) for v in rng.integers(1, 30, size=23))
    for t in (0, 17, sum(items) // 2, sum(items)):
        assert brute_force(Instance(items, t)) == subset_sum_decision(items, t)


def test_oracle_budgets():
    with pytest.raises(OracleBudgetError):
        fallback_dp((5,), 10**12, max_bits=1 << 20)
    with pytest.raises(OracleBudgetError):
        brute_force(Instance(tuple([1] * 26), 3))


def test_solve_astronomical_target_refuses_cleanly():
    # any nontrivial target with 2**52-scale items is beyond every
    # pseudo-polynomial budget; the refusal must be a clear error
    big = tuple(2**52 + i for i in range(40))
    with pytest.raises(OracleBudgetError):
        solve(Instance(big, sum(big[:7])))


def test_small_target_gate_form():
    assert small_target_gate(199, 2)
    assert not small_target_gate(200, 2)
    assert small_target_gate(10**6, 1024)
    assert small_target_gate(5, 1)


def test_dense_interval_set_examples():
    s = dense_interval_set(1, 100, 2)
    # width floor(sqrt(200) * 1) = 14
    assert s.values == tuple(range(86, 101))
    s3 = dense_interval_set(3, 100, 2)
    assert all(v % 3 == 0 for v in s3.values)
    assert s3.max() <= 100 and s3.min() >= 86
    assert dense_interval_set(7, 20, 4).values == (7, 14)


def test_solve_trivial_examples():
    assert solve(Instance((3, 5, 8), 8)).decision
    assert not solve(Instance((2, 4, 6), 5)).decision
    out = solve(Instance((3, 5), 9))
    assert not out.decision and out.branch == "trivial"
    assert solve(Instance((3, 5), 0)).decision
    assert solve(Instance((3, 5), 8)).branch == "trivial"  # t == sigma
    assert solve(Instance((), 0)).decision


def test_solve_all_ones():
    out = solve(Instance((1,) * 50, 20))
    assert out.decision and out.branch == "fallback-dp"
    assert not solve(Instance((1,) * 50, 51)).decision


def test_solve_random_sweep_matches_oracle():
    rng = np.random.default_rng(16)
    cfg = SolverConfig(seed=77)
    for _ in range(800):
        n = int(rng.integers(1, 15))
        w = int(rng.integers(1, 41))
        items = tuple(int(v) for v in rng.integers(1, w + 1, size=n))
        t = int(rng.integers(0, sum(items) + 1))
        out = solve(Instance(items, t), cfg)
        assert out.decision == subset_sum_decision(items, t)


def _pipeline_instance(seed, n_extra=260):
    rng = rng_stream(seed, "make-instance")
    witness = [2] * 60 + [1] * 80
    filler = [int(v) for v in rng.integers(1, 3, size=n_extra)]
    return Instance(tuple(witness + filler), 200)


def test_solve_pipeline_yes_instance():
    inst = _pipeline_instance(31)
    out = solve(inst, SolverConfig(seed=3, error_q=0.01))
    assert out.branch == "sparse"
    assert out.decision
    assert out.report.s_d_size >= 1
    assert out.candidate_set_size >= 1


def test_solve_pipeline_no_instance_all_even():
    # every item even, odd target: certified path must never answer yes
    rng = rng_stream(8, "even")
    items = tuple(2 * int(v) for v in rng.integers(1, 2, size=400))
    inst = Instance(items, 401)
    for seed in range(10):
        out = solve(inst, SolverConfig(seed=seed, error_q=0.01))
        assert not out.decision
        assert out.branch in ("sparse", "fallback-dp")


def test_solve_d_window_subset_and_coverage():
    items = (1, 2, 3, 4, 5, 6, 7, 9, 11, 13)
    t, w, n = 30, 13, 10
    q = 0.2
    window = 20
    achievable = [s for s in subset_sums(items) if t - window <= s <= t]
    truth = set(subset_sums(items))
    misses = {s: 0 for s in achievable}
    seeds = 200
    for seed in range(seeds):
        cfg = SolverConfig(seed=seed, error_q=q)
        res = solve_d_window(items, t, w, n, cfg, window)
        assert isinstance(res, SumSet)
        assert set(res.values) <= truth
        assert all(t - window <= v <= t for v in res.values)
        for s in achievable:
            if s not in res:
                misses[s] += 1
    stderr = math.sqrt(3 * q * (1 - 3 * q) / seeds)
    worst = max(misses.values()) / seeds
    assert worst <= 3 * q + 3 * stderr, f"worst window miss rate {worst}"


def test_solve_dense_branch_checked_agreement():
    rng = rng_stream(9, "dense-profile")
    items = tuple(int(v) for v in rng.integers(1, 3, size=1200))
    t = max(sum(items) // 4, 201)
    inst = Instance(items, t)
    cfg = SolverConfig(seed=11, error_q=0.01, budget_mult=1e-12, checked_mode=True)
    out = solve(inst, cfg)
    assert out.branch == "dense"
    assert isinstance(out.dense_evidence, DenseEvidence)
    assert out.report.checked_disagreement is False
    assert out.decision == fallback_dp(inst.items, inst.target)


def test_solve_dense_branch_interval_is_achievable():
    rng = rng_stream(10, "dense-profile")
    items = tuple(int(v) for v in rng.integers(1, 3, size=1200))
    t = max(sum(items) // 4, 201)
    inst = Instance(items, t)
    cfg = SolverConfig(seed=4, error_q=0.01, budget_mult=1e-12)
    out = solve(inst, cfg)
    assert out.branch == "dense"
    # on this profile the interval claim is exact: every multiple of the
    # divisor in the window really is a subset sum of the full instance
    s_rd = dense_interval_set(out.report.divisor, inst.target, inst.w)
    truth = set(subset_sums(items, inst.target))
    assert set(s_rd.values) <= truth


def test_solve_deterministic_given_seed():
    inst = _pipeline_instance(77)
    cfg = SolverConfig(seed=5, error_q=0.01)
    a = solve(inst, cfg)
    b = solve(inst, cfg)
    assert (a.decision, a.branch, a.candidate_set_size) == (
        b.decision,
        b.branch,
        b.candidate_set_size,
    )


def test_solve_fallback_only_flag():
    inst = _pipeline_instance(12)
    out = solve(inst, SolverConfig(seed=1, fallback_only=True))
    assert out.branch == "fallback-dp"
    assert out.decision


def test_divisor_structured_instance_end_to_end():
    items = tuple([9] * 30 + [5, 7])
    t = sum(items) // 2
    out = solve(Instance(items, t), SolverConfig(seed=2))
    assert out.branch in ("fallback-dp", "sparse", "dense")
    assert out.decision == subset_sum_decision(items, t)


def test_pipeline_regime_random_soundness_sweep():
    # random instances large enough to take the sparse branch; the
    # oracle check makes the one-sided-error claim face real adversaries
    rng = np.random.default_rng(99)
    sparse_seen = 0
    for i in range(120):
        w = int(rng.integers(2, 4))
        gate = 100 * w * max((w - 1).bit_length(), 1) ** 2
        t = int(gate * (1 + rng.random()))
        n = int((2.2 + rng.random()) * t / ((1 + w) / 2))
        items = tuple(int(v) for v in rng.integers(1, w + 1, size=n))
        if sum(items) < 2 * t:
            continue
        inst = Instance(items, t)
        out = solve(inst, SolverConfig(seed=i, error_q=0.01))
        truth = fallback_dp(items, t)
        if out.branch == "sparse":
            sparse_seen += 1
            if out.decision:
                assert truth, "certified-path false positive"
        assert out.decision == truth  # misses are possible but ~never at q=0.01
    assert sparse_seen >= 80
