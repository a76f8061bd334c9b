import numpy as np
import pytest

from subsetsum.core import SumSet
from subsetsum.sumset import (
    DenseSignal,
    _fft_values,
    _hashed_values,
    cap,
    dense_sumset,
    scale,
    sparse_sumset,
    sum_if_sparse,
    unscale,
)

from oracles import pairwise_sumset


def S(*vals):
    return SumSet.of(vals)


def test_dense_sumset_examples():
    assert dense_sumset(S(0, 1), S(0, 2)).values == (0, 1, 2, 3)
    assert dense_sumset(S(5), S(7)).values == (12,)
    expected = tuple(pairwise_sumset([1, 3, 4], [0, 10]))
    assert dense_sumset(S(1, 3, 4), S(0, 10)).values == expected
    assert expected == (1, 3, 4, 11, 13, 14)


def test_sparse_sumset_examples():
    assert sparse_sumset(S(0, 1000000), S(0, 1)).values == (0, 1, 1000000, 1000001)
    b = S(3, 8, 19)
    assert sparse_sumset(S(0), b).values == b.values


def test_empty_operand_errors():
    with pytest.raises(ValueError, match="empty operand"):
        dense_sumset(SumSet.empty(), S(1))
    with pytest.raises(ValueError, match="empty operand"):
        sparse_sumset(S(1), SumSet.empty())


def test_kernels_agree_with_bruteforce():
    rng = np.random.default_rng(11)
    for trial in range(60):
        hi = 10**6 if trial < 6 else 10**5
        na, nb = int(rng.integers(1, 60)), int(rng.integers(1, 60))
        a = sorted(set(int(v) for v in rng.integers(0, hi, size=na)))
        b = sorted(set(int(v) for v in rng.integers(0, hi, size=nb)))
        expected = tuple(pairwise_sumset(a, b))
        assert sparse_sumset(SumSet(tuple(a)), SumSet(tuple(b))).values == expected
        assert dense_sumset(SumSet(tuple(a)), SumSet(tuple(b))).values == expected


def test_hashed_backend_exact_on_wide_ranges():
    rng = np.random.default_rng(3)
    # values spread over 2**40: far beyond the FFT hull limit
    for trial in range(5):
        a = sorted(set(int(v) for v in rng.integers(0, 1 << 40, size=80)))
        b = sorted(set(int(v) for v in rng.integers(0, 1 << 40, size=70)))
        assert _hashed_values(tuple(a), tuple(b)) == tuple(pairwise_sumset(a, b))


def test_hashed_backend_exact_on_structured_collisions():
    # arithmetic progressions produce heavy modular collisions
    a = tuple(range(0, 5000 * 97, 97))
    b = tuple(range(0, 3000 * 97, 97))
    big = 1 << 30
    a = tuple(x + big for x in a)
    assert _hashed_values(a, b) == tuple(x + y for x in (big,) for y in range(0, (5000 + 3000 - 1) * 97, 97))


def test_fft_backend_matches_pairwise():
    rng = np.random.default_rng(4)
    a = tuple(sorted(set(int(v) for v in rng.integers(0, 3000, size=150))))
    b = tuple(sorted(set(int(v) for v in rng.integers(0, 3000, size=150))))
    assert _fft_values(a, b) == tuple(pairwise_sumset(a, b))


def test_sumset_commutative_associative():
    rng = np.random.default_rng(5)
    for _ in range(20):
        a = SumSet.of(int(v) for v in rng.integers(0, 500, size=10))
        b = SumSet.of(int(v) for v in rng.integers(0, 500, size=10))
        c = SumSet.of(int(v) for v in rng.integers(0, 500, size=10))
        assert sparse_sumset(a, b) == sparse_sumset(b, a)
        left = sparse_sumset(sparse_sumset(a, b), c)
        right = sparse_sumset(a, sparse_sumset(b, c))
        assert left == right


def test_cap_examples():
    assert cap(S(1, 5, 9), 4, 9).values == (5, 9)
    assert cap(S(1, 2), 5, 6).is_empty
    nested = cap(cap(S(1, 5, 9, 12), 2, 11), 4, 9)
    assert nested == cap(S(1, 5, 9, 12), 4, 9)
    with pytest.raises(ValueError):
        cap(S(1), 3, 2)


def test_scale_unscale():
    assert scale(S(1, 2, 3), 3).values == (3, 6, 9)
    assert unscale(S(4, 8), 4).values == (1, 2)
    with pytest.raises(ValueError, match="not divisible"):
        unscale(S(3, 4), 2)
    with pytest.raises(ValueError):
        scale(S(1), 0)


def test_sum_if_sparse_returns_levels():
    sets = [S(0, 1), S(0, 2), S(0, 4), S(0, 8)]
    out = sum_if_sparse(sets, 100)
    assert [s.values for s in out] == [(0, 1, 2, 3), (0, 4, 8, 12)]


def test_sum_if_sparse_small_budget_rule():
    sets = [S(0, 1), S(0, 2), S(0, 4), S(0, 8)]
    sig = sum_if_sparse(sets, 2)
    assert isinstance(sig, DenseSignal)
    assert sig.last_index_computed == 0 and sig.observed_total_size == 0


def test_sum_if_sparse_trips_midway():
    sets = [S(0, 1), S(0, 2), S(0, 4), S(0, 8)]
    sig = sum_if_sparse(sets, 5)
    assert isinstance(sig, DenseSignal)
    # first output has size 4 < 5; the second pushes the total to 8
    assert sig.last_index_computed == 2
    assert sig.observed_total_size == 8


def test_sum_if_sparse_rejects_odd_or_empty():
    with pytest.raises(ValueError):
        sum_if_sparse([S(0, 1)], 10)
    with pytest.raises(ValueError, match="empty operand"):
        sum_if_sparse([S(0, 1), SumSet.empty()], 10)


def test_sum_if_sparse_contract_fuzz():
    rng = np.random.default_rng(9)
    for _ in range(120):
        ell = 2 * int(rng.integers(1, 9))
        sets = []
        for _ in range(ell):
            size = int(rng.integers(1, 6))
            sets.append(SumSet.of(int(v) for v in rng.integers(0, 40, size=size)))
        full = [
            tuple(pairwise_sumset(sets[2 * i].values, sets[2 * i + 1].values))
            for i in range(ell // 2)
        ]
        total = sum(len(f) for f in full)
        budget = int(rng.integers(1, total + 4))
        res = sum_if_sparse(sets, budget)
        if isinstance(res, DenseSignal):
            assert budget <= ell // 2 or total >= budget
        else:
            assert [s.values for s in res] == full
            assert total < budget
