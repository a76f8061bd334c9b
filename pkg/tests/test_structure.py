import numpy as np
import pytest

from subsetsum.core import Instance
from subsetsum.structure import (
    alpha_for,
    extract_residue_set,
    factorize_all,
    find_almost_divisor,
    partition_instance,
    peel_divisors,
    verify_partition,
)

from oracles import almost_divisors, residues_covered


def test_factorize_examples():
    table = factorize_all([12])
    assert table.factors[0] == {2: 2, 3: 1}
    assert factorize_all([1]).factors[0] == {}
    big = 97 * 89
    assert factorize_all([big]).factors[0] == {89: 1, 97: 1}


def test_factorize_reconstructs_and_is_prime():
    rng = np.random.default_rng(2)
    items = [int(v) for v in rng.integers(1, 10**6, size=120)]
    table = factorize_all(items)
    for x, fd in zip(items, table.factors):
        prod = 1
        for p, e in fd.items():
            assert p >= 2 and all(p % q for q in range(2, min(p, 1000)) if q * q <= p)
            prod *= p**e
        assert prod == x


def test_factorize_range_check():
    with pytest.raises(ValueError):
        factorize_all([5], w=4)


def test_find_almost_divisor_examples():
    assert find_almost_divisor([2, 4, 6, 3], 1) == 2
    assert find_almost_divisor([2, 3, 5, 7], 0) is None
    assert find_almost_divisor([4, 8, 12], 0) == 2


def test_find_almost_divisor_agrees_with_bruteforce():
    rng = np.random.default_rng(3)
    for _ in range(300):
        n = int(rng.integers(1, 16))
        w = int(rng.integers(2, 60))
        items = [int(v) for v in rng.integers(1, w + 1, size=n)]
        alpha = int(rng.integers(0, 5))
        truth = almost_divisors(items, alpha, max(items))
        got = find_almost_divisor(items, alpha)
        # 2 is an almost divisor of any multiset with n <= alpha even
        # when it exceeds every item, so truth may miss it.
        if n <= alpha:
            assert got == 2
        elif truth:
            assert got is not None
            assert sum(1 for x in items if x % got) <= alpha
        else:
            assert got is None


def test_peel_divisors_examples():
    d, peeled, leftovers = peel_divisors([2, 4, 6, 8], 1)
    assert (d, sorted(peeled), leftovers) == (2, [1, 2, 3, 4], ())
    assert find_almost_divisor(peeled, 1) is None

    d, peeled, leftovers = peel_divisors([3, 5, 7], 0)
    assert (d, sorted(peeled), leftovers) == (1, [3, 5, 7], ())

    d, peeled, leftovers = peel_divisors([4, 8, 12, 5], 1)
    assert d % 2 == 0
    assert 5 in leftovers


def test_peel_divisors_postconditions():
    rng = np.random.default_rng(4)
    for _ in range(200):
        n = int(rng.integers(1, 20))
        w = int(rng.integers(2, 80))
        items = [int(v) for v in rng.integers(1, w + 1, size=n)]
        alpha = int(rng.integers(1, 4))
        d, peeled, leftovers = peel_divisors(items, alpha)
        if peeled:
            assert find_almost_divisor(peeled, alpha) is None
        # multiset identity at the original scale
        rebuilt = sorted([x * d for x in peeled] + list(leftovers))
        assert rebuilt == sorted(items)
        assert len(leftovers) <= alpha * (max(items).bit_length() + 1)


def test_extract_residue_set_alpha_one_keeps_seed():
    items = [3, 5, 7, 9, 11, 13, 15]
    r = extract_residue_set(items, 1)
    assert list(r) == [3, 5]  # first 2*alpha in sorted order, no primes <= 1


def test_extract_residue_set_covers_small_moduli():
    items = [1, 2, 3, 4, 5, 6, 7]
    alpha = 2
    assert find_almost_divisor(items, alpha) is None
    r = extract_residue_set(items, alpha)
    assert sum(1 for x in r if x % 2) >= 2
    assert residues_covered(r, 2) == {0, 1}


def test_extract_residue_set_random_coverage():
    rng = np.random.default_rng(5)
    done = 0
    while done < 150:
        n = int(rng.integers(4, 30))
        w = int(rng.integers(3, 100))
        items = [int(v) for v in rng.integers(1, w + 1, size=n)]
        alpha = int(rng.integers(1, 6))
        if find_almost_divisor(items, alpha) is not None:
            continue
        done += 1
        r = extract_residue_set(items, alpha, checked=True)
        assert sorted(r) == list(r)
        for b in range(2, alpha + 1):
            assert residues_covered(r, b) == set(range(b))


def test_extract_residue_set_checked_rejects_bad_input():
    with pytest.raises(ValueError, match="almost divisor"):
        extract_residue_set([4, 8, 12, 16, 20, 24, 28, 32], 1, checked=True)


def test_alpha_for_is_ceiling_sqrt():
    assert alpha_for(1, 5) == 1
    assert alpha_for(100, 1) == 10
    assert alpha_for(101, 1) == 11
    assert alpha_for(50, 2) == 5


def test_partition_coprime_small():
    inst = Instance((3, 5, 7, 11), 13)
    part = partition_instance(inst)
    assert part.divisor == 1
    assert part.leftover_part == ()
    verify_partition(part, inst)


def test_partition_structured_divisible():
    inst = Instance((6, 12, 18, 24, 30), 36)
    part = partition_instance(inst)
    assert part.divisor > 1
    assert part.leftover_part == ()
    assert all(x % part.divisor == 0 for x in part.residue_part + part.dense_part)
    verify_partition(part, inst)


def test_partition_invariants_random_sweep():
    rng = np.random.default_rng(6)
    for _ in range(250):
        n = int(rng.integers(1, 40))
        w = int(rng.integers(2, 60))
        items = tuple(int(v) for v in rng.integers(1, w + 1, size=n))
        t = int(rng.integers(1, max(2, sum(items) // 2 + 1)))
        inst = Instance(items, t)
        part = partition_instance(inst)
        verify_partition(part, inst)
        assert part.alpha == alpha_for(t, inst.w)
        if part.residue_part or part.dense_part:
            # peeling left a bulk with no almost divisor, so the residue
            # part covers every small modulus
            reduced = [x // part.divisor for x in part.residue_part]
            for b in range(2, part.alpha + 1):
                assert residues_covered(reduced, b) == set(range(b))


def test_partition_coverage_in_solver_regime():
    # generation keeps n comfortably above alpha * log2(w), the regime
    # where peeling cannot consume the whole multiset
    rng = np.random.default_rng(7)
    for _ in range(120):
        w = int(rng.integers(2, 40))
        n = int(rng.integers(40, 160))
        items = tuple(int(v) for v in rng.integers(1, w + 1, size=n))
        lg = max(items).bit_length()
        alpha_cap = max(1, n // (4 * (lg + 1)))
        alpha_target = int(rng.integers(1, alpha_cap + 1))
        t = min(max(alpha_target * alpha_target * w, 1), sum(items) // 2)
        if t < 1:
            continue
        inst = Instance(items, t)
        part = partition_instance(inst)
        verify_partition(part, inst)
        assert part.residue_part or part.dense_part
        reduced = [x // part.divisor for x in part.residue_part]
        for b in range(2, part.alpha + 1):
            assert residues_covered(reduced, b) == set(range(b))
