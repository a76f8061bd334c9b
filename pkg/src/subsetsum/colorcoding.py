"""Randomized grouping stages that keep hidden witness mass spread thin.

Stage one (`partition_groups`) splits the bulk multiset into dyadic
value layers [2^j, 2^(j+1)) and randomly partitions each layer into at
most ceil(t / 2^(j-1)) non-empty groups (rebalancing moves elements
into any empty group).  The group list is padded with empty groups to a
power-of-two length.  Consequences: any subset with sum <= t meets each
group in few elements with high probability, and the group maxima carry
a constant fraction of t in total without exceeding ~t log w.

Stage two (`build_group_sumsets`) runs color coding over every group
simultaneously: each group is split uniformly into g random parts, 0 is
adjoined to each part, and parts are merged pairwise level by level.
All groups' levels share one running size budget, checked in global
node order exactly as if every part (including the all-{0} padding)
were materialized and summed left to right.  Reaching the budget stops
everything and yields a dense trip signal whose bookkeeping (per-node
sizes, subtree maxima, subtree sums) suffices to build checkable dense
evidence.  Otherwise the per-group roots, unioned over all repetitions,
form the group sumsets.

Empty parts are never materialized: a node whose subtree holds no
element is exactly {0}, a sumset identity of size one, so the budget
arithmetic can count such nodes without computing them.  This keeps the
cost proportional to the number of elements rather than to the g * ell
virtual tree, with bit-identical results and trip points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .core import SumSet, ceil_div, ceil_log2, next_pow2
from .sumset import _sum_values


@dataclass(frozen=True)
class GroupFamily:
    """Groups from stage one, padded to a power-of-two count.

    layers[i] is the dyadic layer index j of group i (2^j <= max < 2^(j+1)),
    or None for the empty padding groups.  raw_count is the group count
    before padding.
    """

    groups: tuple[tuple[int, ...], ...]
    layers: tuple[Optional[int], ...]
    raw_count: int

    @property
    def ell(self) -> int:
        return len(self.groups)

    def sigma(self) -> int:
        return sum(sum(g) for g in self.groups)


def partition_groups(d_part: Sequence[int], t: int, rng: np.random.Generator) -> GroupFamily:
    """Stage one: layered random partition of the bulk multiset.

    Requires sigma(d_part) >= 3t/2 (the solver gates on this); the group
    maxima bounds rely on it.
    """
    items = sorted(d_part)
    if t < 1:
        raise ValueError("t must be >= 1")
    if 2 * sum(items) < 3 * t:
        raise ValueError("caller must ensure mass: sigma < 3t/2")
    by_layer: dict[int, list[int]] = {}
    for x in items:
        by_layer.setdefault(x.bit_length() - 1, []).append(x)

    groups: list[tuple[int, ...]] = []
    layers: list[Optional[int]] = []
    for j in sorted(by_layer):
        layer_items = by_layer[j]
        size = len(layer_items)
        cap_j = 2 * t if j == 0 else ceil_div(t, 1 << (j - 1))
        alpha_j = min(cap_j, size)
        if alpha_j == size:
            buckets = [[x] for x in layer_items]
        else:
            assignment = rng.integers(0, alpha_j, size=size)
            buckets = [[] for _ in range(alpha_j)]
            for x, b in zip(layer_items, assignment):
                buckets[int(b)].append(x)
            # rebalance: move one element from any crowded bucket into each empty one
            donors = [i for i, b in enumerate(buckets) if len(b) >= 2]
            for i, b in enumerate(buckets):
                if b:
                    continue
                while donors and len(buckets[donors[-1]]) < 2:
                    donors.pop()
                if not donors:
                    break
                b.append(buckets[donors[-1]].pop())
        for b in buckets:
            groups.append(tuple(b))
            layers.append(j)

    raw = len(groups)
    ell = next_pow2(raw)
    groups.extend(() for _ in range(ell - raw))
    layers.extend(None for _ in range(ell - raw))
    return GroupFamily(tuple(groups), tuple(layers), raw)


def verify_group_family(family: GroupFamily, d_part: Sequence[int], t: int, w: int) -> None:
    """Invariant checks for stage one (tests and checked mode)."""
    ell = family.ell
    assert ell == next_pow2(ell), "group count must be a power of two"
    merged = sorted(x for g in family.groups for x in g)
    assert merged == sorted(d_part), "groups must partition the input"
    lgw = ceil_log2(max(w, 2))
    for j in range(lgw + 1):
        cap_j = 2 * t if j == 0 else ceil_div(t, 1 << (j - 1))
        cnt = sum(1 for g in family.groups if g and (1 << j) <= max(g) < (1 << (j + 1)))
        assert cnt <= cap_j, f"layer {j} exceeds its group cap"
    for g in family.groups[: family.raw_count]:
        assert g, "pre-padding groups must be non-empty"
    total_max = sum(max(g) for g in family.groups if g)
    sigma = sum(merged)
    if 2 * sigma >= 3 * t:
        assert 2 * total_max >= 3 * t, "group maxima must carry >= 3t/2"
        # ceiling-slack form of the ~5 t log w bound
        assert total_max <= 4 * t * (lgw + 1) + 4 * max(w, 2), "group maxima too heavy"


@dataclass(frozen=True)
class ColorCodingParams:
    """Derived color-coding parameters.

    k bounds the witness elements per group (w.h.p.), g = k^2 rounded to
    a power of two is the parts-per-group count, reps the number of
    independent repetitions, and tail the budget term added to the node
    count at every level (scaled by budget_mult when diagnosing).
    """

    k: int
    g: int
    reps: int
    u_prime: int
    rho: int
    tail: int


def color_params(
    n: int, t: int, w: int, q: float, c_ap: int, budget_mult: float = 1.0
) -> ColorCodingParams:
    if not (0.0 < q < 1.0):
        raise ValueError("q must be in (0, 1)")
    k = math.ceil(6 * math.log2(2 * n / q))
    g = next_pow2(k * k)
    u_prime = max(g * w + 1, math.ceil(5 * math.sqrt(w * t) * math.log2(max(w, 2))))
    rho = 10 * g * ceil_log2(max(w, 1))
    reps = math.ceil(math.log(4 * n / q) / math.log(4 / 3))
    tail = math.ceil(budget_mult * 4 * c_ap * rho * u_prime * ceil_log2(u_prime))
    return ColorCodingParams(k, g, reps, u_prime, rho, tail)


@dataclass(frozen=True)
class GroupSumsets:
    """Per-group achievable-sum sets S_i (each a subset of the true
    subset sums of its group, always containing 0)."""

    sets: tuple[SumSet, ...]
    params: ColorCodingParams


@dataclass
class DenseTripSignal:
    """Budget trip during stage two.

    Nodes whose subtree holds no element are exactly {0} (size 1, zero
    weight and zero subtree sum); they are carried as trivial_nodes
    instead of being listed.  For the remaining nodes, node_sizes holds
    the exact size when the node was computed before the stop and a
    lower bound of 1 otherwise; node_f holds the exact subtree maxima
    sums (equal to each node's true maximum) and node_sigma the exact
    subtree element sums.  threshold is the tripped budget (node count
    plus the budget tail).
    """

    level: int
    observed_total_size: int
    threshold: int
    rho: int
    u_prime: int
    g: int
    num_nodes: int
    trivial_nodes: int
    trip_index: int
    repetition: int
    node_sizes: list[int]
    node_f: list[int]
    node_sigma: list[int]


def split_into_parts(
    elems: Sequence[int], g: int, rng: np.random.Generator
) -> dict[int, list[int]]:
    """Uniform random assignment of elements to g parts; only occupied
    parts are returned."""
    parts: dict[int, list[int]] = {}
    if elems:
        draws = rng.integers(0, g, size=len(elems))
        for x, p in zip(elems, draws):
            parts.setdefault(int(p), []).append(x)
    return parts


def build_group_sumsets(
    family: GroupFamily,
    t: int,
    w: int,
    n: int,
    q: float,
    c_ap: int,
    rng: np.random.Generator,
    budget_mult: float = 1.0,
) -> Union[GroupSumsets, DenseTripSignal]:
    """Stage two: color-coded per-group sumsets under a shared budget.

    Returns GroupSumsets on the sparse path.  Whenever a level's running
    total size reaes the budget, returns a DenseTripSignal instead.
    """
    params = color_params(n, t, w, q, c_ap, budget_mult)
    g = params.g
    ell = family.ell
    sigma_total = family.sigma()
    total_elems = sum(len(grp) for grp in family.groups)

    # A level's size excess over its node count is at most sigma(D):
    # every node set lies in [0, sigma(subtree)], so size-1 <= sigma(subtree),
    # and subtrees partition each group.  Below the tail the budget can
    # never trip and the per-level accounting can be skipped entirely.
    fast = params.tail > sigma_total

    acc: list[set[int]] = [{0} for _ in range(ell)]
    singleton_done = [False] * ell

    for rep in range(params.reps):
        draws = rng.integers(0, g, size=total_elems) if total_elems else None

        if fast:
            pos = 0
            for i, grp in enumerate(family.groups):
                m = len(grp)
                if m == 0:
                    continue
                if m == 1:
                    # any split puts the lone element in one part: root is {0, x}
                    if not singleton_done[i]:
                        acc[i].add(grp[0])
                        singleton_done[i] = True
                    pos += 1
                    continue
                parts: dict[int, list[int]] = {}
                for x, p in zip(grp, draws[pos : pos + m]):
                    parts.setdefault(int(p), []).append(x)
                pos += m
                vals: tuple = (0,)
                for plist in parts.values():
                    vals = _sum_values(vals, tuple(sorted({0, *plist})))
                acc[i].update(vals)
            continue

        split: list[dict[int, list[int]]] = []
        pos = 0
        for grp in family.groups:
            parts = {}
            for x, p in zip(grp, draws[pos : pos + len(grp)] if grp else ()):
                parts.setdefault(int(p), []).append(x)
            pos += len(grp)
            split.append(parts)
        signal = _levels_with_budget(split, family, params, rep, acc)
        if signal is not None:
            return signal

    sets = tuple(SumSet(tuple(sorted(s))) for s in acc)
    return GroupSumsets(sets, params)


def _levels_with_budget(
    split: list[dict[int, list[int]]],
    family: GroupFamily,
    params: ColorCodingParams,
    rep: int,
    acc: list[set[int]],
) -> Optional[DenseTripSignal]:
    """One repetition with exact per-level budget accounting.

    Simulates the left-to-right budgeted level computation over the full
    virtual forest (ell groups x g parts): nodes whose subtree is empty
    are {0} and only count 1 toward the running total.  The trip point
    is therefore exactly where the fully materialized computation would
    stop.
    """
    g = params.g
    ell = len(split)
    levels = ceil_log2(g)
    sets: list[dict[int, tuple]] = []
    fvals: list[dict[int, int]] = []
    svals: list[dict[int, int]] = []
    for parts in split:
        sets.append({j: tuple(sorted({0, *v})) for j, v in parts.items()})
        fvals.append({j: max(v) for j, v in parts.items()})
        svals.append({j: sum(v) for j, v in parts.items()})

    for h in range(1, levels + 1):
        nodes_per_group = g >> h
        num_nodes = ell * nodes_per_group
        budget = num_nodes + params.tail

        new_f = [_merge_scalars(fv) for fv in fvals]
        new_s = [_merge_scalars(sv) for sv in svals]

        if params.tail == 0:
            # budget <= half the input count: immediate dense signal
            return _trip_signal(h, 0, budget, params, rep, num_nodes, 0, [], new_f, new_s, nodes_per_group)

        extra = 0
        computed: list[tuple[int, int]] = []  # (global index, size)
        new_sets: list[dict[int, tuple]] = []
        trip_at = None
        observed = 0
        for i in range(ell):
            base = i * nodes_per_group
            nd: dict[int, tuple] = {}
            for j in sorted({jj >> 1 for jj in sets[i]}):
                gidx = base + j
                # would a run of {0} nodes before this one cross the budget?
                if gidx + extra >= budget:
                    trip_at = budget - extra
                    observed = budget
                    break
                left = sets[i].get(2 * j)
                right = sets[i].get(2 * j + 1)
                if left is not None and right is not None:
                    z = _sum_values(left, right)
                else:
                    z = left if left is not None else right
                nd[j] = z
                extra += len(z) - 1
                computed.append((gidx, len(z)))
                if gidx + 1 + extra >= budget:
                    trip_at = gidx + 1
                    observed = gidx + 1 + extra
                    break
            new_sets.append(nd)
            if trip_at is not None:
                break
        if trip_at is None and num_nodes + extra >= budget:
            trip_at = budget - extra
            observed = budget
        if trip_at is not None:
            return _trip_signal(
                h, observed, budget, params, rep, num_nodes, trip_at, computed, new_f, new_s, nodes_per_group
            )
        sets = new_sets
        fvals = new_f
        svals = new_s

    for i in range(ell):
        root = sets[i].get(0, (0,))
        acc[i].update(root)
    return None


def _merge_scalars(d: dict[int, int]) -> dict[int, int]:
    """Parent value = sum of child values (subtree max / subtree sigma
    both combine additively across a sumset merge)."""
    out: dict[int, int] = {}
    for j, v in d.items():
        p = j >> 1
        out[p] = out.get(p, 0) + v
    return out


def _trip_signal(
    level: int,
    observed: int,
    budget: int,
    params: ColorCodingParams,
    rep: int,
    num_nodes: int,
    trip_index: int,
    computed: list[tuple[int, int]],
    new_f: list[dict[int, int]],
    new_s: list[dict[int, int]],
    nodes_per_group: int,
) -> DenseTripSignal:
    computed_size = dict(computed)
    sizes: list[int] = []
    f: list[int] = []
    sg: list[int] = []
    for i, fv in enumerate(new_f):
        base = i * nodes_per_group
        sv = new_s[i]
        for j in sorted(fv):
            gidx = base + j
            sizes.append(computed_size.get(gidx, 1))
            f.append(fv[j])
            sg.append(sv[j])
    return DenseTripSignal(
        level=level,
        observed_total_size=observed,
        threshold=budget,
        rho=params.rho,
        u_prime=params.u_prime,
        g=params.g,
        num_nodes=num_nodes,
        trivial_nodes=num_nodes - len(sizes),
        trip_index=trip_index,
        repetition=rep,
        node_sizes=sizes,
        node_f=f,
        node_sigma=sg,
    )
