"""Domain types, instance normalization, and deterministic randomness.

Conventions used throughout the package:

  * All logarithms are base 2.  Where a logarithm is used as a count
    (number of layers, rounds, repetitions) it is taken as a ceiling.
  * For an empty multiset, max = min = sigma = 0, and the diameter of an
    empty value set is 1.
  * All sums fit in 64 bits.  This is enforced at instance construction
    (n * w < 2**63), so plain Python ints never silently overflow numpy
    intermediates.
  * Randomness is never global.  Every randomized routine takes an
    explicit stream obtained from :func:`rng_stream`, so a fixed seed
    reproduces a run bit-for-bit.
"""

from __future__ import annotations

import hashlib
import math
from bisect import bisect_left
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional

import numpy as np

MASK64 = (1 << 64) - 1
OVERFLOW_LIMIT = 1 << 63


class InvalidInstanceError(ValueError):
    """Raised when an instance violates its declared domain."""


class InternalConsistencyError(RuntimeError):
    """Raised when internally assembled evidence fails its own checks.

    This always indicates an implementation bug, never a bad input.
    """


class OracleBudgetError(RuntimeError):
    """Raised when an exact oracle would exceed its time/memory budget."""


def ceil_log2(x: int) -> int:
    """Smallest k with 2**k >= x.  ceil_log2(1) == 0."""
    if x < 1:
        raise ValueError("ceil_log2 requires x >= 1")
    return (x - 1).bit_length()


def next_pow2(x: int) -> int:
    """Smallest power of two >= max(x, 1)."""
    return 1 << ceil_log2(max(x, 1))


def ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def ceil_sqrt(x: int) -> int:
    """Smallest integer s with s*s >= x."""
    if x < 0:
        raise ValueError("ceil_sqrt requires x >= 0")
    s = math.isqrt(x)
    return s if s * s == x else s + 1


@dataclass(frozen=True)
class Instance:
    """A subset-sum instance: positive integer items and a target.

    `n`, `w` and `sigma` are derived on construction; `w` is the maximum
    item (0 for an empty item list) and `sigma` the sum of all items.
    """

    items: tuple[int, ...]
    target: int
    n: int = field(init=False)
    w: int = field(init=False)
    sigma: int = field(init=False)

    def __post_init__(self):
        items = tuple(int(x) for x in self.items)
        object.__setattr__(self, "items", items)
        object.__setattr__(self, "target", int(self.target))
        if any(x < 1 for x in items):
            raise InvalidInstanceError("all items must be >= 1")
        if self.target < 0:
            raise InvalidInstanceError("target must be >= 0")
        w = max(items, default=0)
        n = len(items)
        # Overflow guard: all subset sums must stay below 2**63.
        if n * max(w, 1) >= OVERFLOW_LIMIT or self.target >= OVERFLOW_LIMIT:
            raise InvalidInstanceError("instance exceeds 64-bit sum guard (n*w < 2**63)")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "sigma", sum(items))

    @classmethod
    def of(cls, items: Iterable[int], target: int) -> "Instance":
        return cls(tuple(items), target)


@dataclass(frozen=True)
class SumSet:
    """A strictly increasing tuple of non-negative integers.

    Represents a set of achievable sums.  The empty set is allowed and
    means "no achievable sum"; by convention its max and min are 0 and
    its diameter is 1.
    """

    values: tuple[int, ...]

    def __post_init__(self):
        v = self.values
        if not isinstance(v, tuple):
            v = tuple(v)
            object.__setattr__(self, "values", v)
        if v:
            if v[0] < 0:
                raise ValueError("SumSet values must be non-negative")
            prev = v[0]
            for x in v[1:]:
                if x <= prev:
                    raise ValueError("SumSet values must be strictly increasing")
                prev = x

    @classmethod
    def of(cls, values: Iterable[int]) -> "SumSet":
        return cls(tuple(sorted(set(int(v) for v in values))))

    @classmethod
    def empty(cls) -> "SumSet":
        return cls(())

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self) -> Iterator[int]:
        return iter(self.values)

    def __contains__(self, x: int) -> bool:
        i = bisect_left(self.values, x)
        return i < len(self.values) and self.values[i] == x

    @property
    def is_empty(self) -> bool:
        return not self.values

    def min(self) -> int:
        return self.values[0] if self.values else 0

    def max(self) -> int:
        return self.values[-1] if self.values else 0

    def dm(self) -> int:
        """Diameter max - min + 1 (1 for the empty set)."""
        return self.max() - self.min() + 1


@dataclass(frozen=True)
class SolverConfig:
    """Tunables for the randomized solver.

    c_ap stands in for the (non-constructive) arithmetic-progression
    constant in the dense-evidence threshold; it trades confidence in the
    dense branch against how early budget trips can happen.  error_q is
    the per-phase error parameter; None means min(0.01, 1/(n+t)) chosen
    per instance.  checked_mode re-verifies dense-branch yes answers with
    the exact DP on small instances and enables extra internal
    assertions.  eta_mult scales the concentration constant in the merge
    windows, and budget_mult scales the dense-trip budget term; both
    default to 1.0, the faithful setting.  budget_mult < 1 is a
    diagnostic device to make dense trips reachable on desk-scale inputs.
    """

    c_ap: int = 1
    error_q: Optional[float] = None
    seed: int = 0
    checked_mode: bool = False
    fallback_only: bool = False
    eta_mult: float = 1.0
    budget_mult: float = 1.0

    def __post_init__(self):
        if self.c_ap < 1:
            raise ValueError("c_ap must be >= 1")
        if self.error_q is not None and not (0.0 < self.error_q < 1.0):
            raise ValueError("error_q must be in (0, 1)")
        if self.eta_mult <= 0 or self.budget_mult <= 0:
            raise ValueError("multipliers must be positive")

    def q_for(self, n: int, t: int) -> float:
        if self.error_q is not None:
            return self.error_q
        return min(0.01, 1.0 / max(n + t, 2))


@dataclass
class SolveOutcome:
    """Result of a solver run.

    decision is True for "yes".  branch records which path produced the
    decision: 'sparse', 'dense', 'fallback-dp' or 'trivial'.  On the
    sparse branch a yes decision is certified: t was found in a set that
    is a subset of the instance's true subset sums by construction.
    """

    decision: bool
    branch: str
    candidate_set_size: int
    dense_evidence: Optional[object]
    seed: int
    timings: dict[str, int]
    report: Optional[object] = None


@dataclass(frozen=True)
class NormalizeResult:
    """Outcome of target normalization.

    trivial is 'yes' or 'no' when the decision is immediate, else None.
    When complemented is True the returned instance has target
    sigma - original_target.
    """

    instance: Instance
    complemented: bool
    trivial: Optional[str]


def normalize(instance: Instance) -> NormalizeResult:
    """Reduce to a target at most half the total sum.

    Targets above sigma are trivially no; target 0 and target sigma are
    trivially yes (empty set / full set).  Otherwise, if t > sigma/2 the
    target is replaced by sigma - t, which has the same answer.
    """
    t, sigma = instance.target, instance.sigma
    if t > sigma:
        return NormalizeResult(instance, False, "no")
    if t == 0 or t == sigma:
        return NormalizeResult(instance, False, "yes")
    if 2 * t > sigma:
        flipped = Instance(instance.items, sigma - t)
        return NormalizeResult(flipped, True, None)
    return NormalizeResult(instance, False, None)


def rng_stream(seed: int, label: bytes | str) -> np.random.Generator:
    """Deterministic random stream for (seed, label).

    Distinct labels give independent-looking streams from one seed.  The
    label is hashed into the seed material so callers can use readable
    stream names.  Streams support uniform integer draws and
    permutations via the numpy Generator API.
    """
    if isinstance(label, str):
        label = label.encode("utf-8")
    digest = hashlib.blake2b(label, digest_size=32).digest()
    words = [int.from_bytes(digest[i : i + 8], "little") for i in range(0, 32, 8)]
    ss = np.random.SeedSequence([seed & MASK64, *words])
    return np.random.Generator(np.random.Philox(ss))
