"""Exact-arithmetic domain model for fair division of indivisible goods.

Agents and goods are 0-indexed throughout the package. Every valuation
quantity is a ``fractions.Fraction``; floating point never enters any
allocation decision, so boundary comparisons (``value >= threshold``)
are exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, Union

from .errors import InputError

RationalLike = Union[Fraction, int, str]


def as_fraction(x: RationalLike) -> Fraction:
    """Convert an int, a "p/q" string, or a Fraction to an exact Fraction.

    Floats are rejected on purpose: they would silently break exactness.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int) and not isinstance(x, bool):
        return Fraction(x)
    if isinstance(x, str):
        try:
            return Fraction(x)
        except (ValueError, ZeroDivisionError) as exc:
            raise InputError(f"not a valid rational literal: {x!r}") from exc
    raise InputError(f"not a rational: {x!r} (floats are not accepted)")


@dataclass(frozen=True)
class Instance:
    """A fair division instance: n agents, m goods, additive valuations.

    ``valuations[i][g]`` is agent i's value for good g. All entries are
    non-negative Fractions and every row has exactly ``num_goods`` entries.
    """

    valuations: tuple[tuple[Fraction, ...], ...]
    num_goods: int

    def __post_init__(self):
        for i, row in enumerate(self.valuations):
            if len(row) != self.num_goods:
                raise InputError(
                    f"agent {i} has {len(row)} values, expected {self.num_goods}"
                )
            for g, v in enumerate(row):
                if not isinstance(v, Fraction):
                    raise InputError(f"valuations[{i}][{g}] is not a Fraction")
                if v < 0:
                    raise InputError(f"valuations[{i}][{g}] is negative: {v}")

    @staticmethod
    def from_rows(rows: Sequence[Sequence[RationalLike]], num_goods: int | None = None) -> "Instance":
        """Build an Instance from rows of ints / "p/q" strings / Fractions."""
        vals = tuple(tuple(as_fraction(v) for v in row) for row in rows)
        if num_goods is None:
            if not vals:
                raise InputError("num_goods is required for an instance with no agents")
            num_goods = len(vals[0])
        return Instance(vals, num_goods)

    @property
    def num_agents(self) -> int:
        return len(self.valuations)

    def value(self, agent: int, good: int) -> Fraction:
        self._check_agent(agent)
        if not 0 <= good < self.num_goods:
            raise InputError(f"good index {good} out of range [0, {self.num_goods})")
        return self.valuations[agent][good]

    def total_value(self, agent: int) -> Fraction:
        self._check_agent(agent)
        return sum(self.valuations[agent], Fraction(0))

    def _check_agent(self, agent: int) -> None:
        if not 0 <= agent < self.num_agents:
            raise InputError(f"agent index {agent} out of range [0, {self.num_agents})")


def _as_index_set(goods: Iterable[int]) -> frozenset[int]:
    s = frozenset(goods)
    for g in s:
        if not isinstance(g, int) or isinstance(g, bool) or g < 0:
            raise InputError(f"good index must be a non-negative int, got {g!r}")
    return s


@dataclass(frozen=True)
class Allocation:
    """Disjoint bundles, one per agent, plus the set of unallocated goods.

    Allocations may be partial: algorithms that run out of goods return
    whatever they assigned, with the rest recorded in ``unallocated``.
    """

    bundles: tuple[frozenset[int], ...]
    unallocated: frozenset[int] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "bundles", tuple(_as_index_set(b) for b in self.bundles))
        object.__setattr__(self, "unallocated", _as_index_set(self.unallocated))
        seen: set[int] = set()
        for i, b in enumerate(self.bundles):
            if seen & b:
                raise InputError(f"bundle {i} overlaps an earlier bundle: {sorted(seen & b)}")
            seen |= b
        if seen & self.unallocated:
            raise InputError(f"unallocated overlaps a bundle: {sorted(seen & self.unallocated)}")

    @property
    def num_agents(self) -> int:
        return len(self.bundles)

    def assigned_goods(self) -> frozenset[int]:
        out: set[int] = set()
        for b in self.bundles:
            out |= b
        return frozenset(out)


@dataclass(frozen=True)
class Partition:
    """A partition of a ground set of goods into d (possibly empty) parts."""

    parts: tuple[frozenset[int], ...]

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(_as_index_set(p) for p in self.parts))
        seen: set[int] = set()
        for i, p in enumerate(self.parts):
            if seen & p:
                raise InputError(f"partition part {i} overlaps an earlier part")
            seen |= p

    @property
    def d(self) -> int:
        return len(self.parts)

    @property
    def ground_set(self) -> frozenset[int]:
        out: set[int] = set()
        for p in self.parts:
            out |= p
        return frozenset(out)


@dataclass(frozen=True)
class ThresholdList:
    """Per-rank targets tau_1 >= ... >= tau_n, each within [0, 1].

    ``taus[r]`` is the target for the agent holding rank r (0-indexed:
    rank 0 is the most important agent).
    """

    taus: tuple[Fraction, ...]

    def __post_init__(self):
        object.__setattr__(self, "taus", tuple(as_fraction(t) for t in self.taus))
        prev = Fraction(1)
        for r, t in enumerate(self.taus):
            if t < 0 or t > 1:
                raise InputError(f"threshold at rank {r} outside [0, 1]: {t}")
            if t > prev:
                raise InputError(f"thresholds increase at rank {r}: {t} > {prev}")
            prev = t

    def __len__(self) -> int:
        return len(self.taus)

    @staticmethod
    def constant(n: int, tau: RationalLike) -> "ThresholdList":
        return ThresholdList((as_fraction(tau),) * n)


@dataclass(frozen=True)
class PriorityRanking:
    """A bijection agent -> rank. Rank 0 wins all ties for a liked bundle."""

    rank_of: tuple[int, ...]

    def __post_init__(self):
        n = len(self.rank_of)
        if sorted(self.rank_of) != list(range(n)):
            raise InputError(f"rank_of is not a permutation of 0..{n - 1}: {self.rank_of}")

    @staticmethod
    def identity(n: int) -> "PriorityRanking":
        return PriorityRanking(tuple(range(n)))

    @staticmethod
    def rotation(n: int, shift: int) -> "PriorityRanking":
        """Cyclic ranking: agent i gets rank (i + shift) mod n."""
        return PriorityRanking(tuple((i + shift) % n for i in range(n)))

    @property
    def num_agents(self) -> int:
        return len(self.rank_of)

    def agents_by_rank(self) -> tuple[int, ...]:
        """Agents listed from rank 0 (most important) to rank n-1."""
        inv = [0] * len(self.rank_of)
        for agent, rank in enumerate(self.rank_of):
            inv[rank] = agent
        return tuple(inv)


def bundle_value(inst: Instance, agent: int, bundle: Iterable[int]) -> Fraction:
    """Exact additive value of a bundle: the sum of the agent's good values."""
    total = Fraction(0)
    for g in _as_index_set(bundle):
        total += inst.value(agent, g)
    return total


def is_T_mms(
    inst: Instance,
    alloc: Allocation,
    ranking: PriorityRanking,
    thresholds: ThresholdList,
    mms_values: Sequence[Fraction],
) -> bool:
    """Exact check that every agent's bundle meets her rank's scaled share.

    Agent i passes when value(bundle_i) >= taus[rank_i] * mms_values[i];
    the comparison is inclusive and carried out in exact rationals.
    """
    n = inst.num_agents
    if alloc.num_agents != n or ranking.num_agents != n or len(thresholds) != n or len(mms_values) != n:
        raise InputError(
            f"dimension mismatch: instance has {n} agents, allocation {alloc.num_agents}, "
            f"ranking {ranking.num_agents}, thresholds {len(thresholds)}, "
            f"mms values {len(mms_values)}"
        )
    for i in range(n):
        target = thresholds.taus[ranking.rank_of[i]] * as_fraction(mms_values[i])
        if bundle_value(inst, i, alloc.bundles[i]) < target:
            return False
    return True
