"""Reductions to ordered, unit-normalized form and the maps back.

The pipeline rescales each agent so that some partition of the goods into d
bundles is worth exactly 1 per bundle, sorts every agent's values into a
common non-increasing order, and later converts an allocation of the sorted
instance back to the original goods via a picking procedure that can only
increase each agent's value.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .core import Allocation, Instance, Partition, bundle_value
from .errors import GuaranteeViolation, InputError
from . import oracle


@dataclass(frozen=True)
class PipelineRecord:
    """Everything needed to map an allocation of the transformed instance back.

    Agent rows travel through three spaces: original agents, surviving agents
    (zero-share agents removed, clones appended), and the same agents with
    per-agent sorted good positions. ``survivors[r]`` is the original index of
    surviving row r; rows past ``len(survivors)`` are clones of row 0.
    """

    original: Instance
    d_target: int
    d_run: int
    survivors: tuple[int, ...]
    dropped: frozenset[int]
    duplicated_agents: tuple[tuple[int, tuple[int, ...]], ...]
    dummy_goods: frozenset[int]
    normalized: Instance
    witnesses: tuple[Partition, ...]
    ordered: Instance
    sort_permutations: tuple[tuple[int, ...], ...]


def pad_agents_to_multiple_of_3(inst: Instance) -> tuple[Instance, tuple[tuple[int, tuple[int, ...]], ...]]:
    """Clone agent 0 until the agent count is a multiple of 3.

    Returns the padded instance and a map (source agent -> clone indices).
    """
    n = inst.num_agents
    if n < 1:
        raise InputError("cannot pad an instance with no agents")
    n_target = 3 * ((n + 2) // 3)
    if n_target == n:
        return inst, ()
    clones = tuple(range(n, n_target))
    rows = inst.valuations + tuple(inst.valuations[0] for _ in clones)
    return Instance(rows, inst.num_goods), ((0, clones),)


def pad_goods(inst: Instance, min_goods: int) -> tuple[Instance, frozenset[int]]:
    """Append zero-valued goods until there are at least ``min_goods``.

    Zero columns keep both the ordered and the normalized property intact.
    """
    m = inst.num_goods
    if min_goods <= m:
        return inst, frozenset()
    extra = min_goods - m
    rows = tuple(row + (Fraction(0),) * extra for row in inst.valuations)
    return Instance(rows, min_goods), frozenset(range(m, min_goods))


def normalize(
    inst: Instance, d: int, node_budget: int | None = None
) -> tuple[Instance, tuple[Partition, ...], frozenset[int]]:
    """Divide each agent's values by her witness-part values so every part of
    her d-share partition is worth exactly 1.

    Agents whose d-share is 0 cannot be rescaled; they are dropped from the
    returned instance and reported in the third component.
    """
    if d < 1:
        raise InputError(f"d must be >= 1, got {d}")
    surviving_rows: list[tuple[Fraction, ...]] = []
    witnesses: list[Partition] = []
    dropped: set[int] = set()
    for i in range(inst.num_agents):
        result = oracle.mms(inst, i, d, node_budget=node_budget)
        if result.value == 0:
            dropped.add(i)
            continue
        part_of_good: dict[int, Fraction] = {}
        for part in result.witness.parts:
            pv = bundle_value(inst, i, part)
            for g in part:
                part_of_good[g] = pv
        row = tuple(
            inst.value(i, g) / part_of_good[g] for g in range(inst.num_goods)
        )
        surviving_rows.append(row)
        witnesses.append(result.witness)
    return Instance(tuple(surviving_rows), inst.num_goods), tuple(witnesses), frozenset(dropped)


def order(inst: Instance) -> tuple[Instance, tuple[tuple[int, ...], ...]]:
    """Sort each agent's values non-increasingly (ties by good index).

    After ordering, position p holds every agent's p-th largest value, so the
    identity order of positions works for all agents simultaneously. The
    permutation maps sorted position -> original good index.
    """
    perms: list[tuple[int, ...]] = []
    rows: list[tuple[Fraction, ...]] = []
    for i in range(inst.num_agents):
        perm = tuple(sorted(range(inst.num_goods), key=lambda g: (-inst.value(i, g), g)))
        perms.append(perm)
        rows.append(tuple(inst.value(i, g) for g in perm))
    return Instance(tuple(rows), inst.num_goods), tuple(perms)


def permute_partition(partition: Partition, perm: Sequence[int]) -> Partition:
    """Rewrite a partition of goods as a partition of sorted positions."""
    pos_of = {g: p for p, g in enumerate(perm)}
    return Partition(tuple(frozenset(pos_of[g] for g in part) for part in partition.parts))


def unpick(ordered_alloc: Allocation, record: PipelineRecord) -> Allocation:
    """Convert an allocation of sorted positions back to concrete goods.

    Positions are processed from most valuable down; at each position its
    owner picks her favourite remaining good under her normalized valuation
    (ties broken by lowest good index). Each agent ends up at least as well
    off as she was in the sorted instance; this is re-checked exactly.
    """
    norm = record.normalized
    n = norm.num_agents
    m = norm.num_goods
    if ordered_alloc.num_agents != n:
        raise InputError(
            f"allocation has {ordered_alloc.num_agents} bundles, expected {n}"
        )
    owner: dict[int, int] = {}
    for a, bundle in enumerate(ordered_alloc.bundles):
        for pos in bundle:
            if pos >= m:
                raise InputError(f"position {pos} out of range [0, {m})")
            owner[pos] = a
    remaining = set(range(m))
    picked: list[set[int]] = [set() for _ in range(n)]
    for pos in range(m):
        a = owner.get(pos)
        if a is None:
            continue
        g = max(remaining, key=lambda g: (norm.value(a, g), -g))
        picked[a].add(g)
        remaining.remove(g)
    result = Allocation(tuple(frozenset(p) for p in picked), frozenset(remaining))
    for a in range(n):
        got = bundle_value(norm, a, result.bundles[a])
        had = bundle_value(record.ordered, a, ordered_alloc.bundles[a])
        if got < had:
            raise GuaranteeViolation(
                f"picking lowered agent {a}'s value from {had} to {got}; "
                f"this contradicts the picking argument"
            )
    return result


def reinstate(alloc: Allocation, record: PipelineRecord) -> Allocation:
    """Map an allocation of the padded instance back to the original one.

    Dummy goods vanish. Each surviving original agent keeps her own bundle;
    clone bundles are released to ``unallocated`` (the original agent already
    meets her target with her own bundle). Dropped zero-share agents get the
    empty bundle, which meets their zero target.
    """
    n_orig = record.original.num_agents
    m_orig = record.original.num_goods
    bundles: list[frozenset[int]] = [frozenset() for _ in range(n_orig)]
    leftovers = {g for g in alloc.unallocated if g < m_orig}
    for row, bundle in enumerate(alloc.bundles):
        real = frozenset(g for g in bundle if g < m_orig)
        if row < len(record.survivors):
            bundles[record.survivors[row]] = real
        else:
            leftovers |= real
    return Allocation(tuple(bundles), frozenset(leftovers))
