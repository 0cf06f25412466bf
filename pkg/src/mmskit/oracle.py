"""Exact maximin-share values with witnesses.

``mms`` is a branch-and-bound multiway partition search; ``mms_naive`` is a
deliberately unoptimized enumerator over all set partitions, kept as an
independent cross-check. Both return the exact optimum or raise; neither
ever returns an approximate answer.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable

from .core import Instance, Partition
from .errors import InputError, SearchBudgetExceeded

DEFAULT_NODE_BUDGET = 10**7
NAIVE_GOODS_CAP = 12


@dataclass(frozen=True)
class MmsResult:
    """The maximin value together with one partition achieving it."""

    value: Fraction
    witness: Partition


class _OptimumReached(Exception):
    """Internal: the incumbent matched the root upper bound; stop searching."""


def _waterfill_upper_bound(sums: list[Fraction], remaining: Fraction) -> Fraction:
    # Fractional relaxation: pour the remaining value onto the lowest parts.
    s = sorted(sums)
    d = len(s)
    prefix = Fraction(0)
    for k in range(1, d):
        prefix += s[k - 1]
        if k * s[k] - prefix > remaining:
            return (prefix + remaining) / k
    return (prefix + s[d - 1] + remaining) / d


@lru_cache(maxsize=65536)
def _search(vals: tuple[Fraction, ...], d: int, budget: int) -> tuple[Fraction, tuple[int, ...]]:
    """Maximize the minimum part sum over partitions of ``vals`` into d parts.

    ``vals`` must be positive and non-increasing with len(vals) >= d >= 2.
    Returns (optimal min, part index per item). Deterministic: the witness is
    the greedy seed when the seed is already optimal, otherwise the last
    strict improvement found in a fixed depth-first order.
    """
    K = len(vals)
    total = sum(vals)
    root_ub = total / d

    # Greedy seed: assign each item to the currently lightest part.
    sums = [Fraction(0)] * d
    seed = [0] * K
    for t, v in enumerate(vals):
        j = min(range(d), key=lambda p: (sums[p], p))
        sums[j] += v
        seed[t] = j
    best_val = min(sums)
    best_assign = tuple(seed)
    if best_val == root_ub:
        return best_val, best_assign

    suffix = [Fraction(0)] * (K + 1)
    for t in range(K - 1, -1, -1):
        suffix[t] = suffix[t + 1] + vals[t]

    sums = [Fraction(0)] * d
    assign = [0] * K
    nodes = 0

    def place(t: int) -> None:
        nonlocal nodes, best_val, best_assign
        nodes += 1
        if nodes > budget:
            raise SearchBudgetExceeded(budget, nodes)
        if t == K:
            m = min(sums)
            if m > best_val:
                best_val = m
                best_assign = tuple(assign)
                if best_val == root_ub:
                    raise _OptimumReached
            return
        if _waterfill_upper_bound(sums, suffix[t]) <= best_val:
            return
        # Equal-value items are interchangeable: force non-decreasing part
        # indices among them. Parts with equal current sums are symmetric:
        # try only the first of each sum (this also covers "first empty part").
        lo = assign[t - 1] if t > 0 and vals[t] == vals[t - 1] else 0
        tried: set[Fraction] = set()
        for j in range(lo, d):
            if sums[j] in tried:
                continue
            tried.add(sums[j])
            sums[j] += vals[t]
            assign[t] = j
            place(t + 1)
            sums[j] -= vals[t]

    try:
        place(0)
    except _OptimumReached:
        pass
    return best_val, best_assign


def _resolve_goods(inst: Instance, agent: int, goods: Iterable[int] | None) -> list[int]:
    if goods is None:
        return list(range(inst.num_goods))
    out = sorted(set(goods))
    for g in out:
        if not 0 <= g < inst.num_goods:
            raise InputError(f"good index {g} out of range [0, {inst.num_goods})")
    return out


def mms(
    inst: Instance,
    agent: int,
    d: int,
    goods: Iterable[int] | None = None,
    node_budget: int | None = None,
) -> MmsResult:
    """Exact maximin share of ``agent`` splitting ``goods`` into ``d`` bundles.

    Deterministic for fixed inputs. Raises SearchBudgetExceeded (never a
    wrong answer) if the branch-and-bound exceeds its node budget.
    """
    if d < 1:
        raise InputError(f"d must be >= 1, got {d}")
    budget = DEFAULT_NODE_BUDGET if node_budget is None else node_budget
    good_list = _resolve_goods(inst, agent, goods)
    if d == 1:
        total = sum((inst.value(agent, g) for g in good_list), Fraction(0))
        return MmsResult(total, Partition((frozenset(good_list),)))

    positive = sorted(
        (g for g in good_list if inst.value(agent, g) > 0),
        key=lambda g: (-inst.value(agent, g), g),
    )
    zero = [g for g in good_list if inst.value(agent, g) == 0]

    if len(positive) < d:
        # Some part must stay empty of positive goods: the maximin is 0.
        parts = [set(good_list)] + [set() for _ in range(d - 1)]
        return MmsResult(Fraction(0), Partition(tuple(frozenset(p) for p in parts)))

    vals = tuple(inst.value(agent, g) for g in positive)
    value, assign = _search(vals, d, budget)
    parts = [set() for _ in range(d)]
    for t, g in enumerate(positive):
        parts[assign[t]].add(g)
    parts[0].update(zero)  # zero-valued goods do not affect any part value
    return MmsResult(value, Partition(tuple(frozenset(p) for p in parts)))


def mms_naive(
    inst: Instance,
    agent: int,
    d: int,
    goods: Iterable[int] | None = None,
) -> MmsResult:
    """Reference enumerator over all set partitions into at most d blocks.

    Used only as a test oracle; capped at 12 goods.
    """
    if d < 1:
        raise InputError(f"d must be >= 1, got {d}")
    good_list = _resolve_goods(inst, agent, goods)
    if len(good_list) > NAIVE_GOODS_CAP:
        raise InputError(
            f"mms_naive is capped at {NAIVE_GOODS_CAP} goods, got {len(good_list)}"
        )
    K = len(good_list)
    vals = [inst.value(agent, g) for g in good_list]

    best_value = Fraction(-1)
    best_blocks: list[list[int]] = []
    block_sums: list[Fraction] = []
    block_items: list[list[int]] = []

    def rec(t: int) -> None:
        nonlocal best_value, best_blocks
        if t == K:
            if len(block_sums) == d:
                m = min(block_sums)
            else:
                m = Fraction(0)  # some of the d parts stays empty
            if m > best_value:
                best_value = m
                best_blocks = [list(b) for b in block_items]
            return
        for j in range(len(block_sums)):
            block_sums[j] += vals[t]
            block_items[j].append(t)
            rec(t + 1)
            block_items[j].pop()
            block_sums[j] -= vals[t]
        if len(block_sums) < d:
            block_sums.append(vals[t])
            block_items.append([t])
            rec(t + 1)
            block_items.pop()
            block_sums.pop()

    if K == 0:
        return MmsResult(Fraction(0), Partition((frozenset(),) * d))
    rec(0)
    parts = [frozenset(good_list[t] for t in block) for block in best_blocks]
    parts += [frozenset()] * (d - len(parts))
    return MmsResult(best_value, Partition(tuple(parts)))
