"""Reductions and bag filling with per-rank thresholds.

The allocator never reads valuations directly: every number it sees comes
through a ``ValueResponder``, so truthful and scripted (adversarial)
responders run the exact same code path. An agent *likes* a set when the
responder's answer meets her rank's threshold.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Protocol

from .core import Allocation, Instance, PriorityRanking, ThresholdList, bundle_value
from .errors import GuaranteeViolation, InputError


class ValueResponder(Protocol):
    """Answers value queries for (agent, set of goods)."""

    def value(self, agent: int, goods: frozenset[int]) -> Fraction: ...


class TruthfulResponder:
    """Answers queries additively from a concrete instance."""

    def __init__(self, instance: Instance):
        self.instance = instance

    def value(self, agent: int, goods: frozenset[int]) -> Fraction:
        return bundle_value(self.instance, agent, goods)


def ord_st(goods: Iterable[int], positions: Iterable[int]) -> frozenset[int]:
    """The j-th smallest elements of ``goods`` for each 1-based j in
    ``positions``; positions beyond the set size are silently skipped."""
    ranked = sorted(goods)
    return frozenset(ranked[j - 1] for j in positions if 1 <= j <= len(ranked))


def priority_thresholds(n: int) -> ThresholdList:
    """The built-in per-rank targets max(2n/(2n+i-1), 3/4 + 1/(12n)).

    Rank 1 gets a full share; later ranks decay harmonically down to the
    uniform floor. Verified non-increasing before returning.
    """
    if n < 1:
        raise InputError(f"n must be >= 1, got {n}")
    floor = Fraction(3, 4) + Fraction(1, 12 * n)
    taus = tuple(max(Fraction(2 * n, 2 * n + i - 1), floor) for i in range(1, n + 1))
    for a, b in zip(taus, taus[1:]):
        if b > a:
            raise GuaranteeViolation(f"threshold list is not non-increasing for n={n}")
    return ThresholdList(taus)


@dataclass(frozen=True)
class ReductionEvent:
    """One removal of (bundle, agent) during phase 1."""

    type: int  # 1..4, the order-statistic shape of the bundle
    bundle: frozenset[int]
    agent: int
    agents_before: int
    goods_before: int


@dataclass(frozen=True)
class BagEvent:
    kind: str  # "assign" | "fill" | "leftover"
    bag: int
    agent: int | None = None
    good: int | None = None


@dataclass(frozen=True)
class Transcript:
    """Ordered log of one run, sufficient to re-check its structure."""

    num_agents: int
    num_goods: int
    reductions: tuple[ReductionEvent, ...]
    bag_events: tuple[BagEvent, ...]
    phase2_agents: frozenset[int]
    phase2_goods: frozenset[int]
    initial_bags: tuple[frozenset[int], ...]
    ran_out_of_goods: bool
    satisfied: tuple[bool, ...]

    def reduction_types(self) -> tuple[int, ...]:
        return tuple(e.type for e in self.reductions)


def _reduction_shapes(goods: set[int], agents_left: int) -> list[frozenset[int]]:
    k = agents_left
    return [
        ord_st(goods, {1}),
        ord_st(goods, {k, k + 1}),
        ord_st(goods, {2 * k - 1, 2 * k, 2 * k + 1}),
        ord_st(goods, {1, 2 * k + 1}),
    ]


def run_rbf(
    responder: ValueResponder,
    n: int,
    m: int,
    thresholds: ThresholdList,
    ranking: PriorityRanking | None = None,
    fill_bag_chooser: Callable[[list[int]], int] | None = None,
) -> tuple[Allocation, Transcript]:
    """Two phases: order-statistic reductions, then bag filling.

    Phase 1 repeatedly finds the lexicographically smallest (shape, rank)
    pair such that the ranked agent likes the shape's bundle, hands it over,
    and removes both. Phase 2 pairs the 2|N| most valuable remaining goods
    into |N| bags and serves the smallest-rank agent liking any bag; when
    nobody likes anything, the most valuable loose good goes into the bag
    picked by ``fill_bag_chooser`` (lowest index by default). If the loose
    goods run out, the leftover bags go to the remaining agents in rank
    order and the run is flagged, not failed.

    When the responder is truthful, the instance must be ordered with every
    agent valuing all goods at exactly n (unit shares); this is validated.
    """
    if n < 1:
        raise InputError(f"n must be >= 1, got {n}")
    if m < 0:
        raise InputError(f"m must be >= 0, got {m}")
    if len(thresholds) != n:
        raise InputError(f"expected {n} thresholds, got {len(thresholds)}")
    if thresholds.taus and thresholds.taus[-1] <= 0:
        raise InputError("all thresholds must be positive for this allocator")
    ranking = ranking if ranking is not None else PriorityRanking.identity(n)
    if ranking.num_agents != n:
        raise InputError(f"ranking covers {ranking.num_agents} agents, expected {n}")
    if isinstance(responder, TruthfulResponder):
        _validate_truthful_input(responder.instance, n, m)

    by_rank = ranking.agents_by_rank()
    tau_of = {agent: thresholds.taus[rank] for rank, agent in enumerate(by_rank)}

    bundles: list[frozenset[int]] = [frozenset() for _ in range(n)]
    satisfied = [False] * n
    agents_left = set(range(n))
    goods_left = set(range(m))
    reductions: list[ReductionEvent] = []

    # Phase 1: reductions.
    while agents_left and goods_left:
        shapes = _reduction_shapes(goods_left, len(agents_left))
        hit = None
        for shape_idx, shape in enumerate(shapes, start=1):
            if not shape:
                continue
            for agent in by_rank:
                if agent not in agents_left:
                    continue
                if responder.value(agent, shape) >= tau_of[agent]:
                    hit = (shape_idx, agent, shape)
                    break
            if hit:
                break
        if hit is None:
            break
        shape_idx, agent, shape = hit
        reductions.append(
            ReductionEvent(shape_idx, shape, agent, len(agents_left), len(goods_left))
        )
        bundles[agent] = shape
        satisfied[agent] = True
        agents_left.remove(agent)
        goods_left -= shape

    phase2_agents = frozenset(agents_left)
    phase2_goods = frozenset(goods_left)

    # Phase 2: bag filling over the surviving goods.
    bag_events: list[BagEvent] = []
    initial_bags: tuple[frozenset[int], ...] = ()
    ran_out = False
    if agents_left:
        k = len(agents_left)
        if len(goods_left) < 2 * k:
            raise GuaranteeViolation(
                f"{len(goods_left)} goods left for {k} agents; a normalized "
                f"input guarantees at least {2 * k}"
            )
        ranked_goods = sorted(goods_left)
        bags = [
            {ranked_goods[i], ranked_goods[2 * k - 1 - i]} for i in range(k)
        ]
        initial_bags = tuple(frozenset(b) for b in bags)
        loose = ranked_goods[2 * k:]  # most valuable first
        open_bags = list(range(k))
        waiting = [a for a in by_rank if a in agents_left]
        while waiting:
            assert len(waiting) == len(open_bags)
            hit = None
            for agent in waiting:
                for b in open_bags:
                    if responder.value(agent, frozenset(bags[b])) >= tau_of[agent]:
                        hit = (agent, b)
                        break
                if hit:
                    break
            if hit is not None:
                agent, b = hit
                bundles[agent] = frozenset(bags[b])
                satisfied[agent] = True
                waiting.remove(agent)
                open_bags.remove(b)
                bag_events.append(BagEvent("assign", b, agent=agent))
            elif loose:
                g = loose.pop(0)
                b = open_bags[0] if fill_bag_chooser is None else fill_bag_chooser(list(open_bags))
                if b not in open_bags:
                    raise InputError(f"fill_bag_chooser picked a closed bag {b}")
                bags[b].add(g)
                bag_events.append(BagEvent("fill", b, good=g))
            else:
                ran_out = True
                for agent, b in zip(waiting, open_bags):
                    bundles[agent] = frozenset(bags[b])
                    bag_events.append(BagEvent("leftover", b, agent=agent))
                break
        unallocated = frozenset(loose)
    else:
        unallocated = frozenset(goods_left)

    alloc = Allocation(tuple(bundles), unallocated)
    transcript = Transcript(
        num_agents=n,
        num_goods=m,
        reductions=tuple(reductions),
        bag_events=tuple(bag_events),
        phase2_agents=phase2_agents,
        phase2_goods=phase2_goods,
        initial_bags=initial_bags,
        ran_out_of_goods=ran_out,
        satisfied=tuple(satisfied),
    )
    return alloc, transcript


def run_rbf_truthful(
    inst: Instance,
    thresholds: ThresholdList,
    ranking: PriorityRanking | None = None,
) -> tuple[Allocation, Transcript]:
    """Run the allocator on a concrete ordered unit-share instance."""
    return run_rbf(
        TruthfulResponder(inst), inst.num_agents, inst.num_goods, thresholds, ranking
    )


def _validate_truthful_input(inst: Instance, n: int, m: int) -> None:
    if inst.num_agents != n or inst.num_goods != m:
        raise InputError(
            f"responder instance is {inst.num_agents}x{inst.num_goods}, "
            f"engine was told {n}x{m}"
        )
    for i in range(n):
        row = inst.valuations[i]
        for g in range(m - 1):
            if row[g] < row[g + 1]:
                raise InputError(f"instance is not ordered (agent {i}, good {g + 1})")
        if inst.total_value(i) != n:
            raise InputError(
                f"agent {i} values all goods at {inst.total_value(i)}, expected {n} "
                f"(instance must be unit-normalized)"
            )
