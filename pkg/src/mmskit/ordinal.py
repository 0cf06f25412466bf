"""Paired-bag initialization and sequential bag filling.

``run_ordinal`` expects an ordered instance whose unit of value is one
bundle of each agent's share partition (so the acceptance test inside each
round is ``value >= 1``). ``run_1_out_of_d`` wraps it with the full
transform pipeline and gives every agent of an arbitrary instance her exact
share value for d = 4 * ceil(n / 3) bundles.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from fractions import Fraction

from .core import Allocation, Instance, Partition, bundle_value
from .errors import GuaranteeViolation, InputError
from . import oracle
from .transform import (
    PipelineRecord,
    normalize,
    order,
    pad_agents_to_multiple_of_3,
    pad_goods,
    permute_partition,
    reinstate,
    unpick,
)


@dataclass(frozen=True)
class OrdinalRun:
    """Trace of one bag-filling run, for invariant checking and replay."""

    initial_bags: tuple[frozenset[int], ...]
    final_bags: tuple[frozenset[int], ...]
    assignment: tuple[int | None, ...]  # bag index -> agent
    fill_order: tuple[tuple[int, int], ...]  # (bag, good) in consumption order
    terminated_early: bool
    satisfied: tuple[bool, ...]  # per agent: got a bag it values >= 1


def is_ordered(inst: Instance) -> bool:
    return all(
        inst.value(i, g) >= inst.value(i, g + 1)
        for i in range(inst.num_agents)
        for g in range(inst.num_goods - 1)
    )


def _validate_normalized(inst: Instance, d: int | None, witnesses) -> None:
    if witnesses is not None:
        if len(witnesses) != inst.num_agents:
            raise InputError("one witness partition per agent required")
        if d is None:
            d = witnesses[0].d
        for i, w in enumerate(witnesses):
            if w.ground_set != frozenset(range(inst.num_goods)):
                raise InputError(f"witness of agent {i} does not cover all goods")
            for part in w.parts:
                if bundle_value(inst, i, part) != 1:
                    raise InputError(
                        f"witness part of agent {i} has value "
                        f"{bundle_value(inst, i, part)}, expected 1"
                    )
    for i in range(inst.num_agents):
        if inst.total_value(i) != d:
            raise InputError(
                f"agent {i} values all goods at {inst.total_value(i)}, "
                f"expected {d} for a {d}-normalized instance"
            )


def run_ordinal(
    inst: Instance,
    expected_d: int | None = None,
    witnesses: tuple[Partition, ...] | None = None,
) -> tuple[Allocation, OrdinalRun]:
    """Initialize bag k with goods {k, 2n-1-k} and fill bags left to right.

    Each round appends the next unconsumed good (in non-increasing value
    order) to the current bag until some agent without a bag values it at
    least 1; the bag goes to the lowest-index such agent. When goods run out
    the run is flagged ``terminated_early`` and the remaining bags go to the
    remaining agents in index order. After a complete run, the never-consumed
    suffix of goods is appended to the bag of the last round.

    The instance must be ordered with m >= 2n. Pass ``expected_d`` and/or
    ``witnesses`` to also verify normalization (the full pipeline does).
    """
    n, m = inst.num_agents, inst.num_goods
    if n < 1:
        raise InputError("need at least one agent")
    if m < 2 * n:
        raise InputError(f"need at least 2n = {2 * n} goods, got {m}")
    if not is_ordered(inst):
        raise InputError("instance is not ordered (some agent's values increase)")
    if expected_d is not None or witnesses is not None:
        _validate_normalized(inst, expected_d, witnesses)

    initial = tuple(frozenset({k, 2 * n - 1 - k}) for k in range(n))
    final = [set(b) for b in initial]
    assignment: list[int | None] = [None] * n
    unassigned = list(range(n))
    fills: list[tuple[int, int]] = []
    j = 2 * n  # next unconsumed good
    terminated_early = False

    for k in range(n):
        while True:
            liker = next(
                (i for i in unassigned if bundle_value(inst, i, final[k]) >= 1), None
            )
            if liker is not None:
                assignment[k] = liker
                unassigned.remove(liker)
                break
            if j >= m:
                terminated_early = True
                break
            final[k].add(j)
            fills.append((k, j))
            j += 1
        if terminated_early:
            break

    satisfied = [False] * n
    for k, a in enumerate(assignment):
        if a is not None:
            satisfied[a] = True
    if terminated_early:
        # Hand the untouched bags to the remaining agents, in index order.
        first_open = assignment.index(None)
        for k, agent in zip(range(first_open, n), unassigned):
            assignment[k] = agent
    else:
        final[n - 1] |= set(range(j, m))

    bundles: list[frozenset[int]] = [frozenset() for _ in range(n)]
    for k, a in enumerate(assignment):
        if a is not None:
            bundles[a] = frozenset(final[k])
    alloc = Allocation(tuple(bundles))
    run = OrdinalRun(
        initial_bags=initial,
        final_bags=tuple(frozenset(b) for b in final),
        assignment=tuple(assignment),
        fill_order=tuple(fills),
        terminated_early=terminated_early,
        satisfied=tuple(satisfied),
    )
    return alloc, run


@dataclass(frozen=True)
class OneOutOfDResult:
    """Allocation of the original instance plus pipeline diagnostics."""

    allocation: Allocation
    d: int
    record: PipelineRecord | None
    run: OrdinalRun | None
    guarantees: tuple[tuple[Fraction, Fraction], ...] | None  # (value, share) per agent


def _positive_count(inst: Instance, agent: int) -> int:
    return sum(1 for g in range(inst.num_goods) if inst.value(agent, g) > 0)


def run_1_out_of_d(
    inst: Instance,
    node_budget: int | None = None,
    guarantee_check: bool = True,
    strict: bool = True,
) -> OneOutOfDResult:
    """Give every agent at least her share value for d = 4 * ceil(n / 3).

    Composes: drop agents with a zero share target, clone agent 0 up to a
    multiple of 3 agents, normalize, order, pad goods to 2n, run the bag
    filler, then pick goods back and undo the padding. The final allocation
    is compared against the exact oracle share of every original agent
    unless ``guarantee_check`` is off; with ``strict`` off a violation only
    warns instead of raising (it should never fire either way).
    """
    n = inst.num_agents
    if n < 1:
        raise InputError("need at least one agent")
    d_target = 4 * ((n + 2) // 3)

    # An agent's d-bundle share is positive iff she values >= d goods positively.
    survivors = tuple(i for i in range(n) if _positive_count(inst, i) >= d_target)
    dropped = frozenset(range(n)) - set(survivors)

    record = None
    run = None
    if n == 1:
        allocation = Allocation((frozenset(range(inst.num_goods)),))
    elif not survivors:
        allocation = Allocation(
            tuple(frozenset() for _ in range(n)), frozenset(range(inst.num_goods))
        )
    elif len(survivors) == 1:
        the_one = survivors[0]
        bundles = [frozenset()] * n
        bundles[the_one] = frozenset(range(inst.num_goods))
        allocation = Allocation(tuple(bundles))
    else:
        rows = tuple(inst.valuations[i] for i in survivors)
        base = Instance(rows, inst.num_goods)
        padded, duplicated = pad_agents_to_multiple_of_3(base)
        n_run = padded.num_agents
        d_run = 4 * n_run // 3
        normalized, witnesses, dropped_again = normalize(padded, d_run, node_budget)
        if dropped_again:
            raise GuaranteeViolation(
                "an agent with a positive share target lost it during "
                f"normalization: {sorted(dropped_again)}"
            )
        normalized, dummies = pad_goods(normalized, 2 * n_run)
        ordered, perms = order(normalized)
        # Witnesses predate good padding; rewrite them in sorted positions and
        # absorb the dummy positions into the first part (zero value).
        ordered_witnesses = tuple(
            _absorb_dummies(permute_partition(w, perms[i]), ordered.num_goods)
            for i, w in enumerate(witnesses)
        )
        record = PipelineRecord(
            original=inst,
            d_target=d_target,
            d_run=d_run,
            survivors=survivors,
            dropped=dropped,
            duplicated_agents=duplicated,
            dummy_goods=dummies,
            normalized=normalized,
            witnesses=witnesses,
            ordered=ordered,
            sort_permutations=perms,
        )
        ordered_alloc, run = run_ordinal(ordered, expected_d=d_run, witnesses=ordered_witnesses)
        if run.terminated_early:
            raise GuaranteeViolation(
                "bag filling ran out of goods on a normalized ordered input; "
                "this contradicts the existence guarantee"
            )
        allocation = reinstate(unpick(ordered_alloc, record), record)

    guarantees = None
    if guarantee_check:
        pairs = []
        for i in range(n):
            share = oracle.mms(inst, i, d_target, node_budget=node_budget).value
            value = bundle_value(inst, i, allocation.bundles[i])
            pairs.append((value, share))
            if value < share:
                message = (
                    f"agent {i} received {value}, below her {d_target}-bundle "
                    f"share {share}"
                )
                if strict:
                    raise GuaranteeViolation(message)
                warnings.warn(message)
        guarantees = tuple(pairs)

    return OneOutOfDResult(allocation, d_target, record, run, guarantees)


def _absorb_dummies(partition: Partition, num_goods: int) -> Partition:
    covered = partition.ground_set
    missing = frozenset(range(num_goods)) - covered
    if not missing:
        return partition
    parts = list(partition.parts)
    parts[0] = parts[0] | missing
    return Partition(tuple(parts))
