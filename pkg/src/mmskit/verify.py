"""Cross-cutting checkers used by tests and the CLI.

Guarantee checks compare an allocation against the exact oracle; transcript
checks re-verify the structural facts every truthful run must satisfy; the
threshold-equivalence expansion converts between "d bundles" guarantees and
ranked-threshold guarantees.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from .core import (
    Allocation,
    Instance,
    Partition,
    PriorityRanking,
    ThresholdList,
    bundle_value,
)
from .errors import InputError
from . import oracle
from .rbf import Transcript, ord_st

_REDUCTION_PATTERN = re.compile(r"^(1*2*4*)(32*4*)*$")


@dataclass(frozen=True)
class AgentCheck:
    agent: int
    value: Fraction
    target: Fraction
    ok: bool


@dataclass(frozen=True)
class GuaranteeReport:
    checks: tuple[AgentCheck, ...]

    @property
    def all_ok(self) -> bool:
        return all(c.ok for c in self.checks)


def check_1_out_of_d(
    inst: Instance, alloc: Allocation, d: int, node_budget: int | None = None
) -> GuaranteeReport:
    """Per-agent exact comparison of bundle value against the d-bundle share."""
    if alloc.num_agents != inst.num_agents:
        raise InputError(
            f"allocation has {alloc.num_agents} bundles, instance {inst.num_agents} agents"
        )
    checks = []
    for i in range(inst.num_agents):
        share = oracle.mms(inst, i, d, node_budget=node_budget).value
        value = bundle_value(inst, i, alloc.bundles[i])
        checks.append(AgentCheck(i, value, share, value >= share))
    return GuaranteeReport(tuple(checks))


def check_t_mms(
    inst: Instance,
    alloc: Allocation,
    ranking: PriorityRanking,
    thresholds: ThresholdList,
    node_budget: int | None = None,
) -> GuaranteeReport:
    """Per-agent exact comparison against tau_rank times the n-bundle share."""
    n = inst.num_agents
    if alloc.num_agents != n or ranking.num_agents != n or len(thresholds) != n:
        raise InputError("allocation, ranking and thresholds must match the instance")
    checks = []
    for i in range(n):
        share = oracle.mms(inst, i, n, node_budget=node_budget).value
        target = thresholds.taus[ranking.rank_of[i]] * share
        value = bundle_value(inst, i, alloc.bundles[i])
        checks.append(AgentCheck(i, value, target, value >= target))
    return GuaranteeReport(tuple(checks))


@dataclass(frozen=True)
class TranscriptReport:
    violations: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


def check_transcript(tr: Transcript) -> TranscriptReport:
    """Re-verify the structural facts of a truthful run.

    Checks, in order: the reduction type sequence matches (1*2*4*)(32*4*)*;
    from the end of the leading type-1 block on, at least twice as many goods
    as agents remain at every step; and every good taken by a type-2 (resp.
    type-3) reduction ranks strictly below the |N|-th (resp. 2|N|-th) most
    valuable good that survives all reductions.
    """
    violations: list[str] = []
    types = "".join(str(t) for t in tr.reduction_types())
    if not _REDUCTION_PATTERN.match(types):
        violations.append(
            f"reduction sequence {types or '(empty)'} does not match (1*2*4*)(32*4*)*"
        )

    last_type1 = max((k for k, e in enumerate(tr.reductions) if e.type == 1), default=-1)
    for k, event in enumerate(tr.reductions):
        if k <= last_type1:
            continue
        if event.goods_before < 2 * event.agents_before:
            violations.append(
                f"reduction {k}: only {event.goods_before} goods for "
                f"{event.agents_before} agents after the type-1 block"
            )
    if tr.phase2_agents and len(tr.phase2_goods) < 2 * len(tr.phase2_agents):
        violations.append(
            f"phase 2 started with {len(tr.phase2_goods)} goods for "
            f"{len(tr.phase2_agents)} agents"
        )

    if tr.phase2_agents:
        n_f = len(tr.phase2_agents)
        type2_cut = ord_st(tr.phase2_goods, {n_f})
        type3_cut = ord_st(tr.phase2_goods, {2 * n_f})
        cut2 = max(type2_cut) if type2_cut else None
        cut3 = max(type3_cut) if type3_cut else None
        for k, event in enumerate(tr.reductions):
            if event.type == 2 and cut2 is not None:
                bad = [g for g in event.bundle if g <= cut2]
                if bad:
                    violations.append(
                        f"type-2 reduction {k} took goods {sorted(bad)} ranked at or "
                        f"above the surviving cutoff {cut2}"
                    )
            if event.type == 3 and cut3 is not None:
                bad = [g for g in event.bundle if g <= cut3]
                if bad:
                    violations.append(
                        f"type-3 reduction {k} took goods {sorted(bad)} ranked at or "
                        f"above the surviving cutoff {cut3}"
                    )
    return TranscriptReport(tuple(violations))


def equivalence_expand(inst: Instance, d: int) -> tuple[Instance, ThresholdList]:
    """Append d - n dummy agents (all-zero valuations) and thresholds
    (1, ..., 1, 0, ..., 0) with n ones.

    Under the identity ranking, an allocation of the expansion meets these
    thresholds exactly when its first n bundles give every original agent
    her d-bundle share.
    """
    n = inst.num_agents
    if d < n:
        raise InputError(f"d must be >= n = {n}, got {d}")
    zero_row = (Fraction(0),) * inst.num_goods
    rows = inst.valuations + (zero_row,) * (d - n)
    taus = (Fraction(1),) * n + (Fraction(0),) * (d - n)
    return Instance(rows, inst.num_goods), ThresholdList(taus)


# ---------------------------------------------------------------------------
# Structural facts of ordered unit-share instances


def check_unit_share_structure(
    inst: Instance, d: int, witnesses: tuple[Partition, ...] | None = None
) -> tuple[str, ...]:
    """Violations of the ordered d-normalized structure facts, empty if none.

    Needs m >= 2d. Checks per agent: total value d (and witness parts worth
    exactly 1 when given); the top good worth <= 1; the middle pair {d, d+1}
    worth <= 1; good d+1 worth <= 1/2; and every tail of the nested pairs
    C_k = {k, 2d-k+1} summing to at most its length.
    """
    n, m = inst.num_agents, inst.num_goods
    if m < 2 * d:
        raise InputError(f"need at least 2d = {2 * d} goods, got {m}")
    violations: list[str] = []
    for i in range(n):
        row = inst.valuations[i]
        if inst.total_value(i) != d:
            violations.append(f"agent {i}: total value {inst.total_value(i)} != {d}")
        if witnesses is not None:
            for part in witnesses[i].parts:
                pv = bundle_value(inst, i, part)
                if pv != 1:
                    violations.append(f"agent {i}: witness part worth {pv} != 1")
        if row[0] > 1:
            violations.append(f"agent {i}: top good worth {row[0]} > 1")
        middle = row[d - 1] + row[d]
        if middle > 1:
            violations.append(f"agent {i}: middle pair worth {middle} > 1")
        if row[d] > Fraction(1, 2):
            violations.append(f"agent {i}: good at position {d} worth {row[d]} > 1/2")
        tail = Fraction(0)
        for k in range(d, 0, -1):  # C_k pairs from the middle outwards
            tail += row[k - 1] + row[2 * d - k]
            if tail > d - k + 1:
                violations.append(
                    f"agent {i}: pairs {k}..{d} sum to {tail} > {d - k + 1}"
                )
    return tuple(violations)


def check_bag_pair_bounds(inst: Instance) -> tuple[str, ...]:
    """Violations of the bag-pair fact on ordered unit-share instances.

    For every k, if the pair {k, 2n+1-k} is worth more than 1 to an agent,
    then its bottom good is worth at most 1/3 and its top more than 2/3.
    """
    n, m = inst.num_agents, inst.num_goods
    if m < 2 * n:
        raise InputError(f"need at least 2n = {2 * n} goods, got {m}")
    violations: list[str] = []
    for i in range(n):
        row = inst.valuations[i]
        for k in range(1, n + 1):
            top, bottom = row[k - 1], row[2 * n - k]
            if top + bottom > 1:
                if bottom > Fraction(1, 3):
                    violations.append(
                        f"agent {i}, pair {k}: bottom worth {bottom} > 1/3 "
                        f"despite pair value {top + bottom} > 1"
                    )
                if top <= Fraction(2, 3):
                    violations.append(
                        f"agent {i}, pair {k}: top worth {top} <= 2/3 "
                        f"despite pair value {top + bottom} > 1"
                    )
    return tuple(violations)
