"""Hard instance families and the scripted-responder harness.

Three families: ``ordinalTight`` (identical agents that leave one bag just
short of a full share under bag filling), ``hard1`` (a concrete instance
that caps what any rank beyond 2 can be promised), and ``hard2`` (a scripted
run in which only the target agent answers truthfully, capping what can be
proven when the other agents' answers are unconstrained).

Family parameters follow the 1-based rank convention of the threshold list:
``i`` is a rank in 1..n. Reported agents are 0-indexed like everywhere else.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

from .core import (
    Allocation,
    Instance,
    Partition,
    PriorityRanking,
    ThresholdList,
    bundle_value,
)
from .errors import GuaranteeViolation, InputError
from .ordinal import run_ordinal
from .rbf import Transcript, TruthfulResponder, run_rbf


@dataclass(frozen=True)
class HardInstanceSpec:
    """Which family to build, at which size, aimed at which rank."""

    family: str  # "ordinalTight" | "hard1" | "hard2"
    n: int
    i: int | None = None  # target rank, 1-based (hard1 needs 3 <= i <= n)
    k1: int | None = None
    k2: int | None = None
    t: int | None = None

    def __post_init__(self):
        if self.family not in ("ordinalTight", "hard1", "hard2"):
            raise InputError(f"unknown family {self.family!r}")
        if self.n < 2:
            raise InputError(f"n must be >= 2, got {self.n}")
        if self.family == "hard1":
            if self.n < 3 or self.i is None or not 3 <= self.i <= self.n:
                raise InputError("hard1 needs n >= 3 and a target rank 3 <= i <= n")
        if self.family == "hard2":
            if self.i is None or self.k1 is None or self.k2 is None or self.t is None:
                raise InputError("hard2 needs i, k1, k2, t")
            if not 2 <= self.i <= self.n:
                raise InputError("hard2 needs a target rank 2 <= i <= n")
            if self.k1 < 1 or self.k2 < 0 or self.t < 3:
                raise InputError("hard2 needs k1 >= 1, k2 >= 0, t >= 3")
            if self.k1 + self.k2 >= self.i or 2 * self.k1 + self.k2 > self.n:
                raise InputError("hard2 needs k1 + k2 < i and 2*k1 + k2 <= n")


# ---------------------------------------------------------------------------
# ordinalTight


@dataclass(frozen=True)
class OrdinalTightFamily:
    instance: Instance
    d: int
    witness: Partition  # shared d-share partition with every part worth 1


def gen_ordinal_tight(n: int) -> OrdinalTightFamily:
    """All agents share one valuation that defeats bag filling at
    d = floor((4n-2)/3): every initial bag is worth exactly 1 - 1/(3n)."""
    if n < 2:
        raise InputError(f"n must be >= 2, got {n}")
    d = (4 * n - 2) // 3
    m = 2 * n + 1 + 3 * (d - n)
    row = tuple(
        Fraction(2, 3) - Fraction((j + 2) // 2, 3 * n) if j < 2 * n else Fraction(1, 3)
        for j in range(m)
    )
    inst = Instance((row,) * n, m)
    # One partition with every part worth exactly 1 (1-indexed construction).
    parts: list[frozenset[int]] = []
    for k in range(1, n):
        parts.append(frozenset({k - 1, 2 * n - 1 - k - 1}))
    for k in range(n, d + 1):
        parts.append(
            frozenset({k + n - 1 - 1, 2 * d + n - k - 1, 2 * d - n + k + 1 - 1})
        )
    witness = Partition(tuple(parts))
    for part in witness.parts:
        if bundle_value(inst, 0, part) != 1:
            raise GuaranteeViolation("tight-family witness part is not worth 1")
    if witness.ground_set != frozenset(range(m)):
        raise GuaranteeViolation("tight-family witness does not cover all goods")
    return OrdinalTightFamily(inst, d, witness)


# ---------------------------------------------------------------------------
# hard1


@dataclass(frozen=True)
class Hard1Family:
    instance: Instance
    alpha: Fraction  # the cap 3n/(3n+i-2) on rank i's threshold
    epsilon: Fraction
    witness: Partition  # n-share partition of the rich agents, parts worth 1
    rich_agents: tuple[int, ...]  # agents valuing goods like the target rank


def gen_hard1(n: int, i: int, epsilon: Fraction) -> Hard1Family:
    """Agents 0..i-1 share a valuation whose every reduction shape is worth
    at most alpha_i; the rest value every good at epsilon.

    ``epsilon`` must be a unit fraction (the flat agents own n/epsilon goods).
    """
    spec = HardInstanceSpec("hard1", n, i=i)
    epsilon = Fraction(epsilon)
    if epsilon <= 0 or epsilon.numerator != 1:
        raise InputError(f"epsilon must be a positive unit fraction, got {epsilon}")
    if n / epsilon < 2 * n + i - 1:
        raise InputError("epsilon too large: flat agents need >= 2n+i-1 goods")
    delta = Fraction(1, 3 * n + i - 2)
    alpha = 3 * n * delta
    m = int(n / epsilon)
    rich_row = tuple(
        (2 * n - (j + 2) // 2) * delta
        if j < 2 * n
        else (n * delta if j < 2 * n + i - 1 else Fraction(0))
        for j in range(m)
    )
    flat_row = (epsilon,) * m
    rows = tuple(rich_row for _ in range(i)) + tuple(flat_row for _ in range(n - i))
    inst = Instance(rows, m)

    # Rich agents' n-share partition with every part worth exactly 1
    # (1-indexed): pairs {j, 2k+1-j} for j <= k, then triples
    # {k+j, 2n+k+1-j, 2n+j-k} with one positive tail good each.
    k = n - i + 1
    parts = [frozenset({j - 1, 2 * k + 1 - j - 1}) for j in range(1, k + 1)]
    parts += [
        frozenset({k + j - 1, 2 * n + k + 1 - j - 1, 2 * n + j - k - 1})
        for j in range(k + 1, n + 1)
    ]
    tail = frozenset(range(2 * n + i - 1, m))  # zero-valued for rich agents
    if tail:
        parts[0] = parts[0] | tail
    witness = Partition(tuple(parts))
    for part in witness.parts:
        if bundle_value(inst, 0, part) != 1:
            raise GuaranteeViolation("hard1 witness part is not worth 1")
    if witness.ground_set != frozenset(range(m)):
        raise GuaranteeViolation("hard1 witness does not cover all goods")
    return Hard1Family(inst, alpha, epsilon, witness, tuple(range(i)))


def _unit_fraction_below(x: Fraction) -> Fraction:
    """The largest 1/k strictly below x."""
    if x <= 0:
        raise InputError(f"need a positive bound, got {x}")
    k = x.denominator // x.numerator + 1
    return Fraction(1, k)


# ---------------------------------------------------------------------------
# hard2


class ScriptedHard2Responder:
    """Answers for everyone: truthful for the target agent, scripted otherwise.

    Non-target agents decline every reduction shape. Agents holding the
    k1 + k2 best ranks claim any bag containing a top good; everyone else
    declines bags until one holds more than (n - k1 - k2) * t + 2 filler
    goods (with the round-robin filler below, that never happens, so the run
    exhausts the fillers and ends on the leftover path).
    """

    def __init__(self, family: "Hard2Family"):
        self.family = family
        n = family.n
        self.decline_shapes = frozenset(
            (
                frozenset({0}),
                frozenset({n - 1, n}),
                frozenset({2 * n - 2, 2 * n - 1, 2 * n}),
                frozenset({0, 2 * n}),
            )
        )

    def value(self, agent: int, goods: frozenset[int]) -> Fraction:
        fam = self.family
        if agent == fam.target_agent:
            return bundle_value(fam.instance, 0, goods)
        if goods in self.decline_shapes:
            return Fraction(0)
        rich = fam.k1 + fam.k2
        if agent < rich:
            return Fraction(1) if any(g < rich for g in goods) else Fraction(0)
        filler_count = sum(1 for g in goods if g >= 2 * fam.n)
        cap = (fam.n - fam.k1 - fam.k2) * fam.t + 2
        return Fraction(1) if filler_count > cap else Fraction(0)


@dataclass(frozen=True)
class Hard2Family:
    n: int
    i: int  # target rank, 1-based
    k1: int
    k2: int
    t: int
    alpha: Fraction
    epsilon: Fraction
    target_agent: int  # 0-indexed; holds rank i under the identity ranking
    instance: Instance  # single row: the target agent's valuation, ordered
    witness: Partition  # her n-share partition, four groups of unit parts

    def make_responder(self) -> ScriptedHard2Responder:
        return ScriptedHard2Responder(self)

    def make_fill_chooser(self) -> Callable[[list[int]], int]:
        """Round-robin over open bags, so filler goods spread evenly."""
        state = {"last": -1}

        def choose(open_bags: list[int]) -> int:
            later = [b for b in open_bags if b > state["last"]]
            pick = later[0] if later else open_bags[0]
            state["last"] = pick
            return pick

        return choose


def gen_hard2_responders(n: int, i: int, k1: int, k2: int, t: int) -> Hard2Family:
    """Build the target valuation and scripted answers for the oblivious cap.

    The target agent owns k1+k2 goods worth alpha = 1 - k1/(3(n-k2)), k2
    goods worth 1-alpha, 2n-k1-2k2 goods worth 1/3, and (n-k1-k2)^2 * t
    goods worth epsilon = 1/(3t(n-k2)); her share partition below certifies
    that this valuation is unit-normalized.
    """
    HardInstanceSpec("hard2", n, i=i, k1=k1, k2=k2, t=t)
    alpha = 1 - Fraction(k1, 3 * (n - k2))
    epsilon = Fraction(1, 3 * t * (n - k2))
    filler_total = (n - k1 - k2) ** 2 * t
    thirds = 2 * n - k1 - 2 * k2
    values = (
        [alpha] * (k1 + k2)
        + [Fraction(1, 3)] * thirds
        + [1 - alpha] * k2
        + [epsilon] * filler_total
    )
    m = len(values)
    row = tuple(values)
    inst = Instance((row,), m)
    if sum(row) != n:
        raise GuaranteeViolation("hard2 target valuation does not total n")

    # Four groups of unit parts. Good layout: alphas at [0, k1+k2), thirds at
    # [k1+k2, 2n-k2), complements at [2n-k2, 2n), fillers from 2n on.
    parts: list[frozenset[int]] = []
    fillers = list(range(2 * n, m))
    for j in range(k1):  # one alpha + k1*t fillers
        chunk, fillers = fillers[: k1 * t], fillers[k1 * t:]
        parts.append(frozenset({j} | set(chunk)))
    for j in range(k2):  # one alpha + its complement
        parts.append(frozenset({k1 + j, 2 * n - k2 + j}))
    third_ids = list(range(k1 + k2, 2 * n - k2))
    for j in range(k1):  # three thirds
        parts.append(frozenset(third_ids[3 * j: 3 * j + 3]))
    rest_thirds = third_ids[3 * k1:]
    for j in range(n - 2 * k1 - k2):  # two thirds + t*(n-k2) fillers
        chunk, fillers = fillers[: t * (n - k2)], fillers[t * (n - k2):]
        parts.append(frozenset(set(rest_thirds[2 * j: 2 * j + 2]) | set(chunk)))
    if fillers or len(rest_thirds) != 2 * (n - 2 * k1 - k2):
        raise GuaranteeViolation("hard2 partition does not use every good exactly once")
    witness = Partition(tuple(parts))
    for part in witness.parts:
        if bundle_value(inst, 0, part) != 1:
            raise GuaranteeViolation("hard2 witness part is not worth 1")
    if witness.ground_set != frozenset(range(m)):
        raise GuaranteeViolation("hard2 witness does not cover all goods")
    return Hard2Family(n, i, k1, k2, t, alpha, epsilon, i - 1, inst, witness)


# ---------------------------------------------------------------------------
# Failure demonstrations


@dataclass(frozen=True)
class FailureReport:
    family: str
    n: int
    thresholds: ThresholdList
    witness_agent: int  # 0-indexed agent whose value fell short
    witness_value: Fraction
    witness_target: Fraction
    unsatisfied: tuple[tuple[int, Fraction, Fraction], ...]
    reduction_count: int
    ran_out_of_goods: bool
    terminated_early: bool
    allocation: Allocation
    transcript: Transcript | None = None


def _hard1_thresholds(n: int, i: int, tau_i: Fraction) -> ThresholdList:
    return ThresholdList((Fraction(1),) * (i - 1) + (tau_i,) * (n - i + 1))


def demonstrate_failure(
    spec: HardInstanceSpec, thresholds: ThresholdList | None = None
) -> FailureReport:
    """Run the family's algorithm and report the agent who falls short.

    For hard1/hard2 the default thresholds put the target rank just above
    the family's cap (cap + 1/1000, and cap + 3*epsilon respectively); a
    custom list must keep the target rank strictly above the cap. Raises if
    no shortfall materializes, since that would contradict the construction.
    """
    if spec.family == "ordinalTight":
        return _demonstrate_ordinal_tight(spec)
    if spec.family == "hard1":
        return _demonstrate_hard1(spec, thresholds)
    return _demonstrate_hard2(spec, thresholds)


def _demonstrate_ordinal_tight(spec: HardInstanceSpec) -> FailureReport:
    fam = gen_ordinal_tight(spec.n)
    alloc, run = run_ordinal(fam.instance, expected_d=fam.d, witnesses=(fam.witness,) * spec.n)
    thresholds = ThresholdList.constant(spec.n, 1)
    unsatisfied = []
    for agent in range(spec.n):
        value = bundle_value(fam.instance, agent, alloc.bundles[agent])
        if value < 1:
            unsatisfied.append((agent, value, Fraction(1)))
    if not unsatisfied:
        raise GuaranteeViolation(
            "tight family produced a full-share allocation; construction broken"
        )
    first = unsatisfied[0]
    return FailureReport(
        family="ordinalTight",
        n=spec.n,
        thresholds=thresholds,
        witness_agent=first[0],
        witness_value=first[1],
        witness_target=first[2],
        unsatisfied=tuple(unsatisfied),
        reduction_count=0,
        ran_out_of_goods=False,
        terminated_early=run.terminated_early,
        allocation=alloc,
    )


def _demonstrate_hard1(
    spec: HardInstanceSpec, thresholds: ThresholdList | None
) -> FailureReport:
    n, i = spec.n, spec.i
    alpha = Fraction(3 * n, 3 * n + i - 2)
    if thresholds is None:
        thresholds = _hard1_thresholds(n, i, alpha + Fraction(1, 1000))
    tau_target = thresholds.taus[i - 1]
    if tau_target <= alpha:
        raise InputError(
            f"rank {i} threshold must exceed the family cap {alpha}, got {tau_target}"
        )
    epsilon = _unit_fraction_below(thresholds.taus[-1] / 3)
    fam = gen_hard1(n, i, epsilon)
    responder = TruthfulResponder(fam.instance)
    alloc, transcript = run_rbf(
        responder, n, fam.instance.num_goods, thresholds, PriorityRanking.identity(n)
    )
    unsatisfied = []
    for agent in fam.rich_agents:  # share value is 1 for every agent here
        value = bundle_value(fam.instance, agent, alloc.bundles[agent])
        if value < thresholds.taus[agent]:
            unsatisfied.append((agent, value, thresholds.taus[agent]))
    if not unsatisfied:
        raise GuaranteeViolation(
            "hard1 run satisfied every rich agent; construction broken"
        )
    first = unsatisfied[0]
    return FailureReport(
        family="hard1",
        n=n,
        thresholds=thresholds,
        witness_agent=first[0],
        witness_value=first[1],
        witness_target=first[2],
        unsatisfied=tuple(unsatisfied),
        reduction_count=len(transcript.reductions),
        ran_out_of_goods=transcript.ran_out_of_goods,
        terminated_early=False,
        allocation=alloc,
        transcript=transcript,
    )


def _demonstrate_hard2(
    spec: HardInstanceSpec, thresholds: ThresholdList | None
) -> FailureReport:
    n, i = spec.n, spec.i
    fam = gen_hard2_responders(n, i, spec.k1, spec.k2, spec.t)
    cap = fam.alpha + 2 * fam.epsilon
    if thresholds is None:
        tau_i = min(Fraction(1), fam.alpha + 3 * fam.epsilon)
        thresholds = ThresholdList((Fraction(1),) * (i - 1) + (tau_i,) * (n - i + 1))
    if thresholds.taus[i - 1] <= cap:
        raise InputError(
            f"rank {i} threshold must exceed the family cap {cap}, "
            f"got {thresholds.taus[i - 1]}"
        )
    alloc, transcript = run_rbf(
        fam.make_responder(),
        n,
        fam.instance.num_goods,
        thresholds,
        PriorityRanking.identity(n),
        fill_bag_chooser=fam.make_fill_chooser(),
    )
    value = bundle_value(fam.instance, 0, alloc.bundles[fam.target_agent])
    if value >= cap:
        raise GuaranteeViolation(
            f"scripted run gave the target agent {value} >= {cap}; "
            f"construction broken"
        )
    return FailureReport(
        family="hard2",
        n=n,
        thresholds=thresholds,
        witness_agent=fam.target_agent,
        witness_value=value,
        witness_target=thresholds.taus[i - 1],
        unsatisfied=((fam.target_agent, value, thresholds.taus[i - 1]),),
        reduction_count=len(transcript.reductions),
        ran_out_of_goods=transcript.ran_out_of_goods,
        terminated_early=False,
        allocation=alloc,
        transcript=transcript,
    )
