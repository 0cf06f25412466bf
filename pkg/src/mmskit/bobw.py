"""Randomized rank rotations and analytic bound verification.

The distribution layer runs the threshold allocator once per cyclic shift of
the priority ranking and aggregates exact per-agent expectations. The bound
layer certifies inequalities that mix exact rational sums with logarithms;
logarithms are enclosed in rational intervals (series with an explicit tail
bound) at 50+ decimal digits, so every certified comparison is a plain
rational comparison.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .core import Allocation, Instance, PriorityRanking, ThresholdList, bundle_value
from .errors import GuaranteeViolation, InputError
from .rbf import Transcript, run_rbf_truthful

ENCLOSURE_DIGITS = 55


# ---------------------------------------------------------------------------
# Rational log enclosures and decimal rendering


def ln_enclosure(p: int, q: int, digits: int = ENCLOSURE_DIGITS) -> tuple[Fraction, Fraction]:
    """Rational lower/upper bounds on ln(p/q) with width below 10**-digits.

    Uses ln(z) = 2 * atanh((z-1)/(z+1)) with a geometric tail bound, so both
    endpoints are certified. Requires p >= q >= 1.
    """
    if q < 1 or p < q:
        raise InputError(f"ln_enclosure needs p >= q >= 1, got {p}/{q}")
    if p == q:
        return Fraction(0), Fraction(0)
    x = Fraction(p - q, p + q)
    x2 = x * x
    tolerance = Fraction(1, 10 ** digits)
    term = x
    partial = Fraction(0)
    k = 0
    while True:
        partial += term / (2 * k + 1)
        k += 1
        term *= x2
        tail = 2 * term / ((2 * k + 1) * (1 - x2))
        if tail < tolerance:
            return 2 * partial, 2 * partial + tail


def fraction_to_decimal(value: Fraction, digits: int = 50) -> str:
    """Plain decimal rendering with ``digits`` digits after the point."""
    sign = "-" if value < 0 else ""
    value = abs(value)
    scaled = value.numerator * 10**digits // value.denominator
    whole, frac = divmod(scaled, 10**digits)
    return f"{sign}{whole}.{str(frac).zfill(digits)}"


def _reciprocal_range_sum(a: int, b: int) -> tuple[int, int]:
    """sum_{j=a}^{b} 1/j as an unreduced (numerator, denominator) pair."""
    if a > b:
        return 0, 1
    if a == b:
        return 1, a
    mid = (a + b) // 2
    p1, q1 = _reciprocal_range_sum(a, mid)
    p2, q2 = _reciprocal_range_sum(mid + 1, b)
    return p1 * q2 + p2 * q1, q1 * q2


# ---------------------------------------------------------------------------
# Rotation distribution


@dataclass(frozen=True)
class AllocationDistribution:
    """Uniform distribution over the n cyclic-rotation runs."""

    support: tuple[tuple[PriorityRanking, Allocation], ...]
    transcripts: tuple[Transcript, ...]
    ex_ante: tuple[Fraction, ...]
    ex_post_min: tuple[Fraction, ...]


def cyclic_rotation_distribution(
    inst: Instance, thresholds: ThresholdList
) -> AllocationDistribution:
    """Run the allocator once per cyclic shift of the ranking.

    Every agent holds each rank exactly once across the n runs, so her exact
    expected value is the plain average of her n bundle values.
    """
    n = inst.num_agents
    if n < 1:
        raise InputError("need at least one agent")
    support = []
    transcripts = []
    values: list[list[Fraction]] = [[] for _ in range(n)]
    for shift in range(n):
        ranking = PriorityRanking.rotation(n, shift)
        alloc, transcript = run_rbf_truthful(inst, thresholds, ranking)
        support.append((ranking, alloc))
        transcripts.append(transcript)
        for i in range(n):
            values[i].append(bundle_value(inst, i, alloc.bundles[i]))
    ex_ante = tuple(sum(vs, Fraction(0)) / n for vs in values)
    ex_post_min = tuple(min(vs) for vs in values)
    return AllocationDistribution(tuple(support), tuple(transcripts), ex_ante, ex_post_min)


def sample_allocation(
    dist: AllocationDistribution, seed: int
) -> tuple[PriorityRanking, Allocation]:
    """Draw one rotation uniformly, reproducibly from a 64-bit seed."""
    if not 0 <= seed < 2**64:
        raise InputError(f"seed must fit in 64 bits, got {seed}")
    index = random.Random(seed).randrange(len(dist.support))
    return dist.support[index]


# ---------------------------------------------------------------------------
# Average-threshold lower bound


def _gamma_sum_parts(n: int) -> tuple[int, int, int, Fraction]:
    """Split sum_i max(2n/(2n+i-1), floor) into its harmonic head and flat tail.

    Returns (K, p, q, floor): the first K ranks take the harmonic branch,
    whose sum is 2n * p/q with (p, q) unreduced.
    """
    floor = Fraction(3, 4) + Fraction(1, 12 * n)
    # 2n/(2n+i-1) >= floor  <=>  2n+i-1 <= 24n^2/(9n+1)
    t_max = (24 * n * n) // (9 * n + 1)
    K = min(n, max(0, t_max - 2 * n + 1))
    p, q = _reciprocal_range_sum(2 * n, 2 * n + K - 1)
    return K, p, q, floor


def gamma_lower_bound(n: int) -> tuple[Fraction, str]:
    """The exact average threshold and its certified transcendental floor.

    Returns (exact average, decimal string of the floor's upper enclosure)
    and asserts average >= 2*ln(4/3) + 1/4 + 1/(36n) rigorously.
    """
    if n < 1:
        raise InputError(f"n must be >= 1, got {n}")
    K, p, q, floor = _gamma_sum_parts(n)
    exact = (2 * n * Fraction(p, q) + (n - K) * floor) / n
    _, ln_hi = ln_enclosure(4, 3)
    bound_hi = 2 * ln_hi + Fraction(1, 4) + Fraction(1, 36 * n)
    if exact < bound_hi:
        raise GuaranteeViolation(
            f"average threshold {exact} fell below its floor for n={n}"
        )
    return exact, fraction_to_decimal(bound_hi)


def verify_gamma_bound_range(lo: int, hi: int) -> None:
    """Assert the gamma floor for every n in [lo, hi] without reducing the
    huge intermediate fractions (cross-multiplied comparisons)."""
    _, ln_hi = ln_enclosure(4, 3)
    for n in range(lo, hi + 1):
        K, p, q, floor = _gamma_sum_parts(n)
        rhs = n * (2 * ln_hi + Fraction(1, 4) + Fraction(1, 36 * n)) - (n - K) * floor
        if 2 * n * p * rhs.denominator < rhs.numerator * q:
            raise GuaranteeViolation(f"gamma floor fails at n={n}")


# ---------------------------------------------------------------------------
# Hard-family average upper bounds


def hard1_upper_bound(n: int) -> tuple[Fraction, str]:
    """Exact value of (1/n)(2 + sum_{i=3}^n 3n/(3n+i-2)) and its ceiling.

    Asserts the average is at most 3*ln(4/3) + 1/(2n) rigorously.
    """
    if n < 2:
        raise InputError(f"n must be >= 2, got {n}")
    p, q = _reciprocal_range_sum(3 * n + 1, 4 * n - 2)
    exact = (2 + 3 * n * Fraction(p, q)) / n
    ln_lo, _ = ln_enclosure(4, 3)
    bound_lo = 3 * ln_lo + Fraction(1, 2 * n)
    if exact > bound_lo:
        raise GuaranteeViolation(f"hard1 average exceeds its ceiling for n={n}")
    return exact, fraction_to_decimal(bound_lo)


def _hard2_sum_parts(n: int) -> tuple[Fraction, int, int, int]:
    """Exact pieces of sum_i min(3n/(3n+i-2), max(5/6, 1-(i-1)/(3n))).

    The first i1 ranks take the linear branch, ranks i1+1..i2 sit on the 5/6
    plateau, and the rest take the harmonic branch (returned unreduced).
    """
    i1 = n // 2 + 1
    i2 = min((3 * n + 10) // 5, n)
    linear = i1 - Fraction((i1 - 1) * i1, 6 * n)
    plateau = Fraction(5, 6) * (i2 - i1)
    p, q = _reciprocal_range_sum(3 * n + i2 - 1, 4 * n - 2) if i2 < n else (0, 1)
    return linear + plateau, p, q, i2


def hard2_upper_bound(n: int) -> tuple[Fraction, str]:
    """Exact oblivious-family average and its certified ceiling.

    Asserts the average is at most 13/24 + 3*ln(10/9) + 1/(3n) rigorously.
    """
    if n < 1:
        raise InputError(f"n must be >= 1, got {n}")
    flat, p, q, _ = _hard2_sum_parts(n)
    exact = (flat + 3 * n * Fraction(p, q)) / n
    ln_lo, _ = ln_enclosure(10, 9)
    bound_lo = Fraction(13, 24) + 3 * ln_lo + Fraction(1, 3 * n)
    if exact > bound_lo:
        raise GuaranteeViolation(f"hard2 average exceeds its ceiling for n={n}")
    return exact, fraction_to_decimal(bound_lo)


def verify_hard_bound_range(lo: int, hi: int) -> None:
    """Assert both hard-family ceilings for every n in [lo, hi] using
    cross-multiplied comparisons on the unreduced sums."""
    ln43_lo, _ = ln_enclosure(4, 3)
    ln109_lo, _ = ln_enclosure(10, 9)
    for n in range(max(lo, 2), hi + 1):
        p, q = _reciprocal_range_sum(3 * n + 1, 4 * n - 2)
        rhs = n * (3 * ln43_lo + Fraction(1, 2 * n)) - 2
        if 3 * n * p * rhs.denominator > rhs.numerator * q:
            raise GuaranteeViolation(f"hard1 ceiling fails at n={n}")
    for n in range(lo, hi + 1):
        flat, p, q, _ = _hard2_sum_parts(n)
        rhs = n * (Fraction(13, 24) + 3 * ln109_lo + Fraction(1, 3 * n)) - flat
        if 3 * n * p * rhs.denominator > rhs.numerator * q:
            raise GuaranteeViolation(f"hard2 ceiling fails at n={n}")


# ---------------------------------------------------------------------------
# Integral sandwich checks


@dataclass(frozen=True)
class IntegralValue:
    """A definite integral as exact part + sum of c * ln(arg) terms."""

    exact: Fraction = Fraction(0)
    log_terms: tuple[tuple[Fraction, Fraction], ...] = ()

    def enclosure(self) -> tuple[Fraction, Fraction]:
        lo = hi = self.exact
        for coeff, arg in self.log_terms:
            if arg <= 0:
                raise InputError(f"log argument must be positive, got {arg}")
            if arg >= 1:
                l, h = ln_enclosure(arg.numerator, arg.denominator)
            else:
                l, h = ln_enclosure(arg.denominator, arg.numerator)
                l, h = -h, -l
            if coeff >= 0:
                lo += coeff * l
                hi += coeff * h
            else:
                lo += coeff * h
                hi += coeff * l
        return lo, hi


def integral_bound_check(values: Sequence[Fraction], integral: IntegralValue) -> bool:
    """Certify f(b) + I <= sum f(i) <= f(a) + I for a tabulated non-increasing
    sequence f(a), ..., f(b) whose integral over [a, b] is ``integral``.

    Comparisons use the conservative ends of the integral's enclosure, so a
    True answer is a proof. Rational integrals (no log terms) are compared
    exactly, which certifies the boundary case of constant sequences too.
    """
    if not values:
        raise InputError("need at least one tabulated value")
    vals = [Fraction(v) for v in values]
    for x, y in zip(vals, vals[1:]):
        if y > x:
            raise InputError("sequence is not non-increasing")
    total = sum(vals, Fraction(0))
    lo, hi = integral.enclosure()
    return vals[-1] + hi <= total and total <= vals[0] + lo


def integral_check_gamma(n: int) -> bool:
    """Sandwich check for the average-threshold curve on [0, n-1]."""
    if n < 1:
        raise InputError(f"n must be >= 1, got {n}")
    floor = Fraction(3, 4) + Fraction(1, 12 * n)
    values = [max(Fraction(2 * n, 2 * n + x), floor) for x in range(n)]
    beta = Fraction(2 * n * (3 * n - 1), 9 * n + 1)  # branch switch point
    end = Fraction(n - 1)
    if beta >= end:
        integral = IntegralValue(log_terms=((Fraction(2 * n), (2 * n + end) / (2 * n)),))
    else:
        integral = IntegralValue(
            exact=floor * (end - beta),
            log_terms=((Fraction(2 * n), (2 * n + beta) / (2 * n)),),
        )
    return integral_bound_check(values, integral)


def integral_check_hard1(n: int) -> bool:
    """Sandwich check for 3n/(3n+x) on [0, n-2]."""
    if n < 2:
        raise InputError(f"n must be >= 2, got {n}")
    values = [Fraction(3 * n, 3 * n + x) for x in range(n - 1)]
    integral = IntegralValue(
        log_terms=((Fraction(3 * n), Fraction(4 * n - 2, 3 * n)),)
    )
    return integral_bound_check(values, integral)


def integral_check_hard2(n: int) -> bool:
    """Sandwich check for the oblivious-family curve on [0, n-1]."""
    if n < 1:
        raise InputError(f"n must be >= 1, got {n}")
    values = [
        min(Fraction(3 * n, 3 * n + x - 1), max(Fraction(5, 6), 1 - Fraction(x, 3 * n)))
        for x in range(n)
    ]
    end = Fraction(n - 1)
    s1 = min(Fraction(n, 2), end)
    s2 = min(Fraction(3 * n, 5) + 1, end)
    exact = s1 - s1 * s1 / (6 * n) + Fraction(5, 6) * (s2 - s1)
    log_terms = ()
    if s2 < end:
        log_terms = ((Fraction(3 * n), (3 * n + end - 1) / (3 * n + s2 - 1)),)
    return integral_bound_check(values, IntegralValue(exact=exact, log_terms=log_terms))
