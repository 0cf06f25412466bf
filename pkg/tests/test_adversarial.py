"""Hard families: generated values, witnesses, and failure demonstrations."""

from fractions import Fraction

import pytest

from mmskit import (
    HardInstanceSpec,
    InputError,
    ThresholdList,
    bundle_value,
    demonstrate_failure,
    gen_hard1,
    gen_hard2_responders,
    gen_ordinal_tight,
    mms,
)
from mmskit.ordinal import is_ordered


# ---------------------------------------------------------------------------
# ordinalTight generation


def test_tight_sizes_and_values_n5():
    fam = gen_ordinal_tight(5)
    assert fam.d == 6
    assert fam.instance.num_goods == 14
    u = fam.instance.valuations[0]
    assert u[0] == Fraction(3, 5)  # 2/3 - 1/15
    assert u[9] == u[10] == Fraction(1, 3)  # positions 2n and 2n+1


def test_tight_good_count_stays_below_3n():
    for n in range(2, 13):
        fam = gen_ordinal_tight(n)
        assert fam.instance.num_goods <= 3 * n - 1
        assert is_ordered(fam.instance)


def test_tight_witness_certifies_unit_shares():
    for n in range(2, 10):
        fam = gen_ordinal_tight(n)
        for part in fam.witness.parts:
            assert bundle_value(fam.instance, 0, part) == 1
        assert fam.witness.ground_set == frozenset(range(fam.instance.num_goods))
        assert len(fam.witness.parts) == fam.d


def test_tight_share_is_one_by_oracle():
    for n in (2, 3, 4, 5):
        fam = gen_ordinal_tight(n)
        assert mms(fam.instance, 0, fam.d).value == 1


def test_tight_fill_profile_is_one_good_per_early_bag():
    from mmskit import run_ordinal

    for n in range(2, 11):
        fam = gen_ordinal_tight(n)
        m = fam.instance.num_goods
        _, run = run_ordinal(fam.instance)
        fills_per_bag = {}
        for bag, _ in run.fill_order:
            fills_per_bag[bag] = fills_per_bag.get(bag, 0) + 1
        assert fills_per_bag == {k: 1 for k in range(m - 2 * n)}


# ---------------------------------------------------------------------------
# hard1 generation


def test_hard1_alpha_value():
    fam = gen_hard1(5, 5, Fraction(1, 15))
    assert fam.alpha == Fraction(5, 6)  # 15/18


def test_hard1_witness_and_shapes():
    for n, i in [(3, 3), (5, 4), (6, 3), (7, 7)]:
        fam = gen_hard1(n, i, Fraction(1, 6 * n))
        inst = fam.instance
        assert is_ordered(inst)
        for part in fam.witness.parts:
            assert bundle_value(inst, 0, part) == 1
        assert fam.witness.ground_set == frozenset(range(inst.num_goods))
        # Every reduction shape is capped by alpha for the rich agents.
        delta = Fraction(1, 3 * n + i - 2)
        assert bundle_value(inst, 0, {0, 2 * n}) == (3 * n - 1) * delta
        assert bundle_value(inst, 0, {n - 1, n}) == (3 * n - 1) * delta
        assert bundle_value(inst, 0, {2 * n - 2, 2 * n - 1, 2 * n}) == fam.alpha
        # Flat agents are unit-normalized as well.
        assert inst.total_value(n - 1 if i < n else i - 1) == n
        for row in range(inst.num_agents):
            assert inst.total_value(row) == n


def test_hard1_parameter_validation():
    with pytest.raises(InputError):
        gen_hard1(5, 2, Fraction(1, 30))
    with pytest.raises(InputError):
        gen_hard1(2, 3, Fraction(1, 30))
    with pytest.raises(InputError):
        gen_hard1(5, 4, Fraction(2, 3))  # not a unit fraction


# ---------------------------------------------------------------------------
# hard2 generation


def test_hard2_alpha_epsilon_and_witness():
    fam = gen_hard2_responders(6, 4, 3, 0, 3)
    assert fam.alpha == Fraction(5, 6)
    assert fam.epsilon == Fraction(1, 54)
    parts = fam.witness.parts
    assert len(parts) == 6
    for part in parts:
        assert bundle_value(fam.instance, 0, part) == 1
    assert fam.witness.ground_set == frozenset(range(fam.instance.num_goods))


def test_hard2_with_complement_goods():
    # Odd n with k2 = 1 exercises the alpha-complement bundles.
    fam = gen_hard2_responders(7, 6, 3, 1, 3)
    assert fam.alpha == 1 - Fraction(3, 18)
    for part in fam.witness.parts:
        assert bundle_value(fam.instance, 0, part) == 1
    assert is_ordered(fam.instance)


def test_hard2_alpha_sits_in_the_proof_window():
    for n in range(4, 9):
        for i in range(2, n + 1):
            for k1 in range(1, n // 2 + 1):
                for k2 in range(0, min(i - k1, n - 2 * k1 + 1)):
                    fam = gen_hard2_responders(n, i, k1, k2, 3)
                    assert Fraction(5, 6) <= fam.alpha < 1 - fam.epsilon


def test_hard2_parameter_validation():
    with pytest.raises(InputError):
        gen_hard2_responders(6, 4, 4, 0, 3)  # k1 + k2 >= i
    with pytest.raises(InputError):
        gen_hard2_responders(6, 4, 3, 1, 3)  # 2k1 + k2 > n
    with pytest.raises(InputError):
        gen_hard2_responders(6, 4, 3, 0, 2)  # t < 3


# ---------------------------------------------------------------------------
# Failure demonstrations


def test_ordinal_tight_failure_reports_short_bag():
    report = demonstrate_failure(HardInstanceSpec("ordinalTight", 5))
    assert report.witness_value == Fraction(14, 15)
    assert report.terminated_early


def test_ordinal_tight_all_short_bags_equal_formula():
    for n in (2, 4, 7, 10):
        report = demonstrate_failure(HardInstanceSpec("ordinalTight", n))
        assert any(v == 1 - Fraction(1, 3 * n) for _, v, _ in report.unsatisfied)


def test_hard1_failure_no_reductions_and_short_agent():
    for n, i in [(4, 3), (6, 4), (5, 5)]:
        spec = HardInstanceSpec("hard1", n, i=i)
        report = demonstrate_failure(spec)
        assert report.reduction_count == 0
        assert report.witness_agent < i  # 0-indexed member of the rich block
        assert report.witness_value < report.witness_target


def test_hard1_rejects_threshold_at_or_below_cap():
    alpha = Fraction(3 * 6, 3 * 6 + 4 - 2)
    T = ThresholdList((Fraction(1),) * 3 + (alpha,) * 3)
    with pytest.raises(InputError):
        demonstrate_failure(HardInstanceSpec("hard1", 6, i=4), T)


def test_hard2_failure_stays_below_cap():
    spec = HardInstanceSpec("hard2", 6, i=4, k1=3, k2=0, t=3)
    report = demonstrate_failure(spec)
    fam = gen_hard2_responders(6, 4, 3, 0, 3)
    assert report.witness_value < fam.alpha + 2 * fam.epsilon
    assert report.reduction_count == 0
    assert report.ran_out_of_goods


def test_hard2_rich_bags_go_to_low_ranks():
    spec = HardInstanceSpec("hard2", 6, i=4, k1=2, k2=1, t=3)
    report = demonstrate_failure(spec)
    tr = report.transcript
    rich = 3
    assigns = [e for e in tr.bag_events if e.kind == "assign"]
    assert len(assigns) == rich
    assert sorted(e.agent for e in assigns) == list(range(rich))
    assert all(e.bag < rich for e in assigns)
