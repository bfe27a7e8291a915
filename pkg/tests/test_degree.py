from fractions import Fraction

import pytest

from iwcsim.channel import RngStream
from iwcsim.core import PolicyKind
from iwcsim.degree import (
    DegreeContext,
    degree_disagreements,
    no_feedback_degree,
    objective,
    optimal_degree_bruteforce,
    optimal_degree_closed,
)

from oracles import argmax_ratio_rule, argmax_ref, objective_ref

ALL_PAIRS = [(g, b) for g in range(3, 65) for b in range(2, g)]


def test_objective_hand_values():
    assert objective(DegreeContext(4, 2), 1) == Fraction(1, 4)
    assert objective(DegreeContext(4, 3), 1) == Fraction(1, 2)


def test_objective_matches_reference_everywhere():
    for g, b in ALL_PAIRS[::7]:
        ctx = DegreeContext(g, b)
        for d in range(1, g - b + 1):
            assert objective(ctx, d) == objective_ref(g, b, d)


def test_objective_range_checked():
    ctx = DegreeContext(10, 3)
    with pytest.raises(ValueError):
        objective(ctx, 0)
    with pytest.raises(ValueError):
        objective(ctx, 8)
    with pytest.raises(ValueError):
        DegreeContext(5, 5)
    with pytest.raises(ValueError):
        DegreeContext(5, 1)


def test_gap10_beta3_profile():
    # d=3 beats d=5: 7/20 against 5/18
    ctx = DegreeContext(10, 3)
    vals = [objective(ctx, d) for d in range(1, 8)]
    assert vals[2] == Fraction(7, 20)
    assert vals[4] == Fraction(5, 18)
    assert max(vals) == vals[2]


def test_bruteforce_frozen_values():
    assert optimal_degree_bruteforce(DegreeContext(10, 3)) == 3
    assert optimal_degree_bruteforce(DegreeContext(5, 4)) == 1
    assert optimal_degree_bruteforce(DegreeContext(16, 2)) == 8


def test_bruteforce_matches_both_oracles():
    for g, b in ALL_PAIRS:
        d = optimal_degree_bruteforce(DegreeContext(g, b))
        assert d == argmax_ref(g, b) == argmax_ratio_rule(g, b), (g, b)


def test_objective_unimodal():
    for g, b in ALL_PAIRS[::5]:
        vals = [objective_ref(g, b, d) for d in range(1, g - b + 1)]
        peak = vals.index(max(vals))
        assert all(x <= y for x, y in zip(vals[:peak], vals[1 : peak + 1]))
        assert all(x >= y for x, y in zip(vals[peak:], vals[peak + 1 :]))


def test_closed_form_values():
    assert optimal_degree_closed(DegreeContext(10, 3)) == 5
    assert optimal_degree_closed(DegreeContext(5, 4)) == 1
    assert optimal_degree_closed(DegreeContext(16, 2)) == 14


def test_closed_form_in_feasible_range():
    for g, b in ALL_PAIRS:
        assert 1 <= optimal_degree_closed(DegreeContext(g, b)) <= g - b


def test_disagreement_list_matches_oracle():
    ours = degree_disagreements(64)
    expected = [
        (g, b, min(g // (b - 1), g - b), argmax_ref(g, b))
        for g, b in ALL_PAIRS
        if objective_ref(g, b, min(g // (b - 1), g - b)) != objective_ref(g, b, argmax_ref(g, b))
    ]
    assert ours == expected
    assert len(ours) == 460
    assert (10, 3, 5, 3) in ours
    assert (16, 2, 14, 8) in ours


def test_no_feedback_degree_examples():
    assert no_feedback_degree(PolicyKind.IWC, 10, 2) == 2
    assert no_feedback_degree(PolicyKind.IWC, 1, 2) == 1
    assert no_feedback_degree("IWC-MF", 3, 5) == 3
    with pytest.raises(ValueError):
        no_feedback_degree(PolicyKind.WC, 10, 2)
    with pytest.raises(ValueError):
        no_feedback_degree(PolicyKind.IWC, 0, 2)


def test_wc_degree_uniform_chi_square():
    rng = RngStream(7, "policy-coding")
    n = 100_000
    counts = [0] * 10
    for _ in range(n):
        d = no_feedback_degree(PolicyKind.WC, 10, 2, rng)
        counts[d - 1] += 1
    exp = n / 10
    chi2 = sum((c - exp) ** 2 / exp for c in counts)
    # 9 dof, p = 0.001
    assert chi2 < 27.88
