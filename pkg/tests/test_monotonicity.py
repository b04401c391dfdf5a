"""Swap tests, pairwise signs, compatibility, projection monotonicity."""

import numpy as np
import pytest

from mmotsig import (InputError, SupportSet, bilinear, c_monotone_violations,
                     compatibility_check, enumerate_partitions, external,
                     projection_monotone_check, sum_function, support_from_raw,
                     tabulated, two_monotone_sign)
from conftest import rng_for

BOX2 = [(0.0, 1.0)] * 2
BOX3 = [(0.0, 1.0)] * 3


def comonotone_support(cost, vals):
    rows = [[[v]] * cost.m for v in vals]
    return support_from_raw(cost, rows)


def test_support_set_validation():
    cost = bilinear([1, 1], {(1, 2): -1.0})
    with pytest.raises(InputError):
        support_from_raw(cost, [])
    with pytest.raises(InputError):
        support_from_raw(cost, [[[0.0], [0.0]], [[0.0], [0.0]]])
    s = support_from_raw(cost, [[[0.0], [0.0]], [[1.0], [1.0]]], masses=[0.5, 0.5])
    assert s.stacked().shape == (2, 2)


def test_comonotone_support_has_no_violations():
    cost = bilinear([1, 1], {(1, 2): -1.0})
    sup = comonotone_support(cost, [0.0, 0.5, 1.0])
    rep = c_monotone_violations(cost, sup, enumerate_partitions(2))
    assert rep.passed and rep.pairs_checked == 3
    assert rep.max_defect <= 0.0


def test_antimonotone_support_violates_attractive_cost():
    cost = bilinear([1, 1], {(1, 2): -1.0})
    sup = support_from_raw(cost, [[[0.0], [1.0]], [[1.0], [0.0]]])
    rep = c_monotone_violations(cost, sup, enumerate_partitions(2))
    assert not rep.passed
    v = rep.violations[0]
    # rewiring (0,1),(1,0) to (0,0),(1,1) saves exactly 1.0 in cost
    assert v.defect == pytest.approx(1.0, abs=1e-12)


def test_violation_tolerance_override():
    cost = bilinear([1, 1], {(1, 2): -1.0})
    sup = support_from_raw(cost, [[[0.0], [1.0]], [[1.0], [0.0]]])
    rep = c_monotone_violations(cost, sup, enumerate_partitions(2), tol=2.0)
    assert rep.passed  # defect 1.0 sits below the inflated tolerance


def test_trio_all_partitions_checked():
    cost = sum_function(3, [[-1.0]])
    sup = comonotone_support(cost, [0.0, 0.5, 1.0])
    rep = c_monotone_violations(cost, sup, enumerate_partitions(3))
    assert rep.passed
    # anti-arranging one marginal breaks monotonicity for a concave sum cost
    bad = support_from_raw(cost, [[[0.0], [0.0], [1.0]], [[1.0], [1.0], [0.0]]])
    rep = c_monotone_violations(cost, bad, enumerate_partitions(3))
    assert not rep.passed
    assert any(str(v.partition) == "{1,2}|{3}" for v in rep.violations)


def test_two_monotone_sign_attractive_and_repulsive():
    neg = two_monotone_sign(bilinear([1, 1], {(1, 2): -1.0}), 1, 2, BOX2)
    assert neg.sign == -1 and neg.negative == neg.samples and neg.hessian_sign == -1
    pos = two_monotone_sign(bilinear([1, 1], {(1, 2): 1.0}), 1, 2, BOX2)
    assert pos.sign == 1 and pos.positive == pos.samples


def test_two_monotone_sign_degenerate_and_mixed():
    # separable cost: increments vanish identically, no verdict
    sep = external([1, 1], lambda c: float(c[0][0] ** 2 + c[1][0] ** 2))
    rep = two_monotone_sign(sep, 1, 2, BOX2)
    assert rep.sign is None and rep.zero == rep.samples

    # mixed partial 2(x1 - 1/2) changes sign inside the box
    mix = external([1, 1], lambda c: float((c[0][0] - 0.5) ** 2 * c[1][0]))
    rep = two_monotone_sign(mix, 1, 2, BOX2)
    assert rep.sign is None


def test_two_monotone_hessian_gate_blocks_lucky_samples():
    # samples drawn in one half of the box would all agree; the coarse grid
    # still sees both signs of the mixed partial and withholds the verdict
    mix = external([1, 1], lambda c: float((c[0][0] - 0.95) ** 2 * c[1][0]))
    rep = two_monotone_sign(mix, 1, 2, BOX2, samples=150, seed=3)
    assert rep.hessian_sign is None
    assert rep.sign is None


def test_two_monotone_sign_requires_enough_samples():
    cost = bilinear([1, 1], {(1, 2): -1.0})
    with pytest.raises(InputError):
        two_monotone_sign(cost, 1, 2, BOX2, samples=99)
    with pytest.raises(InputError):
        two_monotone_sign(cost, 1, 1, BOX2)
    with pytest.raises(InputError):
        two_monotone_sign(cost, 1, 2, [(0.0, 1.0)])


def test_two_monotone_rejects_vector_marginals():
    cost = bilinear([2, 2], {(1, 2): np.eye(2)})
    with pytest.raises(InputError):
        two_monotone_sign(cost, 1, 2, BOX2)


def test_sign_flips_under_coordinate_reflection():
    base = bilinear([1, 1], {(1, 2): -1.0})
    flipped = external([1, 1], lambda c: float(-(-c[0][0]) * c[1][0]))
    s0 = two_monotone_sign(base, 1, 2, BOX2).sign
    s1 = two_monotone_sign(flipped, 1, 2, [(-1.0, 0.0), (0.0, 1.0)]).sign
    assert (s0, s1) == (-1, 1)


def test_tabulated_two_monotone_uses_samples_only():
    axes = [np.linspace(0, 1, 9)] * 2
    vals = -np.multiply.outer(axes[0], axes[1])
    cost = tabulated(axes, vals)
    rep = two_monotone_sign(cost, 1, 2, BOX2)
    assert rep.sign == -1 and rep.hessian_sign is None


def test_compatibility_verdicts():
    attract = bilinear([1, 1, 1], {(1, 2): -1.0, (1, 3): -1.0, (2, 3): -1.0})
    rep = compatibility_check(attract, BOX3)
    assert rep.verdict == "compatible"
    assert all(s == -1 for s in rep.pair_signs.values())
    assert all(p == -1 for p in rep.triples.values())

    repel = sum_function(3, [[1.0]])
    rep = compatibility_check(repel, BOX3)
    assert rep.verdict == "incompatible"
    assert rep.offending == ((1, 2, 3),)

    # one pair with a sign change makes the whole verdict inconclusive
    tricky = external(
        [1, 1, 1],
        lambda c: float(-c[0][0] * c[1][0] - c[0][0] * c[2][0]
                        + (c[1][0] - 0.5) ** 2 * c[2][0]))
    rep = compatibility_check(tricky, BOX3)
    assert rep.verdict == "inconclusive"
    assert (2, 3) in rep.offending


def test_mixed_sign_quartet_is_compatible():
    # signs of the form -e_i e_j with e = (+, +, -, -) multiply to -1 on
    # every triple even though individual pairs disagree
    pairs = {(1, 2): -1.0, (1, 3): 1.0, (1, 4): 1.0,
             (2, 3): 1.0, (2, 4): 1.0, (3, 4): -1.0}
    cost = bilinear([1] * 4, pairs)
    rep = compatibility_check(cost, [(0.0, 1.0)] * 4)
    assert rep.verdict == "compatible"


def test_projection_monotone_check_and_injection():
    cost = bilinear([1, 1, 1], {(1, 2): -1.0, (1, 3): -1.0, (2, 3): -1.0})
    sup = comonotone_support(cost, [0.0, 0.25, 0.75, 1.0])
    for j in (2, 3):
        assert projection_monotone_check(sup, j).passed
    # inject one anti-monotone pair against marginal 3
    rows = [[[v]] * 3 for v in (0.0, 0.5)]
    rows.append([[0.6], [0.6], [0.1]])
    bad = support_from_raw(cost, rows)
    rep = projection_monotone_check(bad, 3)
    assert not rep.passed and rep.violating_pairs
    assert projection_monotone_check(bad, 2).passed


def test_projection_requires_scalar_and_valid_index():
    cost3 = bilinear([1, 1, 1], {(1, 2): -1.0, (1, 3): -1.0, (2, 3): -1.0})
    sup = comonotone_support(cost3, [0.0, 1.0])
    with pytest.raises(InputError):
        projection_monotone_check(sup, 4)
    cost2 = bilinear([2, 2], {(1, 2): np.eye(2)})
    sup2 = support_from_raw(cost2, [[[0.0, 0.0], [0.0, 0.0]],
                                    [[1.0, 1.0], [1.0, 1.0]]])
    with pytest.raises(InputError):
        projection_monotone_check(sup2, 2)
