import random
from fractions import Fraction

import hypothesis.strategies as st
import pytest
from hypothesis import given

from chweights.characters import FieldShape, abs_char, declare, eps_sm
from chweights.errors import GateViolation, UnsupportedInput
from chweights.refinements import CrysModule
from chweights.slopes import (brute_force_etale, degree, etale_crys, etale_pullback_vgen, etale_vgen,
                              slope_rank1, twist_to_etale)
from chweights.trianguline import ModuleClass, Step, TriangModule

QP = FieldShape.qp()
K = FieldShape(2, 1, ("s0", "s1"))


def vgen(uvals, shape=QP):
    """Very generic module with the given valuations and pairwise non-integral weight gaps."""
    params = [declare(shape, f"d{t}", Fraction(t, len(uvals) + 1), u) for t, u in enumerate(uvals)]
    return TriangModule.make(params, ModuleClass.VERY_GENERIC)


# ----------------------------------------------------------- fixed values


def test_rank_one_slopes():
    assert slope_rank1(declare(QP, "u", None, 1)) == 1
    assert slope_rank1(eps_sm(QP)) == 0
    assert slope_rank1(abs_char(QP)) == -1
    assert slope_rank1(abs_char(FieldShape(1, 2, ("a", "b")))) == -1


@pytest.mark.parametrize("uvals,verdict", [((0, 0), True), ((-1, 1), False), ((1, -1), True)])
def test_etale_vgen(uvals, verdict):
    assert etale_vgen(vgen(uvals)).verdict is verdict


def test_etale_vgen_violation_positions():
    assert etale_vgen(vgen((-1, 1))).violations == (1,)
    assert etale_vgen(vgen((1, 0))).violations == (2,)


def test_pullback_twist_value():
    pe = etale_pullback_vgen(vgen((1, -1)), 1, "s0")
    assert pe.chi_uval == Fraction(-1, 2) and pe.feasible
    pe0 = etale_pullback_vgen(vgen((0, 0)), 1, "s0")
    assert pe0.chi_uval == Fraction(-1, 2) and not pe0.feasible and pe0.violations == (1,)


def test_pullback_ramified_value():
    D = vgen((1, -1), K)
    assert etale_pullback_vgen(D, 1, "s0").chi_uval == Fraction(-1, 4)


def test_pullback_requires_etale_input():
    with pytest.raises(GateViolation):
        etale_pullback_vgen(vgen((-1, 1)), 1, "s0")


def test_twist_solver_examples():
    D = vgen((1, -1))
    assert twist_to_etale(D, [Step(1, "s0")]) == Fraction(-1, 2)
    assert twist_to_etale(D, []) == 0
    assert twist_to_etale(D, [Step(1, "s0"), Step(2, "s0")]) == Fraction(-3, 2)
    assert twist_to_etale(vgen((0, 0)), [Step(1, "s0")]) is None


@pytest.mark.parametrize("vps,weights,verdict", [
    ([-1, 0], [1, 0], True),
    ([0, 0], [1, 0], False),
    ([0], [0], True),
])
def test_etale_crys(vps, weights, verdict):
    M = CrysModule.build(QP, vps, weights)
    assert etale_crys(M).verdict is verdict
    assert brute_force_etale(M).verdict is verdict


def test_brute_force_finds_destabilizing_sub():
    M = CrysModule.build(QP, [-2, 1], [1, 0])
    crit, bf = etale_crys(M), brute_force_etale(M)
    assert not crit.verdict and not bf.verdict
    assert bf.witness == ((1, 2), 1)


def test_symmetric_valuations_agree():
    M = CrysModule.build(QP, [-1, -1, -1], [2, 1, 0])
    assert etale_crys(M).verdict == brute_force_etale(M).verdict is True


def test_crys_twist_single_step():
    M = CrysModule.build(QP, [-1, 0], [1, 0])
    assert twist_to_etale(M, [Step(1, "s0")]) is None  # weights (1, 1) are no longer regular
    M2 = CrysModule.build(QP, [-2, -1], [3, 0])
    assert twist_to_etale(M2, [Step(1, "s0")]) == Fraction(-1, 2)


def test_vgen_criterion_rejects_other_classes():
    with pytest.raises(UnsupportedInput):
        etale_vgen(TriangModule.make([declare(QP, "a", 0, 0)]))


# ------------------------------------------------------------- properties


@given(st.lists(st.integers(-5, 5), min_size=1, max_size=5), st.randoms(use_true_random=False))
def test_degree_is_additive_and_order_free(uvals, rnd):
    D = vgen(uvals)
    assert degree(D) == sum(Fraction(u) for u in uvals)
    params = list(D.params)
    rnd.shuffle(params)
    assert degree(TriangModule.make(params)) == degree(D)


@given(st.lists(st.integers(-5, 5), min_size=1, max_size=5), st.integers(-3, 3))
def test_twist_shifts_prefix_sums(uvals, c):
    D = vgen(uvals)
    chi = declare(QP, "chi", None, c)
    Dt = TriangModule.make([d * chi for d in D.params], ModuleClass.VERY_GENERIC)
    before, after = etale_vgen(D), etale_vgen(Dt)
    assert after.partials == tuple(p + (m + 1) * c for m, p in enumerate(before.partials))


@given(st.integers(0, 10 ** 6))
def test_crys_criterion_matches_brute_force(seed):
    rng = random.Random(seed)
    n = rng.randint(1, 4)
    hs = sorted(rng.sample(range(-4, 6), n), reverse=True)
    M = CrysModule.build(QP, [rng.randint(-5, 5) for _ in range(n)], hs)
    assert etale_crys(M).verdict == brute_force_etale(M).verdict


@given(st.lists(st.integers(-3, 3), min_size=2, max_size=4), st.data())
def test_twist_solver_total_is_zero(uvals, data):
    uvals = uvals[:-1] + [-sum(uvals[:-1])]
    D = vgen(uvals)
    if not etale_vgen(D).verdict:
        return
    j = data.draw(st.integers(1, len(uvals)))
    c = twist_to_etale(D, [Step(j, "s0")])
    assert c == Fraction(-j, len(uvals)) or c is None
    assert (c is not None) == etale_pullback_vgen(D, j, "s0").feasible
