import random
from fractions import Fraction

import hypothesis.strategies as st
import pytest
from hypothesis import assume, given

from chweights.characters import FieldShape
from chweights.errors import GateViolation, NotComaximal
from chweights.exactalg import DualNum, Mat, Poly, canonical_span
from chweights.refinements import CrysModule
from chweights.senlattice import (SenLattice, brute_force_modifications, dual_roots, factor_pairs,
                                  make_factorization, modify_down, modify_round_trip, modify_up,
                                  pullback_consistency, rational_roots, recover_degree_matched_check,
                                  recover_factors_check, residue_coprime, round_trip_guaranteed, split_sen_poly)

from conftest import distinct_rationals, rationals

T = Poly((0, 1))


def F(*xs):
    return [Fraction(x) for x in xs]


def diag(*xs):
    return SenLattice(Mat.diag(F(*xs)))


def conjugated(eigs, rng):
    n = len(eigs)
    while True:
        P = Mat([[Fraction(rng.randint(-2, 2)) for _ in range(n)] for _ in range(n)])
        if P.rank() == n:
            return SenLattice(P * Mat.diag(eigs) * P.inverse())


# ----------------------------------------------------------- fixed values


def test_split_examples():
    Fz = split_sen_poly(diag(0, 2), [2])
    assert (Fz.Q, Fz.S) == (T - 2, T)
    Fe = split_sen_poly(diag(0, 2), [])
    assert Fe.Q == Poly.const(1) and Fe.S == diag(0, 2).charpoly()
    with pytest.raises(NotComaximal):
        split_sen_poly(diag(0, 0), [2])


def test_modify_down_example():
    L = diag(0, 2)
    mod = modify_down(L, split_sen_poly(L, [2]))
    assert mod.lattice.charpoly() == (T - 3) * T
    assert mod.lattice.theta == Mat.diag(F(0, 3))
    assert mod.W == ((1, 0),)


def test_modify_down_edge_splits():
    L = SenLattice.triangular(F(0, 2, 5))
    assert modify_down(L, split_sen_poly(L, [])).lattice == L
    full = modify_down(L, split_sen_poly(L, [1, 2, 3])).lattice
    assert full.theta == L.theta + Mat.identity(3)
    assert full.charpoly() == L.charpoly().shift(-1)


def test_modify_up_inverts_example():
    L = diag(0, 3)
    assert modify_up(L, make_factorization(T - 3, T)).lattice.theta == Mat.diag(F(0, 2))
    assert modify_up(L, make_factorization(Poly.const(1), L.charpoly())).lattice == L


def test_gap_one_refused():
    L = diag(0, 1)
    Fz = split_sen_poly(L, [2])
    assert modify_down(L, Fz).lattice.charpoly() == (T - 2) * T  # the modification itself is legal
    ok, reasons = round_trip_guaranteed(Fz)
    # Q(T+1) = T shares the root 0 with S
    assert not ok and [r["pair"] for r in reasons] == ["Q(T+1),S(T)"]
    with pytest.raises(GateViolation):
        modify_round_trip(L, Fz)


def test_oracle_examples():
    L = diag(0, 2)
    orc = brute_force_modifications(L, T * (T - 3))
    assert orc.exhaustive and orc.subspaces == (((1, 0),),)
    triv = brute_force_modifications(L, L.charpoly())
    assert triv.subspaces == (canonical_span([(1, 0), (0, 1)]),)


def test_oracle_non_coprime_split_is_ambiguous():
    L = diag(0, 0)
    orc = brute_force_modifications(L, T * (T - 1))
    assert len(orc.subspaces) > 1


def test_recovery_examples():
    assert recover_factors_check(T - 2, T, T - 2, T).conclusion
    assert recover_factors_check(T - 2, T, T - 2, T).holds
    chk = recover_factors_check(T, T - 1, T - 1, T)
    assert not chk.hypotheses_ok and chk.holds


def test_rational_roots():
    assert rational_roots(Poly.from_roots(F(0, 0, 3)) * (2 * T + 1)) == [Fraction(-1, 2), 0, 0, 3]


def test_pullback_consistency_examples():
    QP = FieldShape.qp()
    D = CrysModule.build(QP, [1, 0], [2, 0]).triangulation()
    rep = pullback_consistency(D, 1, "s0")
    assert rep["consistent"] and rep["all_match"] and rep["new_weights"] == (2, 1) and rep["regular_after"]
    D1 = CrysModule.build(QP, [1, 0], [1, 0]).triangulation()
    rep1 = pullback_consistency(D1, 1, "s0")
    assert rep1["new_weights"] == (1, 1) and not rep1["regular_after"] and not rep1["safe_zone"]
    repn = pullback_consistency(D, 2, "s0")
    assert repn["new_weights"] == (3, 1)


# ------------------------------------------------------------- properties


@given(distinct_rationals(2, 4), st.randoms(use_true_random=False), st.data())
def test_down_charpoly_and_oracle(eigs, rnd, data):
    n = len(eigs)
    L = conjugated(eigs, random.Random(rnd.random()))
    I = data.draw(st.sets(st.integers(1, n), min_size=1, max_size=n - 1))
    Fz = make_factorization(Poly.from_roots(eigs[i - 1] for i in I),
                            Poly.from_roots(eigs[i - 1] for i in range(1, n + 1) if i not in I))
    mod = modify_down(L, Fz)
    target = Fz.Q.shift(-1) * Fz.S
    assert mod.lattice.charpoly() == target
    orc = brute_force_modifications(L, target)
    assert orc.exhaustive and orc.subspaces == (canonical_span(mod.W),)
    if round_trip_guaranteed(Fz)[0]:
        assert modify_round_trip(L, Fz) == L


@given(distinct_rationals(2, 4), st.lists(rationals(), min_size=4, max_size=4), st.data())
def test_dual_charpoly_law(roots, eps, data):
    n = len(roots)
    droots = [DualNum(r, e) for r, e in zip(roots, eps)]
    L = SenLattice.triangular(droots)
    I = data.draw(st.sets(st.integers(1, n), min_size=1, max_size=n - 1))
    Fz = split_sen_poly(L, I)
    mod = modify_down(L, Fz)
    assert mod.lattice.charpoly() == Fz.Q.shift(-1) * Fz.S
    if round_trip_guaranteed(Fz)[0]:
        assert modify_round_trip(L, Fz) == L
    assume(residue_coprime(Fz.Q.shift(-1), Fz.S))
    assert modify_up(mod.lattice, Fz.shifted(-1)).lattice.charpoly() == L.charpoly()


@given(distinct_rationals(3, 4), st.randoms(use_true_random=False))
def test_block_order_does_not_matter(eigs, rnd):
    n = len(eigs)
    perm = list(range(n))
    rnd.shuffle(perm)
    L1 = SenLattice(Mat.diag(eigs))
    L2 = SenLattice(Mat.diag([eigs[p] for p in perm]))
    I1 = [1]
    I2 = [perm.index(0) + 1]
    m1 = modify_down(L1, split_sen_poly(L1, I1))
    m2 = modify_down(L2, split_sen_poly(L2, I2))
    assert m1.lattice.charpoly() == m2.lattice.charpoly()
    # W is the image of the same coordinate line, moved by the permutation
    assert [sum(map(abs, v)) for v in m1.W] == [sum(map(abs, v)) for v in m2.W]


@given(st.lists(st.integers(-4, 4), min_size=1, max_size=3), st.lists(st.integers(-4, 4), min_size=1, max_size=3))
def test_coprime_recovery(qs, ss):
    assume(not set(qs) & set(ss))
    Q, S = Poly.from_roots(F(*qs)), Poly.from_roots(F(*ss))
    fits = []
    for Q2, S2 in factor_pairs(F(*(qs + ss))):
        chk = recover_factors_check(Q, S, Q2, S2)
        assert chk.holds
        assert recover_degree_matched_check(Q, S, Q2, S2).holds
        if chk.hypotheses_ok:
            fits.append((Q2, S2))
    assert fits == [(Q, S)]


@given(st.lists(st.integers(-3, 3), min_size=1, max_size=3), st.lists(st.integers(-3, 3), min_size=1, max_size=3),
       st.lists(rationals(), min_size=6, max_size=6))
def test_dual_coprimality_is_residual(qs, ss, eps):
    Q = Poly.from_roots(DualNum(r, e) for r, e in zip(qs, eps))
    S = Poly.from_roots(DualNum(r, e) for r, e in zip(ss, eps[3:]))
    assert residue_coprime(Q, S) == (not set(qs) & set(ss))


@given(distinct_rationals(1, 4), st.lists(rationals(), min_size=4, max_size=4))
def test_hensel_lift_recovers_roots(roots, eps):
    droots = [DualNum(r, e) for r, e in zip(roots, eps)]
    assert dual_roots(Poly.from_roots(droots), roots) == droots
