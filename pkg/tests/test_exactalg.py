from fractions import Fraction

import hypothesis.strategies as st
import pytest
from hypothesis import assume, given

from chweights.exactalg import (DualNum, Mat, Poly, bezout_coprime, canonical_span, charpoly, crt_idempotents,
                                kernel_basis, poly_gcd, poly_gcd_bezout)

from conftest import distinct_rationals, rationals

T = Poly((0, 1))


def F(*xs):
    return [Fraction(x) for x in xs]


# ----------------------------------------------------------- fixed values


def test_bezout_linear_pair():
    g, A, B = poly_gcd_bezout(T, T - 2)
    assert g == Poly.const(1)
    # A*T + B*(T-2) = 1 forces A = 1/2, B = -1/2
    assert A == Poly.const(Fraction(1, 2)) and B == Poly.const(Fraction(-1, 2))
    assert A * T + B * (T - 2) == Poly.const(1)


def test_gcd_of_equal_inputs():
    g, _, _ = poly_gcd_bezout(T * T, T * T)
    assert g == T * T


def test_gcd_common_linear_factor():
    P = Poly.from_roots(F(1, 2))
    Q = Poly.from_roots(F(2, 3))
    assert poly_gcd_bezout(P, Q)[0] == T - 2
    assert poly_gcd(P, Q) == T - 2


@pytest.mark.parametrize("M,expected", [
    (Mat.diag(F(0, 2)), Poly.from_roots(F(0, 2))),
    (Mat([F(1, 1), F(0, 1)]), Poly.from_roots(F(1, 1))),
    (Mat.identity(3), Poly.from_roots(F(1, 1, 1))),
])
def test_charpoly_examples(M, expected):
    assert charpoly(M) == expected


def test_kernel_examples():
    assert canonical_span(kernel_basis(Mat.zeros(2))) == ((1, 0), (0, 1))
    assert kernel_basis(Mat.identity(2)) == []
    assert canonical_span(kernel_basis(Mat.diag(F(0, 2)))) == ((1, 0),)


def test_crt_trivial_q():
    eQ, eS = crt_idempotents(Poly.const(1), T - 3)
    # with Q = 1 the Q-part of D is zero
    assert eQ.is_zero() and eS == Poly.const(1)


@pytest.mark.parametrize("Q,S", [(T, T - 2), (T - 1, T + 1)])
def test_crt_examples_are_idempotents(Q, S):
    eQ, eS = crt_idempotents(Q, S)
    QS = Q * S
    assert (eQ * eQ - eQ) % QS == Poly()
    assert (eQ + eS) % QS == Poly.const(1)
    assert (eQ * eS) % QS == Poly()


def test_dual_inverse_and_units():
    a = DualNum(Fraction(2), Fraction(3))
    assert a * a.inverse() == DualNum(1, 0)
    assert not DualNum(0, 1).is_unit()
    with pytest.raises(ZeroDivisionError):
        DualNum(0, 1).inverse()


def test_bezout_rejects_common_root():
    with pytest.raises(ValueError):
        bezout_coprime(T, T * (T - 1))


# ------------------------------------------------------------- properties


@given(distinct_rationals(2, 5), st.data())
def test_bezout_and_idempotents_random(roots, data):
    cut = data.draw(st.integers(1, len(roots) - 1))
    Q, S = Poly.from_roots(roots[:cut]), Poly.from_roots(roots[cut:])
    A, B = bezout_coprime(Q, S)
    assert A * Q + B * S == Poly.const(1)
    eQ, eS = crt_idempotents(Q, S)
    QS = Q * S
    assert (eQ + eS) % QS == Poly.const(1)
    assert (eQ * eS) % QS == Poly()


@given(distinct_rationals(2, 4), st.lists(rationals(), min_size=4, max_size=4), st.data())
def test_dual_bezout_lift(roots, eps, data):
    cut = data.draw(st.integers(1, len(roots) - 1))
    droots = [DualNum(r, e) for r, e in zip(roots, eps)]
    Q, S = Poly.from_roots(droots[:cut]), Poly.from_roots(droots[cut:])
    A, B = bezout_coprime(Q, S)
    assert A * Q + B * S == Poly.const(DualNum(1, 0))


@given(st.lists(st.lists(rationals(), min_size=2, max_size=2), min_size=2, max_size=2),
       st.lists(st.lists(rationals(), min_size=3, max_size=3), min_size=3, max_size=3))
def test_block_diagonal_charpoly(a, b):
    A, B = Mat(a), Mat(b)
    assert charpoly(Mat.block_diag(A, B)) == charpoly(A) * charpoly(B)


@given(rationals(), rationals(), rationals(), rationals())
def test_dual_multiplication_law(a, b, c, d):
    assert DualNum(a, b) * DualNum(c, d) == DualNum(a * c, a * d + b * c)


@given(rationals(), rationals(), rationals(), rationals(), rationals(), rationals())
def test_dual_ring_axioms(a, b, c, d, e, f):
    x, y, z = DualNum(a, b), DualNum(c, d), DualNum(e, f)
    assert (x + y) * z == x * z + y * z
    assert (x * y) * z == x * (y * z)
    assert x * y == y * x


@given(st.lists(rationals(), min_size=1, max_size=4), st.lists(rationals(), min_size=1, max_size=3))
def test_poly_division_identity(p, q):
    P, Q = Poly(p), Poly(q)
    assume(not Q.is_zero())
    quo, rem = divmod(P, Q)
    assert quo * Q + rem == P
    assert rem.is_zero() or rem.degree < Q.degree


@given(st.lists(st.lists(rationals(), min_size=3, max_size=3), min_size=3, max_size=3))
def test_cayley_hamilton(rows):
    M = Mat(rows)
    assert M.apply_poly(charpoly(M)) == Mat.zeros(3)


@given(st.lists(st.lists(rationals(), min_size=3, max_size=3), min_size=3, max_size=3))
def test_kernel_is_annihilated(rows):
    M = Mat(rows)
    ker = kernel_basis(M)
    assert len(ker) + M.rank() == 3
    for v in ker:
        assert all(x == 0 for x in M.apply(v))
