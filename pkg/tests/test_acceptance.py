"""Acceptance criteria 1-10, each printed as a PASS/FAIL line.

Every comparison is exact (rationals and integers only).
"""

import itertools
import math
import time
from fractions import Fraction

import pytest

from chweights import suites
from chweights.characters import (FieldShape, abs_char, classify_rank1, declare, eps_sm,
                                  successive_extension_dims, trivial, x_char)
from chweights.refinements import CrysModule, coordinate_flag
from chweights.trianguline import ModuleClass, TriangModule, enumerate_triangulations, pullback_p

QP = FieldShape.qp()
X = x_char(QP, "s0")


@pytest.fixture
def report(capsys):
    def emit(number, title, passed, detail=""):
        with capsys.disabled():
            line = f"criterion {number:2d} [{title}]: {'PASS' if passed else 'FAIL'}"
            print(("\n" + line + (f"  ({detail})" if detail else "")))
        assert passed, detail
    return emit


def _suite(result):
    return result.passed, f"{result.cases} cases" + (f"; counterexample {result.counterexample}"
                                                      if result.counterexample else "")


def test_criterion_01_cohomology_table(report):
    cases = []
    for k in range(17):  # x^{-k}, k >= 0: H^0 present
        cases.append((X ** -k, (1, 2, 0)))
    for k in range(17):  # N|N| x^k, k >= 0: H^2 present
        cases.append((eps_sm(QP) * X ** k, (0, 2, 1)))
    generic = [X ** k for k in range(1, 6)] + [abs_char(QP) ** a for a in (-2, -1, 1, 2)]
    generic += [abs_char(QP) ** 2 * X ** 3, abs_char(QP) * X ** -1, eps_sm(QP) ** 2,
                declare(QP, "g", Fraction(1, 2), 1), declare(QP, "h", 0, 3) * X ** -2,
                abs_char(QP) ** -1 * X ** 4, eps_sm(QP) * X ** -1]
    cases += [(c, (0, 1, 0)) for c in generic]
    assert len(cases) == 50
    bad = [(str(c), classify_rank1(c).as_tuple(), d) for c, d in cases if classify_rank1(c).as_tuple() != d]
    seq = (classify_rank1(X).h1, successive_extension_dims([X, abs_char(QP) ** -1]).h1,
           classify_rank1(abs_char(QP) ** -1).h1)
    report(1, "cohomology table", not bad and seq == (1, 2, 1), f"50 cases, sequence dims {seq}" if not bad else f"mismatches {bad}, sequence dims {seq}")


def test_criterion_02_intro_example(report):
    pairs = []
    for k in range(1, 6):
        a = pullback_p(TriangModule.make([X, X ** 2]), 1, "s0", k).weights("s0")
        b = pullback_p(TriangModule.make([X ** 2, X]), 1, "s0", k).weights("s0")
        pairs.append((a == (1, k + 2) and b == (2, k + 1), k, a, b))
    report(2, "intro pullback", all(p[0] for p in pairs), "k = 1..5, both orders" if all(p[0] for p in pairs)
           else f"{[p[1:] for p in pairs if not p[0]]}")


def test_criterion_03_triangulation_counts(report):
    bad = []
    for n in range(1, 6):
        for flag in (None, coordinate_flag(n)):
            M = CrysModule.build(QP, list(range(n)), list(range(n - 1, -1, -1)), flags=flag)
            got = len(enumerate_triangulations(M.triangulation()))
            if got != math.factorial(n):
                bad.append(("crys", n, got))
        ws = [Fraction(t, n + 1) for t in range(n)]
        vg = TriangModule.make([declare(QP, f"v{t}", w, 0) for t, w in enumerate(ws)], ModuleClass.VERY_GENERIC)
        if len(enumerate_triangulations(vg)) != 1:
            bad.append(("very generic", n))
        for m in range(n + 1):
            head = [declare(QP, f"a{t}", Fraction(1, 2 + t), 0) for t in range(m)]
            tail = [X ** (2 * (n - t)) * declare(QP, f"phi{t}", None, t) for t in range(n - m)]
            D = TriangModule.make(head + tail, ModuleClass.MIXED, mixed_m=m)
            got = len(enumerate_triangulations(D))
            if got != math.factorial(n - m):
                bad.append(("mixed", n, m, got))
    report(3, "triangulation counts", not bad, "n <= 5" if not bad else f"{bad}")


def test_criterion_04_wu_modification(report):
    t0 = time.perf_counter()
    res = suites.lattice_uniqueness(0)
    elapsed = time.perf_counter() - t0
    ok, detail = _suite(res)
    report(4, "Wu modification", ok and elapsed < 10, f"{detail}; {elapsed:.1f}s")


def test_criterion_05_coprime_recovery(report):
    report(5, "coprime recovery", *_suite(suites.coprime_recovery(0)))


def test_criterion_06_commutation(report):
    report(6, "commutation", *_suite(suites.commutation(0)))


def test_criterion_07_etale_equivalence(report):
    report(7, "etaleness equivalence", *_suite(suites.etale_oracle(0)))


def test_criterion_08_rearrangement(report):
    report(8, "rearrangement", *_suite(suites.rearrangement(0)))


def test_criterion_09_deformation_algebra(report):
    parts = [suites.kappa_homomorphism(0), suites.dot_identities(0), suites.translation_consistency()]
    ok = all(p.passed for p in parts)
    report(9, "deformation algebra", ok, "; ".join(f"{p.name}: {_suite(p)[1]}" for p in parts))


def test_criterion_10_intertwining(report):
    report(10, "intertwining shadow", *_suite(suites.intertwining(0)))
