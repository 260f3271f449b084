import itertools
from fractions import Fraction

import hypothesis.strategies as st
import pytest
from hypothesis import assume, given

from chweights.characters import FieldShape, abs_char, declare, x_char, x_power
from chweights.errors import GateViolation, UnsupportedInput
from chweights.refinements import CrysModule
from chweights.trianguline import (ModuleClass, Step, TriangModule, apply_program, enumerate_triangulations,
                                   global_twist, invertibility_gate, pullback_p, pushout_iota, wall_member,
                                   wall_member_program, wall_program_violations, weight_uniform_check)

QP = FieldShape.qp()
K2 = FieldShape(1, 2, ("s0", "s1"))
X = x_char(QP, "s0")


def weighted(shape, ws, tag="w"):
    """Characters with prescribed sigma-weights (one declared generator each)."""
    return [declare(shape, f"{tag}{t}", w, 0) for t, w in enumerate(ws)]


def module_with_weights(ws):
    return TriangModule.make(weighted(QP, [Fraction(w) for w in ws]))


# ----------------------------------------------------------- fixed values


@pytest.mark.parametrize("k", range(0, 6))
def test_intro_split_example(k):
    D1 = TriangModule.make([X, X ** 2])
    D2 = TriangModule.make([X ** 2, X])
    p1, p2 = pullback_p(D1, 1, "s0", k), pullback_p(D2, 1, "s0", k)
    assert p1.params == (X, X ** (k + 2)) and p1.weights("s0") == (1, k + 2)
    assert p2.weights("s0") == (2, k + 1)


def test_pushout_example_and_identity():
    D = TriangModule.make([X, X ** 2])
    io = pushout_iota(D, 1, "s0", 1)
    assert io.params[0].is_trivial() and io.params[1] == X ** 2
    assert global_twist(io, X).params == pullback_p(D, 1, "s0", 1).params
    assert pushout_iota(D, 1, "s0", 0) == D


@pytest.mark.parametrize("ws,k,ok", [
    ((Fraction(1, 2), 0), 1, True),
    ((3, 0), 3, False),
    ((3, 0), 2, True),
])
def test_invertibility_gate(ws, k, ok):
    g = invertibility_gate(module_with_weights(ws), 1, {"s0": k})
    assert g.ok is ok
    if not ok:
        assert g.violations == ({"j": 1, "l": 2, "sigma": "s0", "difference": 3},)


@pytest.mark.parametrize("ws,interval,member", [
    ((2, 0), (0, 1), True),
    ((2, 1), (0, 1), False),
    ((2, 2), (0, 0), False),
])
def test_wall_member(ws, interval, member):
    assert wall_member([Fraction(w) for w in ws], None, 1, interval) is member


def test_wall_interval_must_contain_zero():
    with pytest.raises(ValueError):
        wall_member([Fraction(0), Fraction(1)], None, 1, (1, 2))


def test_wall_program_reduces_to_single_shift():
    w = {"s0": [Fraction(2), Fraction(0)]}
    assert wall_member_program(w, ["s0"], {"s0": [1]}, {"s0": {1: 1}})
    assert wall_member_program(w, ["s0"], {"s0": [1]}, {"s0": {1: 1}}) == wall_member(w, "s0", 1, (0, 1))
    w2 = {"s0": [Fraction(2), Fraction(2)]}
    assert wall_member_program(w2, ["s0"], {"s0": [1]}, {"s0": {1: 0}}) == wall_member(w2, "s0", 1, (0, 0))


def _oracle_program_walls(ws, I, k, negative=False):
    """Independent unfolding: assign each position its block, then compare blocks pairwise."""
    n = len(ws)
    idx = sorted(I)
    cuts = [0] + idx + [n]

    def block(pos):  # 1-based position -> m with n+1-i_{m+1} <= pos < n+1-i_m
        return next(m for m in range(len(cuts) - 1) if n + 1 - cuts[m + 1] <= pos < n + 1 - cuts[m])

    bad = set()
    for j, l in itertools.product(range(1, n + 1), repeat=2):
        m, mp = block(j), block(l)
        if mp >= m:
            continue
        bound = sum(k[cuts[r]] for r in range(mp + 1, m + 1))
        d = ws[j - 1] - ws[l - 1]
        d = -d if negative else d
        if d.denominator == 1 and 0 <= d <= bound:
            bad.add((j, l))
    return bad


def test_wall_program_n3_against_oracle():
    ws = [Fraction(5), Fraction(3), Fraction(0)]
    got = wall_program_violations({"s0": ws}, ["s0"], {"s0": [1, 2]}, {"s0": {1: 1, 2: 1}})
    assert {(v["j"], v["l"]) for v in got} == _oracle_program_walls(ws, [1, 2], {1: 1, 2: 1}) == set()


def test_commuting_steps_example():
    D = module_with_weights((4, 2, 0))
    a = apply_program(D, [Step(1, "s0"), Step(2, "s0")])
    b = apply_program(D, [Step(2, "s0"), Step(1, "s0")])
    assert a == b and a.weights("s0") == (4, 3, 2)
    assert apply_program(D, []) == D


def test_q_program_inverts():
    D = module_with_weights((4, 2, 0))
    prog = [Step(1, "s0", 2), Step(2, "s0")]
    assert apply_program(apply_program(D, prog), prog, inverse=True) == D


def test_strict_mode_gate():
    D = module_with_weights((1, 0))
    with pytest.raises(GateViolation):
        apply_program(D, [Step(1, "s0")], mode="strict")


def test_triangulation_counts():
    for n in range(1, 5):
        M = CrysModule.build(QP, list(range(n)), list(range(n - 1, -1, -1)))
        assert len(enumerate_triangulations(M.triangulation())) == len(list(itertools.permutations(range(n))))
    vg = TriangModule.make(weighted(QP, [Fraction(1, 2), Fraction(1, 3), Fraction(0)]), ModuleClass.VERY_GENERIC)
    assert len(enumerate_triangulations(vg)) == 1
    phis = [declare(QP, f"phi{t}") for t in range(2)]
    head = declare(QP, "head", Fraction(1, 2))
    mixed = TriangModule.make([head, X ** 3 * phis[0], X * phis[1]], ModuleClass.MIXED, mixed_m=1)
    assert len(enumerate_triangulations(mixed)) == 2


def test_plain_module_has_no_classification():
    with pytest.raises(UnsupportedInput):
        enumerate_triangulations(TriangModule.make([X, X ** 2]))


def test_weight_uniformity():
    M = CrysModule.build(QP, [0, 1, 2], [2, 1, 0])
    tris = enumerate_triangulations(M.triangulation())
    assert weight_uniform_check(tris)
    assert weight_uniform_check(tris[:1])
    crit = CrysModule.build(QP, [0, 1], [1, 0], flags=[[1, 0], [0, 1]])
    assert not weight_uniform_check(enumerate_triangulations(crit.triangulation()))


def test_split_flag_invariant():
    with pytest.raises(GateViolation):
        TriangModule.make([X, X ** 2], step=[False], graded=[True])
    D = TriangModule.make([X, X ** 2, X ** 4], step=[True, True], graded=[True, False])
    assert D.is_nonsplit and not D.is_strongly_nonsplit


def test_very_generic_needs_tcirc():
    with pytest.raises(GateViolation):
        TriangModule.make([X ** 2, X], ModuleClass.VERY_GENERIC)


def test_index_out_of_range():
    with pytest.raises(ValueError):
        pullback_p(TriangModule.make([X]), 2, "s0")


# ------------------------------------------------------------- properties

steps2 = st.builds(Step, st.integers(1, 3), st.sampled_from(["s0", "s1"]), st.integers(0, 2))


@given(st.lists(st.integers(-4, 4), min_size=3, max_size=3), st.lists(steps2, max_size=5), st.randoms())
def test_program_order_independent(ws, prog, rnd):
    D = TriangModule.make([declare(K2, f"g{t}", [w, -w], Fraction(t)) for t, w in enumerate(ws)])
    shuffled = list(prog)
    rnd.shuffle(shuffled)
    assert apply_program(D, prog) == apply_program(D, shuffled)


@given(st.lists(st.integers(-4, 4), min_size=1, max_size=4), st.data())
def test_push_pull_identity(ws, data):
    D = TriangModule.make(weighted(K2, [[w, 0] for w in ws]))
    i = data.draw(st.integers(1, len(ws)))
    s = data.draw(st.sampled_from(K2.embeddings))
    k = data.draw(st.integers(0, 3))
    assert global_twist(pushout_iota(D, i, s, k), x_power(K2, {s: k})) == pullback_p(D, i, s, k)


@given(st.lists(st.integers(-6, 6), min_size=2, max_size=4, unique=True),
       st.lists(st.tuples(st.integers(1, 4), st.integers(0, 2)), min_size=1, max_size=3))
def test_wall_safe_program_round_trip(ws, raw):
    ws = sorted(ws, reverse=True)
    n = len(ws)
    prog = [Step(min(i, n), "s0", k) for i, k in raw]
    D = module_with_weights(ws)
    I = {"s0": sorted({s.i for s in prog if s.k})}
    k = {"s0": {}}
    for s in prog:
        if s.k:
            k["s0"][s.i] = k["s0"].get(s.i, 0) + s.k
    assume(wall_member_program(D.weight_table(), ["s0"], I, k))
    moved = apply_program(D, prog, mode="substack")
    assert wall_member_program(moved.weight_table(), ["s0"], I, k, negative=True)
    assert apply_program(moved, prog, mode="substack", inverse=True) == D
    got = wall_program_violations(D.weight_table(), ["s0"], I, k)
    assert not got and not _oracle_program_walls([Fraction(w) for w in ws], I["s0"], k["s0"])


@given(st.lists(st.integers(-5, 5), min_size=2, max_size=4), st.data())
def test_wall_program_matches_oracle(ws, data):
    n = len(ws)
    I = sorted(data.draw(st.sets(st.integers(1, n), min_size=1, max_size=n)))
    k = {i: data.draw(st.integers(0, 2)) for i in I}
    neg = data.draw(st.booleans())
    ws = [Fraction(w) for w in ws]
    got = wall_program_violations({"s0": ws}, ["s0"], {"s0": I}, {"s0": k}, negative=neg)
    assert {(v["j"], v["l"]) for v in got} == _oracle_program_walls(ws, I, k, neg)
