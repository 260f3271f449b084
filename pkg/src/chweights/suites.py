"""Randomized and exhaustive verification sweeps against brute-force oracles.

Every suite is deterministic for a fixed seed and returns a
:class:`SuiteResult`; the first failing case is kept as a JSON-ready
counterexample.  The suites back the ``verify`` command and the acceptance
tests.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

from .characters import FieldShape, declare
from .errors import GateViolation, SchemaError
from .exactalg import DualNum, Mat, Poly, canonical_span, residue
from .refinements import CrysModule, adjacent_swap, compose_swap, flag_jumps, general_position_flag
from .senlattice import (SenLattice, brute_force_modifications, dual_roots, factor_pairs, make_factorization,
                         modify_down, modify_round_trip, recover_degree_matched_check, recover_factors_check,
                         residue_coprime, round_trip_guaranteed, split_sen_poly)
from .serial import jsonable
from .slopes import brute_force_etale, etale_crys, etale_pullback_vgen, etale_vgen, twist_to_etale
from .trianguline import ModuleClass, Step, TriangModule, apply_program
from . import deformations as dfm


@dataclass
class SuiteResult:
    name: str
    passed: bool = True
    cases: int = 0
    counterexample: dict | None = None
    notes: dict = field(default_factory=dict)

    def fail(self, **datum):
        if self.passed:
            self.passed = False
            self.counterexample = jsonable(datum)

    def as_dict(self) -> dict:
        out = {"name": self.name, "passed": self.passed, "cases": self.cases,
               "counterexample": self.counterexample}
        if self.notes:
            out["notes"] = jsonable(self.notes)
        return out


# ----------------------------------------------------------------- generators


def random_invertible(rng: random.Random, n: int, lo: int = -2, hi: int = 2, zero_bias: float = 0.0) -> Mat:
    while True:
        M = Mat([[0 if rng.random() < zero_bias else rng.randint(lo, hi) for _ in range(n)] for _ in range(n)])
        if M.rank() == n:
            return M


def random_semisimple(rng: random.Random, n: int) -> tuple[SenLattice, list[Fraction]]:
    """P diag(lambda) P^-1 with distinct small (occasionally half-integral) eigenvalues."""
    pool = [Fraction(a) for a in range(-5, 6)] + [Fraction(a, 2) for a in (-3, -1, 1, 3)]
    eig = rng.sample(pool, n)
    P = random_invertible(rng, n)
    theta = P * Mat.diag(eig) * P.inverse()
    return SenLattice(theta), eig


def random_rational_flag(rng: random.Random, n: int, sparse: bool = False) -> Mat:
    """Invertible flag matrix; sparse flags make critical refinements common."""
    while True:
        rows = [[Fraction(0) if sparse and rng.random() < 0.55 else Fraction(rng.randint(-3, 3), rng.randint(1, 3))
                 for _ in range(n)] for _ in range(n)]
        M = Mat(rows)
        if M.rank() == n:
            return M


def random_regular_weights(rng: random.Random, n: int, lo: int = -3, hi: int = 6) -> tuple[int, ...]:
    return tuple(sorted(rng.sample(range(lo, hi + 1), n), reverse=True))


def random_crys(rng: random.Random, n: int, shape: FieldShape | None = None, flag: str = "general",
                etale_bias: float = 0.5) -> CrysModule:
    """Crystabelline datum with valuations in [-5, 5] and regular weights.

    With probability ``etale_bias`` the valuations are chosen with total
    -sum(h)/e, so that the slope-zero condition holds and both outcomes of
    the etaleness test are well represented.
    """
    shape = shape or FieldShape.qp()
    weights = {s: random_regular_weights(rng, n) for s in shape.embeddings}
    vps = [rng.randint(-5, 5) for _ in range(n)]
    if rng.random() < etale_bias:
        total = -sum(sum(h) for h in weights.values())
        if total % shape.e == 0:
            for _ in range(30):
                head = [rng.randint(-5, 5) for _ in range(n - 1)]
                last = total // shape.e - sum(head)
                if -5 <= last <= 5:
                    vps = head + [last]
                    break
    if flag == "general":
        flags = None
    else:
        flags = {s: random_rational_flag(rng, n, sparse=(flag == "sparse")) for s in shape.embeddings}
    return CrysModule.build(shape, vps, weights, flags)


def random_very_generic_etale(rng: random.Random, n: int, shape: FieldShape | None = None) -> TriangModule:
    """Very generic module with descending valuations of total zero (hence etale).

    Weights are multiples of 1/7 with distinct residues, so every ratio stays in T_circ.
    """
    shape = shape or FieldShape.qp()
    while True:
        u = sorted((rng.randint(-4, 4) for _ in range(n - 1)), reverse=True)
        last = -sum(u)
        if not u or last <= u[-1]:
            u.append(last)
            break
    params = []
    # distinct residues mod 7 keep every weight difference non-integral
    res = {s: rng.sample(range(1, 7), n) for s in shape.embeddings}
    for t in range(n):
        ws = {s: Fraction(7 * rng.randint(-3, 3) + res[s][t], 7) for s in shape.embeddings}
        params.append(declare(shape, f"d{t + 1}", ws, u[t]))
    return TriangModule.make(params, ModuleClass.VERY_GENERIC)


def _subsets(n: int):
    for r in range(1, n):
        yield from itertools.combinations(range(1, n + 1), r)


# --------------------------------------------------------------- the suites


def lattice_uniqueness(seed: int = 0, cases: int = 200, nmax: int = 4,
                       modify: Callable | None = None, all_splits: bool = False) -> SuiteResult:
    """Modification charpoly, oracle uniqueness and round trips on semisimple Theta.

    Each Theta is tested on one random split I (every nonempty proper I with
    ``all_splits``).  ``modify`` defaults to :func:`modify_down`; a faulty
    replacement is detected by the charpoly law and the oracle comparison.
    """
    res = SuiteResult("lattice-uniqueness")
    rng = random.Random(seed)
    for case in range(cases):
        n = rng.randint(2, nmax)
        L, eig = random_semisimple(rng, n)
        res.cases += 1
        splits = list(_subsets(n))
        for I in (splits if all_splits else [rng.choice(splits)]):
            F = make_factorization(Poly.from_roots(eig[i - 1] for i in I),
                                   Poly.from_roots(eig[i - 1] for i in range(1, n + 1) if i not in I))
            mod = (modify or modify_down)(L, F)
            target = F.Q.shift(-1) * F.S
            if mod.lattice.charpoly() != target:
                res.fail(case=case, theta=L.theta, I=I, expected=target, got=mod.lattice.charpoly(),
                         check="charpoly")
                return res
            oracle = brute_force_modifications(L, target)
            if not oracle.exhaustive or oracle.subspaces != (canonical_span(mod.W),):
                res.fail(case=case, theta=L.theta, I=I, W=mod.W, oracle=oracle.subspaces, check="oracle")
                return res
            ok, _ = round_trip_guaranteed(F)
            try:
                back = modify_round_trip(L, F)
                if not ok or back.theta != L.theta:
                    res.fail(case=case, theta=L.theta, I=I, back=back.theta, check="round trip")
                    return res
            except GateViolation:
                if ok:
                    res.fail(case=case, theta=L.theta, I=I, check="round trip refused")
                    return res
                res.notes["refused"] = res.notes.get("refused", 0) + 1
    # the gap-1 counterexample must be refused
    L = SenLattice(Mat.diag([0, 1]))
    F = split_sen_poly(L, [2])
    res.cases += 1
    try:
        modify_round_trip(L, F)
        res.fail(theta=L.theta, I=[2], check="gap-1 round trip accepted")
    except GateViolation as exc:
        res.notes["gap_one_refusal"] = exc.datum
    return res


def _random_roots(rng: random.Random, deg: int, lo: int = -4, hi: int = 4) -> list[Fraction]:
    return [Fraction(rng.randint(lo, hi)) for _ in range(deg)]


def coprime_recovery(seed: int = 0, cases: int = 500) -> SuiteResult:
    """Factor recovery over Q and Q[eps], and residue coprimality vs root sets."""
    res = SuiteResult("coprime-recovery")
    rng = random.Random(seed)
    for case in range(cases):
        res.cases += 1
        qr = _random_roots(rng, rng.randint(1, 3))
        sr = [r for r in _random_roots(rng, rng.randint(1, 3)) if r not in qr] or [Fraction(9)]
        Q, S = Poly.from_roots(qr), Poly.from_roots(sr)
        # (ii): among all monic factor pairs of QS only (Q, S) fits Q'(T-1)S'
        fits = []
        for Q2, S2 in factor_pairs(qr + sr):
            rc = recover_factors_check(Q, S, Q2, S2)
            if not rc.holds:
                res.fail(case=case, Q=Q, S=S, Q2=Q2, S2=S2, check="shift recovery")
                return res
            if rc.hypotheses_ok:
                fits.append((Q2, S2))
            # (i): degree-matched, four-way comaximal pairs coincide
            if not recover_degree_matched_check(Q, S, Q2, S2).holds:
                res.fail(case=case, Q=Q, S=S, Q2=Q2, S2=S2, check="degree-matched recovery")
                return res
        if fits != [(Q, S)]:
            res.fail(case=case, Q=Q, S=S, fits=fits, check="unique fit")
            return res
        # (iii): over Q[eps] coprimality is decided by the residues
        dq = [DualNum(r, Fraction(rng.randint(-3, 3), rng.randint(1, 3))) for r in _random_roots(rng, rng.randint(1, 3))]
        ds = [DualNum(r, Fraction(rng.randint(-3, 3), rng.randint(1, 3))) for r in _random_roots(rng, rng.randint(1, 3))]
        Qd, Sd = Poly.from_roots(dq), Poly.from_roots(ds)
        disjoint = not ({residue(r) for r in dq} & {residue(r) for r in ds})
        if residue_coprime(Qd, Sd) != disjoint:
            res.fail(case=case, Q=Qd, S=Sd, check="residue coprimality")
            return res
        # recovery over Q[eps] from Hensel-lifted roots of a product with simple residue roots
        res_roots = [residue(r) for r in dq + ds]
        if disjoint and len(set(res_roots)) == len(res_roots):
            lifted = dual_roots(Qd * Sd, res_roots)
            if Poly.from_roots(lifted) != Qd * Sd:
                res.fail(case=case, Q=Qd, S=Sd, check="Hensel lift")
                return res
            for Q2, S2 in factor_pairs(lifted):
                if not recover_degree_matched_check(Qd, Sd, Q2, S2).holds:
                    res.fail(case=case, Q=Qd, S=Sd, Q2=Q2, S2=S2, check="dual recovery")
                    return res
    return res


def etale_oracle(seed: int = 0, cases: int = 500, nmax: int = 5, twist_cases: int = 100) -> SuiteResult:
    """etale_crys against brute force, and the twist solver on single steps."""
    res = SuiteResult("etale-oracle")
    rng = random.Random(seed)
    etale = 0
    for case in range(cases):
        res.cases += 1
        M = random_crys(rng, rng.randint(1, nmax))
        a, b = etale_crys(M), brute_force_etale(M)
        if a.verdict != b.verdict or a.partials != b.partials:
            res.fail(case=case, vps=M.vps, weights=M.weights, criterion=a.partials, brute=b.partials)
            return res
        etale += a.verdict
    feasible = 0
    for case in range(twist_cases):
        n = rng.randint(1, nmax)
        D = random_very_generic_etale(rng, n)
        sigma = D.shape.embeddings[0]
        if not etale_vgen(D).verdict:
            res.fail(case=case, uvals=[d.uval for d in D.params], check="generator produced a non-etale module")
            return res
        for j in range(1, n + 1):
            res.cases += 1
            pe = etale_pullback_vgen(D, j, sigma)
            c = twist_to_etale(D, [Step(j, sigma, 1)])
            expect = Fraction(-j, n * D.shape.e)
            if pe.chi_uval != expect or c != (expect if pe.feasible else None):
                res.fail(case=case, uvals=[d.uval for d in D.params], j=j, solver=c, expected=expect,
                         feasible=pe.feasible)
                return res
            feasible += pe.feasible
    res.notes.update(etale_instances=etale, feasible_twists=feasible)
    return res


def commutation(seed: int = 0, nmax: int = 4, mult: int = 2) -> SuiteResult:
    """apply_program is order-independent: every pair of steps commutes, and
    every multiplicity vector gives the same module in forward, reverse and
    shuffled single-step order.  Two embeddings; exhaustive for n <= nmax."""
    res = SuiteResult("commutation")
    rng = random.Random(seed)
    shape = FieldShape(1, 2, ("s0", "s1"))
    for n in range(1, nmax + 1):
        params = [declare(shape, f"c{t + 1}", {s: rng.randint(-4, 4) for s in shape.embeddings}, rng.randint(-3, 3))
                  for t in range(n)]
        D = TriangModule.make(params)
        slots = [(i, s) for i in range(1, n + 1) for s in shape.embeddings]
        steps = [Step(i, s, k) for i, s in slots for k in range(1, mult + 1)]
        for a, b in itertools.product(steps, repeat=2):
            res.cases += 1
            if apply_program(D, [a, b]) != apply_program(D, [b, a]):
                res.fail(n=n, steps=[a, b], check="pair")
                return res
        for ks in itertools.product(range(mult + 1), repeat=len(slots)):
            prog = [Step(i, s, k) for (i, s), k in zip(slots, ks) if k]
            singles = [Step(st.i, st.sigma, 1) for st in prog for _ in range(st.k)]
            rng.shuffle(singles)
            res.cases += 1
            ref = apply_program(D, prog)
            if ref != apply_program(D, prog[::-1]) or ref != apply_program(D, singles):
                res.fail(n=n, program=prog, check="multiplicity vector")
                return res
    return res


def _oracle_jumps(w, flag: Mat, jumps) -> tuple:
    """Induced jumps via dim(U cap V) = dim U + dim V - dim(U + V)."""
    n = flag.n
    cache = {}

    def cap(support, m):
        key = (support, m)
        if key not in cache:
            U = [flag.column(c) for c in range(m, n)]
            V = [tuple(Fraction(int(r == s)) for r in range(n)) for s in support]
            cache[key] = len(U) + len(V) - Mat.from_columns(U + V).rank() if U and V else 0
        return cache[key]

    out = []
    for i in range(1, n + 1):
        Vi, Vp = frozenset(w[s] - 1 for s in range(i)), frozenset(w[s] - 1 for s in range(i - 1))
        out.append(max(jumps[m] for m in range(n) if cap(Vi, m) - cap(Vp, m) == 1))
    return tuple(out)


def rearrangement(seed: int = 0, nmax: int = 5, flags_per_n: int = 4) -> SuiteResult:
    """adjacent_swap on every unsorted j(w), for all w and random rational flags."""
    res = SuiteResult("rearrangement")
    rng = random.Random(seed)
    unsorted = 0
    for n in range(2, nmax + 1):
        for t in range(flags_per_n):
            flag = random_rational_flag(rng, n, sparse=(t % 2 == 0))
            jumps = tuple(sorted(rng.sample(range(-6, 7), n)))
            for w in itertools.permutations(range(1, n + 1)):
                res.cases += 1
                j = flag_jumps(w, flag, jumps)
                if j == jumps:
                    continue
                unsorted += 1
                try:
                    i = adjacent_swap(w, flag, jumps)
                except ArithmeticError as exc:
                    res.fail(n=n, flag=flag, jumps=jumps, w=w, error=str(exc))
                    return res
                if i == "sorted":
                    res.fail(n=n, flag=flag, jumps=jumps, w=w, check="no descent found")
                    return res
                oj = _oracle_jumps(w, flag, jumps)
                sj = _oracle_jumps(compose_swap(w, i), flag, jumps)
                expect = list(oj)
                expect[i - 1], expect[i] = expect[i], expect[i - 1]
                if oj != j or j[i - 1] <= j[i] or list(sj) != expect:
                    res.fail(n=n, flag=flag, jumps=jumps, w=w, i=i, jumps_w=j, oracle=oj, swapped=sj)
                    return res
    res.notes["unsorted"] = unsorted
    return res


def _random_program(rng: random.Random, n: int, sigma: str, steps: int, kmax: int = 2) -> list[Step]:
    return [Step(rng.randint(1, n), sigma, rng.randint(1, kmax)) for _ in range(steps)]


def _wall_safe_program(rng: random.Random, D: TriangModule, steps: int, tries: int = 20) -> list[Step]:
    sigma = D.shape.embeddings[0]
    for _ in range(tries):
        prog = _random_program(rng, D.n, sigma, steps)
        if not dfm._program_walls(D, prog):
            return prog
    return []


def kappa_homomorphism(seed: int = 0, cases: int = 500, nmax: int = 4) -> SuiteResult:
    """kappa, Baer sum and pullback are compatible homomorphisms; the Sen
    polynomial of a Baer sum has eps-parts a_i + b_i."""
    res = SuiteResult("kappa-homomorphism")
    rng = random.Random(seed)
    bases: list = []
    for _ in range(12):
        M = random_crys(rng, rng.randint(1, nmax))
        w = tuple(rng.sample(range(1, M.n + 1), M.n))
        bases.append((TriangModule.make(M.refinement_params(w), ModuleClass.CRYS_NONCRIT), w))
    for case in range(cases):
        res.cases += 1
        base, w = bases[case % len(bases)]
        c1, c2 = dfm._random_class(base, w, rng), dfm._random_class(base, w, rng)
        s = dfm.baer_sum(c1, c2)
        prog = _wall_safe_program(rng, base, rng.randint(0, 3))
        kv = lambda c: dfm.kappa_vector(c)
        checks = {
            "kappa_additive": kv(s) == tuple(a + b for a, b in zip(kv(c1), kv(c2))),
            "inverse": dfm.baer_sum(c1, dfm.negate(c1)) == dfm.zero_class(base, w),
            "kappa_pullback": dfm.kappa(dfm.pullback_ext(c1, prog)) == dfm.kappa(c1),
            "pullback_additive": dfm.pullback_ext(s, prog) == dfm.baer_sum(dfm.pullback_ext(c1, prog),
                                                                           dfm.pullback_ext(c2, prog)),
        }
        h = base.weights(base.shape.embeddings[0])
        P = dfm.sen_poly_deform(s)
        P1, P2 = dfm.sen_poly_deform(c1), dfm.sen_poly_deform(c2)
        law = Poly.from_roots(DualNum(hi, a.wtd + b.wtd) for hi, a, b in zip(h, c1.psis, c2.psis))
        checks["sen_poly_law"] = P == law and P.eps_part() == P1.eps_part() + P2.eps_part() \
            and P.residue() == P1.residue()
        bad = [k for k, v in checks.items() if not v]
        if bad:
            res.fail(case=case, weights=h, w=w, program=prog, failed=bad)
            return res
    return res


def dot_identities(seed: int = 0, per_n: int = 100, nmax: int = 5) -> SuiteResult:
    """w0.(w0 xi) = xi - 2 rho and (vw).lam = v.(w.lam), both exactly."""
    res = SuiteResult("dot-actions")
    rng = random.Random(seed)
    for n in range(1, nmax + 1):
        perms = list(itertools.permutations(range(1, n + 1)))
        for _ in range(per_n):
            res.cases += 1
            xi = tuple(Fraction(rng.randint(-12, 12), rng.randint(1, 4)) for _ in range(n))
            v, w = rng.choice(perms), rng.choice(perms)
            vw = dfm.compose(v, w)
            ok = dfm.twist_hc_holds(xi)
            for which in (0, 1):
                ok &= dfm.dot_actions(vw, xi)[which] == dfm.dot_actions(v, dfm.dot_actions(w, xi)[which])[which]
            ok &= dfm.dot_actions(tuple(range(1, n + 1)), xi) == (xi, xi)
            if not ok:
                res.fail(n=n, xi=xi, v=v, w=w)
                return res
    return res


def translation_consistency(nmax: int = 5, kmax: int = 3) -> SuiteResult:
    """h' - h from apply_program equals the reversal of translation_diff(k),
    for every multiplicity vector with entries <= kmax."""
    res = SuiteResult("translation-diff")
    shape = FieldShape.qp()
    sigma = shape.embeddings[0]
    from .characters import x_power
    for n in range(1, nmax + 1):
        h = tuple(range(2 * (n - 1), -1, -2))
        D = TriangModule.make([x_power(shape, [x]) for x in h])
        for k in itertools.product(range(kmax + 1), repeat=n):
            res.cases += 1
            prog = [Step(i + 1, sigma, ki) for i, ki in enumerate(k)]
            moved = apply_program(D, prog).weights(sigma)
            diff = tuple(a - b for a, b in zip(moved, h))
            if dfm.program_multiplicities(prog, n) != k or diff != tuple(reversed(dfm.translation_diff(k))):
                res.fail(n=n, k=k, h=h, moved=moved)
                return res
    return res


def intertwining(seed: int = 0, cases: int = 100, nmax: int = 4, samples: int = 2) -> SuiteResult:
    """intertwine_check passes on wall-safe programs over random non-critical
    bases, and rejects a regularity-breaking program at the expected gap."""
    res = SuiteResult("intertwining")
    rng = random.Random(seed)
    for case in range(cases):
        res.cases += 1
        n = rng.randint(2, nmax)
        M = random_crys(rng, n)
        D = M.triangulation()
        sigma = D.shape.embeddings[0]
        h = D.weights(sigma)
        prog = []
        for _ in range(20):
            cand = _random_program(rng, n, sigma, rng.randint(1, 2), kmax=1)
            k = dfm.program_multiplicities(cand, n)
            h2 = tuple(x + d for x, d in zip(h, reversed(dfm.translation_diff(k))))
            if dfm._first_gap(h2) is None and not dfm._program_walls(D, cand):
                prog = cand
                break
        rep = dfm.intertwine_check(D, prog, samples=samples, seed=seed + case)
        if not rep["passed"]:
            res.fail(case=case, weights=h, program=prog, checks=rep["checks"])
            return res
        # break the first gap: raise positions g+1..n by h_g - h_{g+1}
        g = rng.randint(1, n - 1)
        bad = [Step(n - g, sigma, int(h[g - 1] - h[g]))]
        try:
            dfm.intertwine_check(D, bad, samples=1)
            res.fail(case=case, weights=h, program=bad, check="regularity break accepted")
            return res
        except GateViolation as exc:
            if not isinstance(exc.datum, dict) or exc.datum.get("gap") != g:
                res.fail(case=case, weights=h, program=bad, datum=exc.datum, expected_gap=g)
                return res
    return res


SUITES = {
    "lattice-uniqueness": lambda seed: lattice_uniqueness(seed),
    "coprime-recovery": lambda seed: coprime_recovery(seed),
    "etale-oracle": lambda seed: etale_oracle(seed),
    "commutation": lambda seed: commutation(seed),
    "rearrangement": lambda seed: rearrangement(seed),
    "kappa-homomorphism": lambda seed: kappa_homomorphism(seed),
    "dot-actions": lambda seed: dot_identities(seed),
    "translation-diff": lambda seed: translation_consistency(),
    "intertwining": lambda seed: intertwining(seed),
}


def verify_suites(seed: int = 0, names=None) -> dict:
    """Run the named suites (default: all) in a fixed order."""
    names = list(SUITES) if names in (None, "all", ["all"]) else list(names)
    unknown = [x for x in names if x not in SUITES]
    if unknown:
        raise SchemaError(f"unknown suite(s): {', '.join(unknown)}", datum=unknown)
    results = [SUITES[name](seed).as_dict() for name in names]
    return {
        "seed": seed,
        "suites": results,
        "passed": all(r["passed"] for r in results),
        "pass_count": sum(r["passed"] for r in results),
        "total": len(results),
    }
