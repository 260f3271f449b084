"""Finite model of a Sen module and its lattice modifications.

A lattice D^+ is represented by its reduction D = D^+/t D^+ together with the
Sen operator Theta acting on it.  Given a comaximal factorization
P(T) = Q(T) S(T) of the characteristic polynomial, the sublattice M with
M/tD^+ = ker S(Theta) has reduction ker S(Theta) + t ker Q(Theta), on which
Theta acts as Theta on the first summand and Theta + 1 on the second.  In the
coordinates of D this is the matrix Theta + eQ(Theta), where eQ is the CRT
idempotent, so the modified operator is computed without choosing bases.  The
same works over dual numbers because eQ(Theta) is an idempotent commuting with
Theta.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from fractions import Fraction
from typing import Sequence

from .errors import GateViolation, NotComaximal, UnsupportedInput
from .exactalg import (DualNum, Mat, Poly, bezout_coprime, canonical_span, crt_idempotents, eps_part,
                       poly_gcd, residue)


@dataclass(frozen=True)
class SenLattice:
    theta: Mat

    def __post_init__(self):
        self.theta.n  # square check

    @property
    def n(self) -> int:
        return self.theta.n

    @property
    def ring(self) -> str:
        return "dual" if self.theta.is_dual() else "rat"

    def charpoly(self) -> Poly:
        return self.theta.charpoly()

    @classmethod
    def triangular(cls, diagonal: Sequence, above: int = 1) -> "SenLattice":
        """Upper-triangular Theta with the given diagonal and constant entries above it."""
        n = len(diagonal)
        rows = [[diagonal[i] if i == j else (above if j > i else 0) for j in range(n)] for i in range(n)]
        return cls(Mat(rows))


@dataclass(frozen=True)
class Factorization:
    Q: Poly
    S: Poly
    A: Poly
    B: Poly

    def shifted(self, c) -> "Factorization":
        """The factorization (Q(T+c), S(T)) of the modified lattice."""
        return make_factorization(self.Q.shift(c), self.S)


def make_factorization(Q: Poly, S: Poly) -> Factorization:
    if not (Q.is_monic() and S.is_monic()):
        raise ValueError("factors must be monic")
    A, B = bezout_coprime(Q, S)
    return Factorization(Q, S, A, B)


def split_sen_poly(L: SenLattice, I: Sequence[int], roots: Sequence | None = None) -> Factorization:
    """Factor charpoly(Theta) as Q_I * S_I using the ordered roots.

    ``roots`` are the Sen weights in triangulation order (defaults to the
    diagonal of Theta, correct for triangular Theta); ``I`` holds 1-based
    positions placed into Q.
    """
    n = L.n
    if roots is None:
        roots = [L.theta.rows[i][i] for i in range(n)]
    roots = list(roots)
    if len(roots) != n:
        raise ValueError("need one root per dimension")
    I = sorted(set(I))
    if any(not 1 <= i <= n for i in I):
        raise ValueError(f"indices must lie in 1..{n}")
    if Poly.from_roots(roots) != L.charpoly():
        raise ValueError("supplied roots do not match the characteristic polynomial")
    q_idx = [i - 1 for i in I]
    s_idx = [i for i in range(n) if i not in q_idx]
    clashes = [(a + 1, b + 1, residue(roots[a])) for a in q_idx for b in s_idx
               if residue(roots[a]) == residue(roots[b])]
    if clashes:
        raise NotComaximal("Q and S share a root at the residue field",
                           datum=[{"q_index": a, "s_index": b, "root": r} for a, b, r in clashes])
    Q = Poly.from_roots(roots[i] for i in q_idx)
    S = Poly.from_roots(roots[i] for i in s_idx)
    return make_factorization(Q, S)


@dataclass(frozen=True)
class Modification:
    W: tuple[tuple, ...]
    lattice: SenLattice


def _image_basis(E: Mat) -> tuple[tuple, ...]:
    """Basis of the image of an idempotent matrix.

    Over Q this is the canonical RREF basis of the column space.  Over Q[eps]
    the columns of E at the pivot positions of its residue form a basis
    (Nakayama), and these are returned as they stand.
    """
    if not E.is_dual():
        cols = E.column_space_basis()
        return canonical_span(cols)
    _, pivots = E.residue().rref()
    return tuple(E.column(p) for p in pivots)


def _check(L: SenLattice, F: Factorization):
    if F.Q * F.S != L.charpoly():
        raise ValueError("factorization does not match the characteristic polynomial")


def modify_down(L: SenLattice, F: Factorization) -> Modification:
    """Lattice between tD^+ and D^+ whose Sen polynomial is Q(T-1) S(T).

    W = ker S(Theta) (image of the projector eS(Theta)); the new operator is
    Theta + eQ(Theta).
    """
    _check(L, F)
    eQ, _ = crt_idempotents(F.Q, F.S, (F.A, F.B))
    EQ = L.theta.apply_poly(eQ)
    # eQ + eS = 1 mod QS and QS(Theta) = 0, so eS(Theta) = 1 - eQ(Theta)
    ES = Mat.identity(L.n) - EQ
    return Modification(_image_basis(ES), SenLattice(L.theta + EQ))


def modify_up(L: SenLattice, F: Factorization) -> Modification:
    """Lattice between D^+ and t^{-1}D^+ whose Sen polynomial is Q(T+1) S(T).

    W = ker Q(Theta), the part divided by t; the new operator is Theta - eQ(Theta).
    """
    _check(L, F)
    eQ, _ = crt_idempotents(F.Q, F.S, (F.A, F.B))
    EQ = L.theta.apply_poly(eQ)
    return Modification(_image_basis(EQ), SenLattice(L.theta - EQ))


def _shares_root(P: Poly, S: Poly) -> Poly | None:
    g = poly_gcd(P.residue(), S.residue())
    return g if g.degree > 0 else None


def round_trip_guaranteed(F: Factorization) -> tuple[bool, list[dict]]:
    """Whether modify_up and modify_down are mutually inverse for F.

    This needs every difference between a root of Q and a root of S to avoid
    {-1, 0, 1}, i.e. S coprime to Q(T), Q(T-1) and Q(T+1).  Failing pairs are
    returned with their common factor.
    """
    reasons = []
    for c, name in ((0, "Q(T)"), (-1, "Q(T-1)"), (1, "Q(T+1)")):
        g = _shares_root(F.Q.shift(c), F.S)
        if g is not None:
            reasons.append({"pair": f"{name},S(T)", "common_factor": str(g)})
    return (not reasons, reasons)


def modify_round_trip(L: SenLattice, F: Factorization, direction: str = "down") -> SenLattice:
    """Apply a modification and then its inverse, refusing when not guaranteed."""
    ok, reasons = round_trip_guaranteed(F)
    if not ok:
        raise GateViolation("modifications are not guaranteed to be mutually inverse", datum=reasons)
    if direction == "down":
        L1 = modify_down(L, F).lattice
        return modify_up(L1, F.shifted(-1)).lattice
    L1 = modify_up(L, F).lattice
    return modify_down(L1, F.shifted(1)).lattice


# --------------------------------------------------------- brute-force oracle


def _divisors(m: int) -> list[int]:
    m = abs(m)
    small = [d for d in range(1, math.isqrt(m) + 1) if m % d == 0]
    return sorted(set(small + [m // d for d in small]))


def rational_roots(P: Poly) -> list[Fraction]:
    """Rational roots of a rational polynomial with multiplicity, or raise.

    Uses the rational root theorem on the cleared-denominator polynomial;
    raises UnsupportedInput when P does not split over Q.
    """
    if P.is_dual():
        raise UnsupportedInput("rational roots need rational coefficients")
    roots: list[Fraction] = []
    while P.degree > 0 and P.coeff(0) == 0:
        roots.append(Fraction(0))
        P = P // Poly.T()
    while P.degree > 0:
        den = math.lcm(*(c.denominator for c in P.coeffs))
        ints = [int(c * den) for c in P.coeffs]
        found = None
        for p in _divisors(ints[0]):
            for q in _divisors(ints[-1]):
                for r in (Fraction(p, q), Fraction(-p, q)):
                    if P(r) == 0:
                        found = r
                        break
                if found is not None:
                    break
            if found is not None:
                break
        if found is None:
            raise UnsupportedInput("characteristic polynomial does not split over Q")
        roots.append(found)
        P = P // Poly((-found, 1))
    return sorted(roots)


def _stable_subspaces_block(theta: Mat, lam: Fraction, mult: int, n: int) -> tuple[list[tuple], bool]:
    """Theta-stable subspaces of the generalized lam-eigenspace.

    Exact for cyclic blocks (a chain of kernels); otherwise spans of vectors
    with coordinates in {-1, 0, 1} over a basis of the block are tried.
    """
    N = theta - Mat.identity(n) * lam
    G = (N.apply_poly(Poly.T() ** mult)).kernel_basis() if mult else []
    if len(N.kernel_basis()) == 1:
        out = [()]
        P = Mat.identity(n)
        for _ in range(mult):
            P = P * N
            out.append(canonical_span(P.kernel_basis()))
        return out, True
    if n > 3:
        raise UnsupportedInput("non-cyclic eigenvalue blocks are enumerated only for n <= 3")
    box = [v for v in itertools.product((-1, 0, 1), repeat=len(G)) if any(v)]
    vecs = [tuple(sum((c * g[t] for c, g in zip(coef, G)), Fraction(0)) for t in range(n)) for coef in box]
    found = {()}
    for r in range(1, len(G) + 1):
        for combo in itertools.combinations(vecs, r):
            span = canonical_span(combo)
            if len(span) != r or span in found:
                continue
            if all(Mat(list(span) + [theta.apply(v)]).rank() == r for v in span):
                found.add(span)
    return sorted(found, key=lambda s: (len(s), s)), False


def _quotient_charpolys(theta: Mat, W: Sequence[tuple], full: Poly | None = None) -> tuple[Poly, Poly]:
    """charpoly of Theta on a stable W and on D/W.

    W is given by its canonical RREF basis, so the coordinates of a vector
    of W are its entries at the pivot columns; the quotient charpoly is the
    exact cofactor in charpoly(Theta).
    """
    one = Poly((1,))
    full = theta.charpoly() if full is None else full
    if not W:
        return one, full
    pivots = [next(c for c, x in enumerate(v) if x != 0) for v in W]
    images = [theta.apply(v) for v in W]
    top = Mat([[img[p] for p in pivots] for img in images])
    cw = top.charpoly()
    cq, rem = divmod(full, cw)
    if not rem.is_zero():
        raise ArithmeticError("W is not stable under Theta")
    return cw, cq


@dataclass(frozen=True)
class OracleResult:
    subspaces: tuple[tuple[tuple, ...], ...]
    exhaustive: bool


@lru_cache(maxsize=256)
def _stable_candidates(theta: Mat) -> tuple[tuple[tuple[tuple, Poly, Poly], ...], bool]:
    """Every enumerated Theta-stable W with the charpolys on W and on D/W."""
    n = theta.n
    full = theta.charpoly()
    roots = rational_roots(full)
    mults: dict[Fraction, int] = {}
    for r in roots:
        mults[r] = mults.get(r, 0) + 1
    blocks = []
    exhaustive = True
    for lam, m in sorted(mults.items()):
        subs, exact = _stable_subspaces_block(theta, lam, m, n)
        blocks.append(subs)
        exhaustive = exhaustive and exact
    out = []
    for choice in itertools.product(*blocks):
        W = canonical_span([v for part in choice for v in part])
        cw, cq = _quotient_charpolys(theta, W, full)
        out.append((W, cw, cq))
    return tuple(out), exhaustive


def brute_force_modifications(L: SenLattice, target: Poly) -> OracleResult:
    """All Theta-stable W with charpoly(Theta|W) * charpoly((Theta+1)|D/W) = target."""
    if L.theta.is_dual():
        raise UnsupportedInput("the enumeration oracle works over Q only")
    candidates, exhaustive = _stable_candidates(L.theta)
    hits = {W for W, cw, cq in candidates if cw * cq.shift(-1) == target}
    return OracleResult(tuple(sorted(hits, key=lambda s: (len(s), s))), exhaustive)


# ------------------------------------------------------ coprime recovery lemma


@dataclass(frozen=True)
class RecoveryCheck:
    hypotheses_ok: bool
    failed_hypotheses: tuple[str, ...]
    conclusion: bool

    @property
    def holds(self) -> bool:
        """The lemma's implication: hypotheses imply the conclusion."""
        return (not self.hypotheses_ok) or self.conclusion


def recover_factors_check(Q: Poly, S: Poly, Q2: Poly, S2: Poly) -> RecoveryCheck:
    """Check that QS = Q'S', Q(T-1)S = Q'(T-1)S' and (Q,S) = 1 force Q = Q', S = S'."""
    failed = []
    if not all(p.is_monic() for p in (Q, S, Q2, S2)):
        failed.append("monic")
    if Q * S != Q2 * S2:
        failed.append("QS = Q'S'")
    if Q.shift(-1) * S != Q2.shift(-1) * S2:
        failed.append("Q(T-1)S = Q'(T-1)S'")
    if _shares_root(Q, S) is not None:
        failed.append("(Q,S) = 1")
    return RecoveryCheck(not failed, tuple(failed), Q == Q2 and S == S2)


def recover_degree_matched_check(Q: Poly, S: Poly, Q2: Poly, S2: Poly) -> RecoveryCheck:
    """Degree-matched variant: QS = Q'S' with four-way comaximality forces equality.

    Valid over Q[eps] as well as Q; coprimality is tested at the residue.
    """
    failed = []
    if not all(p.is_monic() for p in (Q, S, Q2, S2)):
        failed.append("monic")
    if Q.degree != Q2.degree or S.degree != S2.degree:
        failed.append("degrees match")
    if Q * S != Q2 * S2:
        failed.append("QS = Q'S'")
    if not four_way_comaximal(Q, S, Q2, S2):
        failed.append("four-way comaximal")
    return RecoveryCheck(not failed, tuple(failed), Q == Q2 and S == S2)


def four_way_comaximal(Q: Poly, S: Poly, Q2: Poly, S2: Poly) -> bool:
    """(Q,S) = (Q',S) = (Q,S') = (Q',S') = (1) at the residue field."""
    return all(_shares_root(a, b) is None for a, b in ((Q, S), (Q2, S), (Q, S2), (Q2, S2)))


def residue_coprime(Q: Poly, S: Poly) -> bool:
    """Coprimality over Q[eps] is decided by the residues."""
    return _shares_root(Q, S) is None


def dual_roots(P: Poly, residue_roots: Sequence[Fraction]) -> list[DualNum]:
    """Lift simple residue roots of a dual-number polynomial (Hensel step)."""
    P0, P1, dP0 = P.residue(), P.eps_part(), P.residue().derivative()
    out = []
    for h in residue_roots:
        if P0(h) != 0:
            raise ValueError(f"{h} is not a residue root")
        d = dP0(h)
        if d == 0:
            raise UnsupportedInput("Hensel lift needs simple residue roots")
        out.append(DualNum(h, -P1(h) / d))
    return out


def factor_pairs(roots: Sequence) -> list[tuple[Poly, Poly]]:
    """All monic splittings (Q', S') of prod (T - r) into complementary root multisets."""
    roots = sorted(roots, key=lambda r: (residue(r), eps_part(r)))
    seen = set()
    out = []
    for mask in itertools.product((0, 1), repeat=len(roots)):
        q = tuple(r for r, b in zip(roots, mask) if b)
        if q in seen:
            continue
        seen.add(q)
        s = [r for r, b in zip(roots, mask) if not b]
        out.append((Poly.from_roots(q), Poly.from_roots(s)))
    return out


# ------------------------------------------------- consistency with pullbacks


def pullback_consistency(D, i: int, sigma: str) -> dict:
    """Compare Sen-lattice modification with the weight rule of p_{i,sigma}.

    For every triangulation of D (or D's own when it is Plain) the operator
    Theta is upper triangular with the sigma-weights on the diagonal; the
    modification by Q_I (I = last i positions) must have Sen polynomial whose
    roots are the weights after p_{i,sigma}.
    """
    from .trianguline import ModuleClass, enumerate_triangulations, pullback_p, wall_violations

    viol = wall_violations(D, sigma, i, (0, 0))
    if viol:
        raise GateViolation("weights of the first n-i and last i positions collide", datum=viol)
    if D.class_tag is ModuleClass.PLAIN:
        orderings = [tuple(D.weights(sigma))]
    else:
        orderings = [tuple(residue(x) for x in t.weights(sigma)) for t in enumerate_triangulations(D)]
    n = D.n
    I = list(range(n - i + 1, n + 1))
    expected = pullback_p(D, i, sigma, 1).weights(sigma)
    rows = []
    for ws in orderings:
        L = SenLattice.triangular(ws)
        F = split_sen_poly(L, I, ws)
        new = modify_down(L, F).lattice.charpoly()
        target = Poly.from_roots([w + 1 if t >= n - i else w for t, w in enumerate(ws)])
        rows.append({"weights": ws, "Q": F.Q, "S": F.S, "new_charpoly": new, "matches": new == target})
    consistent = all(r["Q"] == rows[0]["Q"] and r["S"] == rows[0]["S"] for r in rows)
    return {
        "orderings": rows,
        "consistent": consistent,
        "all_match": all(r["matches"] for r in rows),
        "new_weights": expected,
        "regular_after": len(set(expected)) == len(expected),
        "safe_zone": not wall_violations(D, sigma, i, (0, 1)),
    }
