"""First-order deformations over Q_p and the translation-weight calculus.

An extension class of D by D, taken modulo classes with trivial graded
deformations, is recorded by its coordinates kappa_w: one homomorphism
psi_i : Q_p^x -> E per graded piece, written as (psi_i(p), weight derivative
of psi_i).  Everything here is restricted to K = Q_p (a single embedding).

Weyl-group conventions: a permutation w (1-based tuple) acts on vectors by
(w v)_{w(i)} = v_i, so that (vw) v = v (w v).  Weights use
theta = (0, -1, ..., 1-n), rho = ((n-1)/2, ..., (1-n)/2) and lambda = h - theta.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .characters import Character, classify_rank1
from .errors import GateViolation, ShapeMismatch, UnsupportedInput
from .exactalg import DualNum, Mat, Poly, canonical_span
from .trianguline import (ModuleClass, TriangModule, apply_program, as_program, enumerate_triangulations,
                          program_data, wall_program_violations)


# ------------------------------------------------------------ directions


@dataclass(frozen=True)
class DeformDirection:
    """A homomorphism Q_p^x -> E in coordinates (value at p, weight derivative)."""

    at_p: Fraction = Fraction(0)
    wtd: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "at_p", Fraction(self.at_p))
        object.__setattr__(self, "wtd", Fraction(self.wtd))

    def __add__(self, other: "DeformDirection") -> "DeformDirection":
        return DeformDirection(self.at_p + other.at_p, self.wtd + other.wtd)

    def __neg__(self) -> "DeformDirection":
        return DeformDirection(-self.at_p, -self.wtd)

    def scale(self, a) -> "DeformDirection":
        return DeformDirection(self.at_p * a, self.wtd * a)


@dataclass(frozen=True)
class DeformedCharacter:
    """delta * (1 + psi * eps): a character with coefficients in Q[eps]."""

    base: Character
    psi: DeformDirection

    def weight(self, sigma: str) -> DualNum:
        return DualNum(self.base.weight(sigma), self.psi.wtd)

    def classify(self):
        """Cohomology of the residue character (Q[eps] has a single point)."""
        return classify_rank1(self.base)


def _require_qp(D: TriangModule):
    if D.shape.degree != 1:
        raise UnsupportedInput("deformation bookkeeping is restricted to K = Q_p")


@dataclass(frozen=True)
class ExtClassModel:
    base: TriangModule
    w: tuple[int, ...]
    psis: tuple[DeformDirection, ...]

    def __post_init__(self):
        _require_qp(self.base)
        object.__setattr__(self, "w", tuple(int(x) for x in self.w))
        object.__setattr__(self, "psis", tuple(self.psis))
        if sorted(self.w) != list(range(1, self.base.n + 1)):
            raise ValueError("w must be a permutation of 1..n")
        if len(self.psis) != self.base.n:
            raise ValueError("need one deformation direction per graded piece")

    @property
    def sigma(self) -> str:
        return self.base.shape.embeddings[0]

    def deformed_params(self) -> tuple[DeformedCharacter, ...]:
        return tuple(DeformedCharacter(d, p) for d, p in zip(self.base.params, self.psis))


def kappa(c: ExtClassModel) -> tuple[DeformDirection, ...]:
    return c.psis


def kappa_vector(c: ExtClassModel) -> tuple[Fraction, ...]:
    """kappa_w(c) flattened as (psi_1(p), wtd_1, ..., psi_n(p), wtd_n)."""
    return tuple(x for p in c.psis for x in (p.at_p, p.wtd))


def zero_class(base: TriangModule, w: Sequence[int]) -> ExtClassModel:
    return ExtClassModel(base, tuple(w), tuple(DeformDirection() for _ in range(base.n)))


def baer_sum(c1: ExtClassModel, c2: ExtClassModel) -> ExtClassModel:
    if c1.base != c2.base or c1.w != c2.w:
        raise ShapeMismatch("Baer sum needs the same base module and refinement")
    return ExtClassModel(c1.base, c1.w, tuple(a + b for a, b in zip(c1.psis, c2.psis)))


def negate(c: ExtClassModel) -> ExtClassModel:
    return ExtClassModel(c.base, c.w, tuple(-p for p in c.psis))


def scale(c: ExtClassModel, a) -> ExtClassModel:
    return ExtClassModel(c.base, c.w, tuple(p.scale(a) for p in c.psis))


def sen_poly_deform(c: ExtClassModel) -> Poly:
    """prod_i (T - (h_i + wtd(psi_i) eps))."""
    h = c.base.weights(c.sigma)
    if len(set(h)) != len(h):
        raise GateViolation("base weights are not regular", datum=list(h))
    return Poly.from_roots(DualNum(hi, p.wtd) for hi, p in zip(h, c.psis))


def _program_walls(base: TriangModule, program) -> list[dict]:
    I, k = program_data(program, base.shape)
    return wall_program_violations(base.weight_table(), list(I), I, k)


def pullback_ext(c: ExtClassModel, program) -> ExtClassModel:
    """Pull a class back along the program: the base changes, kappa does not."""
    viol = _program_walls(c.base, program)
    if viol:
        raise GateViolation("program crosses a wall on the base", datum=viol)
    return ExtClassModel(apply_program(c.base, program), c.w, c.psis)


# --------------------------------------------------------- universal classes


@dataclass(frozen=True)
class UniversalExtension:
    """Block description of the universal extension over span(W).

    The blocks are the basis classes e_1..e_d; pulling back along the map
    attached to e = sum c_j e_j is the Baer combination sum c_j E_j.
    """

    basis: tuple[tuple[Fraction, ...], ...]

    @property
    def dim(self) -> int:
        return len(self.basis)

    def coordinates(self, e: Sequence) -> tuple[Fraction, ...]:
        e = tuple(Fraction(x) for x in e)
        B = Mat.from_columns(self.basis).hstack(Mat([[x] for x in e]))
        R, piv = B.rref()
        if self.dim in piv:
            raise ValueError("vector is not in the span of W")
        return tuple(R.rows[r][self.dim] for r in range(self.dim))

    def pullback(self, e: Sequence) -> tuple[Fraction, ...]:
        c = self.coordinates(e)
        m = len(self.basis[0])
        return tuple(sum((cj * b[t] for cj, b in zip(c, self.basis)), Fraction(0)) for t in range(m))


def universal_extension(W: Sequence[Sequence]) -> UniversalExtension:
    vecs = [tuple(Fraction(x) for x in v) for v in W]
    if not vecs:
        raise ValueError("W must be nonempty")
    if Mat(vecs).rank() != len(vecs):
        raise ValueError("dependent basis")
    return UniversalExtension(tuple(vecs))


# ------------------------------------------------------------- Weyl calculus


def theta_rho(n: int) -> tuple[tuple[Fraction, ...], tuple[Fraction, ...]]:
    theta = tuple(Fraction(-i) for i in range(n))
    rho = tuple(Fraction(n - 1 - 2 * i, 2) for i in range(n))
    return theta, rho


def act(w: Sequence[int], v: Sequence) -> tuple:
    """(w v)_{w(i)} = v_i."""
    out = [None] * len(v)
    for i, x in enumerate(v):
        out[w[i] - 1] = x
    return tuple(out)


def longest(n: int) -> tuple[int, ...]:
    return tuple(range(n, 0, -1))


def compose(v: Sequence[int], w: Sequence[int]) -> tuple[int, ...]:
    """(v w)(i) = v(w(i))."""
    return tuple(v[w[i] - 1] for i in range(len(w)))


def _add(a, b):
    return tuple(x + y for x, y in zip(a, b))


def _sub(a, b):
    return tuple(x - y for x, y in zip(a, b))


def dot_actions(w: Sequence[int], lam: Sequence) -> tuple[tuple, tuple]:
    """(w . lam, w bar. lam) = (w(lam + rho) - rho, w(lam - rho) + rho)."""
    lam = tuple(Fraction(x) for x in lam)
    _, rho = theta_rho(len(lam))
    return _sub(act(w, _add(lam, rho)), rho), _add(act(w, _sub(lam, rho)), rho)


def twist_hc_holds(xi: Sequence) -> bool:
    """w0 . (w0 xi) = xi - 2 rho."""
    xi = tuple(Fraction(x) for x in xi)
    n = len(xi)
    _, rho = theta_rho(n)
    w0 = longest(n)
    lhs = dot_actions(w0, act(w0, xi))[0]
    return lhs == tuple(x - 2 * r for x, r in zip(xi, rho))


def lambda_from_h(h: Sequence) -> tuple[Fraction, ...]:
    theta, _ = theta_rho(len(h))
    return _sub(tuple(Fraction(x) for x in h), theta)


def _pattern(v: Sequence[Fraction]) -> tuple[int, ...] | None:
    if len(set(v)) != len(v):
        return None
    return tuple(sorted(range(len(v)), key=lambda i: -v[i]))


@dataclass(frozen=True)
class Admissibility:
    ok: bool
    reasons: tuple[str, ...] = ()

    def __bool__(self):
        return self.ok


def translation_admissible(lam: Sequence, lam2: Sequence) -> Admissibility:
    """Conditions for translating from lam to lam'.

    Both normalized weights lam + rho (equivalently h = lam + theta) must be
    strictly decreasing, lam' - lam must be integral, and the normalized
    weights must lie in the same open chamber.
    """
    lam = tuple(Fraction(x) for x in lam)
    lam2 = tuple(Fraction(x) for x in lam2)
    if len(lam) != len(lam2):
        raise ValueError("weights must have the same length")
    _, rho = theta_rho(len(lam))
    a, b = _add(lam, rho), _add(lam2, rho)
    reasons = []
    for name, v in (("lambda", a), ("lambda'", b)):
        if any(x <= y for x, y in zip(v, v[1:])):
            reasons.append(f"{name} is not regular dominant after normalization")
    if any(d.denominator != 1 for d in _sub(lam2, lam)):
        reasons.append("lambda' - lambda is not integral")
    pa, pb = _pattern(a), _pattern(b)
    if pa is None or pb is None or pa != pb:
        reasons.append("normalized weights lie in different chambers")
    return Admissibility(not reasons, tuple(reasons))


def translation_diff(k: Sequence[int]) -> tuple[int, ...]:
    """(sum_{i>=1} k_i, sum_{i>=2} k_i, ..., k_n)."""
    k = [int(x) for x in k]
    return tuple(sum(k[i:]) for i in range(len(k)))


def program_multiplicities(program, n: int) -> tuple[int, ...]:
    """k_i = total multiplicity of p_i in a single-embedding program."""
    k = [0] * n
    for st in as_program(program):
        if not 1 <= st.i <= n:
            raise ValueError(f"step index {st.i} out of range 1..{n}")
        k[st.i - 1] += st.k
    return tuple(k)


# ------------------------------------------------------------ intertwining


def _first_gap(h: Sequence[Fraction]) -> int | None:
    for i in range(len(h) - 1):
        if h[i] <= h[i + 1]:
            return i + 1
    return None


def wu_deformed_sen_poly(h: Sequence[Fraction], psis: Sequence[DeformDirection], program) -> Poly:
    """Sen polynomial of the program applied to the deformed Sen lattice.

    The dual-number Sen operator is upper triangular with diagonal
    h_i + wtd_i eps; each step p_i is realized by the lattice modification
    that shifts the roots in the last i positions.
    """
    from .senlattice import SenLattice, make_factorization, modify_down

    roots = [DualNum(hi, p.wtd) for hi, p in zip(h, psis)]
    L = SenLattice.triangular(roots)
    n = len(roots)
    for st in as_program(program):
        for _ in range(st.k):
            # modify_down itself checks Q*S against the charpoly of the current lattice
            cut = n - st.i
            F = make_factorization(Poly.from_roots(roots[cut:]), Poly.from_roots(roots[:cut]))
            L = modify_down(L, F).lattice
            roots = [r + 1 if t >= n - st.i else r for t, r in enumerate(roots)]
    return L.charpoly()


def _random_class(base: TriangModule, w, rng: random.Random) -> ExtClassModel:
    return ExtClassModel(base, w, tuple(DeformDirection(Fraction(rng.randint(-9, 9), rng.randint(1, 4)),
                                                        Fraction(rng.randint(-9, 9), rng.randint(1, 4)))
                                        for _ in range(base.n)))


def intertwine_check(D: TriangModule, program, samples: int = 3, seed: int = 0) -> dict:
    """Weight-level and kappa-level shadow of translation intertwining pullback.

    Raises GateViolation when the program loses regularity (with the first
    index i where h'_i <= h'_{i+1}) or crosses a wall.
    """
    _require_qp(D)
    if D.class_tag is not ModuleClass.CRYS_NONCRIT:
        raise UnsupportedInput("intertwining is checked for non-critical crystabelline modules")
    sigma = D.shape.embeddings[0]
    n = D.n
    h = D.weights(sigma)
    prog = as_program(program)
    k = program_multiplicities(prog, n)
    h2 = tuple(x + d for x, d in zip(h, reversed(translation_diff(k))))
    gap = _first_gap(h2)
    if gap is not None:
        raise GateViolation(f"program breaks regularity at gap {gap}",
                            datum={"gap": gap, "weights": [str(x) for x in h2]})
    walls = _program_walls(D, prog)
    if walls:
        raise GateViolation("program crosses a wall", datum=walls)
    moved = apply_program(D, prog).weights(sigma)
    lam, lam2 = lambda_from_h(h), lambda_from_h(h2)
    diff = translation_diff(k)
    rng = random.Random(seed)
    kappa_ok = additive = sen_ok = kernel_ok = True
    tris = enumerate_triangulations(D)
    for t in tris:
        base = TriangModule.make(t.params, ModuleClass.CRYS_NONCRIT)
        cs = [_random_class(base, t.w, rng) for _ in range(max(samples, 2))]
        pulled = [pullback_ext(c, prog) for c in cs]
        kappa_ok &= all(kappa(p) == kappa(c) for p, c in zip(pulled, cs))
        s = pullback_ext(baer_sum(cs[0], cs[1]), prog)
        additive &= kappa(s) == kappa(baer_sum(pulled[0], pulled[1]))
        for c, p in zip(cs, pulled):
            sen_ok &= wu_deformed_sen_poly(base.weights(sigma), c.psis, prog) == sen_poly_deform(p)
        span_before = canonical_span([kappa_vector(c) for c in cs])
        span_after = canonical_span([kappa_vector(p) for p in pulled])
        kernel_ok &= span_before == span_after
    adm = translation_admissible(lam, lam2)
    shift_ok = _sub(lam2, lam) == tuple(Fraction(x) for x in reversed(diff)) and moved == h2
    checks = {
        "lambda_shift": shift_ok,
        "admissible": adm.ok,
        "kappa_preserved": bool(kappa_ok),
        "additive": bool(additive),
        "sen_poly_law": bool(sen_ok),
        "kernel_correspondence": bool(kernel_ok),
    }
    return {
        "h": h,
        "h_prime": h2,
        "lambda": lam,
        "lambda_prime": lam2,
        "translation_diff": diff,
        "refinements": len(tris),
        "admissibility_reasons": adm.reasons,
        "checks": checks,
        "passed": all(checks.values()),
    }
