"""Crystabelline data: refinements, Hodge flag jumps and criticality.

Conventions.  Sen weights are stored per embedding in descending order
h_1 > ... > h_n.  The Hodge filtration on the eigenbasis e_1..e_n of the
Weil-Deligne representation has jumps -h_1 < ... < -h_n (ascending, the
"jump" convention used by :func:`flag_jumps`).  A flag matrix F encodes the
filtration: Fil^{j_m} is spanned by columns m..n of F, where j_1 < ... < j_n
are the ascending jumps.

A refinement w is a 1-based permutation; V_i^w = span(e_{w(1)}, ..., e_{w(i)}).
The induced jump on the line V_i^w / V_{i-1}^w is j_i(w), and the Sen weight
of the i-th graded piece of the corresponding triangulation is k_i^w = -j_i(w).
The refinement is non-critical exactly when j(w) is ascending, i.e. when
k^w = (h_1, ..., h_n).
"""

from __future__ import annotations

import itertools
from functools import lru_cache
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from .characters import ABS, Character, FieldShape, declare, x_power
from .errors import GateViolation, UnsupportedInput
from .exactalg import Mat
from .trianguline import ModuleClass, TriangModule


# ----------------------------------------------------------------- helpers


def general_position_flag(n: int) -> Mat:
    """The Hilbert matrix 1/(i+j-1); totally positive, so every minor is nonzero."""
    return Mat([[Fraction(1, i + j + 1) for j in range(n)] for i in range(n)])


def coordinate_flag(n: int) -> Mat:
    return Mat.identity(n)


def compose_swap(w: Sequence[int], i: int) -> tuple[int, ...]:
    """w o (i, i+1) for 1-based i."""
    w = list(w)
    w[i - 1], w[i] = w[i], w[i - 1]
    return tuple(w)


def _check_perm(w: Sequence[int], n: int) -> tuple[int, ...]:
    w = tuple(int(x) for x in w)
    if sorted(w) != list(range(1, n + 1)):
        raise ValueError(f"{w} is not a permutation of 1..{n}")
    return w


@dataclass(frozen=True)
class GenericResult:
    ok: bool
    pair: tuple[int, int] | None = None
    reason: str | None = None

    def __bool__(self):
        return self.ok


def generic_check(phis: Sequence[Character]) -> GenericResult:
    """phi_i/phi_j must avoid {1, ABS, ABS^-1} formally for all i != j."""
    for i in range(len(phis)):
        for j in range(i + 1, len(phis)):
            r = phis[i] / phis[j]
            if r.is_trivial():
                return GenericResult(False, (i + 1, j + 1), "ratio is trivial")
            if r.exps in (((ABS, 1),), ((ABS, -1),)):
                return GenericResult(False, (i + 1, j + 1), f"ratio is {r}")
    return GenericResult(True)


# -------------------------------------------------------------- flag jumps


@lru_cache(maxsize=65536)
def _fil_cap_coord(flag: Mat, support: frozenset, m: int) -> int:
    """dim(span(cols m..n of F) cap span(e_s : s in support)), 0-based m.

    A combination F c of the trailing columns lies in the coordinate subspace
    iff its rows outside the support vanish, so the dimension is the nullity
    of that row block.
    """
    n = flag.n
    rows = [r for r in range(n) if r not in support]
    k = n - m
    if not rows:
        return k
    return k - Mat([flag.rows[r][m:] for r in rows]).rank()


def flag_jumps(w: Sequence[int], flag: Mat, jumps: Sequence) -> tuple:
    """Induced jumps j_1(w), ..., j_n(w) on the graded lines of V^w.

    ``jumps`` must be strictly increasing.  The jump of V_i/V_{i-1} is the
    largest j_m with dim(Fil^{j_m} cap V_i) - dim(Fil^{j_m} cap V_{i-1}) = 1.
    """
    n = flag.n
    w = _check_perm(w, n)
    jumps = list(jumps)
    if len(jumps) != n or any(a >= b for a, b in zip(jumps, jumps[1:])):
        raise ValueError("jumps must be strictly increasing, one per dimension")
    if flag.rank() != n:
        raise ValueError("degenerate flag (rank deficiency)")
    out = []
    for i in range(1, n + 1):
        Vi = frozenset(w[s] - 1 for s in range(i))
        Vp = frozenset(w[s] - 1 for s in range(i - 1))
        best = None
        for m in range(n):
            if _fil_cap_coord(flag, Vi, m) - _fil_cap_coord(flag, Vp, m) == 1:
                best = m
        out.append(jumps[best])
    if sorted(out) != sorted(jumps):
        raise ArithmeticError("induced jumps are not a permutation of the declared jumps")
    return tuple(out)


def adjacent_swap(w: Sequence[int], flag: Mat, jumps: Sequence):
    """First i with j_i(w) > j_{i+1}(w), for which j(w o (i,i+1)) swaps i and i+1.

    Returns the 1-based index, or the string "sorted" when j(w) is ascending.
    At a descent the line V_i/V_{i-1} is the deeper step of the induced
    filtration on V_{i+1}/V_{i-1}, so the other line carries the smaller jump;
    the swap property is nevertheless re-verified by recomputation.
    """
    j = flag_jumps(w, flag, jumps)
    for i in range(1, len(j)):
        if j[i - 1] > j[i]:
            js = flag_jumps(compose_swap(w, i), flag, jumps)
            expect = list(j)
            expect[i - 1], expect[i] = expect[i], expect[i - 1]
            if list(js) != expect:
                raise ArithmeticError(f"swap property fails at i={i} for w={tuple(w)}")
            return i
    return "sorted"


# --------------------------------------------------------------- the module


@dataclass(frozen=True)
class CrysModule:
    """Smooth characters phi_i, Sen weights per embedding and Hodge flags."""

    shape: FieldShape
    phis: tuple[Character, ...]
    weights: Mapping[str, tuple[int, ...]]
    flags: Mapping[str, Mat] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "phis", tuple(self.phis))
        n = len(self.phis)
        if n == 0:
            raise ValueError("need at least one smooth character")
        ws = {s: tuple(int(h) for h in self.weights[s]) for s in self.shape.embeddings}
        for s, h in ws.items():
            if len(h) != n:
                raise ValueError(f"weights at {s} must have length {n}")
            if any(a < b for a, b in zip(h, h[1:])):
                raise ValueError(f"weights at {s} must be listed in decreasing order")
        object.__setattr__(self, "weights", ws)
        fl = {s: self.flags.get(s, general_position_flag(n)) for s in self.shape.embeddings}
        for s, F in fl.items():
            if F.n != n or F.rank() != n:
                raise ValueError(f"flag at {s} must be an invertible {n}x{n} matrix")
        object.__setattr__(self, "flags", fl)
        for phi in self.phis:
            if phi.shape != self.shape or any(w != 0 for w in phi.weights()):
                raise ValueError("smooth characters must have weight zero")
        g = generic_check(self.phis)
        if not g:
            raise GateViolation(f"smooth characters are not generic: pair {g.pair} ({g.reason})", datum=g.pair)

    @classmethod
    def build(cls, shape: FieldShape, vps: Sequence, weights, flags=None, labels=None) -> "CrysModule":
        """Declare phi_i with valuations v_p(alpha_i) and assemble the module.

        ``weights`` is a mapping sigma -> list or a single list (single embedding).
        """
        labels = labels or [f"phi{i + 1}" for i in range(len(vps))]
        phis = tuple(declare(shape, lab, None, Fraction(v)) for lab, v in zip(labels, vps))
        if not isinstance(weights, Mapping):
            weights = {shape.embeddings[0]: weights}
        if flags is not None and not isinstance(flags, Mapping):
            flags = {shape.embeddings[0]: flags}
        flags = {s: F if isinstance(F, Mat) else Mat(F) for s, F in (flags or {}).items()}
        return cls(shape, phis, weights, flags)

    @property
    def n(self) -> int:
        return len(self.phis)

    @property
    def vps(self) -> tuple[Fraction, ...]:
        return tuple(phi.uval for phi in self.phis)

    def is_regular(self) -> bool:
        return all(len(set(h)) == len(h) for h in self.weights.values())

    def jumps(self, sigma: str) -> tuple[int, ...]:
        """Ascending Hodge jumps -h_1 < ... < -h_n."""
        return tuple(-h for h in self.weights[sigma])

    def induced_weights(self, w: Sequence[int]) -> dict[str, tuple[int, ...]]:
        """k^w per embedding: the Sen weights of the graded pieces of Fil_w."""
        if not self.is_regular():
            raise UnsupportedInput("induced weights need regular weights")
        return {s: tuple(-j for j in flag_jumps(w, self.flags[s], self.jumps(s))) for s in self.shape.embeddings}

    def refinement_params(self, w: Sequence[int]) -> tuple[Character, ...]:
        """delta_{w,i} = (prod_sigma x_sigma^{k^w_{i,sigma}}) * phi_{w(i)}."""
        w = _check_perm(w, self.n)
        k = self.induced_weights(w)
        return tuple(x_power(self.shape, {s: k[s][i] for s in self.shape.embeddings}) * self.phis[w[i] - 1]
                     for i in range(self.n))

    def noncritical(self, w: Sequence[int]) -> bool:
        return noncritical_check(self, w)

    def all_noncritical(self) -> bool:
        return all(self.noncritical(w) for w in itertools.permutations(range(1, self.n + 1)))

    def triangulation(self, w: Sequence[int] | None = None, **flags) -> TriangModule:
        """The triangulated module attached to the refinement w (default identity)."""
        w = tuple(range(1, self.n + 1)) if w is None else _check_perm(w, self.n)
        params = self.refinement_params(w)
        tag = ModuleClass.CRYS_NONCRIT if self.all_noncritical() else ModuleClass.CRYS_GENERIC
        return TriangModule.make(params, tag, crys=self, **flags)


def noncritical_check(M: CrysModule, w: Sequence[int], sigma: str | None = None) -> bool:
    """True iff the induced jumps are ascending at every (or the given) embedding.

    Equivalently the Sen weights of Fil_w^i are the top i weights for all i.
    """
    if not M.is_regular():
        raise UnsupportedInput("non-criticality is defined for regular weights only")
    sigmas = [sigma] if sigma is not None else list(M.shape.embeddings)
    for s in sigmas:
        jumps = M.jumps(s)
        if flag_jumps(w, M.flags[s], jumps) != jumps:
            return False
    return True


def critical_split_witness(M: CrysModule, w: Sequence[int], sigma: str | None = None):
    """For a critical refinement, the position i and w' = w o (i, i+1).

    The rank-two subquotient Fil_w^{i+1}/Fil_w^{i-1} then admits both orderings
    of phi_{w(i)}, phi_{w(i+1)}, which by genericity forces it to split.  The
    construction uses one embedding at a time; ``sigma`` defaults to the only
    embedding of Q_p.  Returns None for a non-critical refinement.
    """
    if sigma is None:
        if M.shape.degree != 1:
            raise UnsupportedInput("choose an embedding: the witness is built one embedding at a time")
        sigma = M.shape.embeddings[0]
    if noncritical_check(M, w, sigma):
        return None
    i = adjacent_swap(w, M.flags[sigma], M.jumps(sigma))
    return i, compose_swap(w, i)


def stable_partitions(n: int) -> list[frozenset[int]]:
    """Nonempty proper A in {1..n} whose image {w(i) : i in A} is the same for all w.

    A summand of a non-critical module would give such a set; the list is
    empty for every n >= 1, which is the transitivity behind indecomposability.
    """
    out = []
    perms = list(itertools.permutations(range(1, n + 1)))
    for r in range(1, n):
        for A in itertools.combinations(range(1, n + 1), r):
            images = {frozenset(w[i - 1] for i in A) for w in perms}
            if len(images) == 1:
                out.append(frozenset(A))
    return out
