"""Characters of K^x as formal group elements, rank-one cohomology, regularity.

A character is a finite product of generators with integer exponents.  The
built-in generators are

* ``x:<sigma>`` for each embedding sigma (weight 1 at sigma, uval 1/e),
* ``ABS`` for the normalized absolute value |.|_K (weight 0, uval -f).

Users may declare further generators with arbitrary rational weights and
valuation.  The norm character N|N|_p (often written x|x| over Q_p) is not a
separate generator: it equals ``ABS * prod_sigma x:sigma`` and is available as
:func:`eps_sm`.  Keeping the generator set free of relations is what makes
formal equality (equality of exponent vectors) meaningful.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from .errors import ShapeMismatch, UnsupportedInput

ABS = "ABS"
EPS_SM = "EPS_SM"
X_PREFIX = "x:"


@dataclass(frozen=True)
class FieldShape:
    """Numerical shape of a finite extension K/Q_p."""

    e: int
    f: int
    embeddings: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "embeddings", tuple(self.embeddings))
        if self.e < 1 or self.f < 1:
            raise ValueError("e and f must be positive")
        if len(self.embeddings) != self.e * self.f:
            raise ValueError(f"need e*f = {self.e * self.f} embeddings, got {len(self.embeddings)}")
        if len(set(self.embeddings)) != len(self.embeddings):
            raise ValueError("embedding labels must be distinct")

    @classmethod
    def qp(cls, label: str = "s0") -> "FieldShape":
        return cls(1, 1, (label,))

    @property
    def degree(self) -> int:
        return self.e * self.f

    def check(self, sigma: str) -> str:
        if sigma not in self.embeddings:
            raise KeyError(f"unknown embedding {sigma!r}")
        return sigma


@dataclass(frozen=True)
class Generator:
    """A user-declared generator with fixed weights and valuation at pi_K."""

    label: str
    weights: tuple[Fraction, ...]
    uval: Fraction

    @property
    def smooth(self) -> bool:
        return all(w == 0 for w in self.weights)


def _builtin_generator(shape: FieldShape, label: str) -> Generator:
    if label == ABS:
        return Generator(ABS, tuple(Fraction(0) for _ in shape.embeddings), Fraction(-shape.f))
    if label.startswith(X_PREFIX):
        s = shape.check(label[len(X_PREFIX):])
        ws = tuple(Fraction(1 if t == s else 0) for t in shape.embeddings)
        return Generator(label, ws, Fraction(1, shape.e))
    raise KeyError(label)


def is_builtin(label: str) -> bool:
    return label == ABS or label.startswith(X_PREFIX)


@dataclass(frozen=True, eq=False)
class Character:
    """Formal product of generators; equality compares exponents only."""

    shape: FieldShape
    exps: tuple[tuple[str, int], ...] = ()
    decls: tuple[Generator, ...] = field(default=())

    # -- construction helpers
    @staticmethod
    def _make(shape, exps: Mapping[str, int], decls: Mapping[str, Generator]) -> "Character":
        e = tuple(sorted((k, v) for k, v in exps.items() if v != 0))
        used = {k for k, _ in e}
        d = tuple(decls[k] for k in sorted(decls) if k in used)
        return Character(shape, e, d)

    def exponent(self, label: str) -> int:
        return dict(self.exps).get(label, 0)

    def generator(self, label: str) -> Generator:
        if is_builtin(label):
            return _builtin_generator(self.shape, label)
        for g in self.decls:
            if g.label == label:
                return g
        raise KeyError(label)

    # -- invariants
    def weight(self, sigma: str):
        idx = self.shape.embeddings.index(self.shape.check(sigma))
        return sum((k * self.generator(lab).weights[idx] for lab, k in self.exps), Fraction(0))

    def weights(self) -> tuple[Fraction, ...]:
        return tuple(self.weight(s) for s in self.shape.embeddings)

    @property
    def uval(self) -> Fraction:
        return sum((k * self.generator(lab).uval for lab, k in self.exps), Fraction(0))

    def x_exponents(self) -> tuple[int, ...]:
        return tuple(self.exponent(X_PREFIX + s) for s in self.shape.embeddings)

    def other_exponents(self) -> dict[str, int]:
        return {k: v for k, v in self.exps if not k.startswith(X_PREFIX)}

    def is_trivial(self) -> bool:
        return not self.exps

    # -- group law
    def combine(self, other: "Character", sign: int = 1) -> "Character":
        if self.shape != other.shape:
            raise ShapeMismatch("characters live over different field shapes")
        if sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        decls = {g.label: g for g in self.decls}
        for g in other.decls:
            if g.label in decls and decls[g.label] != g:
                raise ValueError(f"conflicting declarations for generator {g.label!r}")
            decls[g.label] = g
        exps = dict(self.exps)
        for k, v in other.exps:
            exps[k] = exps.get(k, 0) + sign * v
        return Character._make(self.shape, exps, decls)

    def __mul__(self, other: "Character") -> "Character":
        return self.combine(other, 1)

    def __truediv__(self, other: "Character") -> "Character":
        return self.combine(other, -1)

    def __pow__(self, k: int) -> "Character":
        return Character._make(self.shape, {a: b * k for a, b in self.exps}, {g.label: g for g in self.decls})

    def inverse(self) -> "Character":
        return self ** -1

    def twist_x(self, sigma: str, k: int) -> "Character":
        return self * x_char(self.shape, sigma) ** k

    def __eq__(self, other):
        if not isinstance(other, Character):
            return NotImplemented
        return self.shape == other.shape and self.exps == other.exps

    def __hash__(self):
        return hash((self.shape, self.exps))

    def __str__(self):
        if not self.exps:
            return "1"
        return "*".join(lab if k == 1 else f"{lab}^{k}" for lab, k in self.exps)

    def __repr__(self):
        return f"Character({self})"


def trivial(shape: FieldShape) -> Character:
    return Character(shape)


def x_char(shape: FieldShape, sigma: str) -> Character:
    return Character(shape, ((X_PREFIX + shape.check(sigma), 1),))


def x_power(shape: FieldShape, k: Sequence[int] | Mapping[str, int]) -> Character:
    """prod_sigma x_sigma^{k_sigma}."""
    if isinstance(k, Mapping):
        items = k.items()
    else:
        if len(k) != len(shape.embeddings):
            raise ValueError("exponent vector has wrong length")
        items = zip(shape.embeddings, k)
    return Character._make(shape, {X_PREFIX + shape.check(s): int(v) for s, v in items}, {})


def abs_char(shape: FieldShape) -> Character:
    return Character(shape, ((ABS, 1),))


def eps_sm(shape: FieldShape) -> Character:
    """The norm character N|N|_p = ABS * prod x_sigma (weight 1 everywhere, uval 0)."""
    return abs_char(shape) * x_power(shape, [1] * shape.degree)


def declare(shape: FieldShape, label: str, weights=None, uval=0) -> Character:
    """Declare a new generator and return it as a character.

    ``weights`` is a mapping sigma -> rational, a sequence aligned with the
    embeddings, a single rational used for every embedding, or None (smooth).
    """
    if is_builtin(label) or label == EPS_SM:
        raise ValueError(f"{label!r} is a reserved generator label")
    if weights is None:
        ws = tuple(Fraction(0) for _ in shape.embeddings)
    elif isinstance(weights, Mapping):
        for s in weights:
            shape.check(s)
        ws = tuple(Fraction(weights.get(s, 0)) for s in shape.embeddings)
    elif isinstance(weights, (list, tuple)):
        if len(weights) != shape.degree:
            raise ValueError("weight vector has wrong length")
        ws = tuple(Fraction(w) for w in weights)
    else:
        ws = tuple(Fraction(weights) for _ in shape.embeddings)
    g = Generator(label, ws, Fraction(uval))
    return Character(shape, ((label, 1),), (g,))


def same_shape(chars: Sequence[Character]) -> FieldShape:
    if not chars:
        raise ValueError("empty character tuple")
    shape = chars[0].shape
    for c in chars[1:]:
        if c.shape != shape:
            raise ShapeMismatch("characters live over different field shapes")
    return shape


# ------------------------------------------------------------ cohomology


@dataclass(frozen=True)
class CohProfile:
    """Dimensions of H^0, H^1, H^2 of a rank-one module R(delta)."""

    h0: int
    h1: int
    h2: int
    witness: tuple[int, ...] | None = None

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.h0, self.h1, self.h2)


def classify_rank1(delta: Character) -> CohProfile:
    """Cohomology dimensions of R(delta).

    H^0 is one-dimensional exactly when delta = x^{-k} with k in N^Sigma;
    H^2 is one-dimensional exactly when delta = N|N|_p * x^k with k in N^Sigma.
    dim H^1 = [K:Q_p], plus one in either exceptional case.
    """
    xs = delta.x_exponents()
    rest = delta.other_exponents()
    d = delta.shape.degree
    if not rest and all(k <= 0 for k in xs):
        return CohProfile(1, d + 1, 0, tuple(-k for k in xs))
    if rest == {ABS: 1} and all(k >= 1 for k in xs):
        return CohProfile(0, d + 1, 1, tuple(k - 1 for k in xs))
    return CohProfile(0, d, 0, None)



def successive_extension_dims(deltas: Sequence[Character]) -> CohProfile:
    """Cohomology of a successive extension of R(delta_1), ..., R(delta_n).

    When every graded piece has H^0 = H^2 = 0 the long exact sequences split
    into short exact sequences on H^1, so dim H^1 is the sum of the rank-one
    values.  Otherwise the answer depends on connecting maps that are not
    modeled, and UnsupportedInput is raised.
    """
    if not deltas:
        raise ValueError("need at least one graded piece")
    same_shape(deltas)
    profiles = [classify_rank1(d) for d in deltas]
    bad = [i + 1 for i, p in enumerate(profiles) if p.h0 or p.h2]
    if bad:
        raise UnsupportedInput(f"graded pieces {bad} have nonzero H^0 or H^2; connecting maps are not modeled")
    return CohProfile(0, sum(p.h1 for p in profiles), 0)

@dataclass(frozen=True)
class RegularityFlags:
    in_Treg: bool
    in_Twreg: bool
    in_Tcirc: bool
    violations: tuple[dict, ...] = ()


def _is_positive_integer(q: Fraction) -> bool:
    return q.denominator == 1 and q >= 1


def tuple_regularity(deltas: Sequence[Character]) -> RegularityFlags:
    """Membership of (delta_1..delta_n) in T_reg^n, T_wreg^n and T_circ^n.

    Violations are reported with 1-based indices: ``{"condition": "h0", "i",
    "j"}`` when delta_i/delta_j has nonzero H^0 (similarly ``h2``), and
    ``{"condition": "weight", "i", "j", "sigma", "weight"}`` when an ordered
    ratio with i < j has weight in Z_{>=1}.
    """
    shape = same_shape(deltas)
    n = len(deltas)
    viol: list[dict] = []
    reg = wreg = circ = True
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            prof = classify_rank1(deltas[i] / deltas[j])
            if prof.h0:
                reg = False
                viol.append({"condition": "h0", "i": i + 1, "j": j + 1})
            if prof.h2:
                reg = wreg = False
                viol.append({"condition": "h2", "i": i + 1, "j": j + 1})
    for i in range(n):
        for j in range(i + 1, n):
            ratio = deltas[i] / deltas[j]
            for s in shape.embeddings:
                w = ratio.weight(s)
                if _is_positive_integer(w):
                    circ = False
                    viol.append({"condition": "weight", "i": i + 1, "j": j + 1, "sigma": s, "weight": w})
    return RegularityFlags(reg, wreg, circ, tuple(viol))


def weight_map(deltas: Sequence[Character], sigma: str) -> tuple[Fraction, ...]:
    """(wt_sigma(delta_1), ..., wt_sigma(delta_n))."""
    if not deltas:
        return ()
    shape = same_shape(deltas)
    shape.check(sigma)
    return tuple(d.weight(sigma) for d in deltas)
