"""Exact arithmetic: rationals, dual numbers, polynomials and matrices.

Rationals are plain :class:`fractions.Fraction`.  Dual numbers ``a + b*eps``
with ``eps**2 == 0`` are :class:`DualNum`.  :class:`Poly` and :class:`Mat`
accept either scalar type; operations that need a field (row reduction,
Euclid) reject dual-number input unless stated otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Sequence

from .errors import NotComaximal, UnsupportedInput

__all__ = [
    "DualNum",
    "Poly",
    "Mat",
    "as_scalar",
    "residue",
    "eps_part",
    "poly_gcd_bezout",
    "poly_gcd",
    "bezout_coprime",
    "charpoly",
    "kernel_basis",
    "crt_idempotents",
    "canonical_span",
]


# ---------------------------------------------------------------- scalars


_ZERO = Fraction(0)


@dataclass(frozen=True)
class DualNum:
    """An element ``value + eps*eps_`` of Q[eps]/(eps^2)."""

    value: Fraction
    eps: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "value", Fraction(self.value))
        object.__setattr__(self, "eps", Fraction(self.eps))

    @staticmethod
    def _mk(value: Fraction, eps: Fraction) -> "DualNum":
        """Internal constructor for Fraction components (skips coercion)."""
        d = object.__new__(DualNum)
        object.__setattr__(d, "value", value)
        object.__setattr__(d, "eps", eps)
        return d

    @staticmethod
    def _lift(other):
        if isinstance(other, DualNum):
            return other
        if isinstance(other, Fraction):
            return DualNum._mk(other, _ZERO)
        if isinstance(other, (int, Rational)):
            return DualNum._mk(Fraction(other), _ZERO)
        return None

    def __add__(self, other):
        if isinstance(other, Fraction):
            return DualNum._mk(self.value + other, self.eps)
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return DualNum._mk(self.value + o.value, self.eps + o.eps)

    __radd__ = __add__

    def __neg__(self):
        return DualNum._mk(-self.value, -self.eps)

    def __sub__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return DualNum._mk(self.value - o.value, self.eps - o.eps)

    def __rsub__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return o - self

    def __mul__(self, other):
        if isinstance(other, Fraction):
            return DualNum._mk(self.value * other, self.eps * other)
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return DualNum._mk(self.value * o.value, self.value * o.eps + self.eps * o.value)

    __rmul__ = __mul__

    def is_unit(self) -> bool:
        return self.value != 0

    def inverse(self) -> "DualNum":
        if self.value == 0:
            raise ZeroDivisionError("dual number with zero residue is not invertible")
        return DualNum(1 / self.value, -self.eps / (self.value * self.value))

    def __truediv__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return self * o.inverse()

    def __rtruediv__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return o * self.inverse()

    def __eq__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return self.value == o.value and self.eps == o.eps

    def __hash__(self):
        if self.eps == 0:
            return hash(self.value)
        return hash((self.value, self.eps))

    def __repr__(self):
        return f"DualNum({self.value}, {self.eps})"

    def __bool__(self):
        return bool(self.value) or bool(self.eps)

    def __str__(self):
        if self.eps == 0:
            return str(self.value)
        sign = "+" if self.eps >= 0 else "-"
        return f"{self.value}{sign}{abs(self.eps)}e"


def as_scalar(x):
    """Coerce ints, Fractions, decimal-free strings and DualNums to a scalar."""
    if isinstance(x, DualNum):
        return x
    if isinstance(x, bool):
        raise TypeError("booleans are not scalars")
    if isinstance(x, (int, Rational)):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    raise TypeError(f"not an exact scalar: {x!r}")


def residue(x):
    """Reduction modulo eps (identity on rationals)."""
    return x.value if isinstance(x, DualNum) else x


def eps_part(x) -> Fraction:
    return x.eps if isinstance(x, DualNum) else Fraction(0)


def _is_unit(x) -> bool:
    return residue(x) != 0


def _inv(x):
    if isinstance(x, DualNum):
        return x.inverse()
    return 1 / x


# ------------------------------------------------------------- polynomials


class Poly:
    """Univariate polynomial in T, coefficients in ascending degree."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable = ()):
        cs = [as_scalar(c) for c in coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        self.coeffs = tuple(cs)

    @classmethod
    def _wrap(cls, cs: list) -> "Poly":
        """Internal constructor for coefficient lists that are already scalars."""
        while cs and cs[-1] == 0:
            cs.pop()
        p = object.__new__(cls)
        p.coeffs = tuple(cs)
        return p

    # constructors
    @classmethod
    def T(cls) -> "Poly":
        return cls((0, 1))

    @classmethod
    def const(cls, c) -> "Poly":
        return cls((c,))

    @classmethod
    def from_roots(cls, roots: Iterable) -> "Poly":
        p = cls((1,))
        for r in roots:
            p = p * cls((-as_scalar(r), 1))
        return p

    # basic data
    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def lead(self):
        return self.coeffs[-1] if self.coeffs else Fraction(0)

    def is_zero(self) -> bool:
        return not self.coeffs

    def is_monic(self) -> bool:
        return bool(self.coeffs) and self.lead == 1

    def is_dual(self) -> bool:
        return any(isinstance(c, DualNum) for c in self.coeffs)

    def coeff(self, k: int):
        return self.coeffs[k] if 0 <= k < len(self.coeffs) else Fraction(0)

    def residue(self) -> "Poly":
        return Poly(residue(c) for c in self.coeffs)

    def eps_part(self) -> "Poly":
        return Poly(eps_part(c) for c in self.coeffs)

    # ring operations
    def _coerce(self, other):
        if isinstance(other, Poly):
            return other
        try:
            return Poly.const(as_scalar(other))
        except TypeError:
            return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        n = max(len(self.coeffs), len(o.coeffs))
        return Poly._wrap([self.coeff(k) + o.coeff(k) for k in range(n)])

    __radd__ = __add__

    def __neg__(self):
        return Poly._wrap([-c for c in self.coeffs])

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o - self

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        if not self.coeffs or not o.coeffs:
            return Poly()
        out = [Fraction(0)] * (len(self.coeffs) + len(o.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a == 0:
                continue
            for j, b in enumerate(o.coeffs):
                out[i + j] = out[i + j] + a * b
        return Poly._wrap(out)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative power")
        out = Poly((1,))
        for _ in range(k):
            out = out * self
        return out

    def __divmod__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        if o.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        if not _is_unit(o.lead):
            raise UnsupportedInput("leading coefficient of divisor is not a unit")
        inv_lead = _inv(o.lead)
        rem = list(self.coeffs)
        dq = len(rem) - len(o.coeffs)
        if dq < 0:
            return Poly(), Poly._wrap(rem)
        quot = [Fraction(0)] * (dq + 1)
        for k in range(dq, -1, -1):
            c = rem[k + o.degree] * inv_lead
            quot[k] = c
            if c != 0:
                for j, b in enumerate(o.coeffs):
                    rem[k + j] = rem[k + j] - c * b
        return Poly._wrap(quot), Poly._wrap(rem[: o.degree])

    def __floordiv__(self, other):
        return divmod(self, other)[0]

    def __mod__(self, other):
        return divmod(self, other)[1]

    def __eq__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self.coeffs == o.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    # evaluation and transforms
    def __call__(self, x):
        if isinstance(x, Mat):
            return x.apply_poly(self)
        acc = Fraction(0)
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def shift(self, c) -> "Poly":
        """Return P(T + c)."""
        lin = Poly((as_scalar(c), 1))
        acc = Poly()
        for a in reversed(self.coeffs):
            acc = acc * lin + a
        return acc

    def derivative(self) -> "Poly":
        return Poly(k * self.coeffs[k] for k in range(1, len(self.coeffs)))

    def monic(self) -> "Poly":
        if self.is_zero():
            raise ZeroDivisionError("zero polynomial has no monic associate")
        return self * _inv(self.lead)

    def __repr__(self):
        return f"Poly({[str(c) for c in self.coeffs]})"

    def __str__(self):
        if not self.coeffs:
            return "0"
        terms = []
        for k in range(len(self.coeffs) - 1, -1, -1):
            c = self.coeffs[k]
            if c == 0:
                continue
            mono = "" if k == 0 else ("T" if k == 1 else f"T^{k}")
            cs = str(c)
            if isinstance(c, DualNum) and c.eps != 0:
                cs = f"({cs})"
            if mono and c == 1:
                terms.append(mono)
            elif mono and c == -1:
                terms.append("-" + mono)
            elif mono:
                terms.append(f"{cs}*{mono}")
            else:
                terms.append(cs)
        return " + ".join(terms).replace("+ -", "- ")


def poly_gcd_bezout(P: Poly, Q: Poly) -> tuple[Poly, Poly, Poly]:
    """Extended Euclid over Q: return (g, A, B), g monic, with A*P + B*Q = g."""
    if P.is_dual() or Q.is_dual():
        raise UnsupportedInput("reduce dual-number polynomials to their residue first")
    if P.is_zero() and Q.is_zero():
        raise ValueError("undefined gcd")
    r0, s0, t0 = P, Poly((1,)), Poly()
    r1, s1, t1 = Q, Poly(), Poly((1,))
    while not r1.is_zero():
        q, r = divmod(r0, r1)
        r0, r1 = r1, r
        s0, s1 = s1, s0 - q * s1
        t0, t1 = t1, t0 - q * t1
    inv = 1 / r0.lead
    return r0 * inv, s0 * inv, t0 * inv


def poly_gcd(P: Poly, Q: Poly) -> Poly:
    """Monic gcd over Q (Euclid without cofactors)."""
    if P.is_dual() or Q.is_dual():
        raise UnsupportedInput("reduce dual-number polynomials to their residue first")
    if P.is_zero() and Q.is_zero():
        raise ValueError("undefined gcd")
    while not Q.is_zero():
        P, Q = Q, P % Q
    return P * (1 / P.lead)


def bezout_coprime(Q: Poly, S: Poly) -> tuple[Poly, Poly]:
    """Return (A, B) with A*Q + B*S == 1 over Q or Q[eps].

    Coprimality is decided at the residue field; over dual numbers the residue
    Bezout pair is corrected by the factor (1 - R), where R = A0*Q + B0*S - 1
    has only eps-coefficients and therefore squares to zero.
    """
    g, A0, B0 = poly_gcd_bezout(Q.residue(), S.residue())
    if g.degree > 0:
        raise NotComaximal(f"residues share the factor {g}", datum=str(g))
    if not (Q.is_dual() or S.is_dual()):
        return A0, B0
    R = A0 * Q + B0 * S - 1
    corr = Poly((1,)) - R
    A, B = A0 * corr, B0 * corr
    if A * Q + B * S != Poly((1,)):
        raise ArithmeticError("Bezout lift failed")
    return A, B


def crt_idempotents(Q: Poly, S: Poly, bezout: tuple[Poly, Poly] | None = None) -> tuple[Poly, Poly]:
    """CRT idempotents for a comaximal pair of monic polynomials.

    With A*Q + B*S = 1 we set eQ = B*S and eS = A*Q, reduced mod Q*S.  Thus
    eQ = 1 mod Q and eQ = 0 mod S, so eQ(M) is the projector onto ker Q(M)
    along ker S(M) whenever Q(M)*S(M) = 0.  A known Bezout pair may be passed.
    """
    A, B = bezout_coprime(Q, S) if bezout is None else bezout
    M = Q * S
    return (B * S) % M, (A * Q) % M


# ----------------------------------------------------------------- matrices


def _dot(r, c):
    acc = Fraction(0)
    for a, b in zip(r, c):
        if a and b:
            acc = acc + a * b
    return acc


class Mat:
    """Dense matrix of exact scalars stored as a tuple of row tuples."""

    __slots__ = ("rows",)

    def __init__(self, rows: Iterable[Iterable]):
        self.rows = tuple(tuple(as_scalar(x) for x in r) for r in rows)
        if self.rows and len({len(r) for r in self.rows}) != 1:
            raise ValueError("ragged matrix")

    @classmethod
    def _wrap(cls, rows) -> "Mat":
        """Internal constructor for rows whose entries are already scalars."""
        m = object.__new__(cls)
        m.rows = tuple(tuple(r) for r in rows)
        return m

    # constructors
    @classmethod
    def identity(cls, n: int) -> "Mat":
        return cls([[1 if i == j else 0 for j in range(n)] for i in range(n)])

    @classmethod
    def zeros(cls, r: int, c: int | None = None) -> "Mat":
        c = r if c is None else c
        return cls([[0] * c for _ in range(r)])

    @classmethod
    def diag(cls, vals: Sequence) -> "Mat":
        n = len(vals)
        return cls([[vals[i] if i == j else 0 for j in range(n)] for i in range(n)])

    @classmethod
    def from_columns(cls, cols: Sequence[Sequence], nrows: int | None = None) -> "Mat":
        if not cols:
            return cls([[] for _ in range(nrows or 0)])
        return cls(zip(*cols))

    @classmethod
    def block_diag(cls, *blocks: "Mat") -> "Mat":
        n = sum(b.nrows for b in blocks)
        out = [[Fraction(0)] * n for _ in range(n)]
        off = 0
        for b in blocks:
            for i, row in enumerate(b.rows):
                for j, x in enumerate(row):
                    out[off + i][off + j] = x
            off += b.nrows
        return cls(out)

    # shape
    @property
    def nrows(self) -> int:
        return len(self.rows)

    @property
    def ncols(self) -> int:
        return len(self.rows[0]) if self.rows else 0

    @property
    def n(self) -> int:
        if self.nrows != self.ncols:
            raise ValueError("matrix is not square")
        return self.nrows

    def is_dual(self) -> bool:
        return any(isinstance(x, DualNum) for r in self.rows for x in r)

    def column(self, j: int) -> tuple:
        return tuple(r[j] for r in self.rows)

    def columns(self) -> list[tuple]:
        return [self.column(j) for j in range(self.ncols)]

    def transpose(self) -> "Mat":
        return Mat(zip(*self.rows)) if self.rows else Mat([])

    def residue(self) -> "Mat":
        return Mat([[residue(x) for x in r] for r in self.rows])

    def eps_part(self) -> "Mat":
        return Mat([[eps_part(x) for x in r] for r in self.rows])

    def hstack(self, other: "Mat") -> "Mat":
        return Mat([a + b for a, b in zip(self.rows, other.rows)])

    # arithmetic
    def __add__(self, other: "Mat") -> "Mat":
        return Mat._wrap([[a + b for a, b in zip(r, s)] for r, s in zip(self.rows, other.rows)])

    def __sub__(self, other: "Mat") -> "Mat":
        return Mat._wrap([[a - b for a, b in zip(r, s)] for r, s in zip(self.rows, other.rows)])

    def __neg__(self) -> "Mat":
        return Mat._wrap([[-a for a in r] for r in self.rows])

    def __mul__(self, other):
        if isinstance(other, Mat):
            if self.ncols != other.nrows:
                raise ValueError("shape mismatch in matrix product")
            cols = other.columns()
            return Mat._wrap([[_dot(r, c) for c in cols] for r in self.rows])
        s = as_scalar(other)
        return Mat._wrap([[a * s for a in r] for r in self.rows])

    def __rmul__(self, other):
        s = as_scalar(other)
        return Mat._wrap([[s * a for a in r] for r in self.rows])

    def apply(self, v: Sequence) -> tuple:
        return tuple(_dot(r, v) for r in self.rows)

    def __eq__(self, other):
        if not isinstance(other, Mat):
            return NotImplemented
        return self.rows == other.rows

    def __hash__(self):
        return hash(self.rows)

    def __repr__(self):
        return "Mat(" + repr([[str(x) for x in r] for r in self.rows]) + ")"

    def trace(self):
        return sum((self.rows[i][i] for i in range(self.n)), Fraction(0))

    def apply_poly(self, P: Poly) -> "Mat":
        """Evaluate P at this square matrix by Horner's rule."""
        n = self.n
        ident = Mat.identity(n)
        acc = Mat.zeros(n)
        for c in reversed(P.coeffs):
            acc = acc * self + ident * c
        return acc

    def charpoly(self) -> Poly:
        """det(T - M) via Faddeev-LeVerrier; valid over any Q-algebra."""
        n = self.n
        c = [Fraction(0)] * (n + 1)
        c[n] = Fraction(1)
        ident = Mat.identity(n)
        Mk = Mat.zeros(n)
        for k in range(1, n + 1):
            Mk = self * Mk + ident * c[n - k + 1]
            c[n - k] = -(self * Mk).trace() / k
        return Poly(c)

    # field-only linear algebra
    def _require_field(self):
        if self.is_dual():
            raise UnsupportedInput("row reduction needs field scalars")

    def rref(self) -> tuple["Mat", list[int]]:
        self._require_field()
        rows = [list(r) for r in self.rows]
        pivots: list[int] = []
        r = 0
        for c in range(self.ncols):
            pr = next((i for i in range(r, len(rows)) if rows[i][c] != 0), None)
            if pr is None:
                continue
            rows[r], rows[pr] = rows[pr], rows[r]
            inv = 1 / rows[r][c]
            rows[r] = [x * inv for x in rows[r]]
            for i in range(len(rows)):
                if i != r and rows[i][c] != 0:
                    f = rows[i][c]
                    rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
            pivots.append(c)
            r += 1
            if r == len(rows):
                break
        return Mat._wrap(rows), pivots

    def rank(self) -> int:
        if not self.rows or self.ncols == 0:
            return 0
        return len(self.rref()[1])

    def kernel_basis(self) -> list[tuple]:
        R, pivots = self.rref()
        free = [c for c in range(self.ncols) if c not in pivots]
        basis = []
        for f in free:
            v = [Fraction(0)] * self.ncols
            v[f] = Fraction(1)
            for i, p in enumerate(pivots):
                v[p] = -R.rows[i][f]
            basis.append(tuple(v))
        return basis

    def column_space_basis(self) -> list[tuple]:
        if self.ncols == 0:
            return []
        _, pivots = self.rref()
        return [self.column(p) for p in pivots]

    def inverse(self) -> "Mat":
        n = self.n
        if self.is_dual():
            A0inv = self.residue().inverse()
            A1 = self.eps_part()
            corr = -(A0inv * A1 * A0inv)
            return Mat([[DualNum(a, b) for a, b in zip(r, s)] for r, s in zip(A0inv.rows, corr.rows)])
        aug = self.hstack(Mat.identity(n))
        R, pivots = aug.rref()
        if pivots[:n] != list(range(n)):
            raise ZeroDivisionError("matrix is singular")
        return Mat([r[n:] for r in R.rows])


def charpoly(M: Mat) -> Poly:
    return M.charpoly()


def kernel_basis(M: Mat) -> list[tuple]:
    return M.kernel_basis()


def canonical_span(vectors: Sequence[Sequence]) -> tuple[tuple, ...]:
    """Canonical basis (nonzero RREF rows) of the span of the given vectors."""
    if not vectors:
        return ()
    R, pivots = Mat(vectors).rref()
    return tuple(R.rows[i] for i in range(len(pivots)))
