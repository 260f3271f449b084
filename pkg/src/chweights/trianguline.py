"""Triangulated modules, change-of-weight operators, gates and walls.

A :class:`TriangModule` is the ordered parameter (delta_1, ..., delta_n) of a
triangulation, sub to quotient, together with declared flags for the
extension classes.  Extension classes themselves are not computed; only their
(non)vanishing is recorded and checked for consistency.

Index conventions are 1-based throughout the public API.  The pullback
``p_{i,sigma}`` raises the sigma-weights of the *last* i parameters.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .characters import Character, FieldShape, same_shape, tuple_regularity, x_power
from .errors import GateViolation, UnsupportedInput
from .exactalg import residue


class ModuleClass(str, Enum):
    VERY_GENERIC = "VeryGenericStronglyNonSplit"
    CRYS_GENERIC = "CrystabellineGeneric"
    CRYS_NONCRIT = "CrystabellineNonCritical"
    MIXED = "Mixed"
    PLAIN = "Plain"


def _regular_integer(ws: Sequence[Fraction]) -> bool:
    return all(w.denominator == 1 for w in ws) and all(a > b for a, b in zip(ws, ws[1:]))


@dataclass(frozen=True)
class TriangModule:
    """Parameters of a triangulation plus declared extension flags.

    ``step_nonsplit[k]`` and ``graded_nonsplit[k]`` refer to step i = k + 2:
    the class of Fil^i as an extension of R(delta_i) by Fil^{i-1}, and the
    class of Fil^i/Fil^{i-2} as an extension of R(delta_i) by R(delta_{i-1}).
    A non-split graded class forces a non-split step class, since the graded
    sequence is a pushout of the step sequence.

    ``crys`` optionally carries a crystabelline datum exposing
    ``refinement_params(w)``; it is used to enumerate critical triangulations.
    """

    params: tuple[Character, ...]
    step_nonsplit: tuple[bool, ...]
    graded_nonsplit: tuple[bool, ...]
    class_tag: ModuleClass = ModuleClass.PLAIN
    mixed_m: int | None = None
    crys: object | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(self.params))
        object.__setattr__(self, "step_nonsplit", tuple(bool(b) for b in self.step_nonsplit))
        object.__setattr__(self, "graded_nonsplit", tuple(bool(b) for b in self.graded_nonsplit))
        object.__setattr__(self, "class_tag", ModuleClass(self.class_tag))
        problems = self.tag_problems()
        if problems:
            raise GateViolation("; ".join(problems), datum=problems)

    @classmethod
    def make(cls, params: Sequence[Character], class_tag=ModuleClass.PLAIN, *, step=None, graded=None,
             mixed_m=None, crys=None) -> "TriangModule":
        """Build a module; missing flag lists default to all non-split."""
        n = len(params)
        step = [True] * (n - 1) if step is None else step
        graded = [True] * (n - 1) if graded is None else graded
        return cls(tuple(params), tuple(step), tuple(graded), ModuleClass(class_tag), mixed_m, crys)

    # -- validation
    def tag_problems(self) -> list[str]:
        n = len(self.params)
        if n == 0:
            return ["a module needs at least one parameter"]
        same_shape(self.params)
        out = []
        if len(self.step_nonsplit) != n - 1 or len(self.graded_nonsplit) != n - 1:
            return [f"flag lists must have length n-1 = {n - 1}"]
        for k, (s, g) in enumerate(zip(self.step_nonsplit, self.graded_nonsplit)):
            if g and not s:
                out.append(f"step {k + 2}: graded class non-split but step class split")
        tag = self.class_tag
        if tag is ModuleClass.VERY_GENERIC:
            if not tuple_regularity(self.params).in_Tcirc:
                out.append("very generic module must lie in T_circ")
            if not all(self.graded_nonsplit):
                out.append("very generic module must be strongly non-split")
        elif tag is ModuleClass.CRYS_NONCRIT:
            for s in self.shape.embeddings:
                if not _regular_integer(self.weights(s)):
                    out.append(f"non-critical crystabelline module needs regular integer weights at {s}")
        elif tag is ModuleClass.MIXED:
            m = self.mixed_m
            if m is None or not 0 <= m <= n:
                out.append("Mixed(m) needs 0 <= m <= n")
            else:
                for s in self.shape.embeddings:
                    if not _regular_integer(self.weights(s)[m:]):
                        out.append(f"crystabelline tail of Mixed({m}) needs regular integer weights at {s}")
                if not all(self.graded_nonsplit):
                    out.append("Mixed(m) triangulations are enumerated only for strongly non-split modules")
        if tag is not ModuleClass.MIXED and self.mixed_m is not None:
            out.append("mixed_m is only meaningful for the Mixed tag")
        return out

    # -- accessors
    @property
    def n(self) -> int:
        return len(self.params)

    @property
    def shape(self) -> FieldShape:
        return self.params[0].shape

    def weights(self, sigma: str) -> tuple[Fraction, ...]:
        return tuple(residue(d.weight(sigma)) for d in self.params)

    def weight_table(self) -> dict[str, tuple[Fraction, ...]]:
        return {s: self.weights(s) for s in self.shape.embeddings}

    @property
    def is_nonsplit(self) -> bool:
        return all(self.step_nonsplit)

    @property
    def is_strongly_nonsplit(self) -> bool:
        return all(self.graded_nonsplit)

    def nonsplit_at(self, i: int) -> bool | None:
        """Whether D is a non-split extension of D/Fil^i by Fil^i.

        True when the declared flags force it (D non-split, in particular when
        D is strongly non-split); None when the flags do not decide it.
        """
        if not 1 <= i < self.n:
            raise ValueError("need 1 <= i < n")
        return True if self.is_nonsplit else None

    @property
    def tag_label(self) -> str:
        if self.class_tag is ModuleClass.MIXED:
            return f"Mixed({self.mixed_m})"
        return self.class_tag.value

    def with_params(self, params: Sequence[Character]) -> "TriangModule":
        """Same flags with new parameters.

        The class tag is kept when its conditions still hold and dropped to
        Plain otherwise; crystabelline flag data is not transported.
        """
        cand = replace(self, params=tuple(params), crys=None, class_tag=ModuleClass.PLAIN, mixed_m=None)
        try:
            return replace(cand, class_tag=self.class_tag, mixed_m=self.mixed_m)
        except GateViolation:
            return cand


# ---------------------------------------------------------------- operators


def _check_index(D: TriangModule, i: int):
    if not 1 <= i <= D.n:
        raise ValueError(f"index i={i} out of range 1..{D.n}")


def pullback_p(D: TriangModule, i: int, sigma: str, k: int = 1) -> TriangModule:
    """p_{i,sigma}^k: twist the last i parameters by x_sigma^k."""
    _check_index(D, i)
    if k < 0:
        raise ValueError("multiplicity must be nonnegative")
    tw = x_power(D.shape, {sigma: k})
    cut = D.n - i
    return D.with_params([d if j < cut else d * tw for j, d in enumerate(D.params)])


def pushout_iota(D: TriangModule, i: int, sigma: str, k: int = 1) -> TriangModule:
    """iota_{i,sigma}^k: twist the first n-i parameters by x_sigma^{-k}."""
    _check_index(D, i)
    if k < 0:
        raise ValueError("multiplicity must be nonnegative")
    tw = x_power(D.shape, {sigma: -k})
    cut = D.n - i
    return D.with_params([d * tw if j < cut else d for j, d in enumerate(D.params)])


def global_twist(D: TriangModule, chi: Character) -> TriangModule:
    return D.with_params([d * chi for d in D.params])


@dataclass(frozen=True)
class GateResult:
    ok: bool
    violations: tuple[dict, ...] = ()

    def __bool__(self):
        return self.ok


def _kvec(shape: FieldShape, k) -> dict[str, int]:
    if isinstance(k, Mapping):
        return {shape.check(s): int(v) for s, v in k.items()}
    if isinstance(k, int):
        return {s: k for s in shape.embeddings}
    return dict(zip(shape.embeddings, (int(v) for v in k)))


def invertibility_gate(D: TriangModule, i: int, k) -> GateResult:
    """Hypothesis for p_k to be invertible on extension data.

    True iff wt_sigma(delta_j/delta_l) is not in {1, ..., k_sigma} for all
    j <= n-i < l (1-based) and all sigma.  ``k`` is a mapping sigma -> k_sigma,
    a sequence aligned with the embeddings, or an int used for every sigma.
    """
    _check_index(D, i)
    kv = _kvec(D.shape, k)
    cut = D.n - i
    viol = []
    for s, ks in kv.items():
        ws = D.weights(s)
        for j in range(cut):
            for l in range(cut, D.n):
                diff = ws[j] - ws[l]
                if diff.denominator == 1 and 1 <= diff <= ks:
                    viol.append({"j": j + 1, "l": l + 1, "sigma": s, "difference": diff})
    return GateResult(not viol, tuple(viol))


def _exact(x) -> Fraction:
    return residue(x) if hasattr(x, "eps") else Fraction(x)


def _weights_of(D_or_weights, sigma: str | None) -> tuple[Fraction, ...]:
    if isinstance(D_or_weights, TriangModule):
        return D_or_weights.weights(sigma)
    if isinstance(D_or_weights, Mapping):
        return tuple(_exact(w) for w in D_or_weights[sigma])
    return tuple(_exact(w) for w in D_or_weights)


def wall_violations(D_or_weights, sigma: str | None, i: int, interval: tuple[int, int]) -> list[dict]:
    """All (j, l, h) with h_j = h_l + h, j <= n-i < l, h in [a, b]."""
    a, b = interval
    if not a <= 0 <= b:
        raise ValueError("wall interval must satisfy a <= 0 <= b")
    ws = _weights_of(D_or_weights, sigma)
    n = len(ws)
    if not 1 <= i <= n:
        raise ValueError(f"index i={i} out of range 1..{n}")
    cut = n - i
    out = []
    for j in range(cut):
        for l in range(cut, n):
            h = ws[j] - ws[l]
            if h.denominator == 1 and a <= h <= b:
                out.append({"j": j + 1, "l": l + 1, "h": int(h)})
    return out


def wall_member(D_or_weights, sigma: str | None, i: int, interval: tuple[int, int]) -> bool:
    """{h_j : j <= n-i} and {h_l + h : l > n-i, h in [a,b]} are disjoint."""
    return not wall_violations(D_or_weights, sigma, i, interval)


def wall_program_violations(weights: Mapping[str, Sequence], S: Iterable[str], I: Mapping[str, Sequence[int]],
                            k: Mapping[str, Mapping[int, int]], negative: bool = False) -> list[dict]:
    """Evaluate the nested wall condition attached to a program.

    For each sigma in S with I_sigma = {i_1 < ... < i_d}, i_0 = 0, i_{d+1} = n:
    for all 0 <= m <= d, n+1-i_{m+1} <= j < n+1-i_m, 0 <= m' < m and
    n+1-i_{m'+1} <= l < n+1-i_{m'}, require h_j not in
    {h_l + a : 0 <= a <= sum_{r=m'+1}^{m} k_{i_r}} (h_l - a when ``negative``).
    Returns the violating tuples.
    """
    out = []
    for s in S:
        ws = _weights_of(weights, s)
        n = len(ws)
        idx = sorted(I.get(s, ()))
        if any(not 1 <= i <= n for i in idx) or len(set(idx)) != len(idx):
            raise ValueError(f"I_{s} must be a subset of 1..{n}")
        ks = k.get(s, {})
        full = [0] + idx + [n]
        d = len(idx)
        for m in range(d + 1):
            for j in range(n + 1 - full[m + 1], n + 1 - full[m]):
                for mp in range(m):
                    bound = sum(int(ks.get(full[r], 0)) for r in range(mp + 1, m + 1))
                    for l in range(n + 1 - full[mp + 1], n + 1 - full[mp]):
                        diff = ws[j - 1] - ws[l - 1]
                        if negative:
                            diff = -diff
                        if diff.denominator == 1 and 0 <= diff <= bound:
                            out.append({"sigma": s, "m": m, "m_prime": mp, "j": j, "l": l, "a": int(diff)})
    return out


def wall_member_program(weights, S, I, k, negative: bool = False) -> bool:
    return not wall_program_violations(weights, S, I, k, negative)


# ------------------------------------------------------------------ programs


@dataclass(frozen=True)
class Step:
    i: int
    sigma: str
    k: int = 1


def as_program(program: Iterable) -> tuple[Step, ...]:
    out = []
    for st in program:
        if isinstance(st, Step):
            out.append(st)
        elif isinstance(st, Mapping):
            out.append(Step(int(st["i"]), str(st["sigma"]), int(st.get("k", 1))))
        else:
            i, s, *rest = st
            out.append(Step(int(i), str(s), int(rest[0]) if rest else 1))
    for st in out:
        if st.k < 0:
            raise ValueError("program multiplicities must be nonnegative")
    return tuple(out)


def program_data(program, shape: FieldShape) -> tuple[dict[str, list[int]], dict[str, dict[int, int]]]:
    """Collapse a program to the sets I_sigma and multiplicities k_{sigma,i}."""
    k: dict[str, dict[int, int]] = {}
    for st in as_program(program):
        shape.check(st.sigma)
        if st.k == 0:
            continue
        k.setdefault(st.sigma, {})
        k[st.sigma][st.i] = k[st.sigma].get(st.i, 0) + st.k
    I = {s: sorted(v) for s, v in k.items()}
    return I, k


def apply_program(D: TriangModule, program, mode: str = "plain", inverse: bool = False) -> TriangModule:
    """Compose p_{i,sigma}^k over the program (q-steps with ``inverse``).

    ``mode="strict"`` checks the invertibility gate before every step;
    ``mode="substack"`` checks the program wall condition on the input weights.
    """
    prog = as_program(program)
    if mode == "substack":
        I, k = program_data(prog, D.shape)
        viol = wall_program_violations(D.weight_table(), list(I), I, k, negative=inverse)
        if viol:
            raise GateViolation("program crosses a wall", datum=viol)
    elif mode not in ("plain", "strict"):
        raise ValueError(f"unknown mode {mode!r}")
    cur = D
    for pos, st in enumerate(prog):
        _check_index(cur, st.i)
        if mode == "strict" and not inverse:
            gate = invertibility_gate(cur, st.i, {st.sigma: st.k})
            if not gate:
                raise GateViolation(f"step {pos + 1} fails the invertibility gate",
                                    datum={"step": pos + 1, "violations": list(gate.violations)})
        cur = pullback_p(cur, st.i, st.sigma, st.k) if not inverse else _q_step(cur, st)
    return cur


def _q_step(D: TriangModule, st: Step) -> TriangModule:
    tw = x_power(D.shape, {st.sigma: -st.k})
    cut = D.n - st.i
    return D.with_params([d if j < cut else d * tw for j, d in enumerate(D.params)])


# ------------------------------------------------------------ triangulations


@dataclass(frozen=True)
class Triangulation:
    w: tuple[int, ...]
    params: tuple[Character, ...]

    def weights(self, sigma: str) -> tuple[Fraction, ...]:
        return tuple(d.weight(sigma) for d in self.params)


def _smooth_split(D: TriangModule, start: int) -> list[Character]:
    """phi_j = delta_j * x^{-h_j} for the crystabelline part of D."""
    shape = D.shape
    return [d / x_power(shape, [int(w) for w in d.weights()]) for d in D.params[start:]]


def enumerate_triangulations(D: TriangModule) -> list[Triangulation]:
    """All triangulations predicted by the classification for D's class tag.

    Refinements ``w`` are 1-based permutations; entry i is the index of the
    smooth character placed in position i.
    """
    tag = D.class_tag
    n = D.n
    ident = tuple(range(1, n + 1))
    if tag is ModuleClass.PLAIN:
        raise UnsupportedInput("no classification of triangulations applies to a Plain module")
    if tag is ModuleClass.VERY_GENERIC:
        return [Triangulation(ident, D.params)]
    if tag in (ModuleClass.CRYS_GENERIC, ModuleClass.CRYS_NONCRIT) and D.crys is not None:
        return [Triangulation(w, tuple(D.crys.refinement_params(w)))
                for w in itertools.permutations(range(1, n + 1))]
    if tag is ModuleClass.CRYS_GENERIC:
        raise UnsupportedInput("critical triangulations need the Hodge flag (attach crystabelline data)")
    m = D.mixed_m if tag is ModuleClass.MIXED else 0
    head = D.params[:m]
    phis = _smooth_split(D, m)
    hs = [x_power(D.shape, [int(w) for w in d.weights()]) for d in D.params[m:]]
    out = []
    for perm in itertools.permutations(range(n - m)):
        tail = tuple(hs[i] * phis[perm[i]] for i in range(n - m))
        w = tuple(range(1, m + 1)) + tuple(m + 1 + p for p in perm)
        out.append(Triangulation(w, tuple(head) + tail))
    return out


def weight_uniform_check(orderings: Sequence, sigmas: Iterable[str] | None = None) -> bool:
    """True iff all orderings give the same weight sequence at every sigma.

    Each ordering is a mapping sigma -> weight sequence, a :class:`Triangulation`
    or a plain sequence (single embedding).
    """
    if not orderings:
        raise ValueError("need at least one ordering")

    def table(o):
        if isinstance(o, Triangulation):
            shape = o.params[0].shape
            return {s: tuple(residue(x) for x in o.weights(s)) for s in shape.embeddings}
        if isinstance(o, Mapping):
            return {s: tuple(residue(x) for x in v) for s, v in o.items()}
        return {None: tuple(residue(x) for x in o)}

    tabs = [table(o) for o in orderings]
    keys = list(sigmas) if sigmas is not None else list(tabs[0])
    lengths = {len(t[s]) for t in tabs for s in keys}
    if len(lengths) > 1:
        raise ValueError("ragged orderings")
    return all(t[s] == tabs[0][s] for t in tabs for s in keys)
