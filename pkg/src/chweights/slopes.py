"""Degrees, slopes and etaleness tests.

Degrees are tracked as sums of v_p(delta(pi_K)); dividing by f gives the
usual degree, which does not change any sign condition.  For crystabelline
data the degree of Fil_w^i is sum_{s <= i} (v_p(alpha_{w(s)}) + sum_sigma h_{s,sigma}/e)
for a non-critical refinement w.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .characters import Character, FieldShape
from .errors import GateViolation, UnsupportedInput
from .refinements import CrysModule
from .trianguline import ModuleClass, TriangModule, as_program


@dataclass(frozen=True)
class SlopeReport:
    """Prefix degree sums, their total and the etaleness verdict.

    ``violations`` lists 1-based prefix lengths m < n with negative partial
    sum, followed by n when the total is nonzero.
    """

    partials: tuple[Fraction, ...]
    total: Fraction
    verdict: bool
    violations: tuple[int, ...]
    witness: tuple | None = None


def _report(partials: Sequence[Fraction], witness=None) -> SlopeReport:
    n = len(partials)
    viol = [m + 1 for m in range(n - 1) if partials[m] < 0]
    if partials[-1] != 0:
        viol.append(n)
    return SlopeReport(tuple(partials), partials[-1], not viol, tuple(viol), witness)


def _prefix(xs: Sequence[Fraction]) -> list[Fraction]:
    return list(itertools.accumulate(xs, initial=Fraction(0)))[1:]


def slope_rank1(delta: Character, shape: FieldShape | None = None) -> Fraction:
    """mu(R(delta)) = v_p(delta(pi_K)) / f."""
    shape = shape or delta.shape
    return delta.uval / shape.f


def degree(D: TriangModule) -> Fraction:
    """deg D as the sum of the rank-one degrees of a triangulation."""
    return sum((slope_rank1(d) for d in D.params), Fraction(0))


def slope(D: TriangModule) -> Fraction:
    return degree(D) / D.n


def _require_vgen(D: TriangModule):
    if D.class_tag is not ModuleClass.VERY_GENERIC:
        raise UnsupportedInput(f"criterion applies to very generic modules, not {D.tag_label}")


def etale_vgen(D: TriangModule) -> SlopeReport:
    """Proper prefix sums of v_p(delta_i(pi_K)) are >= 0 and the total is 0."""
    _require_vgen(D)
    return _report(_prefix([d.uval for d in D.params]))


@dataclass(frozen=True)
class PullbackEtale:
    feasible: bool
    chi_uval: Fraction
    violations: tuple[int, ...]


def etale_pullback_vgen(D: TriangModule, j: int, sigma: str) -> PullbackEtale:
    """Whether p_{j,sigma}(D) becomes etale after an unramified twist chi.

    Conditions for prefix length m < n:
      m <= n-j:     sum_{i<=m} v_i >= m j / (n e)
      n-j < m < n:  sum_{i<=m} v_i + (m - (n-j))/e >= m j / (n e)
    and v_p(chi(pi_K)) = -j/(n e).
    """
    _require_vgen(D)
    D.shape.check(sigma)
    n, e = D.n, D.shape.e
    if not 1 <= j <= n:
        raise ValueError(f"j must lie in 1..{n}")
    if not etale_vgen(D).verdict:
        raise GateViolation("the module is not etale before the pullback")
    sums = _prefix([d.uval for d in D.params])
    viol = []
    for m in range(1, n):
        lhs = sums[m - 1] + (Fraction(m - (n - j), e) if m > n - j else 0)
        if lhs < Fraction(m * j, n * e):
            viol.append(m)
    return PullbackEtale(not viol, Fraction(-j, n * e), tuple(viol))


def _crys_partials(vps: Sequence[Fraction], weights: dict, e: int, order: Sequence[int]) -> list[Fraction]:
    n = len(vps)
    hsum = [sum((Fraction(weights[s][i]) for s in weights), Fraction(0)) / e for i in range(n)]
    return _prefix([vps[order[i]] + hsum[i] for i in range(n)])


def etale_crys(M: CrysModule) -> SlopeReport:
    """Etaleness of a non-critical regular crystabelline module.

    With valuations sorted ascending, v_tau(1) <= ... <= v_tau(n), require
    sum_{i<=j} v_tau(i) >= -(1/e) sum_sigma sum_{i<=j} h_{i,sigma} for j < n,
    with equality for j = n.  Partials are the differences lhs - rhs.
    Non-criticality is the caller's responsibility.
    """
    if not M.is_regular():
        raise UnsupportedInput("etaleness criterion needs regular weights")
    order = sorted(range(M.n), key=lambda i: M.vps[i])
    return _report(_crys_partials(M.vps, M.weights, M.shape.e, order))


def brute_force_etale(M: CrysModule) -> SlopeReport:
    """Search every refinement w and prefix i for a saturated sub of negative slope.

    Partials record, for each i, the minimum over w of deg(Fil_w^i); the
    witness is the first (w, i) with negative degree, if any.
    """
    if M.n > 6:
        raise UnsupportedInput("brute-force search is limited to n <= 6")
    if not M.is_regular():
        raise UnsupportedInput("etaleness criterion needs regular weights")
    mins: list[Fraction | None] = [None] * M.n
    witness = None
    for w in itertools.permutations(range(M.n)):
        parts = _crys_partials(M.vps, M.weights, M.shape.e, w)
        for i, p in enumerate(parts):
            if mins[i] is None or p < mins[i]:
                mins[i] = p
            if witness is None and i < M.n - 1 and p < 0:
                witness = (tuple(x + 1 for x in w), i + 1)
    return _report(mins, witness)


def program_degree(program, shape: FieldShape) -> Fraction:
    """Degree (in units of v_p) added by a program: each (i, sigma, k) adds i*k/e."""
    return sum((Fraction(st.i * st.k, shape.e) for st in as_program(program)), Fraction(0))


def _shifts(program, n: int, shape: FieldShape) -> dict[str, list[int]]:
    out = {s: [0] * n for s in shape.embeddings}
    for st in as_program(program):
        shape.check(st.sigma)
        if not 1 <= st.i <= n:
            raise ValueError(f"step index {st.i} out of range 1..{n}")
        for pos in range(n - st.i, n):
            out[st.sigma][pos] += st.k
    return out


def twist_to_etale(obj, program) -> Fraction | None:
    """Valuation of the unramified twist making the pulled-back module etale.

    Returns -deg(program)/n, or None when the twisted prefix conditions fail.
    ``obj`` is a very generic TriangModule or a CrysModule, etale beforehand.
    """
    if isinstance(obj, CrysModule):
        if not etale_crys(obj).verdict:
            raise GateViolation("the module is not etale before the program")
        shape, n = obj.shape, obj.n
        c = -program_degree(program, shape) / n
        sh = _shifts(program, n, shape)
        new_w = {s: [h + d for h, d in zip(obj.weights[s], sh[s])] for s in shape.embeddings}
        if any(len(set(v)) != n or v != sorted(v, reverse=True) for v in new_w.values()):
            return None
        vps = [v + c for v in obj.vps]
        order = sorted(range(n), key=lambda i: vps[i])
        rep = _report(_crys_partials(vps, new_w, shape.e, order))
        return c if rep.verdict else None
    D = obj
    _require_vgen(D)
    if not etale_vgen(D).verdict:
        raise GateViolation("the module is not etale before the program")
    shape, n = D.shape, D.n
    c = -program_degree(program, shape) / n
    sh = _shifts(program, n, shape)
    added = [sum(sh[s][pos] for s in shape.embeddings) for pos in range(n)]
    uv = [d.uval + Fraction(a, shape.e) + c for d, a in zip(D.params, added)]
    return c if _report(_prefix(uv)).verdict else None
