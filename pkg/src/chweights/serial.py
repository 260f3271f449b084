"""JSON encoding of exact values and parsing of request payloads.

Rationals travel as strings ("3", "-1/2"); dual numbers as
{"value": ..., "eps": ...} or a two-element list [value, eps].
"""

from __future__ import annotations

import dataclasses
import enum
import re
from fractions import Fraction
from typing import Any, Mapping

from .characters import (ABS, EPS_SM, X_PREFIX, Character, CohProfile, FieldShape, abs_char, declare, eps_sm,
                         trivial, x_char)
from .errors import SchemaError
from .exactalg import DualNum, Mat, Poly
from .refinements import CrysModule
from .senlattice import SenLattice
from .trianguline import ModuleClass, Step, TriangModule, Triangulation

# ------------------------------------------------------------------ output


def jsonable(obj: Any) -> Any:
    """Convert library values to plain JSON data, keeping rationals exact."""
    if obj is None or isinstance(obj, (bool, str)):
        return obj
    if isinstance(obj, int):
        return obj
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, DualNum):
        return {"value": str(obj.value), "eps": str(obj.eps)}
    if isinstance(obj, Poly):
        return {"coeffs": [jsonable(c) for c in obj.coeffs], "text": str(obj)}
    if isinstance(obj, Mat):
        return [[jsonable(x) for x in row] for row in obj.rows]
    if isinstance(obj, Character):
        return character_json(obj)
    if isinstance(obj, CohProfile):
        return {"h0": obj.h0, "h1": obj.h1, "h2": obj.h2, "dims": list(obj.as_tuple()),
                "witness": jsonable(obj.witness)}
    if isinstance(obj, TriangModule):
        return module_json(obj)
    if isinstance(obj, Triangulation):
        shape = obj.params[0].shape
        return {"w": list(obj.w), "params": [character_json(d) for d in obj.params],
                "weights": {s: jsonable(obj.weights(s)) for s in shape.embeddings}}
    if isinstance(obj, Step):
        return {"i": obj.i, "sigma": obj.sigma, "k": obj.k}
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, Mapping):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (frozenset, set)):
        return sorted((jsonable(x) for x in obj), key=repr)
    if isinstance(obj, (list, tuple)):
        return [jsonable(x) for x in obj]
    if dataclasses.is_dataclass(obj):
        return {f.name: jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj) if f.compare}
    if isinstance(obj, float):
        raise TypeError("floats are not allowed in exact reports")
    return str(obj)


def character_json(chi: Character) -> dict:
    shape = chi.shape
    out = {"gens": {label: e for label, e in chi.exps},
           "weights": {s: jsonable(chi.weight(s)) for s in shape.embeddings},
           "uval": str(chi.uval),
           "text": str(chi)}
    decls = [{"label": g.label, "weights": {s: str(w) for s, w in zip(shape.embeddings, g.weights)},
              "uval": str(g.uval)} for g in chi.decls]
    if decls:
        out["declare"] = decls
    return out


def module_json(D: TriangModule) -> dict:
    return {"class": D.tag_label,
            "params": [character_json(d) for d in D.params],
            "weights": {s: jsonable(D.weights(s)) for s in D.shape.embeddings},
            "step_nonsplit": list(D.step_nonsplit),
            "graded_nonsplit": list(D.graded_nonsplit)}


# ------------------------------------------------------------------- input

_RAT = re.compile(r"^\s*[+-]?\d+(\s*/\s*[+-]?\d+)?\s*$")


def parse_rational(x, what: str = "value") -> Fraction:
    if isinstance(x, bool):
        raise SchemaError(f"{what}: expected a rational, got a boolean", datum=x)
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str) and _RAT.match(x):
        try:
            return Fraction(x.replace(" ", ""))
        except ZeroDivisionError:
            raise SchemaError(f"{what}: zero denominator", datum=x) from None
    raise SchemaError(f"{what}: expected an integer or a 'p/q' string", datum=x)


def parse_scalar(x, what: str = "entry"):
    """Rational, or a dual number given as {"value","eps"} or [value, eps]."""
    if isinstance(x, Mapping):
        if set(x) - {"value", "eps"} or "value" not in x:
            raise SchemaError(f"{what}: dual numbers need 'value' and optional 'eps'", datum=x)
        return DualNum(parse_rational(x["value"], what), parse_rational(x.get("eps", 0), what))
    if isinstance(x, list):
        if len(x) != 2:
            raise SchemaError(f"{what}: dual numbers as lists need two entries", datum=x)
        return DualNum(parse_rational(x[0], what), parse_rational(x[1], what))
    return parse_rational(x, what)


def parse_shape(spec: Mapping | None) -> FieldShape:
    if spec is None:
        return FieldShape.qp()
    try:
        return FieldShape(int(spec.get("e", 1)), int(spec.get("f", 1)), tuple(spec.get("embeddings", ["s0"])))
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"bad field description: {exc}", datum=spec) from None


def _decl_table(shape: FieldShape, decls) -> dict[str, Character]:
    out = {}
    for d in decls or []:
        label = d["label"]
        ws = d.get("weights")
        if ws is not None:
            if isinstance(ws, list):
                ws = dict(zip(shape.embeddings, ws))
            ws = {s: parse_rational(v, f"weight of {label}") for s, v in ws.items()}
        out[label] = declare(shape, label, ws, parse_rational(d.get("uval", 0), f"uval of {label}"))
    return out


def parse_character(spec, shape: FieldShape, decls: Mapping[str, Character] | None = None) -> Character:
    """Character literal {"gens": {label: exp}, "declare": [...], "weights": ..., "uval": ...}.

    Labels: ``x:<sigma>``, ``ABS``, ``EPS_SM`` (the cyclotomic character) and
    declared generators.  When ``gens`` is absent, ``weights`` and ``uval``
    declare an anonymous generator (label ``label`` or ``anon``); otherwise
    they are checked against the computed invariants.
    """
    if not isinstance(spec, Mapping):
        raise SchemaError("a character literal must be an object", datum=spec)
    table = dict(decls or {})
    table.update(_decl_table(shape, spec.get("declare")))
    if "gens" not in spec:
        if "weights" not in spec and "uval" not in spec:
            return trivial(shape)
        return next(iter(_decl_table(shape, [{"label": spec.get("label", "anon"), "weights": spec.get("weights"),
                                              "uval": spec.get("uval", 0)}]).values()))
    chi = trivial(shape)
    for label, e in spec["gens"].items():
        if isinstance(e, bool) or not isinstance(e, int):
            raise SchemaError(f"exponent of {label} must be an integer", datum=e)
        if label.startswith(X_PREFIX):
            base = x_char(shape, label[len(X_PREFIX):])
        elif label == ABS:
            base = abs_char(shape)
        elif label == EPS_SM:
            base = eps_sm(shape)
        elif label in table:
            base = table[label]
        else:
            raise SchemaError(f"undeclared generator {label!r}", datum=label)
        chi = chi * base ** e
    if "weights" in spec:
        ws = spec["weights"]
        ws = dict(zip(shape.embeddings, ws)) if isinstance(ws, list) else ws
        for s, v in ws.items():
            if chi.weight(s) != parse_rational(v):
                raise SchemaError(f"declared weight at {s} does not match the generators", datum=spec)
    if "uval" in spec and chi.uval != parse_rational(spec["uval"]):
        raise SchemaError("declared uval does not match the generators", datum=spec)
    return chi


_MIXED = re.compile(r"^Mixed\((\d+)\)$")


def parse_class(label: str) -> tuple[ModuleClass, int | None]:
    m = _MIXED.match(label or "")
    if m:
        return ModuleClass.MIXED, int(m.group(1))
    try:
        return ModuleClass(label), None
    except ValueError:
        raise SchemaError(f"unknown module class {label!r}", datum=label) from None


def parse_module(spec: Mapping, shape: FieldShape | None = None, decls=None) -> TriangModule:
    """{"field", "params", "step_nonsplit", "graded_nonsplit", "class"} or {"crys", "w"}."""
    if not isinstance(spec, Mapping):
        raise SchemaError("a module must be an object", datum=spec)
    shape = parse_shape(spec.get("field")) if "field" in spec or shape is None else shape
    if "crys" in spec:
        M = parse_crys(spec["crys"], shape)
        return M.triangulation(spec.get("w"))
    table = dict(decls or {})
    table.update(_decl_table(shape, spec.get("declare")))
    params = [parse_character(p, shape, table) for p in spec.get("params", [])]
    tag, m = parse_class(spec.get("class", ModuleClass.PLAIN.value))
    return TriangModule.make(params, tag, step=spec.get("step_nonsplit"), graded=spec.get("graded_nonsplit"),
                             mixed_m=m)


def parse_program(spec) -> list[Step]:
    if not isinstance(spec, list):
        raise SchemaError("a program must be a list of steps", datum=spec)
    out = []
    for st in spec:
        try:
            out.append(Step(int(st["i"]), str(st["sigma"]), int(st.get("k", 1))))
        except (KeyError, TypeError, ValueError):
            raise SchemaError("each step needs integer 'i', string 'sigma' and optional integer 'k'",
                              datum=st) from None
    return out


def parse_lattice(spec: Mapping) -> SenLattice:
    """{"n": 2, "theta": [["0","0"],["0","2"]], "ring": "rat"|"dual"}."""
    rows = [[parse_scalar(x) for x in row] for row in spec["theta"]]
    n = spec.get("n", len(rows))
    if len(rows) != n or any(len(r) != n for r in rows):
        raise SchemaError(f"theta must be an {n}x{n} matrix", datum=spec["theta"])
    ring = spec.get("ring", "dual" if any(isinstance(x, DualNum) for r in rows for x in r) else "rat")
    if ring == "rat" and any(isinstance(x, DualNum) for r in rows for x in r):
        raise SchemaError("dual entries in a rational lattice", datum=spec["theta"])
    if ring == "dual":
        rows = [[x if isinstance(x, DualNum) else DualNum(x, Fraction(0)) for x in r] for r in rows]
    return SenLattice(Mat(rows))


def parse_crys(spec: Mapping, shape: FieldShape | None = None) -> CrysModule:
    """{"phis": [{"label", "vp"}], "weights": {sigma: [...]}, "flag": {sigma: matrix}}."""
    shape = parse_shape(spec.get("field")) if "field" in spec or shape is None else shape
    phis = spec["phis"]
    labels = [p.get("label", f"phi{t + 1}") for t, p in enumerate(phis)]
    vps = [parse_rational(p.get("vp", 0), "vp") for p in phis]
    weights = spec["weights"]
    if isinstance(weights, list):
        weights = {shape.embeddings[0]: weights}
    flags = spec.get("flag")
    if isinstance(flags, list):
        flags = {shape.embeddings[0]: flags}
    flags = {s: Mat([[parse_rational(x, "flag entry") for x in row] for row in F]) for s, F in (flags or {}).items()}
    for s, h in weights.items():
        if any(isinstance(x, bool) or not isinstance(x, int) for x in h):
            raise SchemaError(f"crystabelline weights at {s} must be integers", datum=h)
    return CrysModule.build(shape, vps, weights, flags or None, labels)


def parse_psis(spec) -> list:
    from .deformations import DeformDirection
    return [DeformDirection(parse_rational(p.get("at_p", 0), "at_p"), parse_rational(p.get("wtd", 0), "wtd"))
            for p in spec]


def parse_weight_vector(spec, what: str = "weights") -> tuple[Fraction, ...]:
    if not isinstance(spec, list):
        raise SchemaError(f"{what} must be a list", datum=spec)
    return tuple(parse_rational(x, what) for x in spec)
