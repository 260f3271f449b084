"""Command-line front end: validate a JSON request, dispatch, emit a report.

Usage:
    chweights classify --input char.json
    echo '{"lattice": {...}, "I": [2]}' | chweights modify-lattice --format text
    chweights verify --suite all --seed 0

Every command prints a report {"schema_version", "status", "command",
"result", "provenance", "error"} in JSON (default) or as a short text
summary.  Exit codes: 0 ok, 2 malformed input, 3 gate violation, 4 suite
failure.
"""

from __future__ import annotations

import argparse
import itertools
import json
import sys
from functools import lru_cache
from importlib import resources
from typing import Any, Callable

import jsonschema

from . import deformations as dfm
from . import suites
from .characters import FieldShape, classify_rank1, tuple_regularity
from .errors import ChweightsError, GateViolation, NotComaximal, SchemaError
from .exactalg import DualNum, Poly
from .refinements import adjacent_swap, critical_split_witness, flag_jumps, noncritical_check, stable_partitions
from .senlattice import (brute_force_modifications, canonical_span, modify_down, modify_round_trip, modify_up,
                         round_trip_guaranteed, split_sen_poly)
from .serial import (_decl_table, character_json, jsonable, module_json, parse_character, parse_crys,
                     parse_lattice, parse_module, parse_program, parse_psis, parse_rational, parse_scalar,
                     parse_shape, parse_weight_vector)
from .slopes import brute_force_etale, etale_crys, etale_pullback_vgen, etale_vgen, twist_to_etale
from .trianguline import (ModuleClass, Step, TriangModule, apply_program, enumerate_triangulations,
                          invertibility_gate, program_data, wall_program_violations, wall_violations)

SCHEMA_VERSION = "1.0.0"
COMMANDS = ("classify", "pullback", "walls", "etale", "modify-lattice", "refinements", "deform", "translate",
            "verify")

EXIT_OK, EXIT_INPUT, EXIT_GATE, EXIT_SUITE = 0, 2, 3, 4


class SuiteFailure(Exception):
    def __init__(self, summary: dict):
        super().__init__("verification suite failed")
        self.summary = summary


# ----------------------------------------------------------------- schemas


def _read_schema(name: str) -> dict:
    return json.loads(resources.files("chweights").joinpath("schemas", name).read_text())


@lru_cache(maxsize=None)
def load_schema(command: str) -> dict:
    """Per-command schema with the shared definitions merged in."""
    schema = _read_schema(f"{command}.schema.json")
    defs = dict(_read_schema("common.schema.json")["$defs"])
    defs.update(schema.get("$defs", {}))
    schema["$defs"] = defs
    return schema


def validate_payload(command: str, payload: Any) -> None:
    validator = jsonschema.Draft202012Validator(load_schema(command))
    errors = sorted(validator.iter_errors(payload), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        raise SchemaError(f"payload does not match the {command} schema: {err.message}",
                          datum={"path": list(err.absolute_path), "validator": err.validator})


def validate_report(report: dict) -> None:
    jsonschema.Draft202012Validator(_read_schema("report.schema.json")).validate(report)


# ----------------------------------------------------------------- helpers


def _shape_and_decls(p: dict):
    shape = parse_shape(p.get("field"))
    return shape, _decl_table(shape, p.get("declare"))


def _modules(p: dict, shape, decls) -> list[TriangModule]:
    specs = p["modules"] if "modules" in p else [p["module"]]
    return [parse_module(m, shape, decls) for m in specs]


def _program_of(p: dict) -> list[Step]:
    if "program" in p:
        return parse_program(p["program"])
    return [Step(int(p["i"]), str(p["sigma"]), int(p.get("k", 1)))]


def _weights_table(p: dict) -> dict:
    return {s: parse_weight_vector(v, f"weights at {s}") for s, v in p["weights"].items()}


# ----------------------------------------------------------------- commands


def cmd_classify(p: dict, seed: int):
    shape, decls = _shape_and_decls(p)
    prov = ["rank-one cohomology dimensions"]
    if "character" in p:
        chi = parse_character(p["character"], shape, decls)
        return {"character": character_json(chi), **jsonable(classify_rank1(chi))}, prov
    chars = [parse_character(c, shape, decls) for c in p["characters"]]
    reg = tuple_regularity(chars)
    prov.append("regularity loci T_reg, T_wreg, T_circ")
    return {"characters": [{"character": character_json(c), **jsonable(classify_rank1(c))} for c in chars],
            "regularity": jsonable(reg)}, prov


def cmd_pullback(p: dict, seed: int):
    shape, decls = _shape_and_decls(p)
    modules = _modules(p, shape, decls)
    prog = _program_of(p)
    mode = p.get("mode", "plain")
    inverse = bool(p.get("inverse", False))
    prov = ["pullback weight-shift rule", "push-pull identity p = t^k iota"]
    if mode == "strict":
        prov.append("invertibility gate for p_k")
    if mode == "substack":
        prov.append("wall condition of the weight-uniform substack")
    if p.get("triangulations"):
        prov.append("classification of triangulations")
        expanded = []
        for D in modules:
            expanded += [TriangModule.make(t.params, step=D.step_nonsplit, graded=D.graded_nonsplit)
                         for t in enumerate_triangulations(D)]
        modules = expanded
    reports = []
    for D in modules:
        gates, cur = [], D
        for st in prog:
            g = invertibility_gate(cur, st.i, {st.sigma: st.k})
            gates.append({"step": jsonable(st), "ok": g.ok, "violations": jsonable(g.violations)})
            cur = apply_program(cur, [st], inverse=inverse)
        after = apply_program(D, prog, mode=mode, inverse=inverse)
        reports.append({"before": module_json(D), "after": module_json(after),
                        "weights_before": jsonable(D.weight_table()),
                        "weights_after": jsonable(after.weight_table()),
                        "gates": gates})
    return {"program": jsonable(prog), "reports": reports}, prov


def cmd_walls(p: dict, seed: int):
    if "module" in p:
        shape, decls = _shape_and_decls(p)
        D = parse_module(p["module"], shape, decls)
        weights, shape = D.weight_table(), D.shape
    else:
        weights = _weights_table(p)
        shape = FieldShape(1, len(weights), tuple(weights))
    if "program" in p:
        prog = parse_program(p["program"])
        I, k = program_data(prog, shape)
        viol = wall_program_violations(weights, list(I), I, k, bool(p.get("negative", False)))
        return {"member": not viol, "I": I, "k": jsonable(k), "violations": jsonable(viol)}, \
            ["wall condition of the weight-uniform substack"]
    interval = tuple(int(x) for x in p["interval"])
    viol = wall_violations(weights, shape.check(p["sigma"]), int(p["i"]), interval)
    return {"member": not viol, "violations": jsonable(viol)}, ["wall condition for a single shift"]


def cmd_etale(p: dict, seed: int):
    shape, decls = _shape_and_decls(p)
    if "crys" in p:
        M = parse_crys(p["crys"], shape)
        rep = etale_crys(M)
        out = {"criterion": jsonable(rep), "verdict": rep.verdict, "all_noncritical": M.all_noncritical()}
        prov = ["etaleness criterion for crystabelline modules"]
        if p.get("brute_force", True) and M.n <= 6:
            bf = brute_force_etale(M)
            out["brute_force"] = jsonable(bf)
            out["agree"] = bf.verdict == rep.verdict
            prov.append("brute-force slope search over refinements")
        if "program" in p:
            out["twist_uval"] = jsonable(twist_to_etale(M, parse_program(p["program"])))
            prov.append("unramified twist after pullback")
        return out, prov
    D = parse_module(p["module"], shape, decls)
    rep = etale_vgen(D)
    out = {"criterion": jsonable(rep), "verdict": rep.verdict}
    prov = ["etaleness criterion for very generic modules"]
    if "pullback" in p:
        pe = etale_pullback_vgen(D, int(p["pullback"]["j"]), p["pullback"]["sigma"])
        out["pullback"] = jsonable(pe)
        prov.append("etaleness after a single pullback")
    if "program" in p:
        out["twist_uval"] = jsonable(twist_to_etale(D, parse_program(p["program"])))
        prov.append("unramified twist after pullback")
    return out, prov


def cmd_modify_lattice(p: dict, seed: int):
    L = parse_lattice(p["lattice"])
    roots = [parse_scalar(r, "root") for r in p["roots"]] if "roots" in p else None
    if roots is not None and L.ring == "dual":
        roots = [r if isinstance(r, DualNum) else DualNum(r, 0) for r in roots]
    F = split_sen_poly(L, p["I"], roots)
    direction = p.get("direction", "down")
    ok, reasons = round_trip_guaranteed(F)
    prov = ["coprime factorization of the Sen polynomial", "Sen-lattice modification"]
    out = {"Q": jsonable(F.Q), "S": jsonable(F.S), "A": jsonable(F.A), "B": jsonable(F.B),
           "round_trip": {"guaranteed": ok, "reasons": reasons}}
    if direction == "round-trip":
        back = modify_round_trip(L, F)
        out.update(theta=jsonable(back.theta), identity=back.theta == L.theta)
        return out, prov + ["inverse modification"]
    mod = (modify_down if direction == "down" else modify_up)(L, F)
    shift = -1 if direction == "down" else 1
    expected = F.Q.shift(shift) * F.S
    out.update(W=jsonable(mod.W), theta=jsonable(mod.lattice.theta), charpoly=jsonable(mod.lattice.charpoly()),
               expected_charpoly=jsonable(expected), matches=mod.lattice.charpoly() == expected)
    if p.get("oracle") and direction == "down":
        if L.ring != "rat":
            raise SchemaError("the enumeration oracle needs a rational lattice", datum="ring")
        orc = brute_force_modifications(L, expected)
        out["oracle"] = {"subspaces": jsonable(orc.subspaces), "exhaustive": orc.exhaustive,
                         "unique_and_equal": orc.subspaces == (canonical_span(mod.W),)}
        prov.append("brute-force stable-subspace enumeration")
    return out, prov


def cmd_refinements(p: dict, seed: int):
    M = parse_crys(p["crys"])
    if M.n > 6 and "w" not in p:
        raise SchemaError("listing every refinement is limited to n <= 6; pass 'w'", datum=M.n)
    ws = [tuple(p["w"])] if "w" in p else list(itertools.permutations(range(1, M.n + 1)))
    rows = []
    for w in ws:
        row = {"w": list(w), "jumps": {}, "induced_weights": jsonable(M.induced_weights(w)),
               "noncritical": noncritical_check(M, w), "params": jsonable(M.refinement_params(w)),
               "swap": {}, "critical_witness": {}}
        for s in M.shape.embeddings:
            row["jumps"][s] = list(flag_jumps(w, M.flags[s], M.jumps(s)))
            row["swap"][s] = adjacent_swap(w, M.flags[s], M.jumps(s))
            wit = critical_split_witness(M, w, s)
            row["critical_witness"][s] = None if wit is None else {"i": wit[0], "w_prime": list(wit[1])}
        rows.append(row)
    out = {"n": M.n, "count": len(rows), "all_noncritical": M.all_noncritical(),
           "stable_partitions": jsonable(stable_partitions(M.n)), "refinements": rows}
    return out, ["genericity of smooth characters", "refinements of crystabelline modules",
                 "non-criticality via Hodge flag jumps", "adjacent-swap rearrangement"]


def cmd_deform(p: dict, seed: int):
    out, prov = {}, []
    if "module" in p:
        D = parse_module(p["module"])
        w = tuple(p.get("w", range(1, D.n + 1)))
        c = dfm.ExtClassModel(D, w, tuple(parse_psis(p["psis"])))
        out.update(kappa=jsonable(dfm.kappa_vector(c)), sen_poly=jsonable(dfm.sen_poly_deform(c)))
        prov += ["kappa coordinates of extension classes", "deformed Sen polynomial"]
        if "add" in p:
            c2 = dfm.ExtClassModel(D, w, tuple(parse_psis(p["add"])))
            s = dfm.baer_sum(c, c2)
            out["baer_sum"] = {"kappa": jsonable(dfm.kappa_vector(s)), "sen_poly": jsonable(dfm.sen_poly_deform(s))}
            prov.append("Baer sum")
        if "program" in p:
            pulled = dfm.pullback_ext(c, parse_program(p["program"]))
            out["pullback"] = {"base": module_json(pulled.base), "kappa": jsonable(dfm.kappa_vector(pulled)),
                               "sen_poly": jsonable(dfm.sen_poly_deform(pulled))}
            prov.append("pullback of extension classes")
    if "universal" in p:
        U = dfm.universal_extension([parse_weight_vector(v, "basis vector") for v in p["universal"]["basis"]])
        evals = [parse_weight_vector(v, "vector") for v in p["universal"].get("evaluate", [])]
        out["universal"] = {"dim": U.dim, "basis": jsonable(U.basis),
                            "pullbacks": [{"e": jsonable(e), "coordinates": jsonable(U.coordinates(e)),
                                           "class": jsonable(U.pullback(e))} for e in evals]}
        prov.append("universal extension over a subspace")
    return out, prov


def cmd_translate(p: dict, seed: int):
    prov = ["translation admissibility"]
    if "lambda" in p:
        lam, lam2 = parse_weight_vector(p["lambda"]), parse_weight_vector(p["lambda_prime"])
        adm = dfm.translation_admissible(lam, lam2)
        return {"admissible": adm.ok, "reasons": list(adm.reasons)}, prov
    prog = parse_program(p["program"])
    if "module" in p:
        D = parse_module(p["module"])
        rep = dfm.intertwine_check(D, prog, samples=int(p.get("samples", 3)), seed=seed)
        return jsonable(rep), prov + ["translation weight difference", "intertwining of translation and pullback"]
    h = parse_weight_vector(p["h"], "h")
    k = dfm.program_multiplicities(prog, len(h))
    diff = dfm.translation_diff(k)
    h2 = tuple(x + d for x, d in zip(h, reversed(diff)))
    lam, lam2 = dfm.lambda_from_h(h), dfm.lambda_from_h(h2)
    adm = dfm.translation_admissible(lam, lam2)
    return {"k": list(k), "translation_diff": list(diff), "h": jsonable(h), "h_prime": jsonable(h2),
            "lambda": jsonable(lam), "lambda_prime": jsonable(lam2), "admissible": adm.ok,
            "reasons": list(adm.reasons)}, prov + ["translation weight difference"]


def cmd_verify(p: dict, seed: int):
    summary = suites.verify_suites(seed, p.get("suites") or None)
    if not summary["passed"]:
        raise SuiteFailure(summary)
    return summary, ["verification suites against brute-force oracles"]


HANDLERS: dict[str, Callable] = {
    "classify": cmd_classify,
    "pullback": cmd_pullback,
    "walls": cmd_walls,
    "etale": cmd_etale,
    "modify-lattice": cmd_modify_lattice,
    "refinements": cmd_refinements,
    "deform": cmd_deform,
    "translate": cmd_translate,
    "verify": cmd_verify,
}


# ------------------------------------------------------------------ driver


def _error(command: str, code: str, message: str, datum=None, provenance=None, result=None) -> dict:
    rep = {"schema_version": SCHEMA_VERSION, "status": "error", "command": command,
           "provenance": provenance or [],
           "error": {"code": code, "message": message, "datum": jsonable(datum)}}
    if result is not None:
        rep["result"] = result
    return rep


def run(command: str, payload: Any, seed: int = 0) -> tuple[dict, int]:
    """Validate and dispatch one request; return (report, exit code)."""
    if command not in HANDLERS:
        return _error(command, "schema", f"unknown command {command!r}"), EXIT_INPUT
    try:
        validate_payload(command, payload)
        result, prov = HANDLERS[command](payload, seed)
    except SuiteFailure as exc:
        failed = [s for s in exc.summary["suites"] if not s["passed"]]
        return _error(command, "suite_failure", f"{len(failed)} suite(s) failed",
                      [{"suite": s["name"], "counterexample": s["counterexample"]} for s in failed],
                      ["verification suites against brute-force oracles"], exc.summary), EXIT_SUITE
    except (GateViolation, NotComaximal) as exc:
        return _error(command, exc.code, str(exc), exc.datum), EXIT_GATE
    except ChweightsError as exc:
        return _error(command, exc.code, str(exc), exc.datum), EXIT_INPUT
    except (KeyError, ValueError, TypeError, ZeroDivisionError) as exc:
        return _error(command, "input", str(exc).strip("'\"")), EXIT_INPUT
    report = {"schema_version": SCHEMA_VERSION, "status": "ok", "command": command,
              "result": result, "provenance": prov}
    return report, EXIT_OK


def dumps(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True)


def _text_lines(value, indent: int = 0) -> list[str]:
    pad = "  " * indent
    if isinstance(value, dict):
        out = []
        for k, v in value.items():
            if isinstance(v, (dict, list)) and v and not _is_flat(v):
                out.append(f"{pad}{k}:")
                out += _text_lines(v, indent + 1)
            else:
                out.append(f"{pad}{k}: {_flat(v)}")
        return out
    if isinstance(value, list):
        out = []
        for v in value:
            if isinstance(v, (dict, list)) and not _is_flat(v):
                out.append(f"{pad}-")
                out += _text_lines(v, indent + 1)
            else:
                out.append(f"{pad}- {_flat(v)}")
        return out
    return [f"{pad}{_flat(value)}"]


def _is_flat(v) -> bool:
    if isinstance(v, dict):
        return "text" in v or set(v) == {"value", "eps"}
    return all(not isinstance(x, (dict, list)) or _is_flat(x) for x in v)


def _flat(v) -> str:
    if isinstance(v, dict):
        if "text" in v:
            return v["text"]
        if set(v) == {"value", "eps"}:
            return f"{v['value']} + {v['eps']}e"
        return json.dumps(v, sort_keys=True)
    if isinstance(v, list):
        return "(" + ", ".join(_flat(x) for x in v) + ")"
    if v is None:
        return "-"
    return str(v)


def render_text(report: dict) -> str:
    lines = [f"{report['command']}: {report['status']}"]
    if report["status"] == "error":
        err = report["error"]
        lines.append(f"error [{err['code']}]: {err['message']}")
        if err.get("datum") is not None:
            lines.append(f"datum: {_flat(err['datum'])}")
    if "result" in report:
        lines += _text_lines(report["result"], 1)
    if report["provenance"]:
        lines.append("provenance: " + "; ".join(report["provenance"]))
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chweights",
                                     description="Exact weight bookkeeping for trianguline (phi, Gamma)-modules.")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "classify": "cohomology dimensions of rank-one characters and regularity of tuples",
        "pullback": "apply p_{i,sigma}^k or a program to modules",
        "walls": "wall membership for a shift or a program",
        "etale": "etaleness criteria and twists after pullback",
        "modify-lattice": "Sen-lattice modification along a coprime split",
        "refinements": "refinements, flag jumps and criticality of crystabelline data",
        "deform": "kappa coordinates, Baer sums and pullbacks of extension classes",
        "translate": "translation weights, admissibility and the intertwining check",
        "verify": "run the verification suites",
    }
    for name in COMMANDS:
        sp = sub.add_parser(name, help=helps[name])
        sp.add_argument("--input", "-i", help="JSON request file (default: stdin)")
        sp.add_argument("--format", choices=("json", "text"), default="json", help="output format (default json)")
        sp.add_argument("--seed", type=int, default=0, help="seed for randomized checks (default 0)")
        if name == "verify":
            sp.add_argument("--suite", action="append", choices=["all", *suites.SUITES],
                            help="suite to run; repeatable (default all)")
    return parser


def _read_payload(args) -> Any:
    if args.input:
        with open(args.input, encoding="utf-8") as fh:
            text = fh.read()
    elif args.command == "verify":
        return {}
    else:
        text = sys.stdin.read()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}", datum={"line": exc.lineno, "column": exc.colno}) from None


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        payload = _read_payload(args)
    except (SchemaError, OSError) as exc:
        report, code = _error(args.command, "schema", str(exc), getattr(exc, "datum", None)), EXIT_INPUT
    else:
        if args.command == "verify" and args.suite and "all" not in args.suite:
            payload = {**payload, "suites": args.suite}
        report, code = run(args.command, payload, args.seed)
    print(dumps(report) if args.format == "json" else render_text(report))
    return code


if __name__ == "__main__":
    raise SystemExit(main())
