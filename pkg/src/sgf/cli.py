"""Command-line front end.

    sgf COMMAND [--rank K] [--subgroup NAME=w1,w2 ...] [--epsilon p/q] [--target N]
                [--avoid WORD] [--seed N] [--out PATH] [--format json|dot] [--spec FILE]

Exit codes: 0 success, 1 invalid input, 2 construction failure
(machine-readable reason on stderr), 3 verification failure.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from fractions import Fraction
from pathlib import Path

from . import constructions as cons
from .errors import (
    AlreadySmaller,
    AvoidInSubgroup,
    InfiniteIndexError,
    InvalidInput,
    SGFError,
)
from .graph import INFINITE, StallingsGraph, complete, from_generators, intersect, join
from .quotient import MeasureBound, coset_action, measure_product_bound, measure_subgroup, subgroup_spec
from .words import Word

COMMANDS = (
    "info", "intersect", "join", "complete", "measure", "measure-product", "olshanskii",
    "lemma", "product-witness", "base", "kernel-check", "verify", "dot",
)

EXIT_INVALID = 1
EXIT_CONSTRUCTION = 2
EXIT_VERIFY = 3

_FRACTION = re.compile(r"^\s*(\d+)\s*(?:/\s*(\d+))?\s*$")


class _Invalid(InvalidInput):
    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field

    def to_json(self) -> dict:
        return {"code": self.code, "field": self.field, "message": str(self)}


def parse_epsilon(text: str) -> Fraction:
    """Exact fraction "p/q" (or an integer); decimals are rejected."""
    m = _FRACTION.match(str(text))
    if not m:
        raise _Invalid("epsilon", f"expected an exact fraction p/q, got {text!r}")
    num, den = int(m.group(1)), int(m.group(2) or 1)
    if den == 0:
        raise _Invalid("epsilon", "zero denominator")
    eps = Fraction(num, den)
    if not 0 < eps <= 1:
        raise _Invalid("epsilon", f"must lie in (0, 1], got {eps}")
    return eps


def emit_dot(H: StallingsGraph, name: str = "H") -> str:
    """Deterministic DOT text; equal subgroups give identical bytes."""
    return H.to_dot(name)


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"


# --------------------------------------------------------------------------
# task assembly


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sgf", description="Subgroups of free groups: graphs, quotients, certificates.")
    p.add_argument("command", nargs="?", choices=COMMANDS)
    p.add_argument("files", nargs="*", help="certificate files for verify")
    p.add_argument("--spec", help="JSON task spec (flags override its fields)")
    p.add_argument("--rank", type=int)
    p.add_argument("--subgroup", action="append", default=[], metavar="NAME=w1,w2")
    p.add_argument("--epsilon")
    p.add_argument("--target", type=int)
    p.add_argument("--avoid")
    p.add_argument("--seed", type=int)
    p.add_argument("--radius", type=int)
    p.add_argument("--conjugators", help="count, or comma-separated conjugating words")
    p.add_argument("--out")
    p.add_argument("--format", choices=("json", "dot"))
    return p


def _load_task(args: argparse.Namespace) -> dict:
    task: dict = {"subgroups": {}, "parameters": {}}
    if args.spec:
        try:
            data = json.loads(Path(args.spec).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise _Invalid("spec", f"cannot read {args.spec}: {exc}") from exc
        if not isinstance(data, dict):
            raise _Invalid("spec", "top level must be an object")
        task.update({k: v for k, v in data.items() if k not in ("subgroups", "parameters")})
        subs = data.get("subgroups", {})
        if not isinstance(subs, dict):
            raise _Invalid("subgroups", "must map names to generator lists")
        task["subgroups"] = dict(subs)
        task["parameters"] = dict(data.get("parameters", {}))
    if args.command:
        task["command"] = args.command
    if args.rank is not None:
        task["rank"] = args.rank
    for item in args.subgroup:
        name, sep, words = item.partition("=")
        if not sep or not name:
            raise _Invalid("subgroup", f"expected NAME=w1,w2,..., got {item!r}")
        task["subgroups"][name] = [w for w in words.split(",") if w != ""]
    params = task["parameters"]
    for key in ("epsilon", "target", "avoid", "seed", "radius", "conjugators", "format"):
        value = getattr(args, key)
        if value is not None:
            params[key] = value
    if args.out:
        task["output_path"] = args.out
    if args.files:
        task["files"] = list(args.files)
    return task


def _validate(task: dict) -> None:
    cmd = task.get("command")
    if cmd not in COMMANDS:
        raise _Invalid("command", f"expected one of {', '.join(COMMANDS)}")
    if cmd == "verify":
        if not task.get("files"):
            raise _Invalid("files", "verify needs a certificate file")
        return
    rank = task.get("rank")
    if not isinstance(rank, int) or not 2 <= rank <= 26:
        raise _Invalid("rank", "an integer between 2 and 26 is required")
    need = {
        "intersect": 2, "join": 2, "olshanskii": 2, "lemma": 2,
        "info": 1, "complete": 1, "measure": 1, "measure-product": 1, "product-witness": 1,
        "base": 1, "kernel-check": 1, "dot": 1,
    }[cmd]
    if len(task["subgroups"]) < need:
        raise _Invalid("subgroups", f"{cmd} needs at least {need} subgroup(s)")
    params = task["parameters"]
    if cmd == "complete" and "target" not in params:
        raise _Invalid("target", "complete needs --target")
    if cmd == "measure-product" and "epsilon" not in params:
        raise _Invalid("epsilon", "measure-product needs --epsilon p/q")
    if "epsilon" in params:
        parse_epsilon(params["epsilon"])
    for key in ("target", "seed", "radius"):
        if key in params and not isinstance(params[key], int):
            raise _Invalid(key, "must be an integer")
    if "target" in params and params["target"] < 1:
        raise _Invalid("target", "must be >= 1")


def _subgroups(task: dict) -> list[tuple[str, StallingsGraph]]:
    k = task["rank"]
    out = []
    for name, gens in task["subgroups"].items():
        if not isinstance(gens, list):
            raise _Invalid(f"subgroups.{name}", "must be a list of words")
        try:
            out.append((name, from_generators([Word.parse(str(g), k) for g in gens], k)))
        except InvalidInput as exc:
            raise _Invalid(f"subgroups.{name}", str(exc)) from exc
    return out


def _graph_record(name: str, H: StallingsGraph) -> dict:
    idx = H.index
    return {
        "name": name,
        "rank": H.k,
        "generators": [str(w) for w in H.basis],
        "subgroup_rank": H.rank,
        "index": "infinite" if idx == INFINITE else idx,
        "deficiency_witness": list(H.deficiency()) if H.deficiency() else None,
        "graph": H.to_json(),
    }


# --------------------------------------------------------------------------
# commands


def _run(task: dict):
    """Returns (payload, exit_code); payload is a dict (JSON) or str (DOT)."""
    cmd = task["command"]
    if cmd == "verify":
        return _verify(task["files"])
    params = task["parameters"]
    seed = params.get("seed", 0)
    fmt = params.get("format", "json")
    named = _subgroups(task)
    Hs = [H for _, H in named]
    k = task["rank"]

    def graph_out(name: str, H: StallingsGraph):
        if fmt == "dot":
            return emit_dot(H, name.replace("-", "_") or "H")
        return {"schema": 1, "kind": "subgroup", **_graph_record(name, H)}

    if cmd == "dot":
        name, H = named[0]
        return emit_dot(H, name), 0
    if cmd == "info":
        if fmt == "dot":
            return "".join(emit_dot(H, n) for n, H in named), 0
        return {"schema": 1, "kind": "info", "subgroups": [_graph_record(n, H) for n, H in named]}, 0
    if cmd == "intersect":
        (na, A), (nb, B) = named[:2]
        return graph_out(f"{na}_cap_{nb}", intersect(A, B)), 0
    if cmd == "join":
        (na, A), (nb, B) = named[:2]
        return graph_out(f"{na}_join_{nb}", join(A, B)), 0
    if cmd == "complete":
        name, H = named[0]
        avoid = Word.parse(params["avoid"], k) if "avoid" in params else None
        U = complete(H, params["target"], avoid=avoid, seed=seed)
        if fmt == "dot":
            return emit_dot(U, f"{name}_cover"), 0
        rec = _graph_record(f"{name}_cover", U)
        return {"schema": 1, "kind": "cover", "seed": seed, "subgroup": subgroup_spec(H, name), **rec,
                "quotient": coset_action(U).to_json()}, 0
    if cmd == "measure":
        name, H = named[0]
        res = measure_subgroup(H, params.get("target", 1), seed=seed)
        if isinstance(res, MeasureBound):
            return res.to_json(), 0
        return {"schema": 1, "kind": "measure", "subgroup": subgroup_spec(H, name),
                "measure": {"num": res.numerator, "den": res.denominator}}, 0
    if cmd == "measure-product":
        return measure_product_bound(Hs, parse_epsilon(params["epsilon"]), seed=seed).to_json(), 0
    if cmd == "olshanskii":
        return cons.olshanskii(Hs[0], Hs[1], seed=seed).to_json(), 0
    if cmd == "lemma":
        res = cons.lemma_weak_ol(Hs[0], Hs[1], seed=seed)
        payload = {
            "schema": 1, "kind": "lemma", "rank": k, "seed": seed,
            "A": subgroup_spec(Hs[0], named[0][0]), "B": subgroup_spec(Hs[1], named[1][0]),
            "values": res.values,
            "A0": [str(w) for w in res.A0.basis], "B0": [str(w) for w in res.B0.basis],
            "C": {"generators": [str(w) for w in res.C.basis], "graph": res.C.to_json()},
            "left_transversal": [str(w) for w in res.left_transversal],
            "right_transversal": [str(w) for w in res.right_transversal],
            "report": res.report, "ok": res.ok,
        }
        return payload, 0 if res.ok else EXIT_VERIFY
    if cmd == "product-witness":
        return cons.product_witness(Hs, seed=seed).to_json(), 0
    if cmd == "base":
        return cons.bounded_base(Hs, seed=seed).to_json(), 0
    if cmd == "kernel-check":
        conj = params.get("conjugators", 4)
        if isinstance(conj, str):
            conj = int(conj) if conj.isdigit() else [Word.parse(w, k) for w in conj.split(",") if w]
        elif isinstance(conj, list):
            conj = [Word.parse(str(w), k) for w in conj]
        report = cons.kernel_ball_check(Hs[0], params.get("radius", 3), conj, seed=seed)
        return report, 0 if report["ok"] else EXIT_VERIFY
    raise _Invalid("command", cmd)


_VERIFIERS = {
    "olshanskii": lambda d: cons.verify_olshanskii(cons.OlshanskiiCertificate.from_json(d)),
    "measure-bound": lambda d: MeasureBound.from_json(d).verify(),
    "product-witness": lambda d: cons.ProductWitness.from_json(d).verify(),
    "base": lambda d: cons.BaseRecord.from_json(d).verify(),
}


def _verify(files: list[str]):
    results = []
    all_ok = True
    for f in files:
        try:
            data = json.loads(Path(f).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise _Invalid("files", f"cannot read {f}: {exc}") from exc
        if not isinstance(data, dict) or data.get("schema") != 1:
            raise _Invalid("schema", f"{f}: expected schema 1")
        kind = data.get("kind")
        if kind not in _VERIFIERS:
            raise _Invalid("kind", f"{f}: cannot verify artifacts of kind {kind!r}")
        ok, report = _VERIFIERS[kind](data)
        failed = [c["check"] for c in report if not c["ok"]]
        results.append({"file": f, "kind": kind, "ok": ok, "failed": failed, "report": report})
        all_ok &= ok
    return {"schema": 1, "kind": "verification", "ok": all_ok, "results": results}, 0 if all_ok else EXIT_VERIFY


def _emit(payload, path: str | None) -> None:
    text = payload if isinstance(payload, str) else dumps(payload)
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        task = _load_task(args)
        _validate(task)
        payload, code = _run(task)
    except (InvalidInput, AvoidInSubgroup, AlreadySmaller, InfiniteIndexError) as exc:
        sys.stderr.write(dumps({"error": exc.to_json()}))
        return EXIT_INVALID
    except SGFError as exc:
        sys.stderr.write(dumps({"error": exc.to_json()}))
        return EXIT_CONSTRUCTION
    _emit(payload, task.get("output_path"))
    if code == EXIT_VERIFY and isinstance(payload, dict):
        failed = [f for r in payload.get("results", []) for f in r.get("failed", [])]
        failed += [c["check"] for c in payload.get("report", []) if not c["ok"]]
        failed += [f"surviving word {w}" for w in payload.get("survivors", [])]
        sys.stderr.write(dumps({"error": {"code": "VERIFICATION_FAILED", "failed": failed}}))
    return code


if __name__ == "__main__":
    sys.exit(main())
