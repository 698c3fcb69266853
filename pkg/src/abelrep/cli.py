"""Batch command-line front end: JSON in, JSON out.

Every command reads one JSON document (``-i FILE`` or stdin) and writes one
JSON document ``{"status", "command", "payload"}`` (``-o FILE`` or stdout).
Integers of magnitude ``>= 2**53`` are written as decimal strings. Timing and
progress go to stderr only, so stdout is byte-identical across runs.

Exit codes: 0 ok, 2 precondition failed, 3 cap exceeded, 64 usage,
65 invalid input.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass
from typing import Any, Callable

from . import __version__
from .applications import (
    build_corner_system,
    build_homothetic_system,
    count_corners,
    homothetic_checks,
    random_subset,
)
from .errors import DEFAULT_CAP, CapExceededError, InvalidInputError, PreconditionError
from .groups import FiniteAbelianGroup
from .homsystem import HomSystem, enumerate_solutions, project_solutions
from .hypergraph import (
    build_K_from_circular,
    certificate_from_json,
    greedy_edge_cover,
    removal_deletion,
    restrict_to_domains,
    verify_rp_properties,
)
from .intmatrix import IntMatrix, determinantal_divisor, smith_normal_form
from .perms import Permutation, census, copies_match_occurrences, greedy_pair_deletion, occurrences
from .pipeline import reverify_trace, run_full_pipeline

EXIT = {"ok": 0, "precondition-failed": 2, "cap-exceeded": 3, "usage": 64, "invalid-input": 65}
BIG = 2**53


class UsageError(Exception):
    pass


@dataclass
class CommandResult:
    status: str
    payload: Any
    timing: float
    command: str | None = None
    output: str | None = None

    @property
    def exit_code(self) -> int:
        return EXIT[self.status]


def _bigints(x):
    if isinstance(x, bool) or x is None:
        return x
    if isinstance(x, int):
        return x if abs(x) < BIG else str(x)
    if isinstance(x, dict):
        return {str(k): _bigints(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_bigints(v) for v in x]
    return x


# ---------------------------------------------------------------------- input helpers


def _group(doc) -> FiniteAbelianGroup:
    if isinstance(doc, list):
        return FiniteAbelianGroup(tuple(int(n) for n in doc))
    return FiniteAbelianGroup.from_json(doc)


def _system(doc: dict) -> HomSystem:
    """Full block form ``{"matrix", "group", "rhs"}`` or scalar ``{"coeffs", "group", "rhs"}``."""
    if not isinstance(doc, dict) or "group" not in doc:
        raise InvalidInputError("a system needs a 'group'")
    if "coeffs" in doc:
        G = _group(doc["group"])
        rhs = [G.element(r if isinstance(r, list) else [r]) for r in doc.get("rhs") or []]
        return HomSystem.scalar(IntMatrix.from_json(doc["coeffs"]), G, rhs or None)
    doc = dict(doc)
    if isinstance(doc["group"], list):
        doc["group"] = {"orders": doc["group"]}
    return HomSystem.from_json(doc)


def _domains(X):
    if X is None:
        return None
    return [None if x is None else [tuple(v) if isinstance(v, list) else (v,) for v in x] for x in X]


# ---------------------------------------------------------------------- commands


def cmd_snf(doc, args) -> dict:
    A = IntMatrix.from_json(doc["matrix"] if isinstance(doc, dict) else doc)
    snf = smith_normal_form(A)
    return snf.to_json() | {"unimodular_check": (snf.U @ A @ snf.V) == snf.S}


def cmd_dets(doc, args) -> dict:
    A = IntMatrix.from_json(doc["matrix"] if isinstance(doc, dict) else doc)
    r = min(A.shape)
    return {"determinantal": [determinantal_divisor(A, i) for i in range(1, r + 1)], "diag": list(smith_normal_form(A).diag)}


def cmd_solve(doc, args) -> dict:
    sys_ = _system(doc)
    sol = enumerate_solutions(sys_, X=_domains(doc.get("X")), cap=args.cap)
    out = {"count": sol.count, "m": sys_.m, "group": list(sys_.group.orders)}
    if args.list:
        out["solutions"] = [[list(v) for v in s] for s in sol.tuples()]
    return out


def cmd_project(doc, args) -> dict:
    sys_ = _system(doc)
    sol = enumerate_solutions(sys_, cap=args.cap)
    i = args.var or int(doc.get("var", 1))
    elems = project_solutions(sol, i)
    return {"var": i, "size": len(elems), "elements": [list(e.coords) for e in elems]}


def cmd_pipeline_run(doc, args) -> dict:
    trace = run_full_pipeline(_system(doc), cap=args.cap, certify=not args.no_certify)
    return trace.to_json()


def cmd_pipeline_verify(doc, args) -> dict:
    reports = reverify_trace(doc, cap=args.cap)
    return {"ok": all(r.ok for r in reports), "stages": [r.to_json() for r in reports]}


def cmd_represent_build(doc, args) -> dict:
    _, cert = build_K_from_circular(_system(doc), cap=args.cap)
    rep = verify_rp_properties(cert, cap=args.cap)
    return {"certificate": cert.to_json(), "report": rep.to_json()}


def _certificate(doc):
    return certificate_from_json(doc["certificate"] if "certificate" in doc else doc)


def cmd_represent_verify(doc, args) -> dict:
    return verify_rp_properties(_certificate(doc), cap=args.cap).to_json()


def cmd_represent_remove(doc, args) -> dict:
    cert = _certificate(doc)
    X = _domains(doc.get("X"))
    if doc.get("Eprime") is not None:
        E = [(int(c), tuple(v)) for c, v in doc["Eprime"]]
    else:
        E = greedy_edge_cover(cert.H, restrict_to_domains(cert.K, X), args.cap, cert.partite)
    res = removal_deletion(cert, X, E, cap=args.cap)
    return res.to_json() | {"Eprime_size": len(E)}


def _perm_pair(doc, args):
    tau = Permutation.parse(args.tau) if args.tau else Permutation.from_json(doc["tau"])
    sigma = Permutation.parse(args.sigma) if args.sigma else Permutation.from_json(doc["sigma"])
    return tau, sigma


def cmd_perm_occurrences(doc, args) -> dict:
    tau, sigma = _perm_pair(doc, args)
    occ = occurrences(tau, sigma)
    return {"count": len(occ), "occurrences": [list(o) for o in occ]}


def cmd_perm_check(doc, args) -> dict:
    if args.census:
        return census(args.t_max, args.n_max, cap=args.cap)
    tau, sigma = _perm_pair(doc, args)
    out = copies_match_occurrences(tau, sigma, cap=args.cap).to_json()
    if args.delete:
        out["deletion"] = greedy_pair_deletion(tau, sigma, cap=args.cap)
    return out


def cmd_apps_corners(doc, args) -> dict:
    G = _group(doc["group"])
    m = int(doc["m"])
    sys_ = build_corner_system(G, m)
    if doc.get("subset") is not None:
        S = doc["subset"]
    else:
        S = random_subset(sys_.group, float(doc.get("density", args.density)), args.seed)
    census_ = count_corners(sys_, S, G=G, cap=args.cap)
    return census_.to_json() | {"projections_full": homothetic_checks(sys_, cap=args.cap)["projections_full"]}


def cmd_apps_homothetic(doc, args) -> dict:
    G = _group(doc["group"])
    sys_ = build_homothetic_system(G, doc["subgroups"], [IntMatrix.from_json(p) for p in doc["phis"]])
    return homothetic_checks(sys_, cap=args.cap) | {"system": sys_.to_json()}


COMMANDS: dict[str, Callable] = {
    "snf": cmd_snf,
    "dets": cmd_dets,
    "solve": cmd_solve,
    "project": cmd_project,
    "pipeline run": cmd_pipeline_run,
    "pipeline verify": cmd_pipeline_verify,
    "represent build": cmd_represent_build,
    "represent verify": cmd_represent_verify,
    "represent remove": cmd_represent_remove,
    "perm occurrences": cmd_perm_occurrences,
    "perm check": cmd_perm_check,
    "apps corners": cmd_apps_corners,
    "apps homothetic": cmd_apps_homothetic,
}

# commands that can run without any JSON input
NO_INPUT_OK = {"perm occurrences", "perm check"}


# ---------------------------------------------------------------------- parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit 2, which is our precondition code
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("-i", "--input", help="input JSON file (default: stdin)")
    p.add_argument("-o", "--output", help="output JSON file (default: stdout)")
    p.add_argument("--cap", type=int, default=DEFAULT_CAP, help="enumeration cap")
    p.add_argument("--seed", type=int, default=0, help="seed for sampling")
    p.add_argument("--threads", type=int, default=1, help="worker cap (computation is single-process)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="abelrep", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"abelrep {__version__}")
    sub = parser.add_subparsers(dest="cmd", parser_class=_Parser)

    def leaf(container, name: str, key: str, help_: str) -> argparse.ArgumentParser:
        p = container.add_parser(name, help=help_)
        _common(p)
        p.set_defaults(key=key)
        return p

    leaf(sub, "snf", "snf", "Smith normal form with witnesses")
    leaf(sub, "dets", "dets", "determinantal divisors D_1..D_r")
    p = leaf(sub, "solve", "solve", "enumerate/count solutions")
    p.add_argument("--list", action="store_true", help="include the solutions")
    p = leaf(sub, "project", "project", "projection S_i onto one variable")
    p.add_argument("--var", type=int, default=0, help="1-based variable index")

    groups = {
        "pipeline": ("equivalence pipeline", [("run", "run and certify the full chain"), ("verify", "re-certify a trace")]),
        "represent": ("hypergraph representations", [("build", "K from a circular system"), ("verify", "check RP1-RP4"), ("remove", "deletion rule")]),
        "perm": ("permutation patterns", [("occurrences", "list occurrences"), ("check", "copies vs occurrences")]),
        "apps": ("applications", [("corners", "corner census"), ("homothetic", "homothetic system checks")]),
    }
    leaves: dict[str, argparse.ArgumentParser] = {}
    for name, (help_, children) in groups.items():
        g = sub.add_parser(name, help=help_)
        gs = g.add_subparsers(dest="sub", parser_class=_Parser)
        for child, chelp in children:
            leaves[f"{name} {child}"] = leaf(gs, child, f"{name} {child}", chelp)
    leaves["pipeline run"].add_argument("--no-certify", action="store_true")
    for key in ("perm occurrences", "perm check"):
        leaves[key].add_argument("--tau", help='pattern, e.g. "1 0"')
        leaves[key].add_argument("--sigma", help='text, e.g. "2 0 1"')
    leaves["perm check"].add_argument("--census", action="store_true", help="full census instead of one pair")
    leaves["perm check"].add_argument("--t-max", type=int, default=3)
    leaves["perm check"].add_argument("--n-max", type=int, default=7)
    leaves["perm check"].add_argument("--delete", action="store_true", help="add the greedy pair-deletion demo")
    leaves["apps corners"].add_argument("--density", type=float, default=0.5)
    return parser


def _unwrap(doc):
    """Accept our own output envelopes as input."""
    if isinstance(doc, dict) and {"status", "payload"} <= set(doc):
        return doc["payload"]
    return doc


def _read_input(args, key: str):
    if args.input:
        with open(args.input) as fh:
            return _unwrap(json.load(fh))
    if key in NO_INPUT_OK and (getattr(args, "census", False) or (args.tau and args.sigma)):
        return {}
    return _unwrap(json.load(sys.stdin))


def dispatch(argv: list[str]) -> CommandResult:
    """Parse ``argv`` and run one command. Never raises for expected failures."""
    t0 = time.perf_counter()
    parser = build_parser()
    key = output = None
    try:
        args = parser.parse_args(argv)
        key = getattr(args, "key", None)
        output = getattr(args, "output", None)
        if key is None:
            raise UsageError(parser.format_usage())
        doc = _read_input(args, key)
        payload = COMMANDS[key](doc, args)
        status = "ok"
    except UsageError as exc:
        return CommandResult("usage", {"error": str(exc)}, time.perf_counter() - t0)
    except CapExceededError as exc:
        status, payload = "cap-exceeded", {"error": str(exc)}
    except PreconditionError as exc:
        status, payload = "precondition-failed", {"error": str(exc)}
    except (InvalidInputError, ValueError, KeyError, TypeError, json.JSONDecodeError, OSError) as exc:
        status, payload = "invalid-input", {"error": f"{type(exc).__name__}: {exc}"}
    return CommandResult(status, payload, time.perf_counter() - t0, key, output)


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    res = dispatch(argv)
    if res.status == "usage":
        print(res.payload["error"], file=sys.stderr)
        return res.exit_code
    doc = {"status": res.status, "command": res.command, "payload": res.payload}
    out = json.dumps(_bigints(doc), sort_keys=True, indent=1)
    if res.output:
        with open(res.output, "w") as fh:
            fh.write(out + "\n")
    else:
        sys.stdout.write(out + "\n")
    print(f"[{res.status}] {res.timing:.3f}s", file=sys.stderr)
    return res.exit_code


if __name__ == "__main__":
    raise SystemExit(main())
