"""Command line interface.

Exit codes: 0 success, 1 validation failure, 2 mathematical rejection,
3 I/O error.
"""

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import instances
from ._config import TOL_ENV_VAR, default_rtol
from .errors import RejectionError, ValidationError
from .factorization import factorize
from .forms import is_markovian
from .invariants import irreducible_decomposition
from .order_iso import identity, intertwines
from .transforms import h_transform

EXIT_OK, EXIT_INVALID, EXIT_REJECTED, EXIT_IO = 0, 1, 2, 3


class _Exit(Exception):
    def __init__(self, code, payload):
        self.code = code
        self.payload = payload


def _emit(obj, args, stream=None):
    stream = stream or sys.stdout
    if getattr(args, "pretty", False):
        stream.write(_pretty(obj))
    else:
        stream.write(json.dumps(obj, indent=2) + "\n")


def _pretty(obj, indent=0):
    pad = "  " * indent
    lines = []
    for key, value in obj.items():
        if isinstance(value, dict):
            lines.append(f"{pad}{key}:")
            lines.append(_pretty(value, indent + 1).rstrip("\n"))
        elif isinstance(value, list) and value and isinstance(value[0], float):
            lines.append(f"{pad}{key}: " + " ".join(f"{v:.6g}" for v in value))
        else:
            lines.append(f"{pad}{key}: {value}")
    return "\n".join(lines) + "\n"


def _load(path):
    try:
        if path == "-":
            return instances.parse(sys.stdin.read())
        return instances.load(path)
    except OSError as exc:
        raise _Exit(EXIT_IO, {"error": "io", "message": str(exc)}) from None


def _rtol(args):
    return args.tol if getattr(args, "tol", None) is not None else default_rtol()


def _iso_or_identity(inst):
    if inst.isomorphism is not None:
        return inst.isomorphism
    if len(inst.forms) == 1:
        return identity(inst.form1.space)
    raise ValidationError("instance has two forms but no isomorphism")


def cmd_validate(args):
    inst = _load(args.file)
    report = {"version": inst.version, "forms": []}
    ok = True
    for form in inst.forms:
        markov = is_markovian(form)
        dec = irreducible_decomposition(form)
        entry = {
            "states": form.n,
            "components": dec.n_components,
            "markovian": markov.ok,
            "symmetry_defect": form.generator.symmetry_defect(),
        }
        ok = ok and markov.ok
        report["forms"].append(entry)
    if inst.isomorphism is not None:
        report["isomorphism"] = {"states": inst.isomorphism.n}
    report["ok"] = ok
    _emit(report, args)
    return EXIT_OK if ok else EXIT_INVALID


def cmd_decompose(args):
    inst = _load(args.file)
    out = {"forms": []}
    for form in inst.forms:
        dec = irreducible_decomposition(form)
        out["forms"].append({
            "n_components": dec.n_components,
            "components": [
                [form.space.labels[i] for i in dec.members(k)] for k in range(dec.n_components)
            ],
        })
    _emit(out, args)
    return EXIT_OK


def _read_h(source, n):
    """``source`` is a path to a JSON list or inline numbers (``1,2,3`` or ``[1,2,3]``)."""
    text = source
    if os.path.exists(source):
        try:
            with open(source, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise _Exit(EXIT_IO, {"error": "io", "message": str(exc)}) from None
    try:
        if text.lstrip().startswith("["):
            values = json.loads(text)
        else:
            values = [float(v) for v in text.replace(",", " ").split()]
        h = np.asarray(values, dtype=float)
    except (ValueError, TypeError):
        raise ValidationError(f"cannot read h from {source!r}") from None
    if h.shape != (n,):
        raise ValidationError(f"h has {h.size} entries, expected {n}")
    return h


def cmd_htransform(args):
    inst = _load(args.file)
    h = _read_h(args.h, inst.form1.n)
    transformed = h_transform(inst.form1, h)
    sys.stdout.write(instances.serialize(instances.Instance((transformed,))))
    return EXIT_OK


def cmd_check_intertwine(args):
    inst = _load(args.file)
    rtol = _rtol(args)
    report = intertwines(_iso_or_identity(inst), inst.form1, inst.form2, rtol=rtol)
    _emit({"residual": report.residual, "tol": rtol, "ok": report.ok}, args)
    return EXIT_OK if report.ok else EXIT_REJECTED


def factorization_to_dict(fact, inst=None):
    j = fact.j
    out = {
        "h": [float(v) for v in fact.h.values],
        "j": j.as_dict(),
        "phi": [float(v) for v in fact.phi.values()],
        "component_constants": [float(v) for v in fact.phi.constants],
        "diagnostics": {k: v for k, v in fact.diagnostics.items()},
    }
    if inst is not None and inst.expected is not None:
        e = inst.expected
        h_err = float(np.max(np.abs(fact.h.values - e["h"]) / e["h"]))
        phi_err = float(np.max(np.abs(fact.phi.values() - e["phi"]) / e["phi"]))
        out["expected"] = {
            "h_relative_error": h_err,
            "phi_relative_error": phi_err,
            "j_equal": bool(np.array_equal(j.mapping, e["j"])),
        }
    return out


def cmd_factorize(args):
    inst = _load(args.file)
    if inst.isomorphism is None:
        raise ValidationError("instance carries no isomorphism to factorize")
    fact = factorize(inst.isomorphism, inst.form1, inst.form2, rtol=_rtol(args))
    _emit(factorization_to_dict(fact, inst), args)
    return EXIT_OK


def cmd_synthesize(args):
    inst = instances.generate(
        args.seed, args.states, args.components, with_killing=not args.no_killing, kind=args.kind
    )
    sys.stdout.write(instances.serialize(inst))
    return EXIT_OK


def _selftest_case(index, seed, rtol):
    """One round trip and one rejection case; returns a result row."""
    rng = np.random.default_rng([seed, index])
    n = int(rng.integers(2, 31))
    k = int(rng.integers(1, min(n, 5) + 1))
    killing = bool(rng.integers(0, 2))
    inst = instances.generate([seed, index], n, k, with_killing=killing, kind="triple")
    row = {"case": index, "states": n, "components": k}
    try:
        fact = factorize(inst.isomorphism, inst.form1, inst.form2, rtol=rtol)
        e = inst.expected
        err = max(
            float(np.max(np.abs(fact.h.values - e["h"]) / e["h"])),
            float(np.max(np.abs(fact.phi.values() - e["phi"]) / e["phi"])),
        )
        row["round_trip"] = bool(err <= 1e-8 and np.array_equal(fact.j.mapping, e["j"]))
    except (RejectionError, ValidationError) as exc:
        row["round_trip"] = False
        row["error"] = str(exc)
    bad = instances.generate([seed, index, 1], n, k, with_killing=True, kind="iso")
    try:
        factorize(bad.isomorphism, bad.form1, bad.form2, rtol=rtol)
        row["rejected"] = False
    except RejectionError:
        row["rejected"] = True
    return row


def cmd_selftest(args):
    rtol = _rtol(args)
    with ThreadPoolExecutor(max_workers=args.threads) as pool:
        rows = list(pool.map(lambda i: _selftest_case(i, args.seed, rtol), range(args.cases)))
    rows.sort(key=lambda r: r["case"])
    round_trips = sum(r["round_trip"] for r in rows)
    rejected = sum(r["rejected"] for r in rows)
    ok = round_trips == len(rows) and rejected >= 0.99 * len(rows)
    summary = {
        "cases": len(rows),
        "round_trip_passed": round_trips,
        "non_intertwining_rejected": rejected,
        "ok": ok,
        "failures": [r for r in rows if not r["round_trip"]],
    }
    _emit(summary, args)
    return EXIT_OK if ok else EXIT_REJECTED


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    out = common.add_mutually_exclusive_group()
    out.add_argument("--json", action="store_true", help="machine-readable output and errors")
    out.add_argument("--pretty", action="store_true", help="human-readable output")
    common.add_argument(
        "--tol", type=float, default=None,
        help=f"relative tolerance (default 1e-9, or ${TOL_ENV_VAR})",
    )

    parser = argparse.ArgumentParser(
        prog="dirichlet-iso",
        description="Finite Dirichlet forms, h-transforms and order isomorphism factorization.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", parents=[common], help="schema and invariant report")
    p.add_argument("file")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("decompose", parents=[common], help="irreducible decomposition")
    p.add_argument("file")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("htransform", parents=[common], help="emit the h-transformed form")
    p.add_argument("file")
    p.add_argument("--h", required=True, help="file with a JSON list, or inline values 'a,b,c'")
    p.set_defaults(func=cmd_htransform)

    p = sub.add_parser("check-intertwine", parents=[common], help="generator-level residual")
    p.add_argument("file")
    p.set_defaults(func=cmd_check_intertwine)

    p = sub.add_parser("factorize", parents=[common], help="factor U = U_phi U_j U_h")
    p.add_argument("file")
    p.set_defaults(func=cmd_factorize)

    p = sub.add_parser("synthesize", parents=[common], help="random instance with ground truth")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--states", type=int, required=True)
    p.add_argument("--components", type=int, default=1)
    p.add_argument("--no-killing", action="store_true")
    p.add_argument("--kind", choices=("triple", "form", "iso"), default="triple")
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("selftest", parents=[common], help="run randomized round-trip checks")
    p.add_argument("--cases", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _Exit as exc:
        payload, code = exc.payload, exc.code
    except ValidationError as exc:
        payload, code = {"error": type(exc).__name__, "message": str(exc)}, EXIT_INVALID
    except RejectionError as exc:
        payload, code = {"error": type(exc).__name__, "message": str(exc)}, EXIT_REJECTED
    except ValueError as exc:
        payload, code = {"error": type(exc).__name__, "message": str(exc)}, EXIT_INVALID
    payload["exit_code"] = code
    if args.json:
        sys.stdout.write(json.dumps(payload) + "\n")
    else:
        sys.stderr.write(f"error: {payload['message']}\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
