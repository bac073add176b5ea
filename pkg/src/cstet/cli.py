"""Command line entry point `cstet`."""
from __future__ import annotations

import argparse
import json
import sys

from . import cs3d, csline2d, tables
from .dilog import EtaPair, ell
from .triangulation import TriangulationError

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    pass


def _complex_arg(text: str) -> complex:
    try:
        parts = [float(p) for p in text.split(",")]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected re,im but got {text!r}") from exc
    if len(parts) == 1:
        return complex(parts[0])
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected re,im but got {text!r}")
    return complex(*parts)


def _positive(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("tolerance must be positive")
    return v


def _seed(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("seed must be non-negative")
    return v


def _emit(obj, as_json: bool, human=None):
    if as_json or human is None:
        print(json.dumps(cs3d._jsonable(obj), indent=2))
    else:
        print(human)


def _fmt(z: complex) -> str:
    z = complex(z)
    return f"{z.real:.15g} {'+' if z.imag >= 0 else '-'} {abs(z.imag):.15g}i"


def cmd_invariant(args) -> int:
    problem = cs3d.load_input(args.input)
    reports = cs3d.full_pipeline(problem, starts=args.starts, seed=args.seed, tol=args.tol)
    out = [r.to_json() for r in reports]
    if not args.breakdown:
        for r in out:
            r.pop("tets")
    ok = all(r.checks.get("ok", True) for r in reports)
    if args.json:
        _emit(out[0] if len(out) == 1 else out, True)
    else:
        lines = []
        for i, r in enumerate(reports):
            lines.append(f"invariant[{i}] = {_fmt(r.value)}")
            if args.breakdown:
                for t in r.tets:
                    lines.append(
                        f"  tet {t.tet}: eta={t.eta} u1={_fmt(t.u1)} u2={_fmt(t.u2)} ell={_fmt(t.ell)} k={t.k}/24"
                    )
                lines.append(f"  face mismatches: {r.faces}")
        if not reports:
            lines.append("no verified Ptolemy solutions")
        print("\n".join(lines))
    return EXIT_OK if ok else EXIT_FAIL


def cmd_solve(args) -> int:
    problem = cs3d.load_input(args.input)
    res = cs3d.solve_ptolemy(problem.tri, problem.eps, starts=args.starts, seed=args.seed, marked=problem.marked)
    data = res.to_json(problem)
    if args.json:
        _emit(data, True)
    else:
        lines = [f"{len(res.solutions)} verified solution(s)"]
        for i, s in enumerate(res.solutions):
            lines.append(f"  [{i}] invariant = {_fmt(s.value)}")
        if res.obstructed:
            lines.append(f"{len(res.obstructed)} twisted solution(s) without a boundary-unipotent SL2 lift")
        print("\n".join(lines))
    return EXIT_OK


def cmd_check(args) -> int:
    problem = cs3d.load_input(args.input)
    if problem.x is not None:
        xs = [problem.x]
    else:
        res = cs3d.solve_ptolemy(problem.tri, problem.eps, starts=args.starts, seed=args.seed,
                                 marked=problem.marked)
        xs = [s.x for s in res.solutions]
    results = [cs3d.run_checks(problem.tri, problem.eps, problem.marked, x, tol=args.tol) for x in xs]
    ok = bool(results) and all(r["ok"] for r in results)
    if args.json:
        _emit({"ok": ok, "results": results}, True)
    else:
        lines = []
        for i, r in enumerate(results):
            parts = [f"{k}={'ok' if v['ok'] else 'FAIL'}" for k, v in r.items() if isinstance(v, dict)]
            lines.append(f"[{i}] " + " ".join(parts))
        if not results:
            lines.append("no Ptolemy data to check")
        print("\n".join(lines))
    return EXIT_OK if ok else EXIT_FAIL


def cmd_line(args) -> int:
    if args.script:
        try:
            with open(args.script) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(str(exc)) from exc
        out = csline2d.replay_script(data)
        _emit(out, args.json, f"factor = {_fmt(out['factor'])}")
        return EXIT_OK
    if args.scenario != "pentagon":
        raise InputError(f"unknown scenario {args.scenario!r}")
    rep = csline2d.pentagon_suite(args.trials, args.seed)
    _emit(rep, args.json, f"pentagon: {rep['trials']} trials, max deviation {rep['max_deviation']:.3g} "
                          f"{'ok' if rep['ok'] else 'FAIL'}")
    return EXIT_OK if rep["ok"] else EXIT_FAIL


def cmd_tables(args) -> int:
    b = tables.verify_b_relations()
    k = tables.verify_k_relations(samples=args.samples, seed=args.seed)
    checksum = tables.table_checksum() == tables.K_TABLE_SHA256
    ok = all(b.values()) and k["ok"] and checksum
    rep = {"ok": ok, "k_table_checksum": checksum, "b_relations": b,
           "k_relations": {key: v for key, v in k.items() if key != "failures"}}
    rep["k_relations"]["failures"] = len(k["failures"])
    _emit(rep, True)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_dilog(args) -> int:
    try:
        eta = EtaPair.coerce(args.eta)
        val = ell(eta, args.u1, args.u2, tol=args.tol, project_u2=args.project)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    out = {"eta": list(eta), "ell": val.value, "ell_reduced": val.reduced(), "ell_factor": val.factor()}
    _emit(out, args.json, f"ell = {_fmt(val.value)}\nell_factor = {_fmt(val.factor())}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=_seed, default=0)
    common.add_argument("--tol", type=_positive, default=1e-9)
    common.add_argument("--json", action="store_true", help="machine-readable output")

    p = argparse.ArgumentParser(prog="cstet", description="Chern-Simons invariants from Ptolemy data")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("invariant", parents=[common], help="evaluate the invariant")
    s.add_argument("--input", required=True)
    s.add_argument("--breakdown", action="store_true")
    s.add_argument("--starts", type=int, default=2000)
    s.set_defaults(func=cmd_invariant)

    s = sub.add_parser("solve", parents=[common], help="solve the Ptolemy system")
    s.add_argument("--input", required=True)
    s.add_argument("--starts", type=int, default=2000)
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("check", parents=[common], help="verify Ptolemy data")
    s.add_argument("--input", required=True)
    s.add_argument("--starts", type=int, default=2000)
    s.set_defaults(func=cmd_check)

    s = sub.add_parser("line", parents=[common], help="surface transition factors")
    s.add_argument("--scenario", default="pentagon")
    s.add_argument("--trials", type=int, default=50)
    s.add_argument("--script")
    s.set_defaults(func=cmd_line)

    s = sub.add_parser("tables", parents=[common], help="check the constant tables")
    s.add_argument("--verify", action="store_true")
    s.add_argument("--samples", type=int, default=100)
    s.set_defaults(func=cmd_tables)

    s = sub.add_parser("dilog", parents=[common], help="evaluate ell^eta")
    s.add_argument("--eta", required=True)
    s.add_argument("--u1", type=_complex_arg, required=True)
    s.add_argument("--u2", type=_complex_arg, required=True)
    s.add_argument("--project", action="store_true")
    s.set_defaults(func=cmd_dilog)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (InputError, TriangulationError, cs3d.DecorationError, csline2d.MoveError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
