"""Command-line drivers.

Exit codes: 0 ok, 1 domain failure, 2 parse or usage error, 3 no convergence.
Numbers are written with 17 significant digits so runs are reproducible
byte for byte.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path as FsPath

from .ckalgebra import ck_identity_check, hom_defect, ia_gap
from .graph import GraphError, condition_L
from .lipschitz import LipError, parse_expr
from .metric import cloud_to_csv, cloud_to_json, fmt
from .states import DiscreteMeasure, corner_family, dirac_family, w1
from .system import (ConvergenceError, DomainError, MWGraph, SystemFormatError, coding_point,
                     invariant_list, seed_list, validate_mw)

EXIT_OK, EXIT_DOMAIN, EXIT_USAGE, EXIT_NOCONV = 0, 1, 2, 3

log = logging.getLogger("mwgraph")


class UsageError(Exception):
    pass


def _positive(name: str, value) -> None:
    if value is None or value <= 0:
        raise UsageError(f"--{name} must be positive")


def _emit(text: str, out: str | None) -> None:
    if out:
        FsPath(out).write_text(text)
    else:
        sys.stdout.write(text)


def _load_checked(path: str, allow_sources: bool = False) -> MWGraph:
    m = MWGraph.load(path)
    report = validate_mw(m, allow_sources)
    if not report.ok:
        for f in report.findings:
            print(str(f), file=sys.stderr)
        raise DomainError(f"{path} is not a valid Mauldin-Williams graph")
    return m


def cmd_validate(args) -> int:
    m = MWGraph.load(args.system)
    report = validate_mw(m, args.allow_sources)
    for f in report.findings:
        print(str(f), file=sys.stderr)
    ok_L, loop = condition_L(m.graph)
    lines = [f"c: {fmt(report.info['c'])}",
             "condition_L: " + ("holds" if ok_L else "fails on loop " + "-".join(loop))]
    lines.append("status: " + ("ok" if report.ok else "invalid"))
    sys.stdout.write("\n".join(lines) + "\n")
    return EXIT_OK if report.ok else EXIT_DOMAIN


def cmd_attractor(args) -> int:
    _positive("eps", args.eps)
    _positive("tol", args.tol)
    _positive("max-iter", args.max_iter)
    if not args.out:
        raise UsageError("attractor needs --out DIR")
    m = _load_checked(args.system, args.allow_sources)
    try:
        K = invariant_list(m, args.eps, args.tol, args.max_iter, seed=seed_list(m, args.seed))
        status = EXIT_OK
    except ConvergenceError as exc:
        print(str(exc), file=sys.stderr)
        K, status = exc.approx, EXIT_NOCONV
    outdir = FsPath(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    for v, P in K.clouds.items():
        if args.format == "json":
            (outdir / f"K_{v}.json").write_text(cloud_to_json(P))
        else:
            (outdir / f"K_{v}.csv").write_text(cloud_to_csv(P))
    summary = {
        "converged": status == EXIT_OK,
        "residual": fmt(K.residual),
        "iterations": K.iterations,
        "certified_bound": fmt(K.certified_bound),
        "eps": fmt(args.eps),
        "points": {v: len(P) for v, P in K.clouds.items()},
    }
    (outdir / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return status


def cmd_code(args) -> int:
    if not args.path:
        raise UsageError("code needs --path e1,e2,...")
    m = _load_checked(args.system, args.allow_sources)
    alpha = tuple(p.strip() for p in args.path.split(","))
    x, bound = coding_point(m, alpha)
    if args.format == "json":
        text = json.dumps({"point": [fmt(t) for t in x], "bound": fmt(bound)}) + "\n"
    else:
        header = ",".join(f"x{i}" for i in range(len(x))) + ",bound"
        text = header + "\n" + ",".join(fmt(t) for t in x) + "," + fmt(bound) + "\n"
    _emit(text, args.out)
    return EXIT_OK


def _family(m: MWGraph, text: str) -> dict:
    try:
        return {v: parse_expr(text, m.box(v)) for v in m.graph.vertices}
    except LipError as exc:
        raise UsageError(str(exc)) from None


def cmd_ia_converge(args) -> int:
    if args.fn is None:
        raise UsageError("ia-converge needs --fn EXPR")
    _positive("kmax", args.kmax)
    m = _load_checked(args.system, args.allow_sources)
    a = _family(m, args.fn)
    mu0 = dirac_family(m) if args.mu == "dirac" else corner_family(m)
    cache: dict = {}
    rows = ["k,gap,bound,hom_defect"]
    for k in range(1, args.kmax + 1):
        gap, bound = ia_gap(m, a, mu0, k, k + 1, cache)
        rows.append(",".join([str(k), fmt(gap), fmt(bound), fmt(hom_defect(m, a, a, mu0, k))]))
    _emit("\n".join(rows) + "\n", args.out)
    return EXIT_OK


def cmd_ck_check(args) -> int:
    m = MWGraph.load(args.system)
    g = m.graph
    failures = ck_identity_check(g)
    ok_L, loop = condition_L(g)
    lines = [f"identities: {'pass' if not failures else 'fail'}"]
    lines += [f"failure: {f}" for f in failures]
    lines.append("condition_L: " + ("holds" if ok_L else "fails on loop " + "-".join(loop)))
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK if not failures else EXIT_DOMAIN


def cmd_w1(args) -> int:
    try:
        mu = DiscreteMeasure.load(args.measures[0])
        nu = DiscreteMeasure.load(args.measures[1])
    except (ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"bad measure file: {exc}") from None
    if mu.dim != nu.dim:
        raise DomainError(f"dimension mismatch: {mu.dim} vs {nu.dim}")
    _emit(fmt(w1(mu, nu)) + "\n", args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mwgraph", description="Mauldin-Williams graph toolkit")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def system_cmd(name, fn, help):
        sp = sub.add_parser(name, help=help)
        sp.add_argument("system", help="system JSON file")
        sp.add_argument("--allow-sources", action="store_true",
                        help="accept vertices without incoming edges")
        sp.add_argument("--out")
        sp.add_argument("--format", choices=("csv", "json"), default="csv")
        sp.set_defaults(func=fn)
        return sp

    system_cmd("validate", cmd_validate, "check the graph and the maps")
    sp = system_cmd("attractor", cmd_attractor, "approximate the invariant list")
    sp.add_argument("--eps", type=float, default=1e-4)
    sp.add_argument("--tol", type=float, default=1e-3)
    sp.add_argument("--max-iter", type=int, default=100)
    sp.add_argument("--seed", choices=("net", "anchor", "center"), default="net",
                    help="starting clouds")
    sp = system_cmd("code", cmd_code, "finite-depth coding map")
    sp.add_argument("--path")
    sp = system_cmd("ia-converge", cmd_ia_converge, "convergence table of the i_A approximants")
    sp.add_argument("--fn")
    sp.add_argument("--kmax", type=int, default=8)
    sp.add_argument("--mu", choices=("dirac", "corner"), default="corner",
                    help="state family used in the approximants")
    system_cmd("ck-check", cmd_ck_check, "Cuntz-Krieger identities and condition (L)")

    sp = sub.add_parser("w1", help="Wasserstein-1 distance of two measure files")
    sp.add_argument("measures", nargs=2)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_w1)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (UsageError, SystemFormatError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DomainError, GraphError, LipError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
