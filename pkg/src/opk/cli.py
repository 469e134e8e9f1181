"""Command-line interface: enumeration, differentials, composition, weights,
star products and the verification harness.

Every command resolves its configuration (seed, sample budget, snapping
denominator, cache directory) from flags with environment fallbacks
(OPK_SEED, OPK_SAMPLES, OPK_CACHE) and echoes the resolved values in a
manifest block, so a run can be reproduced from its own output.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction

from . import trees
from .graphs import (
    enumerate_graphs,
    graph_from_json,
    graph_to_json,
    graphsum_to_json,
    compose,
)
from .poly import AlgebraSpec, GradedPoly, poisson_algebra, two_pairing_algebra
from .quantize import associativity_residual, build_mu, star_product
from .verify import SUITES, run_suite
from .weights import WeightCache, snap_rational, weight


def _int_ish(text: str) -> int:
    return int(float(text))


def _env_int(name: str, default: int) -> int:
    raw = os.environ.get(name)
    return _int_ish(raw) if raw else default


def _manifest(args, **extra) -> dict:
    out = {"command": args.command, "seed": getattr(args, "seed", None),
           "samples": getattr(args, "samples", None)}
    out.update(extra)
    return {k: v for k, v in out.items() if v is not None}


def _cache(args) -> WeightCache | None:
    path = getattr(args, "cache", None) or os.environ.get("OPK_CACHE", ".opk-cache")
    if path in ("", "none", "off"):
        return None
    return WeightCache(path)


def _emit(args, payload: dict) -> None:
    if args.format == "json":
        json.dump(payload, sys.stdout, indent=2, default=str)
        sys.stdout.write("\n")
        return
    def walk(obj, indent=0):
        pad = "  " * indent
        if isinstance(obj, dict):
            for k, v in obj.items():
                if isinstance(v, (dict, list)):
                    sys.stdout.write(f"{pad}{k}:\n")
                    walk(v, indent + 1)
                else:
                    sys.stdout.write(f"{pad}{k}: {v}\n")
        elif isinstance(obj, list):
            for v in obj:
                if isinstance(v, (dict, list)):
                    walk(v, indent + 1)
                else:
                    sys.stdout.write(f"{pad}- {v}\n")
    walk(payload)


def _load_json_arg(text: str):
    if text.strip().startswith(("{", "[")):
        return json.loads(text)
    with open(text) as fh:
        return json.load(fh)


def _algebra_from_json(obj: dict) -> AlgebraSpec:
    d = int(obj.get("d", 2))
    dim = int(obj.get("dimV", obj.get("dim", 2)))
    if obj.get("kind") == "two_pairing":
        return two_pairing_algebra(dim)
    return poisson_algebra(d, dim)


def _poly_from_json(obj: dict) -> GradedPoly:
    spec = _algebra_from_json(obj.get("algebra", {}))
    return GradedPoly.from_json(spec, obj["terms"])


def cmd_verify(args) -> int:
    suites = sorted(SUITES) if args.suite == "all" else [args.suite]
    reports = [run_suite(s, n_samples=args.samples, seed=args.seed,
                         cache=_cache(args)) for s in suites]
    payload = {"manifest": _manifest(args, suite=args.suite),
               "reports": [r.to_json() for r in reports]}
    _emit(args, payload)
    for r in reports:
        for c in r.checks:
            status = "PASS" if c.passed else "FAIL"
            print(f"[{status}] {r.suite}: {c.name}"
                  + (f" -- {c.detail}" if c.detail else ""), file=sys.stderr)
    return 0 if all(r.passed for r in reports) else 1


def cmd_enumerate(args) -> int:
    gs = enumerate_graphs(args.aerial, args.ground, args.edges, args.d, args.mode)
    payload = {"manifest": _manifest(args), "count": len(gs),
               "graphs": [graph_to_json(g) for g in gs]}
    _emit(args, payload)
    return 0


def cmd_diff(args) -> int:
    kind = (args.family, _gen_for(args.family, args.m), args.n, args.m, args.d)
    total = trees.differential(trees.corolla(kind))
    payload = {"manifest": _manifest(args, family=args.family, n=args.n, m=args.m),
               "terms": [{"coeff": str(c), "tree": trees.to_sexpr(t)}
                         for t, c in total]}
    _emit(args, payload)
    return 0


def _gen_for(family: str, m: int) -> str:
    if family in ("ass", "lie"):
        return "w"
    if family in ("mor_ass", "mor_lie"):
        return "bb"
    if family == "ocha":
        return "t"
    if family == "mor_ocha":
        return "dd"
    raise SystemExit(f"unknown family {family!r}")


def cmd_compose(args) -> int:
    g0 = graph_from_json(_load_json_arg(args.g0))
    parts = [graph_from_json(_load_json_arg(p)) for p in args.parts]
    blocks = [tuple(int(x) for x in blk.split(",")) for blk in args.blocks.split(";")]
    result = compose(g0, parts, blocks)
    payload = {"manifest": _manifest(args), "result": graphsum_to_json(result)}
    _emit(args, payload)
    return 0


def cmd_weight(args) -> int:
    g = graph_from_json(_load_json_arg(args.graph))
    est = weight(g, args.prop, args.samples, args.seed, cache=_cache(args),
                 space=args.space)
    snapped = snap_rational(est.mean, est.stderr, args.snap) if args.snap else None
    payload = {"manifest": _manifest(args, prop=args.prop, snap=args.snap),
               "mean": est.mean, "stderr": est.stderr, "samples": est.n_samples,
               "seed": est.seed, "zero_by_degree": est.zero_by_degree,
               "exact": est.exact, "rejection_rate": est.rejection_rate,
               "snapped": str(snapped) if snapped is not None else None}
    _emit(args, payload)
    return 0


def cmd_star(args) -> int:
    gamma = _poly_from_json(_load_json_arg(args.gamma))
    star = star_product(gamma, args.prop, args.order, args.samples, args.seed,
                        args.snap, cache=_cache(args))
    payload = {"manifest": _manifest(args, prop=args.prop, order=args.order,
                                     snap=args.snap),
               "terms": [{"hbar": k, "coeff": str(t.coeff),
                          "snapped": t.snapped,
                          "graph": graph_to_json(t.graph),
                          "estimate": {"mean": t.estimate.mean,
                                       "stderr": t.estimate.stderr,
                                       "samples": t.estimate.n_samples,
                                       "seed": t.estimate.seed}}
                         for k, t in star.terms if t.coeff != 0]}
    if args.check_assoc:
        f, g, h = (_poly_from_json(_load_json_arg(p)) for p in args.check_assoc)
        res = associativity_residual(star, f, g, h)
        payload["associativity_residual"] = res.to_json()
        payload["associativity_zero"] = res.is_zero()
    _emit(args, payload)
    return 0


def cmd_mu(args) -> int:
    prop = "sphere_vol" if args.prop == "sphere" else args.prop
    op = build_mu(args.d, prop, args.n, args.samples, args.seed, args.snap,
                  cache=_cache(args))
    payload = {"manifest": _manifest(args, d=args.d, n=args.n, prop=args.prop),
               "is_zero": op.is_zero(), "float_terms": op.float_terms,
               "terms": [{"coeff": str(t.coeff), "snapped": t.snapped,
                          "graph": graph_to_json(t.graph)}
                         for t in op.terms if t.coeff != 0]}
    _emit(args, payload)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="opk",
        description="Feynman graph operads, face-complex differentials and "
                    "configuration-space weights")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, samples_default=200_000, seed_default=0):
        p.add_argument("--format", choices=("json", "text"), default="json")
        p.add_argument("--samples", type=_int_ish,
                       default=_env_int("OPK_SAMPLES", samples_default))
        p.add_argument("--seed", type=_int_ish,
                       default=_env_int("OPK_SEED", seed_default))
        p.add_argument("--cache", default=None,
                       help="cache directory (default $OPK_CACHE or .opk-cache; "
                            "'none' disables)")

    p = sub.add_parser("verify", help="run a verification suite")
    p.add_argument("suite", choices=sorted(SUITES) + ["all"])
    common(p, samples_default=1_000_000)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("enumerate", help="canonical graphs with given counts")
    p.add_argument("--format", choices=("json", "text"), default="json")
    p.add_argument("--aerial", type=int, required=True)
    p.add_argument("--ground", type=int, default=0)
    p.add_argument("--edges", type=int, required=True)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--mode", choices=("free", "down", "up"), default="free")
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("diff", help="boundary differential of a corolla")
    p.add_argument("--format", choices=("json", "text"), default="json")
    p.add_argument("--family", choices=sorted(trees.FAMILIES), required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, default=0)
    p.add_argument("--d", type=int, default=2)
    p.set_defaults(func=cmd_diff)

    p = sub.add_parser("compose", help="operadic substitution of graphs")
    p.add_argument("--format", choices=("json", "text"), default="json")
    p.add_argument("--g0", required=True, help="JSON graph (inline or path)")
    p.add_argument("--parts", nargs="+", required=True)
    p.add_argument("--blocks", required=True,
                   help="semicolon-separated blocks, e.g. '1,2;3'")
    p.set_defaults(func=cmd_compose)

    p = sub.add_parser("weight", help="Monte-Carlo weight of a graph")
    p.add_argument("--graph", required=True)
    p.add_argument("--prop", choices=("sphere_vol", "angle", "kontsevich",
                                      "anti_kontsevich"), required=True)
    p.add_argument("--snap", type=int, default=16)
    p.add_argument("--space", choices=("auto", "rd", "half"), default="auto")
    common(p)
    p.set_defaults(func=cmd_weight)

    p = sub.add_parser("star", help="assemble a star product")
    p.add_argument("--gamma", required=True, help="JSON polynomial")
    p.add_argument("--prop", choices=("kontsevich", "anti_kontsevich", "angle"),
                   required=True)
    p.add_argument("--order", type=int, default=2)
    p.add_argument("--snap", type=int, default=16)
    p.add_argument("--check-assoc", nargs=3, metavar=("F", "G", "H"))
    common(p, samples_default=500_000)
    p.set_defaults(func=cmd_star)

    p = sub.add_parser("mu", help="induced n-ary operation of the aerial theory")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--prop", choices=("sphere_vol", "sphere", "angle"),
                   default="sphere_vol")
    p.add_argument("--snap", type=int, default=16)
    common(p)
    p.set_defaults(func=cmd_mu)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
