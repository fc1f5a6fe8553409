"""Command-line front end: ``hofa <command> [flags]``.

Output is JSON (sorted keys) or CSV, with a header recording the version,
command, seed and sample counts, so identical invocations give identical
bytes.  Exit codes: 0 success, 2 usage/parse/capacity errors, 3 failed checks.
"""

import argparse
import csv
import io
import json
import math
import os
import sys
import warnings

import numpy as np

from . import __version__
from .errors import HofaError

EXIT_OK, EXIT_ERROR, EXIT_CHECK = 0, 2, 3


class CliError(Exception):
    def __init__(self, flag, message):
        super().__init__(f"{flag}: {message}" if flag else message)


def _load_text(path, flag):
    try:
        if path == "-":
            return sys.stdin.read()
        with open(path) as fh:
            return fh.read()
    except OSError as exc:
        raise CliError(flag, exc.strerror or str(exc))


def _load_function(path, flag="--fn"):
    from .functions import FiniteFunction

    try:
        return FiniteFunction.from_text(_load_text(path, flag), source=path)
    except HofaError as exc:
        raise CliError(flag, str(exc))


def _load_factor(path, flag):
    from .factors import PolynomialFactor
    from .polynomials import read_polys

    try:
        p, n, polys = read_polys(_load_text(path, flag), source=path)
        return PolynomialFactor(polys, p=p, n=n)
    except HofaError as exc:
        raise CliError(flag, str(exc))


def _load_poly(path, flag="--poly"):
    from .polynomials import NonClassicalPoly

    try:
        return NonClassicalPoly.from_text(_load_text(path, flag), source=path)
    except HofaError as exc:
        raise CliError(flag, str(exc))


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


# -- commands -------------------------------------------------------------------

def cmd_gowers(args):
    from .gowers import gowers_norm_estimate, gowers_norm_exact

    f = _load_function(args.fn)
    if args.samples is None or args.exact:
        est = gowers_norm_exact(f, args.order)
    else:
        est = gowers_norm_estimate(f, args.order, args.samples, args.seed)
    d = est.as_dict()
    return {"value": d["value"], "std_error": d["std_error"], "mode": d["mode"],
            "order": d["order"], "clamped": d["clamped"]}, {"samples": args.samples}


def cmd_restrict(args):
    from .field import AffineMap, sample_affine_embedding
    from .functions import restrict
    from .rng import make_rng

    f = _load_function(args.fn)
    if args.map:
        try:
            A = AffineMap.from_text(_load_text(args.map, "--map"), source=args.map)
        except HofaError as exc:
            raise CliError("--map", str(exc))
    elif args.m is not None:
        A = sample_affine_embedding(make_rng(args.seed), args.m, f.n, f.p)
    else:
        raise CliError("--map", "either --map or -m is required")
    g = restrict(f, A)
    return {"function": g.to_text(), "map": A.to_text(), "p": g.p, "n": g.n}, {}


def cmd_dist(args):
    from . import functions as F

    f, g = _load_function(args.fn1, "--fn1"), _load_function(args.fn2, "--fn2")
    metric = {"l1": F.l1_distance, "l2": F.l2_distance, "linf": F.linf_distance,
              "hamming": F.hamming_distance}[args.metric]
    return {"distance": metric(f, g), "metric": args.metric}, {}


def _mu_table(mu):
    return [{"outcome": k, "probability": v} for k, v in sorted(mu.as_dict().items())]


def cmd_mu(args):
    from .distributions import mu_estimate, mu_exact

    f = _load_function(args.fn)
    if args.samples is None or args.exact:
        mu = mu_exact(f, args.k)
    else:
        mu = mu_estimate(f, args.k, args.samples, args.seed)
    return {"k": args.k, "p": f.p, "mode": mu.mode, "table": _mu_table(mu)}, {"samples": args.samples}


def cmd_mu_dist(args):
    from .distributions import mu_estimate, mu_exact, stat_distance

    f, g = _load_function(args.fn1, "--fn1"), _load_function(args.fn2, "--fn2")
    if args.samples is None:
        a, b = mu_exact(f, args.k), mu_exact(g, args.k)
    else:
        a = mu_estimate(f, args.k, args.samples, args.seed)
        b = mu_estimate(g, args.k, args.samples, args.seed + 1)
    return {"stat_distance": stat_distance(a, b), "k": args.k, "mode": a.mode}, {"samples": args.samples}


def cmd_poly_eval(args):
    P = _load_poly(args.poly)
    if args.point is not None:
        try:
            x = [int(t) for t in args.point.split(",")]
        except ValueError:
            raise CliError("--point", "expected comma-separated integers")
        if len(x) != P.n:
            raise CliError("--point", f"expected {P.n} coordinates")
        v = P(x)
        return {"numerator": v.numerator, "denominator": P.p ** (v.level + 1),
                "value": str(v.as_fraction())}, {}
    t = P.table()
    return {"denominator": P.p ** (t.level + 1), "numerators": t.num.tolist()}, {}


def cmd_poly_verify(args):
    from .polynomials import verify_degree
    from .rng import make_rng

    P = _load_poly(args.poly)
    d = P.degree if args.degree is None else args.degree
    ok = verify_degree(P, d, samples=args.samples, rng=make_rng(args.seed))
    return {"verified": bool(ok), "degree": d, "declared_degree": P.degree, "depth": P.depth,
            "mode": "exact" if args.samples is None else "monte_carlo"}, {"samples": args.samples}


def cmd_factor_stats(args):
    from .factors import atom_stats, factor_rank_proxy

    B = _load_factor(args.factor, "--factor")
    st = atom_stats(B)
    out = {
        "complexity": B.complexity,
        "order": B.order,
        "signature": [list(s) for s in B.signature],
        "nonempty_atoms": st.n_nonempty,
        "max_deviation": st.max_deviation,
        "atoms": [{"label": list(b), "count": c, "probability": c / st.total}
                  for b, c in sorted(st.counts.items())],
    }
    if args.rank:
        rp = factor_rank_proxy(B, gowers=not args.no_gowers)
        out["rank_proxy"] = {"max_bias": rp.max_bias, "argmax_bias": list(rp.argmax_bias),
                             "max_gowers": rp.max_gowers, "gowers_order": rp.gowers_order}
    return out, {}


def cmd_decompose(args):
    from .factors import decompose
    from .functions import FiniteFunction
    from .polynomials import write_polys

    f = _load_function(args.fn)
    init = _load_factor(args.init_factor, "--init-factor") if args.init_factor else None
    dec = decompose(f, args.degree, args.tau, init_factor=init, depth=args.depth,
                    complexity_cap=args.complexity_cap)
    cert = dec.certificate()
    if args.bundle:
        os.makedirs(args.bundle, exist_ok=True)
        for name, vals, kind in (("f1", dec.f1, "unit"), ("f2", dec.f2, "signed"), ("f3", dec.f3, "signed")):
            with open(os.path.join(args.bundle, f"{name}.txt"), "w") as fh:
                fh.write(FiniteFunction(vals, f.p, kind=kind, n=f.n).to_text())
        polys = [P for P in dec.factor.polys if P is not None]
        if len(polys) == dec.factor.complexity:
            with open(os.path.join(args.bundle, "factor.txt"), "w") as fh:
                fh.write(write_polys(polys, f.p, f.n))
        with open(os.path.join(args.bundle, "certificate.json"), "w") as fh:
            fh.write(json.dumps(_jsonable(cert), sort_keys=True, indent=2) + "\n")
    return cert, {}


def cmd_test(args):
    from .property_testing import TesterConfig, distance_tester, parse_property

    f = _load_function(args.fn)
    try:
        P = parse_property(args.property, f.p)
        cfg = TesterConfig(args.delta, args.eps, args.m, args.trials, args.seed)
    except (ValueError, OSError) as exc:
        raise CliError("--property", str(exc))
    res = distance_tester(f, P, cfg, threads=args.threads)
    return res.as_dict(), {"samples": args.trials}


def cmd_pipeline(args):
    from .property_testing import PipelineConfig, parse_property, soundness_pipeline

    f = _load_function(args.fn)
    try:
        P = parse_property(args.property, f.p)
    except (ValueError, OSError) as exc:
        raise CliError("--property", str(exc))
    cfg = PipelineConfig(m=args.m, degree=args.degree, tau=args.tau, gamma=args.gamma, eta=args.eta,
                         delta=args.delta, eps=args.eps, embeddings=args.embeddings, seed=args.seed)
    return soundness_pipeline(f, P, cfg), {"samples": args.embeddings}


def cmd_check(args):
    from .checks import check_suite

    ok, results = check_suite(args.scale, args.seed, threads=args.threads, sabotage=args.sabotage)
    out = {"scale": args.scale, "passed": ok, "checks": [r.as_dict() for r in results]}
    if args.sabotage:
        out["sabotage"] = args.sabotage
    return out, {}, (EXIT_OK if ok else EXIT_CHECK)


# -- parser -----------------------------------------------------------------------

def _global_flags(parser, suppress):
    default = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    parser.add_argument("--seed", type=int, default=default(0), help="master seed (default 0)")
    parser.add_argument("--threads", type=int, default=default(None),
                        help="worker threads; results do not depend on this")
    parser.add_argument("--format", choices=("json", "csv"), default=default("json"))
    parser.add_argument("--out", default=default(None), help="write output here instead of stdout")


def build_parser():
    parser = argparse.ArgumentParser(prog="hofa", description="Higher-order Fourier analysis toolkit.")
    parser.add_argument("--version", action="version", version=f"hofa {__version__}")
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        p = sub.add_parser(name, help=help_)
        _global_flags(p, suppress=True)
        p.set_defaults(func=fn)
        return p

    p = add("gowers", cmd_gowers, "Gowers U^d norm of a function")
    p.add_argument("--fn", required=True)
    p.add_argument("--order", type=int, required=True)
    p.add_argument("--exact", action="store_true")
    p.add_argument("--samples", type=int)

    p = add("restrict", cmd_restrict, "restrict a function along an affine map")
    p.add_argument("--fn", required=True)
    p.add_argument("--map")
    p.add_argument("-m", type=int, help="sample a random embedding of this dimension")

    p = add("dist", cmd_dist, "distance between two functions")
    p.add_argument("--fn1", required=True)
    p.add_argument("--fn2", required=True)
    p.add_argument("--metric", choices=("l1", "l2", "linf", "hamming"), default="l1")

    p = add("mu", cmd_mu, "restriction distribution mu_{f,k}")
    p.add_argument("--fn", required=True)
    p.add_argument("-k", type=int, required=True)
    p.add_argument("--exact", action="store_true")
    p.add_argument("--samples", type=int)

    p = add("mu-dist", cmd_mu_dist, "statistical distance between mu_{f,k} and mu_{g,k}")
    p.add_argument("--fn1", required=True)
    p.add_argument("--fn2", required=True)
    p.add_argument("-k", type=int, required=True)
    p.add_argument("--samples", type=int)

    p = add("poly-eval", cmd_poly_eval, "evaluate a polynomial")
    p.add_argument("--poly", required=True)
    p.add_argument("--point")

    p = add("poly-verify", cmd_poly_verify, "check that all (d+1)-fold derivatives vanish")
    p.add_argument("--poly", required=True)
    p.add_argument("--degree", type=int)
    p.add_argument("--samples", type=int)

    p = add("factor-stats", cmd_factor_stats, "atom statistics of a polynomial factor")
    p.add_argument("--factor", required=True)
    p.add_argument("--rank", action="store_true", help="also report the bias rank proxy")
    p.add_argument("--no-gowers", action="store_true")

    p = add("decompose", cmd_decompose, "energy-increment decomposition")
    p.add_argument("--fn", required=True)
    p.add_argument("--degree", type=int, required=True)
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--init-factor")
    p.add_argument("--depth", type=int, default=0)
    p.add_argument("--complexity-cap", type=int, default=12)
    p.add_argument("--bundle", help="directory for f1/f2/f3, factor and certificate files")

    p = add("test", cmd_test, "restriction-based distance tester")
    p.add_argument("--fn", required=True)
    p.add_argument("--property", required=True, help="rm:D, all, close:D:DELTA or file:PATH")
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("-m", type=int, required=True)
    p.add_argument("--trials", type=int, default=1)

    p = add("pipeline", cmd_pipeline, "numerical walk through the soundness argument")
    p.add_argument("--fn", required=True)
    p.add_argument("--property", required=True)
    p.add_argument("-m", type=int, required=True)
    p.add_argument("--degree", type=int, default=1)
    p.add_argument("--tau", type=float, default=0.1)
    p.add_argument("--gamma", type=float, default=0.05)
    p.add_argument("--eta", type=float, default=0.1)
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--eps", type=float, default=0.2)
    p.add_argument("--embeddings", type=int, default=100)

    p = add("check", cmd_check, "run the inequality battery")
    p.add_argument("--scale", choices=("small", "medium"), default="small")
    p.add_argument("--sabotage", choices=("gowers",))
    return parser


# -- output -----------------------------------------------------------------------

def _flatten(prefix, x, rows):
    if isinstance(x, dict):
        for k in sorted(x):
            _flatten(f"{prefix}.{k}" if prefix else str(k), x[k], rows)
    elif isinstance(x, list) and x and all(isinstance(v, dict) for v in x):
        for i, v in enumerate(x):
            _flatten(f"{prefix}[{i}]", v, rows)
    elif isinstance(x, list):
        rows.append((prefix, " ".join(json.dumps(v) for v in x)))
    elif isinstance(x, str):
        rows.append((prefix, x))
    else:
        rows.append((prefix, json.dumps(x)))


def render(doc, fmt):
    if fmt == "json":
        return json.dumps(doc, sort_keys=True, indent=2) + "\n"
    buf = io.StringIO()
    for k in sorted(doc["header"]):
        v = doc["header"][k]
        buf.write(f"# {k}={v if isinstance(v, str) else json.dumps(v)}\n")
    rows = []
    _flatten("", doc["result"], rows)
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("key", "value"))
    w.writerows(rows)
    return buf.getvalue()


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_ERROR
    if args.threads is None:
        args.threads = os.cpu_count() or 1
    if args.threads < 1:
        print("hofa: error: --threads: must be >= 1", file=sys.stderr)
        return EXIT_ERROR
    code = EXIT_OK
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            out = args.func(args)
        if len(out) == 3:
            result, extra, code = out
        else:
            result, extra = out
    except CliError as exc:
        print(f"hofa: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (HofaError, ValueError) as exc:
        print(f"hofa: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    header = {"version": __version__, "command": args.command, "seed": args.seed}
    header.update({k: v for k, v in extra.items() if v is not None})
    text = render(_jsonable({"header": header, "result": result}), args.format)
    if args.out:
        try:
            with open(args.out, "w") as fh:
                fh.write(text)
        except OSError as exc:
            print(f"hofa: error: --out: {exc.strerror}", file=sys.stderr)
            return EXIT_ERROR
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
