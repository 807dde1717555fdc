"""Command-line entry point: ``coverd <subcommand> ...``.

Exit codes: 0 success, 1 not robust, 2 unknown or timed out, 10 usage
error, 11 bad input or configuration.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .coverdb import CAP, CoverDB, CoveringNotFound, pg_cover
from .design import EPSILON, MAX_K, enumerate_candidates, ratio_report, schonheim_bound
from .engine import RunConfig, make_plan, verify_ball
from .nnverify import AffineBackend, IbpBackend, Network, ScriptedBackend, load_image, load_profile, save_image
from .pg import InducedSelection, PgParams, cvd_stream
from .planner import N_FAIL, N_SAMPLES, REDUCED_SAMPLES

EXIT_USAGE = 10
EXIT_CONFIG = 11

class UsageError(Exception):
    pass

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")

def _fmt(x: float) -> str:
    return f"{x:.6f}"

def _rounded(obj):
    if isinstance(obj, float):
        return float(_fmt(obj))
    if isinstance(obj, dict):
        return {str(k): _rounded(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_rounded(v) for v in obj]
    return obj

def _dump(obj, path) -> None:
    text = json.dumps(_rounded(obj), indent=1, sort_keys=True) + "\n"
    if path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)

def _db(args) -> CoverDB:
    return CoverDB(args.db or os.environ.get("COVERD_DB") or "db")

def _backend(spec: str, seed: int, complete: bool = False):
    if spec == "ibp" and not complete:
        return IbpBackend()
    if spec == "affine":
        return AffineBackend()
    if spec == "none" and complete:
        return None
    if spec.startswith("scripted:"):
        return ScriptedBackend(load_profile(spec.split(":", 1)[1]), seed=seed, complete=complete)
    raise UsageError(f"unknown backend {spec!r}")

# --- subcommands -----------------------------------------------------------

def cmd_covergen(args) -> int:
    if args.kind == "pg":
        sys.stdout.write(pg_cover(args.q, args.m, args.t).to_text())
        return 0
    params = PgParams(args.q, args.m, args.t)
    sel = InducedSelection.draw(params.n_points, args.v, args.seed)
    out = sys.stdout
    out.write(f"# cvd q={args.q} m={args.m} t={args.t} v={args.v} seed={args.seed} b={params.n_blocks}\n")
    for i, block in enumerate(cvd_stream(params, sel, args.worker, args.workers)):
        if args.limit is not None and i >= args.limit:
            break
        out.write(" ".join(map(str, block)) + "\n")
    return 0

def cmd_predict(args) -> int:
    cands = enumerate_candidates(args.v, args.t, args.min_k, args.max_k, args.eps)
    print("q\tm\tv_prime\tk_prime\tb\tmu\tsigma2\toverly_large")
    for c in cands:
        print(
            f"{c.q}\t{c.m}\t{c.n_points}\t{c.block_size}\t{c.b}\t"
            f"{_fmt(c.mu)}\t{_fmt(float(c.variance))}\t{c.overly_large(args.max_k):.6e}"
        )
    return 0

def cmd_bound(args) -> int:
    print(schonheim_bound(args.v, args.k, args.t))
    return 0

def cmd_ratio_report(args) -> int:
    print("t,q,m,mean,b,schonheim,ratio")
    averages = []
    for t in args.t or [4, 5]:
        rep = ratio_report(args.v, t, args.min_mean, args.max_k, args.eps)
        for r in rep.rows:
            print(f"{t},{r.q},{r.m},{_fmt(float(r.mean))},{r.b},{r.bound},{_fmt(r.ratio)}")
        averages.append((t, rep))
    for t, rep in averages:
        print(f"{t},average,,,,,{_fmt(rep.average)}")
    return 0

def cmd_db(args) -> int:
    db = _db(args)
    if args.action == "build":
        n = db.build(args.t, args.max_v, cap=args.cap, verify=not args.no_verify)
        print(f"stored {n} coverings under {db.root / f't{args.t}'}")
    elif args.action == "get":
        try:
            sys.stdout.write(db.get(args.v, args.k, args.t).to_text())
        except CoveringNotFound:
            print(f"no covering C({args.v}, {args.k}, {args.t}) in {db.root}", file=sys.stderr)
            return EXIT_CONFIG
    else:
        cover = db.import_file(args.file, t=args.t)
        print(f"imported C({cover.v}, {cover.k}, {cover.t}) with {cover.b} blocks")
    return 0

def _run_config(args) -> RunConfig:
    return RunConfig(
        t=args.t,
        workers=args.workers,
        timeout=getattr(args, "timeout", None),
        seed=args.seed,
        max_k=args.max_k,
        min_k=args.min_k,
        eps=args.eps,
        n_samples=args.n_samples,
        reduced_samples=args.reduced_samples,
        n_fail=args.n_fail,
        scheduler="threads" if args.threads > 1 else "round-robin",
    )

def _load_inputs(args):
    net = Network.load(args.net)
    x = load_image(args.image)
    if x.size != net.n_inputs:
        raise ValueError(f"image has {x.size} pixels, network expects {net.n_inputs}")
    return net, x

def _complete(args, net):
    spec = args.complete_backend
    if spec == "auto":
        return AffineBackend() if net.is_affine else None
    return _backend(spec, args.seed, complete=True)

def _plan_report(ap) -> dict:
    stats = ap.stats
    return {
        "chosen": {"q": ap.params.q, "m": ap.params.m, "t": ap.params.t, "b": ap.params.n_blocks},
        "label": ap.label,
        "L_digest": ap.selection.digest(),
        "T_complete": ap.plan.T_complete,
        "candidates": [
            {"q": s.candidate.q, "m": s.candidate.m, "b": s.candidate.b, "mu": s.candidate.mu, "score": s.score}
            for s in sorted(ap.scored, key=lambda s: (s.candidate.q, s.candidate.m))
        ],
        "kstats": [
            {
                "k": k,
                "samples": stats.samples[k],
                "success": stats.success(k),
                "time": stats.time(k),
                "T": ap.plan.T[k],
                "f_R": ap.plan.f_R.get(k),
            }
            for k in stats.sizes
        ],
    }

def _db_for_run(args) -> CoverDB:
    db = _db(args)
    return db if db.root.exists() else CoverDB()

def cmd_plan(args) -> int:
    net, x = _load_inputs(args)
    backend = _backend(args.backend, args.seed)
    ap = make_plan(net, x, _run_config(args), backend, _complete(args, net), _db_for_run(args))
    report = _plan_report(ap)
    print(f"chosen q={ap.params.q} m={ap.params.m} b={ap.params.n_blocks}")
    if args.report:
        _dump(report, args.report)
    return 0

def cmd_verify(args) -> int:
    net, x = _load_inputs(args)
    backend = _backend(args.backend, args.seed)
    cfg = _run_config(args)
    verdict, stats = verify_ball(net, x, cfg, backend, _complete(args, net), _db_for_run(args))
    print(verdict.status.value + (" (timeout)" if verdict.timed_out else ""))
    if verdict.witness is not None and args.witness:
        save_image(verdict.witness, args.witness)
    if args.stats:
        doc = stats.as_dict()
        doc["unresolved"] = verdict.unresolved
        doc["timed_out"] = verdict.timed_out
        if getattr(backend, "virtual", False):
            del doc["wall_time"]  # the only field that is not reproducible
        _dump(doc, args.stats)
    return verdict.exit_code

# --- parser ----------------------------------------------------------------

def _add_run_flags(p):
    p.add_argument("--net", required=True, help="network file (relu-net text format)")
    p.add_argument("--image", required=True, help="image file (whitespace-separated pixels in [0, 1])")
    p.add_argument("--t", type=int, required=True, help="number of perturbed pixels")
    p.add_argument("--workers", type=int, default=8, help="number of workers (default 8)")
    p.add_argument("--backend", default="ibp", help="ibp | affine | scripted:PROFILE.tsv")
    p.add_argument("--complete-backend", default="auto",
                   help="auto | affine | none | scripted:PROFILE.tsv (auto: affine for ReLU-free nets)")
    p.add_argument("--max-k", type=int, default=MAX_K, help=f"largest block size (default {MAX_K})")
    p.add_argument("--min-k", type=float, default=None, help="smallest mean block size (default t)")
    p.add_argument("--eps", type=float, default=EPSILON, help=f"overly-large tolerance (default {EPSILON})")
    p.add_argument("--n-samples", type=int, default=N_SAMPLES, help=f"samples per size (default {N_SAMPLES})")
    p.add_argument("--reduced-samples", type=int, default=REDUCED_SAMPLES,
                   help=f"samples per size after reduction (default {REDUCED_SAMPLES})")
    p.add_argument("--n-fail", type=int, default=N_FAIL,
                   help=f"zero-success sizes before reducing (default {N_FAIL})")

def build_parser() -> argparse.ArgumentParser:
    def globals_parser(suppress: bool) -> argparse.ArgumentParser:
        # subcommands accept the global flags too, without clobbering values given earlier
        g = _Parser(add_help=False)

        def dflt(value):
            return argparse.SUPPRESS if suppress else value

        g.add_argument("--seed", type=int, default=dflt(0), help="seed for every randomized step (default 0)")
        g.add_argument("--threads", type=int, default=dflt(1), help="when > 1, run each worker on its own thread (default 1: interleave on one)")
        g.add_argument("--log-level", default=dflt("WARNING"), help="logging level (default WARNING)")
        g.add_argument("--db", default=dflt(None), help="covering database directory (default $COVERD_DB or ./db)")
        return g

    top, common = globals_parser(False), globals_parser(True)

    parser = _Parser(prog="coverd", description="Few-pixel robustness verification with covering designs.",
                     parents=[top])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("covergen", help="print a PG covering or a CVD stream", parents=[common])
    kinds = p.add_subparsers(dest="kind", required=True, parser_class=_Parser)
    for kind in ("pg", "cvd"):
        k = kinds.add_parser(kind, parents=[common])
        k.add_argument("--q", type=int, required=True)
        k.add_argument("--m", type=int, required=True)
        k.add_argument("--t", type=int, required=True)
        if kind == "cvd":
            k.add_argument("--v", type=int, required=True, help="number of pixels")
            k.add_argument("--worker", type=int, default=0)
            k.add_argument("--workers", type=int, default=1)
            k.add_argument("--limit", type=int, default=None, help="stop after this many blocks")
    p.set_defaults(func=cmd_covergen)

    p = sub.add_parser("predict", help="list candidate designs as TSV", parents=[common])
    p.add_argument("--v", type=int, required=True)
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--min-k", type=float, default=None)
    p.add_argument("--max-k", type=int, default=MAX_K)
    p.add_argument("--eps", type=float, default=EPSILON)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("bound", help="covering-size lower bounds", parents=[common])
    p.add_argument("which", choices=["schonheim"])
    p.add_argument("--v", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--t", type=int, required=True)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("ratio-report", help="CVD size vs. Schönheim bound as CSV", parents=[common])
    p.add_argument("--v", type=int, required=True)
    p.add_argument("--t", type=int, action="append", help="repeatable (default 4 and 5)")
    p.add_argument("--min-mean", type=float, default=10)
    p.add_argument("--max-k", type=int, default=MAX_K)
    p.add_argument("--eps", type=float, default=EPSILON)
    p.set_defaults(func=cmd_ratio_report)

    p = sub.add_parser("db", help="covering database", parents=[common])
    acts = p.add_subparsers(dest="action", required=True, parser_class=_Parser)
    a = acts.add_parser("build", parents=[common])
    a.add_argument("--t", type=int, required=True)
    a.add_argument("--max-v", "--max", dest="max_v", type=int, default=MAX_K)
    a.add_argument("--cap", type=int, default=CAP)
    a.add_argument("--no-verify", action="store_true", help="skip the coverage check")
    a = acts.add_parser("get", parents=[common])
    a.add_argument("--v", type=int, required=True)
    a.add_argument("--k", type=int, required=True)
    a.add_argument("--t", type=int, required=True)
    a = acts.add_parser("import", parents=[common])
    a.add_argument("file")
    a.add_argument("--t", type=int, default=None, help="needed for headerless block listings")
    p.set_defaults(func=cmd_db)

    p = sub.add_parser("plan", help="sample, plan and choose a design", parents=[common])
    _add_run_flags(p)
    p.add_argument("--report", default=None, help="write the plan as JSON ('-' for stdout)")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("verify", help="verify robustness in the t-pixel ball", parents=[common])
    _add_run_flags(p)
    p.add_argument("--timeout", type=float, default=None, help="seconds")
    p.add_argument("--stats", default=None, help="write run statistics as JSON")
    p.add_argument("--witness", default=None, help="write a counterexample image here")
    p.set_defaults(func=cmd_verify)
    return parser

def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.WARNING))
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"coverd: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, KeyError, OSError, TypeError) as exc:
        print(f"coverd: {exc}", file=sys.stderr)
        return EXIT_CONFIG

if __name__ == "__main__":
    sys.exit(main())
