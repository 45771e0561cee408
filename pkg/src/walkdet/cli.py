"""Command-line front end.

Exit status: 0 success, 2 usage or unreadable input, 3 domain or
convergence failure, 4 data dimension mismatch.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import bounds, detector, graphs, ldp, montecarlo, spectral
from .errors import DimensionMismatch, NotAperiodic, WalkdetError

EXIT_USAGE = 2
EXIT_DOMAIN = 3
EXIT_MISMATCH = 4
DEFAULT_LAZY = 1e-6


class UsageError(Exception):
    pass


# ----------------------------------------------------------------------
# output helpers


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.17g}"


def _json_value(v, indent: int) -> str:
    pad = "  " * (indent + 1)
    if v is None:
        return "null"
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, dict):
        if not v:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_json_value(x, indent + 1)}" for k, x in v.items()]
        return "{\n" + ",\n".join(items) + "\n" + "  " * indent + "}"
    if isinstance(v, (list, tuple)):
        if not v:
            return "[]"
        items = [pad + _json_value(x, indent + 1) for x in v]
        return "[\n" + ",\n".join(items) + "\n" + "  " * indent + "]"
    if isinstance(v, (float, np.floating)) and not math.isfinite(v):
        return "null"
    return fmt(v)


def to_json(obj) -> str:
    """JSON with 17-significant-digit numbers; stable under reload."""
    return _json_value(obj, 0) + "\n"


def _open_out(path):
    if path in (None, "-"):
        return sys.stdout, False
    return open(path, "w", newline="", encoding="ascii"), True


def _emit(text: str, path) -> None:
    fh, own = _open_out(path)
    try:
        fh.write(text)
    finally:
        if own:
            fh.close()


def _warn(msg: str) -> None:
    print(f"walkdet: warning: {msg}", file=sys.stderr)


# ----------------------------------------------------------------------
# chain sources


def _parse_gen(spec: str) -> tuple[str, dict[str, str]]:
    kind, _, rest = spec.partition(":")
    params = {}
    for part in filter(None, rest.split(",")):
        key, eq, val = part.partition("=")
        if not eq:
            raise UsageError(f"generator parameter {part!r} is not key=value")
        params[key.strip()] = val.strip()
    return kind.strip(), params


def graph_from_spec(spec: str) -> graphs.Graph:
    """``cycle:n=101``, ``grid:w=32,h=32[,loops=1]``, ``rgg:n=..,radius=..,seed=..``,
    ``ws:n=..,k=..,p=..,seed=..``."""
    kind, p = _parse_gen(spec)
    try:
        if kind == "cycle":
            return graphs.gen_cycle(int(p.get("n", 101)), self_loops=p.get("loops", "0") == "1")
        if kind == "grid":
            return graphs.gen_grid(int(p.get("w", 32)), int(p.get("h", 32)), self_loops=p.get("loops", "0") == "1")
        if kind == "rgg":
            return graphs.gen_rgg(int(p.get("n", 1000)), float(p.get("radius", graphs.RGG_RADIUS)), int(p.get("seed", 0)))
        if kind == "ws":
            return graphs.gen_watts_strogatz(
                int(p.get("n", 1000)), int(p.get("k", graphs.WS_K)), float(p.get("p", graphs.WS_P)), int(p.get("seed", 0))
            )
    except ValueError as exc:
        if isinstance(exc, WalkdetError):
            raise
        raise UsageError(f"bad generator parameters in {spec!r}: {exc}") from exc
    raise UsageError(f"unknown generator {kind!r}")


def _walk(g: graphs.Graph, args) -> spectral.MarkovChain:
    try:
        return graphs.uniform_walk_chain(g)
    except NotAperiodic:
        if args.no_lazy:
            raise
        _warn(f"walk is periodic; adding self-loops of probability {args.lazy:g}")
        return graphs.uniform_walk_chain(g, laziness=args.lazy)


def load_chain(args) -> spectral.MarkovChain:
    sources = [s for s in (args.graph, args.chain, args.gen) if s is not None]
    if len(sources) != 1:
        raise UsageError("give exactly one of --graph, --chain, --gen")
    try:
        if args.chain is not None:
            return spectral.read_chain(args.chain)
        if args.graph is not None:
            return _walk(graphs.read_edge_list(args.graph), args)
    except OSError as exc:
        raise UsageError(str(exc)) from exc
    return _walk(graph_from_spec(args.gen), args)


def _beta_grid(args) -> list[float]:
    if args.betas:
        vals = [float(b) for b in args.betas.split(",") if b.strip()]
    else:
        if args.beta_step <= 0:
            raise UsageError("--beta-step must be positive")
        count = int(math.floor((args.beta_max - args.beta_min) / args.beta_step + 1e-9)) + 1
        vals = [args.beta_min + i * args.beta_step for i in range(count)]
    if not vals or any(b < 0 for b in vals) or any(b2 <= b1 for b1, b2 in zip(vals, vals[1:])):
        raise UsageError("beta grid must be nonempty, nonnegative and ascending")
    return vals


# ----------------------------------------------------------------------
# commands


def cmd_gen_graph(args) -> int:
    if args.kind == "cycle":
        g = graphs.gen_cycle(args.n or 101, self_loops=args.self_loops)
    elif args.kind == "grid":
        g = graphs.gen_grid(args.w, args.h, self_loops=args.self_loops)
    elif args.kind == "rgg":
        g = graphs.gen_rgg(args.n or 1000, args.radius, args.seed)
    else:
        g = graphs.gen_watts_strogatz(args.n or 1000, args.k, args.p, args.seed)
    to_stdout = args.output in (None, "-")
    graphs.write_edge_list(sys.stdout if to_stdout else args.output, g)
    print(f"nodes {g.m} edge_records {len(g.edges)}", file=sys.stderr if to_stdout else sys.stdout)
    return 0


def cmd_analyze(args) -> int:
    chain = load_chain(args)
    h = spectral.entropy_rate(chain)
    rr = spectral.rho_extremes(chain)
    report = {
        "M": chain.m,
        "H": h,
        "log_lambda0": spectral.path_count_rate(chain),
        "rho_min": rr.rho_min,
        "rho_max": rr.rho_max,
        "threshold_beta": math.sqrt(2.0 * h),
        "uniform_degree": chain.uniform_degree,
    }
    if args.curve:
        ldp.entropy_curve(chain).to_csv(args.curve)
    _emit(to_json(report), args.output)
    return 0


def cmd_bounds(args) -> int:
    chain = load_chain(args)
    rows = [bounds.all_bounds(chain, b) for b in _beta_grid(args)]
    if any(r.asymptotic for r in rows):
        _warn("some beta values lie beyond the parametric range; physics_lb uses the large-beta asymptote")
    fh, own = _open_out(args.output)
    try:
        bounds.bounds_csv(fh, rows)
    finally:
        if own:
            fh.close()
    return 0


def cmd_simulate(args) -> int:
    chain = load_chain(args)
    if args.observations:
        if args.hypothesis == "h0":
            obs = detector.simulate_h0(chain.m, args.n, args.seed)
        else:
            if args.beta is None:
                raise UsageError("--hypothesis h1 needs --beta")
            obs = detector.simulate_h1(chain, args.beta, args.n, args.seed)
        truth = args.observations + ".truth" if obs.truth is not None else None
        detector.write_observations(args.observations, obs, truth)
        return 0
    grid = [args.beta] if args.betas is None and args.beta is not None else _beta_grid(args)
    threads = montecarlo.resolve_threads(args.threads)
    ests = [montecarlo.estimate_exponent(chain, b, args.n, args.trials, args.seed, threads) for b in grid]
    fh, own = _open_out(args.output)
    try:
        montecarlo.sweep_csv(fh, ests)
    finally:
        if own:
            fh.close()
    return 0


def cmd_detect(args) -> int:
    chain = load_chain(args)
    try:
        obs = detector.read_observations(args.data)
    except OSError as exc:
        raise UsageError(str(exc)) from exc
    res = detector.log_likelihood_ratio(chain, args.beta, obs)
    out = {
        "ell": res.ell,
        "log_l": res.log_l,
        "n": res.n,
        "tau": args.tau,
        "decision": detector.neyman_pearson(res, args.tau).value,
    }
    _emit(to_json(out), args.output)
    return 0


def cmd_roc(args) -> int:
    chain = load_chain(args)
    pts = detector.estimate_roc(chain, args.beta, args.n, args.trials, args.seed)
    lines = ["tau,pf,pm"] + [f"{fmt(t)},{fmt(pf)},{fmt(pm)}" for t, pf, pm in pts]
    _emit("\n".join(lines) + "\n", args.output)
    return 0


# ----------------------------------------------------------------------
# parser


def _chain_args(p: argparse.ArgumentParser) -> None:
    src = p.add_argument_group("chain source (exactly one)")
    src.add_argument("--graph", help="edge-list file; the uniform walk on it is used")
    src.add_argument("--chain", help="transition matrix file")
    src.add_argument("--gen", help="generator spec such as cycle:n=101 or grid:w=32,h=32")
    p.add_argument("--lazy", type=float, default=DEFAULT_LAZY, help="self-loop probability added to periodic walks (default 1e-6)")
    p.add_argument("--no-lazy", action="store_true", help="fail on periodic walks instead")


def _grid_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--betas", help="comma-separated ascending beta values")
    p.add_argument("--beta-min", type=float, default=0.0)
    p.add_argument("--beta-max", type=float, default=4.0)
    p.add_argument("--beta-step", type=float, default=0.05)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="walkdet", description="Detection of a random walk hidden in Gaussian noise.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-graph", help="write a benchmark graph as an edge list")
    p.add_argument("kind", choices=["cycle", "grid", "rgg", "ws"])
    p.add_argument("--n", type=int)
    p.add_argument("--w", type=int, default=32)
    p.add_argument("--h", type=int, default=32)
    p.add_argument("--radius", type=float, default=graphs.RGG_RADIUS)
    p.add_argument("--k", type=int, default=graphs.WS_K)
    p.add_argument("--p", type=float, default=graphs.WS_P)
    p.add_argument("--self-loops", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_gen_graph)

    p = sub.add_parser("analyze", help="entropy rate, path growth and mean-cycle range")
    _chain_args(p)
    p.add_argument("--curve", help="also write the s(rho) curve as CSV")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("bounds", help="error-exponent bounds over a beta grid")
    _chain_args(p)
    _grid_args(p)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("simulate", help="Monte Carlo exponent sweep, or one observation file")
    _chain_args(p)
    _grid_args(p)
    p.add_argument("--beta", type=float, help="single beta value")
    p.add_argument("--n", type=int, default=montecarlo.DEFAULT_N)
    p.add_argument("--trials", type=int, default=montecarlo.DEFAULT_TRIALS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, help=f"worker threads (default ${montecarlo.THREADS_ENV} or 1)")
    p.add_argument("--observations", help="write one observation matrix here instead of a sweep")
    p.add_argument("--hypothesis", choices=["h0", "h1"], default="h1")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("detect", help="likelihood-ratio test on an observation file")
    _chain_args(p)
    p.add_argument("--data", required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--tau", type=float, default=0.0)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("roc", help="empirical ROC points")
    _chain_args(p)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_roc)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"walkdet: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DimensionMismatch as exc:
        print(f"walkdet: error: {exc}", file=sys.stderr)
        return EXIT_MISMATCH
    except (WalkdetError, ArithmeticError, ValueError) as exc:
        print(f"walkdet: error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
