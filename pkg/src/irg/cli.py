"""Command-line interface: ``irg <command> ...``.

Exit status is 0 on success, 1 on usage or input errors, 2 when a resource guard
refuses the work. Errors go to stderr prefixed with ``irg-error:``.
"""

from __future__ import annotations

import argparse
import json
import math
import secrets
import sys
from pathlib import Path

from . import bounds, experiment, graph, kernel, partition, sampler
from .errors import IRGInputError, ResourceGuardError
from .space import FiniteWeighted, parse_space


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _json_default(v):
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    if hasattr(v, "item"):
        return v.item()
    raise TypeError(f"cannot serialize {type(v).__name__}")


def _emit(obj) -> None:
    print(json.dumps(obj, default=_json_default))


def _seed(value: int | None) -> int:
    return secrets.randbits(64) if value is None else value


def _seed_arg(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return v


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t.strip()]


def _ints(text: str) -> list[int]:
    return [int(t) for t in text.split(",") if t.strip()]


def _kernel_space(args) -> tuple[kernel.Kernel, object]:
    k = kernel.parse_kernel(args.kernel)
    s = parse_space(args.space) if args.space else k.default_space()
    k.check_space(s)
    return k, s


# ---------------------------------------------------------------- commands


def cmd_sample(args) -> int:
    k, s = _kernel_space(args)
    seed = _seed(args.seed)
    g = sampler.sample_graph(s, k, args.n, seed, args.mode)
    sampler.write_edge_list(g, args.out)
    _emit({"seed": seed, "n": g.n, "edges": g.num_edges, "mode": g.mode, "out": str(args.out)})
    return 0


def cmd_analyze(args) -> int:
    g = sampler.read_edge_list(args.file)
    region = graph.parse_region(args.region) if args.region else None
    if region is not None and isinstance(g.space, FiniteWeighted):
        raise IRGInputError("regions apply to continuous spaces only")
    d = graph.connected_components(g, region).to_dict()
    d["seed"] = g.seed
    _emit(d)
    return 0


def cmd_kernel_info(args) -> int:
    k, s = _kernel_space(args)
    f = kernel.isolation_parameter(k, grid_size=args.grid, space=s, method=args.method)
    ok, diag = kernel.is_l2(k, s)
    _emit({"kernel": k.to_dict(), "space": s.to_dict(), **f.to_dict(), "l2": ok, "l2_diagnostic": diag})
    return 0


def _need(args, *names):
    missing = [f"--{n.replace('_', '-')}" for n in names if getattr(args, n) is None]
    if missing:
        raise UsageError(f"formula {args.formula!r} needs {', '.join(missing)}")


def cmd_bounds(args) -> int:
    f = args.formula
    if f in ("small-k", "large-k"):
        _need(args, "n", "k", "lambda_star", "lambda2")
        inp = bounds.BoundInputs(args.n, args.k, args.lambda_star, args.lambda2)
        fn = bounds.cut_bound_small_k if f == "small-k" else bounds.cut_bound_large_k
        inputs = {"n": args.n, "k": args.k, "lambda_star": args.lambda_star, "lambda2_sup": args.lambda2}
        value = fn(inp)
    elif f == "delta":
        _need(args, "lambda_star", "lambda2")
        inputs = {"lambda_star": args.lambda_star, "lambda2_sup": args.lambda2}
        value = bounds.min_component_fraction(args.lambda_star, args.lambda2)
    elif f == "isolated-lb":
        _need(args, "kernel", "n", "threshold")
        k, s = _kernel_space(args)
        res = bounds.isolated_expectation_lower_bound(k, args.n, args.threshold, s)
        inputs = {"kernel": k.to_dict(), "space": s.to_dict(), "n": args.n, "threshold": args.threshold}
        value = res.value
        if res.diagnostic:
            inputs["diagnostic"] = res.diagnostic
    else:
        _need(args, "t")
        inputs = {"t": args.t}
        value = bounds.chernoff_rate(args.t)
    _emit({"formula": f, "inputs": inputs, "value": value})
    return 0


def cmd_partition(args) -> int:
    k, s = _kernel_space(args)
    if args.probe:
        _emit(partition.irreducibility_probe(k, args.m, s).to_dict())
        return 0
    p = partition.build_partition(s, args.m)
    _emit(partition.build_partition_graph(k, p, args.method).to_dict())
    return 0


def cmd_sweep(args) -> int:
    try:
        d = json.loads(Path(args.plan).read_text())
    except json.JSONDecodeError as exc:
        raise IRGInputError(f"{args.plan}: invalid JSON ({exc})") from None
    overrides = {"seed": args.seed, "replicates": args.reps, "scales": args.scales, "sizes": args.sizes, "mode": args.mode}
    d.update({key: v for key, v in overrides.items() if v is not None})
    if d.get("seed", d.get("master_seed")) is None:
        d["seed"] = _seed(None)
    plan = experiment.ExperimentPlan.from_dict(d)
    result = experiment.run_plan(plan, workers=args.workers, budget=args.budget)
    experiment.write_csv(result.records, args.out)
    summary_path = args.summary or str(Path(args.out).with_suffix(".summary.json"))
    experiment.write_summary(result, summary_path)
    if args.svg:
        experiment.write_svg(result, args.svg)
    _emit({"seed": plan.master_seed, "records": len(result.records), "csv": str(args.out), "summary": summary_path,
           "cells": [c.to_dict(("connected",)) for c in result.cells]})
    return 0


def cmd_counterexample(args) -> int:
    seed = _seed(args.seed)
    _emit(experiment.counterexample_experiment(args.c, args.n, args.reps, seed).to_dict())
    return 0


def cmd_window(args) -> int:
    seed = _seed(args.seed)
    _emit(experiment.window_experiment(args.n, args.reps, seed))
    return 0


def cmd_oracle(args) -> int:
    if args.which == "gilbert":
        print(repr(bounds.gilbert_connectivity_exact(args.n, args.p)))
        return 0
    k = kernel.parse_kernel(args.kernel)
    s = parse_space(args.space)
    if not isinstance(s, FiniteWeighted):
        raise IRGInputError("the finite oracle needs a finite space")
    print(repr(bounds.exact_connectivity_finite(s, k, args.n)))
    return 0


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="irg", description="Inhomogeneous random graphs G(n, K) at density ln(n)/n.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sample", help="draw a graph and write an edge list")
    s.add_argument("--space", help="interval | torus | finite:weights=[...] (default: the kernel's own)")
    s.add_argument("--kernel", required=True, help="e.g. constant:c=2 or a JSON object")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--seed", type=_seed_arg)
    s.add_argument("--mode", default="naive", choices=sampler.MODES + ("auto",))
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_sample)

    s = sub.add_parser("analyze", help="component summary of an edge-list file")
    s.add_argument("file")
    s.add_argument("--region", help="count isolated vertices with x<t, x<=t, x>t or x>=t")
    s.set_defaults(func=cmd_analyze)

    s = sub.add_parser("kernel-info", help="lambda*, sup lambda_2 and the L2 verdict")
    s.add_argument("--kernel", required=True)
    s.add_argument("--space")
    s.add_argument("--grid", type=int, default=1024)
    s.add_argument("--method", default="auto", choices=("auto", "grid"))
    s.set_defaults(func=cmd_kernel_info)

    s = sub.add_parser("bounds", help="evaluate an analytic bound")
    s.add_argument("--formula", required=True, choices=("small-k", "large-k", "delta", "isolated-lb", "rate"))
    s.add_argument("--n", type=int)
    s.add_argument("--k", type=int)
    s.add_argument("--lambda-star", type=float)
    s.add_argument("--lambda2", type=float)
    s.add_argument("--kernel")
    s.add_argument("--space")
    s.add_argument("--threshold", type=float)
    s.add_argument("--t", type=float)
    s.set_defaults(func=cmd_bounds)

    s = sub.add_parser("partition", help="partition graph H_m, or the irreducibility probe")
    s.add_argument("--kernel", required=True)
    s.add_argument("--space")
    s.add_argument("--m", type=int, required=True)
    s.add_argument("--method", default="exact", choices=("exact", "grid"))
    s.add_argument("--probe", action="store_true", help="probe levels 1..m instead of printing H_m")
    s.set_defaults(func=cmd_partition)

    s = sub.add_parser("sweep", help="run an experiment plan")
    s.add_argument("--plan", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--svg")
    s.add_argument("--summary")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--seed", type=_seed_arg)
    s.add_argument("--reps", type=int)
    s.add_argument("--scales", type=_floats)
    s.add_argument("--sizes", type=_ints)
    s.add_argument("--mode", choices=sampler.MODES + ("auto",))
    s.add_argument("--budget", type=float, default=experiment.DEFAULT_BUDGET)
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("counterexample", help="disconnection despite lambda* > 1")
    s.add_argument("--c", type=float, required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--reps", type=int, required=True)
    s.add_argument("--seed", type=_seed_arg)
    s.set_defaults(func=cmd_counterexample)

    s = sub.add_parser("window", help="connectivity at lambda* = 1 for K = 1")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--reps", type=int, required=True)
    s.add_argument("--seed", type=_seed_arg)
    s.set_defaults(func=cmd_window)

    s = sub.add_parser("oracle", help="exact connectivity probabilities")
    o = s.add_subparsers(dest="which", required=True)
    g = o.add_parser("gilbert")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--p", type=float, required=True)
    f = o.add_parser("finite")
    f.add_argument("--space", required=True)
    f.add_argument("--kernel", required=True)
    f.add_argument("--n", type=int, required=True)
    s.set_defaults(func=cmd_oracle)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"irg-error: usage: {exc}", file=sys.stderr)
        return 1
    except ResourceGuardError as exc:
        print(f"irg-error: guard: {exc}", file=sys.stderr)
        return 2
    except (IRGInputError, OSError, ValueError) as exc:
        print(f"irg-error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
