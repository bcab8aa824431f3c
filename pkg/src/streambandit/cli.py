"""Command-line front end: ``simulate``, ``bounds``, ``sweep`` and ``verify``.

Exit codes: 0 success, 1 a verification criterion failed, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import re
import sys

from ._util import fmt
from .bounds import bound_report
from .distributions import DistributionSpec
from .harness import ConfigError, ExperimentConfig, default_workers, run_experiment, summaries_to_csv, summary_to_json
from .strategies import StrategySpec
from .stream import PayoutModel, episode_stream, run_episode, write_trace_csv

_K_EXPR = re.compile(r"^\s*(?:(\d+(?:\.\d*)?)\s*\*\s*)?n\s*(?:\^\s*(\d+(?:\.\d*)?))?\s*$")


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return value


def _dist(text: str) -> DistributionSpec:
    try:
        return DistributionSpec.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _strategy(text: str) -> StrategySpec:
    try:
        return StrategySpec.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _payout(text: str) -> PayoutModel:
    try:
        return PayoutModel.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _k_arg(text: str) -> str:
    if text.strip().isdigit() and int(text) >= 1:
        return text.strip()
    if _K_EXPR.match(text):
        return text
    raise argparse.ArgumentTypeError(f"expected an integer or an expression like n^2 or 4*n^1.5, got {text!r}")


def resolve_k(text: str, n: int) -> int:
    """``10000`` -> 10000; ``n^2`` -> n*n; ``4*n^1.5`` -> ceil(4 * n**1.5)."""
    text = str(text).strip()
    if text.isdigit():
        return int(text)
    match = _K_EXPR.match(text)
    if not match:
        raise ValueError(f"bad budget expression {text!r}")
    coef = float(match.group(1) or 1)
    power = float(match.group(2) or 1)
    value = coef * n**power
    nearest = round(value)
    return int(nearest) if abs(value - nearest) < 1e-9 * max(1.0, value) else math.ceil(value)


def _add_experiment_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--strategy", type=_strategy, default=StrategySpec.parse("known-uniform"),
                   help="e.g. known-uniform, known-power:m=2,c=1, beta-threshold, oracle, always-first, "
                        "adaptive:m=1|2,B=10,sample_exp=0.9,pool_exp=0.2")
    p.add_argument("--dist", type=_dist, default=DistributionSpec.uniform(),
                   help="uniform | power:m=2 | power:m=2,c=1.5")
    p.add_argument("--n", type=_positive_int, default=100, help="number of bandits")
    p.add_argument("--k", type=_k_arg, default="10000", help="pull budget (integer or expression in n, e.g. n^2)")
    p.add_argument("--episodes", type=_positive_int, default=1000)
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--payout", type=_payout, default=PayoutModel.BERNOULLI, help="bernoulli | fixed")
    p.add_argument("--threads", type=_positive_int, default=None, help="worker processes (default: all cores)")
    p.add_argument("--out", default="-", help="CSV output path ('-' for stdout)")
    p.add_argument("--json", dest="json_path", default=None, help="also write a JSON summary here")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="streambandit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one Monte Carlo experiment")
    _add_experiment_flags(p)
    p.add_argument("--trace", default=None, help="write a per-decision trace CSV (stepwise engine)")
    p.add_argument("--trace-episodes", type=_positive_int, default=1, help="episodes to include in the trace")

    p = sub.add_parser("bounds", help="print analytic reference values")
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--k", type=_positive_int, default=None)
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--csv", dest="csv_path", default=None, help="also write the report as CSV")

    p = sub.add_parser("sweep", help="one summary row per parameter value")
    _add_experiment_flags(p)
    p.add_argument("--param", required=True, choices=["n", "k", "m", "c", "episodes"])
    p.add_argument("--values", required=True, help="comma-separated list")
    p.add_argument("--bounds-only", action="store_true", help="emit analytic bounds instead of simulating")

    p = sub.add_parser("verify", help="run the acceptance suite")
    p.add_argument("--suite", choices=["fast", "full"], default="fast")
    p.add_argument("--only", default=None, help="comma-separated criterion names, e.g. A1,A6")
    p.add_argument("--threads", type=_positive_int, default=None)
    p.add_argument("--quiet", action="store_true", help="one line per criterion")
    return parser


def _open_out(path: str):
    if path == "-":
        return sys.stdout
    return open(path, "w", newline="", encoding="utf-8")


def _write_csv(text: str, path: str) -> None:
    fh = _open_out(path)
    try:
        fh.write(text)
    finally:
        if fh is not sys.stdout:
            fh.close()


def _workers(args) -> int:
    return args.threads or default_workers()


def _config(args, **overrides) -> ExperimentConfig:
    n = overrides.get("n", args.n)
    k = overrides.get("k")
    if k is None:
        k = resolve_k(args.k, n)
    return ExperimentConfig(
        dist=overrides.get("dist", args.dist),
        strategy=args.strategy,
        n=n,
        k=k,
        episodes=overrides.get("episodes", args.episodes),
        master_seed=args.seed,
        payout_model=args.payout,
    )


def cmd_simulate(args) -> int:
    cfg = _config(args)
    summary = run_experiment(cfg, _workers(args))
    _write_csv(summaries_to_csv([summary]), args.out)
    if args.json_path:
        with open(args.json_path, "w", encoding="utf-8") as fh:
            json.dump(summary_to_json(summary), fh, indent=2)
    if args.trace:
        rows = []
        for ep in range(min(args.trace_episodes, cfg.episodes)):
            stream = episode_stream(cfg.dist, cfg.n, cfg.payout_model, cfg.master_seed, ep)
            strategy = cfg.strategy.build(cfg.n, cfg.k, cfg.dist)
            run_episode(stream, strategy, cfg.k, trace=rows, episode=ep)
        write_trace_csv(rows, args.trace)
    return 0


def _bounds_rows(n: int, m: int, c: float, k: int | None) -> list[tuple[str, object]]:
    return bound_report(n, m, c, k).rows()


def cmd_bounds(args) -> int:
    if args.m < 1:
        print("streambandit bounds: error: argument --m: must be >= 1", file=sys.stderr)
        return 2
    if not args.c > 0:
        print("streambandit bounds: error: argument --c: must be positive", file=sys.stderr)
        return 2
    rows = _bounds_rows(args.n, args.m, args.c, args.k)
    width = max(len(name) for name, _ in rows)
    for name, value in rows:
        print(f"{name:<{width}}  {fmt(value)}")
    if args.csv_path:
        with open(args.csv_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\r\n")
            writer.writerow([name for name, _ in rows])
            writer.writerow([fmt(v) for _, v in rows])
    return 0


def _parse_values(param: str, text: str) -> list:
    items = [v.strip() for v in text.split(",") if v.strip()]
    if not items:
        raise ValueError("--values: empty value list")
    out = []
    for v in items:
        try:
            if param in ("n", "m", "episodes", "k"):
                x = int(v)
                if x < 1:
                    raise ValueError
            else:
                x = float(v)
                if not x > 0:
                    raise ValueError
        except ValueError:
            raise ValueError(f"--values: bad value {v!r} for parameter {param}") from None
        out.append(x)
    return out


def cmd_sweep(args) -> int:
    try:
        values = _parse_values(args.param, args.values)
    except ValueError as exc:
        print(f"streambandit sweep: error: {exc}", file=sys.stderr)
        return 2

    configs = []
    for v in values:
        dist = args.dist
        if args.param == "m":
            dist = DistributionSpec.power(v, dist.c)
        elif args.param == "c":
            dist = DistributionSpec.power(dist.m, v)
        if args.param == "n":
            cfg = _config(args, n=v, dist=dist)
        elif args.param == "k":
            cfg = _config(args, k=v, dist=dist)
        elif args.param == "episodes":
            cfg = _config(args, episodes=v, dist=dist)
        else:
            cfg = _config(args, dist=dist)
        configs.append(cfg)

    if args.bounds_only:
        header = None
        lines = []
        for cfg in configs:
            rows = _bounds_rows(cfg.n, cfg.dist.m, cfg.dist.c, cfg.k)
            header = [name for name, _ in rows]
            lines.append([fmt(v) for _, v in rows])
        fh = _open_out(args.out)
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(header)
        writer.writerows(lines)
        if fh is not sys.stdout:
            fh.close()
        return 0

    workers = _workers(args)
    summaries = [run_experiment(cfg, workers) for cfg in configs]
    _write_csv(summaries_to_csv(summaries), args.out)
    if args.json_path:
        with open(args.json_path, "w", encoding="utf-8") as fh:
            json.dump([summary_to_json(s) for s in summaries], fh, indent=2)
    return 0


def cmd_verify(args) -> int:
    from .verify import CRITERIA, run_suite

    only = None
    if args.only:
        only = [x.strip().upper() for x in args.only.split(",") if x.strip()]
        known = {c[0] for c in CRITERIA}
        bad = [x for x in only if x not in known]
        if bad:
            print(f"streambandit verify: error: argument --only: unknown criteria {bad}", file=sys.stderr)
            return 2
    results = run_suite(args.suite, args.threads or default_workers(), only, print, not args.quiet)
    passed = sum(r.passed for r in results)
    print(f"{passed}/{len(results)} criteria passed")
    return 0 if passed == len(results) else 1


COMMANDS = {"simulate": cmd_simulate, "bounds": cmd_bounds, "sweep": cmd_sweep, "verify": cmd_verify}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, ValueError) as exc:
        print(f"streambandit {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
