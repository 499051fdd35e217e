"""Command-line front end: sweeps, moment tables, critical values, verify.

Results are written as RFC-4180-style CSV with '.' decimals and '\n' line
endings.  Every file starts with '#'-prefixed manifest comments (command
line, version, seed, timestamp) so it is self-describing; data rows are a
pure function of the flags, so re-runs with the same seed are
byte-identical row for row.  All randomness flows from --seed, which
defaults to a fixed constant rather than the clock.
"""
from __future__ import annotations

import argparse
import sys
from datetime import datetime, timezone
from dataclasses import dataclass

from . import __version__, analytic, montecarlo, oracle, scaling
from .core import Metric, ModelParams
from .montecarlo import SweepRow, TrialConfig

DEFAULT_SEED = 1729

CSV_COLUMNS = ["metric", "n", "r", "p", "trials", "seed", "p_hat", "stderr",
               "mean_isolated", "mean_isolated_sq", "analytic_E_I",
               "prob_lower", "prob_upper"]


@dataclass(frozen=True)
class RunManifest:
    """Provenance block embedded as comment lines atop every CSV."""

    command: str
    version: str
    seed: int
    timestamp: str
    out_path: str

    def comment_lines(self) -> list[str]:
        return [
            f"# command: {self.command}",
            f"# version: {self.version}",
            f"# seed: {self.seed}",
            f"# timestamp: {self.timestamp}",
            f"# out: {self.out_path}",
        ]


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def _row_record(row: SweepRow) -> list[str]:
    return [row.metric.value, str(row.n), _fmt(row.r), _fmt(row.p),
            str(row.trials), str(row.seed), _fmt(row.p_hat_no_isolated),
            _fmt(row.stderr), _fmt(row.mean_isolated),
            _fmt(row.mean_isolated_sq), _fmt(row.analytic_expected_isolated),
            _fmt(row.prob_lower), _fmt(row.prob_upper)]


def write_rows(path: str, rows: list[SweepRow], manifest: RunManifest) -> None:
    with open(path, "w", newline="") as fh:
        for line in manifest.comment_lines():
            fh.write(line + "\n")
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for row in rows:
            fh.write(",".join(_row_record(row)) + "\n")


def _fail(message: str) -> "NoReturn":  # noqa: F821 - doc only
    print(f"error: {message}", file=sys.stderr)
    raise SystemExit(2)


def _build_grid(lo: float, hi: float, step: float) -> list[float]:
    if step <= 0:
        _fail("--step must be positive")
    if hi < lo:
        _fail("--max must be >= --min")
    count = int((hi - lo) / step + 1e-9) + 1
    return [lo + k * step for k in range(count)]


def _cmd_sweep(args: argparse.Namespace) -> int:
    vary = args.vary
    if vary == "r":
        if args.p is None:
            _fail("--vary r needs a fixed --p")
        if args.r is not None:
            _fail("--vary r conflicts with a fixed --r")
        base = ModelParams(0.0, args.p)
    else:
        if args.r is None:
            _fail("--vary p needs a fixed --r")
        if args.p is not None:
            _fail("--vary p conflicts with a fixed --p")
        base = ModelParams(args.r, 0.0)
    grid = _build_grid(args.min, args.max, args.step)
    try:
        for g in grid:
            if vary == "r":
                ModelParams(g, args.p)
            else:
                ModelParams(args.r, g)
    except ValueError as exc:
        _fail(str(exc))
    try:
        if args.metric == "both":
            rows = montecarlo.sweep_shared(args.n, base, args.trials, args.seed,
                                           vary, grid, coupled=args.coupled)
        else:
            cfg = TrialConfig(Metric(args.metric), args.n, base, args.trials,
                              args.seed)
            rows = montecarlo.sweep(cfg, vary, grid, coupled=args.coupled)
    except ValueError as exc:
        _fail(str(exc))
    manifest = RunManifest(_echo_command(args), __version__, args.seed,
                           _timestamp(), args.out)
    write_rows(args.out, rows, manifest)
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def _cmd_critical(args: argparse.Namespace) -> int:
    kind, _, raw = args.fix.partition("=")
    kind = kind.strip()
    if kind not in ("r", "p") or not raw:
        _fail("--fix must look like r=VALUE or p=VALUE")
    try:
        fixed = float(raw)
    except ValueError:
        _fail(f"--fix value {raw!r} is not a number")
    law = args.law
    try:
        if law in ("zero", "one-circle"):
            if kind == "p":
                value = scaling.solve_r_for_alpha(args.n, fixed, 0.0)
                name = "r"
            else:
                value = scaling.solve_p_for_alpha(args.n, fixed, 0.0)
                name = "p"
            target = scaling.classical_critical_er(args.n)
        else:  # one-interval
            if kind == "p":
                value = scaling.solve_r_for_alpha_prime(args.n, fixed, 0.0)
                name = "r"
            else:
                value = scaling.solve_p_for_alpha_prime(args.n, fixed, 0.0)
                name = "p"
            target = (2.0 * (scaling.math.log(args.n)
                             - scaling.math.log(scaling.math.log(args.n)))
                      / args.n)
    except (scaling.InfeasibleScalingError, ValueError) as exc:
        _fail(str(exc))
    print(f"law={law} n={args.n} fixed {kind}={_fmt(fixed)}")
    print(f"critical {name} = {_fmt(value)}")
    print(f"edge probability target p*l(r) = {_fmt(target)}")
    return 0


def _cmd_moments(args: argparse.Namespace) -> int:
    try:
        params = ModelParams(args.r, args.p)
        report = analytic.moment_report(args.n, params, Metric(args.metric))
    except ValueError as exc:
        _fail(str(exc))
    print(f"metric = {report.metric.value}")
    print(f"n = {report.n}")
    print(f"r = {_fmt(params.r)}")
    print(f"p = {_fmt(params.p)}")
    print(f"first_moment_per_node = {_fmt(report.first_moment_per_node)}")
    print(f"expected_isolated = {_fmt(report.expected_isolated)}")
    print(f"pair_moment = {_fmt(report.pair_moment)} ({report.pair_moment_kind})")
    print(f"second_moment = {_fmt(report.second_moment)}")
    if report.metric is Metric.CIRCLE:
        if report.ratio_bound is None:
            print("ratio_upper = undefined (zero denominator)")
        else:
            print(f"ratio_upper = {_fmt(report.ratio_bound)}")
    print(f"prob_lower = {_fmt(report.prob_lower)}")
    print(f"prob_upper = {_fmt(report.prob_upper)}")
    return 0


def _cmd_verify(args: argparse.Namespace) -> int:
    reports = oracle.run_suite(full=args.full, seed=args.seed)
    width = max(len(rep.name) for rep in reports)
    failures = 0
    for rep in reports:
        status = "PASS" if rep.passed else "FAIL"
        if not rep.passed:
            failures += 1
        print(f"{status}  {rep.name:<{width}}  closed={rep.closed_form:.12g} "
              f"oracle={rep.oracle_value:.12g} abs={rep.abs_err:.3g} "
              f"rel={rep.rel_err:.3g} tol={rep.tolerance:.3g}")
    print(f"{len(reports) - failures}/{len(reports)} oracle checks passed")
    return 0 if failures == 0 else 1


def _echo_command(args: argparse.Namespace) -> str:
    return " ".join(args._raw_argv)


def _timestamp() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rig",
        description="Isolated-node experiments for ER x geometric "
                    "intersection graphs on [0,1]",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sweep = sub.add_parser("sweep", help="Monte Carlo parameter sweep to CSV")
    sweep.add_argument("--metric", choices=["circle", "interval", "both"],
                       required=True)
    sweep.add_argument("--n", type=int, required=True)
    sweep.add_argument("--r", type=float, help="fixed range when varying p")
    sweep.add_argument("--p", type=float, help="fixed probability when varying r")
    sweep.add_argument("--vary", choices=["r", "p"], required=True)
    sweep.add_argument("--min", type=float, required=True)
    sweep.add_argument("--max", type=float, required=True)
    sweep.add_argument("--step", type=float, required=True)
    sweep.add_argument("--trials", type=int, default=1000)
    sweep.add_argument("--seed", type=int, default=DEFAULT_SEED)
    sweep.add_argument("--coupled", action="store_true",
                       help="evaluate all grid points on shared realizations")
    sweep.add_argument("--out", required=True)
    sweep.set_defaults(func=_cmd_sweep)

    critical = sub.add_parser("critical", help="solve critical scalings")
    critical.add_argument("--n", type=int, required=True)
    critical.add_argument("--fix", required=True, metavar="r=V|p=V")
    critical.add_argument("--law", choices=["zero", "one-circle", "one-interval"],
                          required=True)
    critical.set_defaults(func=_cmd_critical)

    moments = sub.add_parser("moments", help="closed-form moment table")
    moments.add_argument("--metric", choices=["circle", "interval"],
                         required=True)
    moments.add_argument("--n", type=int, required=True)
    moments.add_argument("--r", type=float, required=True)
    moments.add_argument("--p", type=float, required=True)
    moments.set_defaults(func=_cmd_moments)

    verify = sub.add_parser("verify", help="run the oracle verification suite")
    group = verify.add_mutually_exclusive_group()
    group.add_argument("--quick", action="store_true", default=True)
    group.add_argument("--full", action="store_true", default=False)
    verify.add_argument("--seed", type=int, default=DEFAULT_SEED)
    verify.set_defaults(func=_cmd_verify)

    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    args._raw_argv = ["rig"] + argv
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
