"""Command-line interface.

Subcommands: simulate | estimate | optimize | frontier | backtest.

All file outputs are written atomically (write-then-rename) and reruns with
identical inputs produce byte-identical delimited and JSON outputs. The only
environment variable read is SLEMUV_LOG_LEVEL, which sets the logging level.
Validation problems exit with status 2, unexpected failures with 1.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import __version__
from .backtest import EQUAL_WEIGHT_MEAN, BacktestConfig, compare_models, rolling_backtest
from .estimation import (
    BlockConfig,
    build_uncertain_covariance,
    ensure_positive_definite,
    load_params,
    params_payload,
)
from .frontier import frontier_csv_rows, frontier_report
from .market_data import load_prices, load_returns, prices_to_returns, returns_csv_text
from .optimizer import ProblemSpec, active_set_solve, kkt_residual
from .reports import (
    atomic_write_text,
    backtest_payload,
    comparison_csv,
    format_csv,
    format_json,
    wealth_paths_csv,
)
from .synthetic import RegimeSpec, generate_panel

log = logging.getLogger("slemuv")


def _risk_factor(text: str) -> float:
    try:
        value = float(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from exc
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError("w must lie in [0,1]")
    return value


def _risk_factor_list(text: str) -> list[float]:
    return [_risk_factor(part) for part in text.split(",") if part.strip() != ""]


def _r0_rule(text: str):
    if text.strip().lower() in ("auto", EQUAL_WEIGHT_MEAN):
        return EQUAL_WEIGHT_MEAN
    try:
        return float(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"r0 must be a number or 'auto': {text!r}") from exc


def _sibling(out: str, suffix: str, ext: str) -> str:
    stem, _ = os.path.splitext(out)
    return f"{stem}_{suffix}.{ext}"


def _load_spec_file(path: str) -> list[RegimeSpec]:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    entries = payload["assets"] if isinstance(payload, dict) else payload
    if not isinstance(entries, list) or not entries:
        raise ValueError(f"{path}: expected a non-empty list of asset specs")
    specs = []
    for e in entries:
        specs.append(
            RegimeSpec(
                mu=float(e["mu"]),
                var_lower=float(e["var_lower"]),
                var_upper=float(e["var_upper"]),
                K=int(e["K"]),
                n0=int(e["n0"]),
                seed=int(e.get("seed", 0)),
            )
        )
    return specs


def _cmd_simulate(args: argparse.Namespace) -> int:
    specs = _load_spec_file(args.spec)
    panel = generate_panel(specs, master_seed=args.seed)
    atomic_write_text(args.out, returns_csv_text(panel))
    log.info("wrote %s (%d rows, %d assets)", args.out, panel.n_periods, panel.n_assets)
    return 0


def _cmd_estimate(args: argparse.Namespace) -> int:
    panel = load_returns(args.returns)
    cfg = BlockConfig(n1=args.n1, n2=args.n2)
    params, cov = build_uncertain_covariance(panel, cfg)
    cov = ensure_positive_definite(cov)
    atomic_write_text(args.out, format_json(params_payload(panel.assets, params, cov, cfg)))
    log.info("wrote %s (repaired=%s)", args.out, cov.repaired)
    return 0


def _solution_payload(spec: ProblemSpec, sol, assets: list[str], repaired: bool) -> dict:
    return {
        "schema_version": 1,
        "assets": assets,
        "w": spec.w,
        "r0": spec.r0,
        "beta": [float(b) for b in sol.beta],
        "lambda1": sol.lambda1,
        "lambda2": sol.lambda2,
        "gamma": [float(g) for g in sol.gamma],
        "active_set": list(sol.active_set),
        "sigma2_lower": sol.sigma2_lower,
        "sigma2_upper": sol.sigma2_upper,
        "objective": sol.objective,
        "kkt_residual": kkt_residual(spec, sol),
        "method": sol.method,
        "repaired": repaired,
    }


def _cmd_optimize(args: argparse.Namespace) -> int:
    assets, params, cov = load_params(args.params)
    cov = ensure_positive_definite(cov)
    mu = np.array([p.mu for p in params])
    spec = ProblemSpec(mu=mu, r0=args.r0, cov=cov, w=args.w)
    sol = active_set_solve(spec)
    text = format_json(_solution_payload(spec, sol, assets, cov.repaired))
    if args.out:
        atomic_write_text(args.out, text)
        log.info("wrote %s", args.out)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_frontier(args: argparse.Namespace) -> int:
    assets, params, cov = load_params(args.params)
    cov = ensure_positive_definite(cov)
    mu = np.array([p.mu for p in params])
    points, diagnostics = frontier_report(mu, args.r0, cov, grid=args.grid)
    diagnostics["repaired"] = cov.repaired
    header, rows = frontier_csv_rows(points, assets)
    atomic_write_text(args.out, format_csv(header, rows))
    log.info("wrote %s (%d points)", args.out, len(points))
    if args.diagnostics:
        atomic_write_text(args.diagnostics, format_json({"schema_version": 1, **diagnostics}))
        log.info("wrote %s", args.diagnostics)
    if args.figures:
        from .plots import save_frontier_figure

        fig_path = _sibling(args.out, "curve", "png")
        save_frontier_figure(points, fig_path)
        log.info("wrote %s", fig_path)
    return 0


def _cmd_backtest(args: argparse.Namespace) -> int:
    if args.returns:
        panel = load_returns(args.returns)
    else:
        panel = prices_to_returns(load_prices(args.prices))
    cfg = BacktestConfig(
        window=args.window,
        horizon=args.horizon,
        w=args.w,
        r0_rule=args.r0,
        block=BlockConfig(n1=args.n1, n2=args.n2),
        baseline=args.baseline,
    )
    report = rolling_backtest(panel, cfg)
    atomic_write_text(args.out, format_json(backtest_payload(report)))
    log.info("wrote %s", args.out)
    if args.baseline:
        table_path = _sibling(args.out, "comparison", "csv")
        atomic_write_text(table_path, comparison_csv(report))
        log.info("wrote %s", table_path)
    if args.emit_paths:
        w_first = cfg.w_list()[0]
        atomic_write_text(args.emit_paths, wealth_paths_csv(report, w_first))
        log.info("wrote %s", args.emit_paths)
    if args.figures:
        from .plots import save_metrics_figure, save_wealth_figure

        wealth_path = _sibling(args.out, "wealth", "png")
        save_wealth_figure(report, wealth_path)
        log.info("wrote %s", wealth_path)
        if args.baseline and len(cfg.w_list()) >= 2:
            metrics_path = _sibling(args.out, "metrics", "png")
            save_metrics_figure(compare_models(report), metrics_path)
            log.info("wrote %s", metrics_path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="slemuv",
        description="Portfolio selection under covariance uncertainty: "
        "simulation, interval estimation, optimization, frontiers, backtests.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic return panel")
    p.add_argument("--spec", required=True, help="JSON file of per-asset regime specs")
    p.add_argument("--seed", type=int, default=0, help="master seed for column sub-seeds")
    p.add_argument("--out", required=True, help="output returns CSV")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("estimate", help="interval moment estimates from a return CSV")
    p.add_argument("--returns", required=True)
    p.add_argument("--n1", type=int, default=60, help="rolling block length")
    p.add_argument("--n2", type=int, default=20, help="demeaning chunk length")
    p.add_argument("--out", required=True, help="output params JSON")
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("optimize", help="solve one allocation from a params file")
    p.add_argument("--params", required=True)
    p.add_argument("--w", type=_risk_factor, required=True, help="risk factor in [0,1]")
    p.add_argument("--r0", type=float, required=True, help="return floor")
    p.add_argument("--out", help="output JSON (stdout when omitted)")
    p.set_defaults(func=_cmd_optimize)

    p = sub.add_parser("frontier", help="sweep the risk factor grid")
    p.add_argument("--params", required=True)
    p.add_argument("--grid", type=int, default=101)
    p.add_argument("--r0", type=float, required=True)
    p.add_argument("--out", required=True, help="output frontier CSV")
    p.add_argument("--diagnostics", help="optional diagnostics JSON path")
    p.add_argument(
        "--figures",
        default=True,
        action=argparse.BooleanOptionalAction,
        help="render PNG figures next to the CSV",
    )
    p.set_defaults(func=_cmd_frontier)

    p = sub.add_parser("backtest", help="rolling out-of-sample comparison")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--returns", help="return CSV")
    src.add_argument("--prices", help="price CSV, converted to returns first")
    p.add_argument("--window", type=int, default=252)
    p.add_argument("--horizon", type=int, default=None)
    p.add_argument(
        "--w",
        type=_risk_factor_list,
        default=[0.5],
        help="risk factor, or comma list like 0,0.5,1",
    )
    p.add_argument("--r0", type=_r0_rule, default=EQUAL_WEIGHT_MEAN,
                   help="return floor, or 'auto' for the equal-weight window mean")
    p.add_argument("--n1", type=int, default=60)
    p.add_argument("--n2", type=int, default=20)
    p.add_argument("--baseline", default=True, action=argparse.BooleanOptionalAction)
    p.add_argument("--out", required=True, help="output report JSON")
    p.add_argument("--emit-paths", help="optional wealth-path CSV (first w)")
    p.add_argument(
        "--figures",
        default=True,
        action=argparse.BooleanOptionalAction,
        help="render PNG figures next to the report",
    )
    p.set_defaults(func=_cmd_backtest)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(
        level=os.environ.get("SLEMUV_LOG_LEVEL", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s",
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {args.command}: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - defensive
        print(f"error: {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
