"""Command-line front end.

Subcommands:

* ``simulate``       Monte Carlo runs per configured policy; aggregate CSVs
                     plus an optional gap-vs-cost SVG.
* ``analytic``       closed-form curves for the same config, same CSV schema.
* ``optimal-policy`` budget-optimal schedule for (C, T, sigma2, kappa2),
                     with an optional brute-force check.
* ``sweep``          repeat ``simulate`` along one numeric config axis.
* ``compare``        join simulated and analytic CSVs and report the worst
                     gap disagreement in standard-error units.

Exit codes: 0 success, 1 validation problem, 2 runtime failure. All
state flows through flags and the config file; no environment variables.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import analytic, engine
from .config import (
    ConfigError,
    ExperimentConfig,
    apply_override,
    build_schedule,
    load_config,
)
from .csvio import (
    aggregate_rows,
    analytic_rows,
    format_float,
    law_csv_text,
    read_agg_csv,
    run_trace_csv_text,
    write_agg_csv,
    write_text_atomic,
)
from .svgplot import Series, render_gap_vs_cost

__all__ = ["main"]

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2


def _fail(message: str, code: int) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def _apply_flag_overrides(cfg: ExperimentConfig, args: argparse.Namespace) -> ExperimentConfig:
    if getattr(args, "out", None):
        cfg = replace(cfg, out_dir=args.out)
    if getattr(args, "seed", None) is not None:
        cfg = replace(cfg, master_seed=args.seed)
    if getattr(args, "svg", None) is not None:
        cfg = replace(cfg, emit_svg=args.svg)
    return cfg


def _run_config(cfg: ExperimentConfig, schedule) -> engine.RunConfig:
    return engine.RunConfig(
        theta0=cfg.theta0,
        schedule=schedule,
        cost=engine.CostModel(cfg.c_g, cfg.c_t),
        seed=cfg.master_seed,
        sigma2=cfg.sigma2,
        kappa2=cfg.kappa2,
        update=cfg.update,
        eta=cfg.eta,
        max_draws_per_iter=cfg.max_draws_per_iter,
        divergence_cap=cfg.divergence_cap,
        eval_samples=cfg.eval_samples,
    )


def _simulate_into(cfg: ExperimentConfig, out_dir: Path, workers: int, traces: int = 0) -> dict:
    """Run every configured policy; returns the status summary. The same
    master seed drives every policy (common random numbers), which only
    sharpens cross-policy comparisons."""
    out_dir.mkdir(parents=True, exist_ok=True)
    summary: dict[str, dict[str, int]] = {}
    series = []
    for p in cfg.policies:
        schedule = build_schedule(p, cfg.T)
        run_cfg = _run_config(cfg, schedule)
        agg = engine.monte_carlo(run_cfg, cfg.runs, workers=workers)
        write_agg_csv(out_dir / f"{p.label}_agg.csv", aggregate_rows(p.label, agg))
        for i in range(min(traces, cfg.runs)):
            trace = engine.run(replace(run_cfg, seed=engine.run_seed(cfg.master_seed, i)))
            write_text_atomic(out_dir / f"{p.label}_run{i}.csv", run_trace_csv_text(trace))
        summary[p.label] = {
            "completed": agg.runs_completed,
            "diverged": agg.runs_diverged,
            "draw_cap_hit": agg.runs_draw_capped,
        }
        series.append(Series(p.label, agg.mean_cum_cost, agg.mean_gap, agg.se_gap))
    if cfg.emit_svg:
        write_text_atomic(out_dir / "gap_vs_cost.svg", render_gap_vs_cost(series))
    return summary


def cmd_simulate(args: argparse.Namespace) -> int:
    try:
        cfg = _apply_flag_overrides(load_config(args.config), args)
    except ConfigError as exc:
        return _fail(str(exc), EXIT_VALIDATION)
    try:
        summary = _simulate_into(cfg, Path(cfg.out_dir), args.workers, traces=args.traces)
    except (RuntimeError, ValueError) as exc:
        return _fail(str(exc), EXIT_RUNTIME)
    print(json.dumps({"command": "simulate", "out": cfg.out_dir, "status": summary}, indent=2))
    return EXIT_OK


def cmd_analytic(args: argparse.Namespace) -> int:
    try:
        cfg = _apply_flag_overrides(load_config(args.config), args)
    except ConfigError as exc:
        return _fail(str(exc), EXIT_VALIDATION)
    if cfg.update == "gd" and cfg.eta is not None and cfg.eta != cfg.sigma2:
        return _fail(
            "analytic curves hold for MLE updates only; update=gd needs eta == sigma2",
            EXIT_VALIDATION,
        )
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cost = engine.CostModel(cfg.c_g, cfg.c_t)
    series = []
    for p in cfg.policies:
        schedule = build_schedule(p, cfg.T)
        ev = analytic.cost_curve(
            schedule, cfg.theta0, cfg.sigma2, cfg.kappa2, cost, label=p.label
        )
        write_agg_csv(out_dir / f"{p.label}_analytic.csv", analytic_rows(p.label, ev))
        write_text_atomic(out_dir / f"{p.label}_law.csv", law_csv_text(p.label, ev))
        series.append(Series(p.label, ev.cum_cost, ev.gap, None))
    if cfg.emit_svg:
        write_text_atomic(
            out_dir / "analytic_gap_vs_cost.svg",
            render_gap_vs_cost(series, title="analytic gap vs cumulative cost"),
        )
    print(json.dumps({"command": "analytic", "out": cfg.out_dir, "policies": [p.label for p in cfg.policies]}, indent=2))
    return EXIT_OK


def cmd_optimal_policy(args: argparse.Namespace) -> int:
    C, T = args.budget, args.iters
    if T < 1:
        return _fail("iterations must be >= 1", EXIT_VALIDATION)
    if C < T:
        return _fail("budget below one sample per iteration", EXIT_VALIDATION)
    if args.sigma2 <= 0 or args.kappa2 <= 0:
        return _fail("sigma2 and kappa2 must be positive", EXIT_VALIDATION)
    theta0 = np.array(args.theta0, dtype=float) if args.theta0 else None
    rho = args.sigma2 / args.kappa2
    weights = np.array([(1.0 + rho) ** t for t in range(T)])
    continuous = C * weights / weights.sum()
    schedule = analytic.optimal_schedule(C, T, args.sigma2, args.kappa2, theta0)
    ns = list(schedule.n)
    sig2 = analytic.marginal(
        theta0 if theta0 is not None else 0.0, schedule, args.sigma2, args.kappa2
    ).sigma2_T
    print(f"continuous optimum: [{', '.join(format_float(v) for v in continuous)}]")
    print(f"integer schedule:   {ns}")
    print(f"sigma2_T:           {format_float(sig2)}")
    if args.verify:
        if C > analytic.BRUTE_FORCE_MAX_BUDGET or T > analytic.BRUTE_FORCE_MAX_ITERS:
            return _fail(
                f"--verify needs C <= {analytic.BRUTE_FORCE_MAX_BUDGET} and "
                f"T <= {analytic.BRUTE_FORCE_MAX_ITERS}",
                EXIT_VALIDATION,
            )
        best, best_sig2 = analytic.brute_force_optimal(C, T, args.sigma2, args.kappa2)
        print(f"brute force:        {list(best.n)}")
        print(f"brute sigma2_T:     {format_float(best_sig2)}")
        ratio = sig2 / best_sig2 if best_sig2 > 0 else float("inf")
        print(f"apportioned/brute sigma2_T ratio: {format_float(ratio)}")
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    try:
        cfg = _apply_flag_overrides(load_config(args.config), args)
        values = [float(tok) for tok in args.values.split(",") if tok.strip()]
        if not values:
            raise ConfigError("sweep needs a non-empty --values list")
        swept = [apply_override(cfg, args.axis, v) for v in values]
    except (ConfigError, ValueError) as exc:
        return _fail(str(exc), EXIT_VALIDATION)
    base = Path(cfg.out_dir)
    axis_slug = args.axis.replace(".", "_")
    summary_lines = ["axis,value,policy_label,final_T,mean_gap,se_gap"]
    try:
        for value, sub_cfg in zip(values, swept):
            sub_dir = base / f"sweep_{axis_slug}_{value:g}"
            _simulate_into(sub_cfg, sub_dir, args.workers)
            for p in sub_cfg.policies:
                rows = read_agg_csv(sub_dir / f"{p.label}_agg.csv")
                final = max(rows, key=lambda r: r.T)
                summary_lines.append(
                    ",".join(
                        [
                            args.axis,
                            f"{value:g}",
                            p.label,
                            str(final.T),
                            format_float(final.mean_gap),
                            format_float(final.se_gap),
                        ]
                    )
                )
    except (RuntimeError, ValueError) as exc:
        return _fail(str(exc), EXIT_RUNTIME)
    base.mkdir(parents=True, exist_ok=True)
    write_text_atomic(base / "sweep_summary.csv", "\n".join(summary_lines) + "\n")
    print(json.dumps({"command": "sweep", "axis": args.axis, "values": values, "out": str(base)}, indent=2))
    return EXIT_OK


def cmd_compare(args: argparse.Namespace) -> int:
    try:
        cfg = _apply_flag_overrides(load_config(args.config), args)
    except ConfigError as exc:
        return _fail(str(exc), EXIT_VALIDATION)
    out_dir = Path(cfg.out_dir)
    report: dict[str, float] = {}
    worst = 0.0
    for p in cfg.policies:
        sim_path = out_dir / f"{p.label}_agg.csv"
        ana_path = out_dir / f"{p.label}_analytic.csv"
        if not sim_path.exists() or not ana_path.exists():
            return _fail(
                f"missing {sim_path.name} or {ana_path.name} in {out_dir} "
                f"(run simulate and analytic first)",
                EXIT_VALIDATION,
            )
        sim = {r.T: r for r in read_agg_csv(sim_path)}
        ana = {r.T: r for r in read_agg_csv(ana_path)}
        ratios = [
            abs(sim[T].mean_gap - ana[T].mean_gap) / sim[T].se_gap
            for T in sorted(set(sim) & set(ana))
            if sim[T].se_gap > 0
        ]
        label_worst = max(ratios) if ratios else 0.0
        report[p.label] = label_worst
        worst = max(worst, label_worst)
    print(
        json.dumps(
            {
                "command": "compare",
                "max_abs_gap_diff_over_se": {k: round(v, 6) for k, v in report.items()},
                "overall": round(worst, 6),
            },
            indent=2,
        )
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="iterboot",
        description="Iterative synthetic-data bootstrapping: simulation and exact analytics",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", required=True, help="experiment config file")
        p.add_argument("--out", help="output directory (overrides the config)")
        p.add_argument("--seed", type=int, help="master seed (overrides the config)")
        svg = p.add_mutually_exclusive_group()
        svg.add_argument("--svg", dest="svg", action="store_true", default=None)
        svg.add_argument("--no-svg", dest="svg", action="store_false", default=None)

    p_sim = sub.add_parser("simulate", help="Monte Carlo simulation per policy")
    add_common(p_sim)
    p_sim.add_argument("--workers", type=int, default=1, help="process-pool width")
    p_sim.add_argument(
        "--traces", type=int, default=0,
        help="also write the first N per-run trace CSVs per policy",
    )
    p_sim.set_defaults(func=cmd_simulate)

    p_ana = sub.add_parser("analytic", help="closed-form curves per policy")
    add_common(p_ana)
    p_ana.set_defaults(func=cmd_analytic)

    p_opt = sub.add_parser("optimal-policy", help="budget-optimal schedule")
    p_opt.add_argument("--budget", "-C", type=int, required=True)
    p_opt.add_argument("--iters", "-T", type=int, required=True)
    p_opt.add_argument("--sigma2", type=float, required=True)
    p_opt.add_argument("--kappa2", type=float, required=True)
    p_opt.add_argument("--theta0", type=float, nargs="+", help="initial mean, for the optimality-hypothesis check")
    p_opt.add_argument("--verify", action="store_true", help="cross-check by brute-force enumeration")
    p_opt.set_defaults(func=cmd_optimal_policy)

    p_sweep = sub.add_parser("sweep", help="repeat simulate along one numeric axis")
    add_common(p_sweep)
    p_sweep.add_argument("--axis", required=True, help="dotted key, e.g. policy.exp.u or model.kappa2")
    p_sweep.add_argument("--values", required=True, help="comma-separated numbers")
    p_sweep.add_argument("--workers", type=int, default=1)
    p_sweep.set_defaults(func=cmd_sweep)

    p_cmp = sub.add_parser("compare", help="report worst sim-vs-analytic gap disagreement")
    add_common(p_cmp)
    p_cmp.set_defaults(func=cmd_compare)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
