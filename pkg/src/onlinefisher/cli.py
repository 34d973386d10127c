"""Command-line front end.

Subcommands: simulate | sweep | stepsize | equilibrium | check.
Exit codes: 0 success, 1 config or I/O error, 2 invariant or bound-check
failure, 3 convergence failure.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .checks import check_invariants, format_report
from .dynamics import solve_equilibrium
from .errors import ConfigError, ConvergenceFailure, InvalidModelParams
from .harness import (
    build_trial_market,
    load_config,
    run_experiment,
    run_instance_sweep,
    run_stepsize_comparison,
    summary_exit_code,
)
from .input_models import baseline_log_values, mean_values
from .metrics import envy_check, proportionality_check

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_CHECK = 2
EXIT_CONVERGENCE = 3


def _add_config_out(sub):
    sub.add_argument("--config", required=True, help="path to a JSON experiment config")
    sub.add_argument("--out", default=None, help="output directory (overrides config out_dir)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="onlinefisher",
        description="Simulate online Fisher-market bidding dynamics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    _add_config_out(sub.add_parser("simulate", help="run one experiment"))
    _add_config_out(sub.add_parser("sweep", help="run an instance-size sweep"))
    _add_config_out(sub.add_parser("stepsize", help="compare step-size rules on shared seeds"))

    eq = sub.add_parser("equilibrium", help="solve and print one trial's equilibrium")
    eq.add_argument("--config", required=True)
    eq.add_argument("--trial", type=int, default=0, help="trial index for the market draw")

    chk = sub.add_parser("check", help="run the randomized invariant suites")
    chk.add_argument("--seeds", type=int, default=1, help="number of seeds per suite")
    chk.add_argument(
        "--self-test",
        action="store_true",
        help="also feed a corrupted bid row through the budget check; "
        "the extra row must FAIL (negative control, exits nonzero)",
    )
    return parser


def _resolve_out(args, cfg):
    out = args.out if args.out is not None else cfg.out_dir
    if out is None:
        raise ConfigError("no output directory: pass --out or set out_dir in the config")
    return out


def _cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    summary = run_experiment(cfg, _resolve_out(args, cfg))
    fr = summary["fairness_regret"]
    print(
        "fairness regret: mean={:.6g} max={:.6g} (log MN = {:.6g})".format(
            fr["mean_final"], fr["max_final"], summary["bounds"]["log_mn"]
        )
    )
    return summary_exit_code(summary)


def _cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    sweep = run_instance_sweep(cfg, _resolve_out(args, cfg))
    for entry in sweep["instances"]:
        print(
            "n={n_buyers:<3d} m={n_items:<4d} sigma={sigma:<6g} "
            "mean={fairness_mean_final:.4g} max={fairness_max_final:.4g} "
            "bound={bound_log_mn:.4g}".format(**entry)
        )
    return EXIT_OK if sweep["all_within_bound"] else EXIT_CHECK


def _cmd_stepsize(args) -> int:
    cfg = load_config(args.config)
    summary = run_stepsize_comparison(cfg, _resolve_out(args, cfg))
    for rule, entry in summary["rules"].items():
        print(
            "{:<16s} final={:.6g} trailing_slope={:.3e}".format(
                rule, entry["fairness_mean_final"], entry["trailing_window_slope"]
            )
        )
    return EXIT_OK


def _cmd_equilibrium(args) -> int:
    cfg = load_config(args.config)
    if not 0 <= args.trial < cfg.trials:
        raise ConfigError(f"--trial must be in 0..{cfg.trials - 1}")
    market = build_trial_market(cfg, args.trial)
    baseline = baseline_log_values(cfg.noise, market)
    eq = solve_equilibrium(market, baseline, mean_vals=mean_values(cfg.noise, market))
    alloc = eq.bids_star / eq.prices_star[None, :]
    with np.printoptions(precision=6, suppress=True, linewidth=120):
        print(f"iterations: {eq.iterations}   final successive-price KL: {eq.final_kl:.3e}")
        print(f"phi*: {eq.phi_star:.12g}")
        print("prices:")
        print(eq.prices_star)
        print("bids:")
        print(eq.bids_star)
    print(f"envy margin (<= 0 is envy-free): {envy_check(alloc, market.values, market.budgets):.3e}")
    print(
        "proportionality slack (>= 0 satisfies): "
        f"{proportionality_check(alloc, market.values, market.n_buyers):.3e}"
    )
    return EXIT_OK


def _cmd_check(args) -> int:
    results = check_invariants(seeds=args.seeds, self_test=args.self_test)
    print(format_report(results))
    return EXIT_OK if all(r.passed for r in results) else EXIT_CHECK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "simulate": _cmd_simulate,
        "sweep": _cmd_sweep,
        "stepsize": _cmd_stepsize,
        "equilibrium": _cmd_equilibrium,
        "check": _cmd_check,
    }
    try:
        return handlers[args.command](args)
    except ConvergenceFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (ConfigError, InvalidModelParams, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
