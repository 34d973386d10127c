"""Experiment harness: JSON config in, deterministic CSV/JSON artifacts out.

A run is a set of independent trials.  Trial k draws its own market
(valuations seeded with valuation_seed + k) and its own noise stream (seeded
with base_seed + 10^6 + k), solves the baseline equilibrium, runs the online
dynamics, and logs one CSV row per period.  Identical configs produce
byte-identical CSVs: floats are always written with 17 significant digits
and trials are emitted in order.
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .dynamics import StepRule, run_online, solve_equilibrium
from .errors import ConfigError, MarketError, NonPositiveSeries
from .input_models import (
    NoiseModel,
    baseline_log_values,
    make_stream,
    mean_values,
)
from .market import MarketInstance, normalize_market
from .metrics import fairness_regret, individual_regret, loglog_slope

DEFAULT_HORIZON = 5000
DEFAULT_INSTANCES = ((5, 10, 0.05), (10, 20, 0.04), (20, 30, 0.03), (40, 60, 0.02), (80, 120, 0.01))
FIG_CHECKPOINTS = (500, 1000, 2000, 5000)

RESULT_COLUMNS = (
    "trial",
    "t",
    "expected_phi",
    "sample_phi",
    "fairness_regret_cum",
    "individual_regret_cum",
    "individual_regret_realized_cum",
    "price_l1sq_avg",
    "price_l1sq_last",
)

_CONFIG_FIELDS = {
    "n_buyers",
    "n_items",
    "budgets",
    "valuation_seed",
    "base_values",
    "noise",
    "horizon",
    "trials",
    "base_seed",
    "step_rule",
    "out_dir",
    "tracked_buyer",
    "thin",
    "instances",
}
_NOISE_FIELDS = {"kind", "sigma", "alpha", "mu_range", "partitions", "partition_len", "injection"}


@dataclass(frozen=True)
class ExperimentConfig:
    n_buyers: int
    n_items: int
    noise: NoiseModel
    trials: int
    base_seed: int
    horizon: int = DEFAULT_HORIZON
    horizon_defaulted: bool = False
    budgets: Optional[tuple] = None  # None means equal split
    valuation_seed: Optional[int] = None
    base_values: Optional[tuple] = None  # fixed matrix, constant across trials
    step_rule: StepRule = StepRule.CONSTANT_ONE
    out_dir: Optional[str] = None
    tracked_buyer: int = 0
    thin: Optional[bool] = None
    instances: Optional[tuple] = None  # (n, m, sigma) triples for sweeps


def load_config(path) -> ExperimentConfig:
    """Read and validate a JSON experiment config."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return parse_config(raw)


def _require_int(raw: dict, key: str, minimum: int) -> int:
    if key not in raw:
        raise ConfigError(f"missing required field {key!r}")
    val = raw[key]
    if not isinstance(val, int) or isinstance(val, bool) or val < minimum:
        raise ConfigError(f"{key} must be an integer >= {minimum}, got {val!r}")
    return val


def parse_config(raw: dict) -> ExperimentConfig:
    unknown = set(raw) - _CONFIG_FIELDS
    if unknown:
        raise ConfigError(f"unknown config fields: {sorted(unknown)}")

    base_values = raw.get("base_values")
    if base_values is not None:
        arr = np.asarray(base_values, dtype=float)
        if arr.ndim != 2:
            raise ConfigError("base_values must be a matrix")
        n_buyers = raw.get("n_buyers", arr.shape[0])
        n_items = raw.get("n_items", arr.shape[1])
        if (n_buyers, n_items) != arr.shape:
            raise ConfigError("base_values shape disagrees with n_buyers/n_items")
        base_values = tuple(tuple(row) for row in arr.tolist())
    else:
        n_buyers = _require_int(raw, "n_buyers", 1)
        n_items = _require_int(raw, "n_items", 1)

    budgets = raw.get("budgets", "equal")
    if budgets == "equal":
        budgets = None
    else:
        if not isinstance(budgets, list) or len(budgets) != n_buyers:
            raise ConfigError("budgets must be \"equal\" or a list of length n_buyers")
        if any(b <= 0 for b in budgets):
            raise ConfigError("explicit budgets must be strictly positive")
        budgets = tuple(float(b) for b in budgets)

    noise_raw = raw.get("noise")
    if not isinstance(noise_raw, dict):
        raise ConfigError("noise must be an object with at least a 'kind'")
    unknown = set(noise_raw) - _NOISE_FIELDS
    if unknown:
        raise ConfigError(f"unknown noise fields: {sorted(unknown)}")
    if "kind" not in noise_raw:
        raise ConfigError("noise.kind is required")
    noise = NoiseModel(**noise_raw)

    horizon_defaulted = "horizon" not in raw
    horizon = DEFAULT_HORIZON if horizon_defaulted else _require_int(raw, "horizon", 1)
    trials = _require_int(raw, "trials", 1)
    base_seed = _require_int(raw, "base_seed", 0)

    rule_name = raw.get("step_rule", StepRule.CONSTANT_ONE.value)
    try:
        step_rule = StepRule(rule_name)
    except ValueError as exc:
        valid = [r.value for r in StepRule]
        raise ConfigError(f"step_rule must be one of {valid}, got {rule_name!r}") from exc

    tracked = raw.get("tracked_buyer", 0)
    if not isinstance(tracked, int) or isinstance(tracked, bool) or not 0 <= tracked < n_buyers:
        raise ConfigError(f"tracked_buyer must be in 0..{n_buyers - 1}")

    thin = raw.get("thin")
    if thin is not None and not isinstance(thin, bool):
        raise ConfigError("thin must be true or false when given")

    valuation_seed = raw.get("valuation_seed")
    if valuation_seed is not None and (not isinstance(valuation_seed, int) or isinstance(valuation_seed, bool)):
        raise ConfigError("valuation_seed must be an integer")

    out_dir = raw.get("out_dir")
    if out_dir is not None and not isinstance(out_dir, str):
        raise ConfigError("out_dir must be a string path")

    instances = raw.get("instances")
    if instances is not None:
        if not isinstance(instances, list) or len(instances) == 0:
            raise ConfigError("instances must be a non-empty list of [n, m, sigma]")
        parsed = []
        for item in instances:
            if not isinstance(item, list) or len(item) != 3:
                raise ConfigError(f"each instance must be [n, m, sigma], got {item!r}")
            n, m, sigma = item
            if not isinstance(n, int) or not isinstance(m, int) or n < 1 or m < 1:
                raise ConfigError(f"instance sizes must be positive integers, got {item!r}")
            parsed.append((n, m, float(sigma)))
        instances = tuple(parsed)

    return ExperimentConfig(
        n_buyers=n_buyers,
        n_items=n_items,
        noise=noise,
        trials=trials,
        base_seed=base_seed,
        horizon=horizon,
        horizon_defaulted=horizon_defaulted,
        budgets=budgets,
        valuation_seed=valuation_seed,
        base_values=base_values,
        step_rule=step_rule,
        out_dir=out_dir,
        tracked_buyer=tracked,
        thin=thin,
        instances=instances,
    )


def build_trial_market(cfg: ExperimentConfig, trial: int) -> MarketInstance:
    """Market for one trial: fixed matrix if pinned, else a fresh uniform draw."""
    budgets = np.ones(cfg.n_buyers) if cfg.budgets is None else np.asarray(cfg.budgets)
    if cfg.base_values is not None:
        return normalize_market(budgets, np.asarray(cfg.base_values))
    seed = (cfg.base_seed if cfg.valuation_seed is None else cfg.valuation_seed) + trial
    rng = np.random.default_rng(seed)
    values = np.maximum(rng.uniform(size=(cfg.n_buyers, cfg.n_items)), 1e-9)
    return normalize_market(budgets, values)


def _fmt(x: float) -> str:
    return f"{x:.17g}"


@dataclass
class TrialOutcome:
    """Everything one trial contributes to the CSV and the summary."""

    trial: int
    rows: list
    fairness_cum: np.ndarray
    fairness_final: float
    individual_final: float
    individual_final_realized: float
    u_star: float
    rel_regret_at: dict  # checkpoint t -> individual regret / (t * u_star)
    price_avg_final: float
    price_last_final: float
    phi_gap_max: float  # max_t |sample_phi - expected_phi|
    price_sum_drift: float


def _checkpoints(horizon: int) -> list:
    pts = [t for t in FIG_CHECKPOINTS if t <= horizon]
    if len(pts) >= 2:
        return pts
    grid = np.unique(np.geomspace(max(2, horizon // 8), horizon, 4).astype(int))
    return [int(t) for t in grid if 1 <= t <= horizon]


def run_trial(cfg: ExperimentConfig, trial: int, rule: Optional[StepRule] = None) -> TrialOutcome:
    """Run one trial end to end and assemble its result rows."""
    market = build_trial_market(cfg, trial)
    model = cfg.noise
    baseline = baseline_log_values(model, market)
    mv = mean_values(model, market)
    eq = solve_equilibrium(market, baseline, mean_vals=mv)
    stream = make_stream(model, market, cfg.base_seed + 10**6 + trial)
    keep_bids = None if cfg.thin is None else (not cfg.thin)
    traj = run_online(market, stream, cfg.horizon, rule or cfg.step_rule, keep_bids=keep_bids)

    fair = fairness_regret(traj, eq).cumulative
    indiv = individual_regret(traj, eq, cfg.tracked_buyer, mv).cumulative
    indiv_real = individual_regret(traj, eq, cfg.tracked_buyer, mv, realized=True).cumulative

    t_axis = np.arange(1, cfg.horizon + 1)
    price_cum = np.cumsum(traj.prices, axis=0)
    avg_dist = np.abs(price_cum / t_axis[:, None] - eq.prices_star[None, :]).sum(axis=1) ** 2
    last_dist = np.abs(traj.prices - eq.prices_star[None, :]).sum(axis=1) ** 2

    rows = []
    for idx in range(cfg.horizon):
        rows.append(
            f"{trial},{idx + 1},{_fmt(traj.expected_phi[idx])},{_fmt(traj.sample_phi[idx])},"
            f"{_fmt(fair[idx])},{_fmt(indiv[idx])},{_fmt(indiv_real[idx])},"
            f"{_fmt(avg_dist[idx])},{_fmt(last_dist[idx])}"
        )

    alloc_star = eq.bids_star / eq.prices_star[None, :]
    u_star = float((mv[cfg.tracked_buyer] * alloc_star[cfg.tracked_buyer]).sum())
    rel_at = {t: float(indiv[t - 1] / (t * u_star)) for t in _checkpoints(cfg.horizon)}
    return TrialOutcome(
        trial=trial,
        rows=rows,
        fairness_cum=fair,
        fairness_final=float(fair[-1]),
        individual_final=float(indiv[-1]),
        individual_final_realized=float(indiv_real[-1]),
        u_star=u_star,
        rel_regret_at=rel_at,
        price_avg_final=float(avg_dist[-1]),
        price_last_final=float(last_dist[-1]),
        phi_gap_max=float(np.max(np.abs(traj.sample_phi - traj.expected_phi))),
        price_sum_drift=float(np.max(np.abs(traj.prices.sum(axis=1) - 1.0))),
    )


def theorem_bound(model: NoiseModel, n: int, m: int, horizon: int, phi_bar: float):
    """Fairness-regret bound implied by the model kind, or (None, None).

    stationary: log(MN).  corrupted: 2*mu_range*T + log(MN).  ergodic:
    2*(T-kappa)*alpha^kappa + 2*kappa*phi_bar + log(MN) with
    kappa = ceil(-log T / log alpha) and phi_bar measured from the run.
    Periodic carries no self-contained bound here.
    """
    log_mn = math.log(n * m)
    if model.kind == "stationary":
        return "log_mn", log_mn
    if model.kind == "corrupted":
        return "two_mu_range_T_plus_log_mn", 2.0 * model.mu_range * horizon + log_mn
    if model.kind == "ergodic":
        if model.alpha <= 0.0:
            return "ergodic_mixing", 2.0 * phi_bar + log_mn
        kappa = min(horizon, math.ceil(-math.log(horizon) / math.log(model.alpha)))
        delta = model.alpha**kappa
        return "ergodic_mixing", 2.0 * (horizon - kappa) * delta + 2.0 * kappa * phi_bar + log_mn
    return None, None


def _summarize(cfg: ExperimentConfig, outcomes: list) -> dict:
    finals = np.array([o.fairness_final for o in outcomes])
    indiv_finals = np.array([o.individual_final for o in outcomes])
    indiv_real_finals = np.array([o.individual_final_realized for o in outcomes])
    u_stars = np.array([o.u_star for o in outcomes])
    phi_bar = float(max(o.phi_gap_max for o in outcomes))
    price_drift = float(max(o.price_sum_drift for o in outcomes))

    checkpoints = sorted(outcomes[0].rel_regret_at)
    rel_mean = [float(np.mean([o.rel_regret_at[t] for o in outcomes])) for t in checkpoints]
    try:
        slope = loglog_slope(np.array(checkpoints, dtype=float), np.array(rel_mean))
    except (NonPositiveSeries, MarketError):
        slope = None

    log_mn = math.log(cfg.n_buyers * cfg.n_items)
    bound_kind, bound = theorem_bound(cfg.noise, cfg.n_buyers, cfg.n_items, cfg.horizon, phi_bar)
    checks = {
        "price_sum_drift_within_1e-10": price_drift <= 1e-10,
        "fairness_mean_within_bound": None,
        "fairness_max_within_bound": None,
    }
    if bound is not None:
        checks["fairness_mean_within_bound"] = bool(finals.mean() <= bound)
        checks["fairness_max_within_bound"] = bool(finals.max() <= bound)

    summary = {
        "config": {
            "n_buyers": cfg.n_buyers,
            "n_items": cfg.n_items,
            "horizon": cfg.horizon,
            "trials": cfg.trials,
            "base_seed": cfg.base_seed,
            "step_rule": cfg.step_rule.value,
            "tracked_buyer": cfg.tracked_buyer,
            "noise": cfg.noise.to_dict(),
        },
        "assumptions": (["horizon defaulted to 5000"] if cfg.horizon_defaulted else []),
        "fairness_regret": {
            "mean_final": float(finals.mean()),
            "max_final": float(finals.max()),
            "per_trial_final": [float(x) for x in finals],
        },
        "individual_regret": {
            "buyer": cfg.tracked_buyer,
            "mean_final": float(indiv_finals.mean()),
            "mean_final_realized": float(indiv_real_finals.mean()),
            "u_star_mean": float(u_stars.mean()),
            "relative_checkpoints": [[int(t), r] for t, r in zip(checkpoints, rel_mean)],
            "loglog_slope": slope,
        },
        "price_distance": {
            "avg_l1sq_mean": float(np.mean([o.price_avg_final for o in outcomes])),
            "last_l1sq_mean": float(np.mean([o.price_last_final for o in outcomes])),
        },
        "bounds": {
            "log_mn": log_mn,
            "two_log_mn_over_t": 2.0 * log_mn / cfg.horizon,
            "model_bound_kind": bound_kind,
            "model_bound": bound,
            "phi_bar_empirical": phi_bar,
        },
        "checks": checks,
    }
    return summary


def _bound_checks_enforced(kind: str) -> tuple:
    """Which summary checks gate the exit code, per noise kind."""
    if kind == "stationary":
        return ("fairness_mean_within_bound", "fairness_max_within_bound")
    if kind in ("corrupted", "ergodic"):
        return ("fairness_mean_within_bound",)
    return ()


def summary_exit_code(summary: dict) -> int:
    """0 when all enforced checks pass, 2 otherwise."""
    checks = summary["checks"]
    if not checks["price_sum_drift_within_1e-10"]:
        return 2
    for name in _bound_checks_enforced(summary["config"]["noise"]["kind"]):
        if checks.get(name) is False:
            return 2
    return 0


def _write_csv(path: Path, header: str, row_chunks) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header + "\n")
        for chunk in row_chunks:
            fh.write("\n".join(chunk))
            fh.write("\n")


def _write_json(path: Path, obj: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def run_experiment(cfg: ExperimentConfig, out_dir) -> dict:
    """Run all trials, write results.csv + summary.json, return the summary."""
    out = Path(out_dir)
    os.makedirs(out, exist_ok=True)
    outcomes = [run_trial(cfg, k) for k in range(cfg.trials)]
    _write_csv(out / "results.csv", ",".join(RESULT_COLUMNS), (o.rows for o in outcomes))
    summary = _summarize(cfg, outcomes)
    _write_json(out / "summary.json", summary)
    return summary


def run_instance_sweep(cfg: ExperimentConfig, out_dir) -> dict:
    """Run the config across an (n, m, sigma) grid; stationary scaling survey."""
    out = Path(out_dir)
    os.makedirs(out, exist_ok=True)
    instances = cfg.instances if cfg.instances is not None else DEFAULT_INSTANCES
    entries = []
    all_ok = True
    for i, (n, m, sigma) in enumerate(instances):
        sub_cfg = dataclasses.replace(
            cfg,
            n_buyers=n,
            n_items=m,
            noise=dataclasses.replace(cfg.noise, sigma=sigma),
            budgets=None,
            base_values=None,
            tracked_buyer=min(cfg.tracked_buyer, n - 1),
            instances=None,
        )
        sub_dir = out / f"instance_{i:02d}_n{n}_m{m}"
        summary = run_experiment(sub_cfg, sub_dir)
        entry = {
            "n_buyers": n,
            "n_items": m,
            "sigma": sigma,
            "out_dir": sub_dir.name,
            "bound_log_mn": summary["bounds"]["log_mn"],
            "fairness_mean_final": summary["fairness_regret"]["mean_final"],
            "fairness_max_final": summary["fairness_regret"]["max_final"],
            "mean_within_bound": summary["checks"]["fairness_mean_within_bound"],
            "max_within_bound": summary["checks"]["fairness_max_within_bound"],
        }
        ok = summary_exit_code(summary) == 0
        all_ok = all_ok and ok
        entries.append(entry)
    sweep = {"instances": entries, "all_within_bound": all_ok}
    _write_json(out / "sweep_summary.json", sweep)
    return sweep


def run_stepsize_comparison(cfg: ExperimentConfig, out_dir) -> dict:
    """Rerun the same trials (same seeds) under each step rule.

    Emits a long-format results.csv with a leading step_rule column and a
    summary with final regrets plus the trailing-window slope of the mean
    cumulative fairness regret (last 20% of periods).
    """
    out = Path(out_dir)
    os.makedirs(out, exist_ok=True)
    header = "step_rule," + ",".join(RESULT_COLUMNS)
    tail_start = max(0, int(cfg.horizon * 0.8) - 1)
    ts = np.arange(tail_start + 1, cfg.horizon + 1, dtype=float)
    per_rule = {}
    with open(out / "results.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header + "\n")
        for rule in (StepRule.CONSTANT_ONE, StepRule.INVERSE_T, StepRule.INVERSE_SQRT_T):
            finals = []
            tail_sum = np.zeros(cfg.horizon - tail_start)
            for k in range(cfg.trials):
                outcome = run_trial(cfg, k, rule=rule)
                fh.write("\n".join(f"{rule.value},{row}" for row in outcome.rows))
                fh.write("\n")
                finals.append(outcome.fairness_final)
                tail_sum += outcome.fairness_cum[tail_start:]
            tail_slope = float(np.polyfit(ts, tail_sum / cfg.trials, 1)[0])
            per_rule[rule.value] = {
                "fairness_mean_final": float(np.mean(finals)),
                "trailing_window_slope": tail_slope,
            }
    base = per_rule[StepRule.CONSTANT_ONE.value]["fairness_mean_final"]
    for rule_name, entry in per_rule.items():
        entry["final_ratio_vs_constant"] = (
            entry["fairness_mean_final"] / base if base > 0 else None
        )
    summary = {
        "config": {
            "n_buyers": cfg.n_buyers,
            "n_items": cfg.n_items,
            "horizon": cfg.horizon,
            "trials": cfg.trials,
            "base_seed": cfg.base_seed,
            "noise": cfg.noise.to_dict(),
        },
        "rules": per_rule,
    }
    _write_json(out / "stepsize_summary.json", summary)
    return summary
