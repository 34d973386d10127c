"""Tests for config parsing, experiment runs, CSV reproducibility, and the CLI."""

import json
import math

import numpy as np
import pytest

import onlinefisher.cli as cli
import onlinefisher.harness as harness
from onlinefisher.checks import InvariantResult
from onlinefisher.errors import ConfigError, ConvergenceFailure
from onlinefisher.harness import (
    DEFAULT_INSTANCES,
    RESULT_COLUMNS,
    ExperimentConfig,
    build_trial_market,
    load_config,
    parse_config,
    run_experiment,
    run_instance_sweep,
    run_stepsize_comparison,
    summary_exit_code,
    theorem_bound,
)
from onlinefisher.dynamics import StepRule
from onlinefisher.input_models import NoiseModel

SYMMETRIC_RAW = {
    "base_values": [[0.5, 0.5], [0.5, 0.5]],
    "noise": {"kind": "stationary", "sigma": 0.0},
    "horizon": 1,
    "trials": 1,
    "base_seed": 0,
}


def raw_config(**overrides):
    raw = {
        "n_buyers": 3,
        "n_items": 4,
        "noise": {"kind": "stationary", "sigma": 0.05},
        "horizon": 30,
        "trials": 2,
        "base_seed": 11,
    }
    raw.update(overrides)
    return raw


def write_config(tmp_path, raw, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(raw), encoding="utf-8")
    return str(path)


# ---------------------------------------------------------------------------
# config parsing


def test_parse_config_defaults():
    cfg = parse_config(raw_config())
    assert cfg.n_buyers == 3 and cfg.n_items == 4
    assert cfg.horizon == 30 and not cfg.horizon_defaulted
    assert cfg.step_rule is StepRule.CONSTANT_ONE
    assert cfg.tracked_buyer == 0
    assert cfg.budgets is None and cfg.base_values is None
    assert cfg.noise == NoiseModel(kind="stationary", sigma=0.05)


def test_parse_config_horizon_defaults_to_5000():
    raw = raw_config()
    del raw["horizon"]
    cfg = parse_config(raw)
    assert cfg.horizon == 5000 and cfg.horizon_defaulted


def test_parse_config_rejects_unknown_fields():
    with pytest.raises(ConfigError, match="unknown config fields"):
        parse_config(raw_config(horizons=10))
    with pytest.raises(ConfigError, match="unknown noise fields"):
        parse_config(raw_config(noise={"kind": "stationary", "sgima": 0.1}))


def test_parse_config_requires_core_fields():
    raw = raw_config()
    for key in ("n_buyers", "n_items", "trials", "base_seed", "noise"):
        broken = dict(raw)
        del broken[key]
        with pytest.raises(ConfigError):
            parse_config(broken)
    with pytest.raises(ConfigError, match="noise.kind"):
        parse_config(raw_config(noise={"sigma": 0.1}))


def test_parse_config_validates_scalars():
    with pytest.raises(ConfigError):
        parse_config(raw_config(horizon=0))
    with pytest.raises(ConfigError):
        parse_config(raw_config(trials=0))
    with pytest.raises(ConfigError):
        parse_config(raw_config(base_seed=-1))
    with pytest.raises(ConfigError):
        parse_config(raw_config(horizon=True))
    with pytest.raises(ConfigError):
        parse_config(raw_config(thin="yes"))
    with pytest.raises(ConfigError):
        parse_config(raw_config(tracked_buyer=3))
    with pytest.raises(ConfigError):
        parse_config(raw_config(step_rule="inverse_t_squared"))


def test_parse_config_budget_modes():
    cfg = parse_config(raw_config(budgets="equal"))
    assert cfg.budgets is None
    cfg = parse_config(raw_config(budgets=[1.0, 2.0, 3.0]))
    assert cfg.budgets == (1.0, 2.0, 3.0)
    with pytest.raises(ConfigError):
        parse_config(raw_config(budgets=[1.0, 2.0]))
    with pytest.raises(ConfigError):
        parse_config(raw_config(budgets=[1.0, -2.0, 3.0]))


def test_parse_config_base_values():
    raw = dict(SYMMETRIC_RAW)
    cfg = parse_config(raw)
    assert cfg.n_buyers == 2 and cfg.n_items == 2
    assert cfg.base_values == ((0.5, 0.5), (0.5, 0.5))
    with pytest.raises(ConfigError, match="shape"):
        parse_config(raw_config(base_values=[[0.5, 0.5], [0.5, 0.5]]))


def test_parse_config_instances():
    cfg = parse_config(raw_config(instances=[[3, 4, 0.05], [5, 6, 0.01]]))
    assert cfg.instances == ((3, 4, 0.05), (5, 6, 0.01))
    with pytest.raises(ConfigError):
        parse_config(raw_config(instances=[]))
    with pytest.raises(ConfigError):
        parse_config(raw_config(instances=[[3, 4]]))
    with pytest.raises(ConfigError):
        parse_config(raw_config(instances=[[0, 4, 0.1]]))


def test_load_config_error_paths(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json", encoding="utf-8")
    with pytest.raises(ConfigError, match="invalid JSON"):
        load_config(bad)
    arr = tmp_path / "arr.json"
    arr.write_text("[1, 2]", encoding="utf-8")
    with pytest.raises(ConfigError, match="top level"):
        load_config(arr)


def test_config_step_rules_roundtrip():
    for rule in StepRule:
        cfg = parse_config(raw_config(step_rule=rule.value))
        assert cfg.step_rule is rule


# ---------------------------------------------------------------------------
# trial market construction


def test_build_trial_market_is_seeded_per_trial():
    cfg = parse_config(raw_config())
    again = build_trial_market(cfg, 0)
    assert np.array_equal(build_trial_market(cfg, 0).values, again.values)
    other = build_trial_market(cfg, 1)
    assert not np.array_equal(again.values, other.values)
    np.testing.assert_allclose(again.budgets, np.full(3, 1 / 3), atol=1e-15)


def test_build_trial_market_valuation_seed_decouples_from_base_seed():
    cfg_a = parse_config(raw_config(valuation_seed=500))
    cfg_b = parse_config(raw_config(valuation_seed=500, base_seed=999))
    assert np.array_equal(
        build_trial_market(cfg_a, 2).values, build_trial_market(cfg_b, 2).values
    )


def test_build_trial_market_pinned_values_ignore_trial_index():
    cfg = parse_config(dict(SYMMETRIC_RAW, trials=3))
    assert np.array_equal(build_trial_market(cfg, 0).values, build_trial_market(cfg, 2).values)


def test_build_trial_market_explicit_budgets():
    cfg = parse_config(raw_config(budgets=[1.0, 2.0, 1.0]))
    market = build_trial_market(cfg, 0)
    np.testing.assert_allclose(market.budgets, [0.25, 0.5, 0.25], atol=1e-15)


# ---------------------------------------------------------------------------
# run_experiment


def test_symmetric_single_period_run_is_exactly_fair(tmp_path):
    cfg = parse_config(dict(SYMMETRIC_RAW))
    summary = run_experiment(cfg, tmp_path / "out")
    assert summary["fairness_regret"]["mean_final"] == pytest.approx(0.0, abs=1e-12)
    assert summary["fairness_regret"]["max_final"] == pytest.approx(0.0, abs=1e-12)
    assert summary["checks"]["price_sum_drift_within_1e-10"]
    assert summary["checks"]["fairness_mean_within_bound"]
    assert summary_exit_code(summary) == 0
    lines = (tmp_path / "out" / "results.csv").read_text().splitlines()
    assert lines[0] == ",".join(RESULT_COLUMNS)
    assert len(lines) == 2  # header + one trial x one period
    assert lines[1].startswith("0,1,")


def test_rerun_is_bitwise_identical(tmp_path):
    cfg = parse_config(raw_config())
    run_experiment(cfg, tmp_path / "a")
    run_experiment(cfg, tmp_path / "b")
    a = (tmp_path / "a" / "results.csv").read_bytes()
    b = (tmp_path / "b" / "results.csv").read_bytes()
    assert a == b
    sa = (tmp_path / "a" / "summary.json").read_bytes()
    sb = (tmp_path / "b" / "summary.json").read_bytes()
    assert sa == sb


def test_summary_reports_exact_bounds(tmp_path):
    cfg = parse_config(raw_config())
    summary = run_experiment(cfg, tmp_path / "out")
    assert summary["bounds"]["log_mn"] == pytest.approx(math.log(12), abs=1e-12)
    assert summary["bounds"]["two_log_mn_over_t"] == pytest.approx(
        2 * math.log(12) / 30, abs=1e-12
    )
    assert summary["bounds"]["model_bound_kind"] == "log_mn"
    cps = summary["individual_regret"]["relative_checkpoints"]
    assert len(cps) >= 2
    assert all(t <= 30 for t, _ in cps)


def test_results_csv_schema_and_length(tmp_path):
    cfg = parse_config(raw_config())
    run_experiment(cfg, tmp_path / "out")
    lines = (tmp_path / "out" / "results.csv").read_text().splitlines()
    assert lines[0] == ",".join(RESULT_COLUMNS)
    assert len(lines) == 1 + cfg.trials * cfg.horizon
    # every body line has one field per column, trial ids in order
    first_fields = lines[1].split(",")
    assert len(first_fields) == len(RESULT_COLUMNS)
    assert [line.split(",")[0] for line in lines[1:]] == ["0"] * 30 + ["1"] * 30


# ---------------------------------------------------------------------------
# sweeps and step-size comparisons


def test_single_instance_sweep_reduces_to_run_experiment(tmp_path):
    plain_cfg = parse_config(raw_config())
    run_experiment(plain_cfg, tmp_path / "plain")
    sweep_cfg = parse_config(raw_config(instances=[[3, 4, 0.05]]))
    sweep = run_instance_sweep(sweep_cfg, tmp_path / "sweep")
    sub = tmp_path / "sweep" / "instance_00_n3_m4"
    assert (sub / "results.csv").read_bytes() == (
        tmp_path / "plain" / "results.csv"
    ).read_bytes()
    assert len(sweep["instances"]) == 1
    entry = sweep["instances"][0]
    assert entry["bound_log_mn"] == pytest.approx(math.log(12), abs=1e-12)
    assert (tmp_path / "sweep" / "sweep_summary.json").exists()


def test_default_sweep_instances_match_documented_grid():
    assert DEFAULT_INSTANCES == (
        (5, 10, 0.05),
        (10, 20, 0.04),
        (20, 30, 0.03),
        (40, 60, 0.02),
        (80, 120, 0.01),
    )


def test_stepsize_zero_noise_symmetric_all_rules_zero(tmp_path):
    cfg = parse_config(dict(SYMMETRIC_RAW, horizon=50))
    summary = run_stepsize_comparison(cfg, tmp_path / "out")
    assert set(summary["rules"]) == {"constant_one", "inverse_t", "inverse_sqrt_t"}
    for entry in summary["rules"].values():
        assert abs(entry["fairness_mean_final"]) <= 1e-10


def test_stepsize_constant_one_matches_run_experiment(tmp_path):
    cfg = parse_config(raw_config(trials=2, horizon=25))
    run_experiment(cfg, tmp_path / "plain")
    run_stepsize_comparison(cfg, tmp_path / "cmp")
    plain = (tmp_path / "plain" / "results.csv").read_text().splitlines()
    cmp_lines = (tmp_path / "cmp" / "results.csv").read_text().splitlines()
    assert cmp_lines[0] == "step_rule," + ",".join(RESULT_COLUMNS)
    constant = [
        line.split(",", 1)[1]
        for line in cmp_lines[1:]
        if line.startswith("constant_one,")
    ]
    assert constant == plain[1:]


# ---------------------------------------------------------------------------
# bounds and exit codes


def test_theorem_bound_formulas():
    stat = NoiseModel(kind="stationary", sigma=0.01)
    kind, bound = theorem_bound(stat, 20, 30, 5000, 0.0)
    assert kind == "log_mn" and bound == pytest.approx(math.log(600), abs=1e-12)

    corr = NoiseModel(kind="corrupted", sigma=0.01, mu_range=0.01)
    kind, bound = theorem_bound(corr, 20, 30, 5000, 0.0)
    assert kind == "two_mu_range_T_plus_log_mn"
    assert bound == pytest.approx(100.0 + math.log(600), abs=1e-12)

    erg = NoiseModel(kind="ergodic", sigma=0.01, alpha=0.6)
    kind, low = theorem_bound(erg, 20, 30, 5000, 0.0)
    _, high = theorem_bound(erg, 20, 30, 5000, 1.0)
    assert kind == "ergodic_mixing"
    kappa = math.ceil(-math.log(5000) / math.log(0.6))
    assert high - low == pytest.approx(2.0 * kappa, abs=1e-9)
    assert low == pytest.approx(
        2.0 * (5000 - kappa) * 0.6**kappa + math.log(600), abs=1e-9
    )

    per = NoiseModel(kind="periodic", sigma=0.01, mu_range=0.01, partitions=2, partition_len=5)
    assert theorem_bound(per, 20, 30, 10, 0.0) == (None, None)


def test_summary_exit_code_paths():
    def fake(kind, drift_ok=True, mean_ok=True, max_ok=True):
        return {
            "config": {"noise": {"kind": kind}},
            "checks": {
                "price_sum_drift_within_1e-10": drift_ok,
                "fairness_mean_within_bound": mean_ok,
                "fairness_max_within_bound": max_ok,
            },
        }

    assert summary_exit_code(fake("stationary")) == 0
    assert summary_exit_code(fake("stationary", drift_ok=False)) == 2
    assert summary_exit_code(fake("stationary", mean_ok=False)) == 2
    assert summary_exit_code(fake("stationary", max_ok=False)) == 2
    # only the mean is enforced for the non-stationary theorems
    assert summary_exit_code(fake("corrupted", max_ok=False)) == 0
    assert summary_exit_code(fake("corrupted", mean_ok=False)) == 2
    assert summary_exit_code(fake("ergodic", mean_ok=False)) == 2
    # periodic has no self-contained bound; only drift gates
    assert summary_exit_code(fake("periodic", mean_ok=False, max_ok=False)) == 0


# ---------------------------------------------------------------------------
# CLI


def test_cli_simulate_round_trip(tmp_path, capsys):
    path = write_config(tmp_path, dict(SYMMETRIC_RAW))
    code = cli.main(["simulate", "--config", path, "--out", str(tmp_path / "out")])
    assert code == 0
    assert (tmp_path / "out" / "results.csv").exists()
    assert (tmp_path / "out" / "summary.json").exists()
    assert "fairness regret" in capsys.readouterr().out


def test_cli_requires_some_output_dir(tmp_path, capsys):
    path = write_config(tmp_path, dict(SYMMETRIC_RAW))
    assert cli.main(["simulate", "--config", path]) == 1
    assert "output directory" in capsys.readouterr().err


def test_cli_config_and_io_errors_exit_one(tmp_path, capsys):
    bad = write_config(tmp_path, dict(SYMMETRIC_RAW, typo_field=1))
    assert cli.main(["simulate", "--config", bad, "--out", str(tmp_path / "x")]) == 1
    missing = str(tmp_path / "nope.json")
    assert cli.main(["simulate", "--config", missing, "--out", str(tmp_path / "x")]) == 1
    capsys.readouterr()


def test_cli_convergence_failure_exits_three(tmp_path, capsys, monkeypatch):
    def explode(*args, **kwargs):
        raise ConvergenceFailure("equilibrium blew the iteration cap", last_residual=1.0)

    monkeypatch.setattr(harness, "solve_equilibrium", explode)
    path = write_config(tmp_path, dict(SYMMETRIC_RAW))
    code = cli.main(["simulate", "--config", path, "--out", str(tmp_path / "out")])
    assert code == 3
    assert "iteration cap" in capsys.readouterr().err


def test_cli_equilibrium_prints_solution(tmp_path, capsys):
    raw = {
        "base_values": [[0.75, 0.25], [0.25, 0.75]],
        "noise": {"kind": "stationary", "sigma": 0.0},
        "horizon": 1,
        "trials": 1,
        "base_seed": 0,
    }
    path = write_config(tmp_path, raw)
    assert cli.main(["equilibrium", "--config", path]) == 0
    out = capsys.readouterr().out
    assert "phi*" in out and "prices" in out
    assert "envy margin" in out and "proportionality slack" in out
    assert cli.main(["equilibrium", "--config", path, "--trial", "5"]) == 1


def test_cli_sweep_and_stepsize(tmp_path, capsys):
    sweep_cfg = write_config(
        tmp_path, raw_config(horizon=10, trials=1, instances=[[2, 3, 0.05], [3, 2, 0.05]])
    )
    assert cli.main(["sweep", "--config", sweep_cfg, "--out", str(tmp_path / "sw")]) == 0
    out = capsys.readouterr().out
    assert out.count("bound=") == 2

    step_cfg = write_config(tmp_path, dict(SYMMETRIC_RAW, horizon=40), name="step.json")
    assert cli.main(["stepsize", "--config", step_cfg, "--out", str(tmp_path / "st")]) == 0
    out = capsys.readouterr().out
    for rule in ("constant_one", "inverse_t", "inverse_sqrt_t"):
        assert rule in out


def test_cli_check_exit_codes(monkeypatch, capsys):
    # exit-code mapping, with the suites stubbed to keep this fast
    good = [InvariantResult("fine", 1, 0.0, 1.0)]
    monkeypatch.setattr(cli, "check_invariants", lambda seeds, self_test: good)
    assert cli.main(["check"]) == 0
    bad = good + [InvariantResult("broken", 1, 2.0, 1.0)]
    monkeypatch.setattr(cli, "check_invariants", lambda seeds, self_test: bad)
    assert cli.main(["check", "--self-test"]) == 2
    out = capsys.readouterr().out
    assert "FAIL" in out and "broken" in out
