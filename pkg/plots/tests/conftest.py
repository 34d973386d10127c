"""Fixtures that generate real simulator output through its CLI.

This package consumes the simulator only through files on disk, so the
fixtures shell out to the installed `onlinefisher` CLI rather than importing
it. Runs are deliberately tiny (4 buyers, 6 items, 64 periods, 2 trials).
"""

import json
import subprocess
import sys
from pathlib import Path

import pytest

from fisherplots.schema import RESULT_COLUMNS

BASE_CONFIG = {
    "n_buyers": 4,
    "n_items": 6,
    "horizon": 64,
    "trials": 2,
    "base_seed": 11,
    "noise": {"kind": "stationary", "sigma": 0.05},
}


def run_simulator(subcommand: str, config: dict, out_dir: Path) -> Path:
    cfg_path = out_dir.parent / f"{out_dir.name}-config.json"
    cfg_path.write_text(json.dumps(config), encoding="utf-8")
    proc = subprocess.run(
        [
            sys.executable,
            "-m",
            "onlinefisher.cli",
            subcommand,
            "--config",
            str(cfg_path),
            "--out",
            str(out_dir),
        ],
        capture_output=True,
        text=True,
    )
    if proc.returncode != 0:
        raise RuntimeError(
            f"simulator {subcommand} failed ({proc.returncode}):\n{proc.stderr}"
        )
    return out_dir / "results.csv"


@pytest.fixture(scope="session")
def stationary_csv(tmp_path_factory) -> Path:
    out = tmp_path_factory.mktemp("sim") / "stationary_a"
    return run_simulator("simulate", BASE_CONFIG, out)


@pytest.fixture(scope="session")
def second_csv(tmp_path_factory) -> Path:
    cfg = dict(BASE_CONFIG, base_seed=101, noise={"kind": "stationary", "sigma": 0.02})
    out = tmp_path_factory.mktemp("sim") / "stationary_b"
    return run_simulator("simulate", cfg, out)


@pytest.fixture(scope="session")
def stepsize_csv(tmp_path_factory) -> Path:
    out = tmp_path_factory.mktemp("sim") / "steps"
    return run_simulator("stepsize", BASE_CONFIG, out)


@pytest.fixture
def write_rows(tmp_path):
    """Write a synthetic results CSV; unset columns default to 0."""

    def _write(name: str, rows) -> Path:
        lines = [",".join(RESULT_COLUMNS)]
        for row in rows:
            lines.append(",".join(str(row.get(col, 0.0)) for col in RESULT_COLUMNS))
        path = tmp_path / name
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        return path

    return _write
