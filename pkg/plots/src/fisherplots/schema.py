"""Loading and validation for simulator result CSVs.

The simulator writes one row per (trial, period); the step-size comparison
prepends a step_rule column. This module is the only place those headers are
spelled out on the plotting side — everything downstream works on validated
DataFrames.
"""

from __future__ import annotations

from pathlib import Path

import pandas as pd

RESULT_COLUMNS = [
    "trial",
    "t",
    "expected_phi",
    "sample_phi",
    "fairness_regret_cum",
    "individual_regret_cum",
    "individual_regret_realized_cum",
    "price_l1sq_avg",
    "price_l1sq_last",
]

STEPSIZE_COLUMNS = ["step_rule"] + RESULT_COLUMNS


class SchemaError(ValueError):
    """The file exists but does not look like simulator output."""


class MissingFile(FileNotFoundError):
    """An input CSV is absent."""


def load_results(path, *, stepsize: bool = False) -> pd.DataFrame:
    """Read one results CSV, insisting on the exact expected header.

    With ``stepsize=True`` the leading step_rule column is required;
    otherwise it is rejected — the two layouts answer different questions,
    and silently averaging across step rules would be worse than an error.
    """
    p = Path(path)
    if not p.is_file():
        raise MissingFile(f"no such results file: {p}")
    expected = STEPSIZE_COLUMNS if stepsize else RESULT_COLUMNS
    try:
        frame = pd.read_csv(p)
    except Exception as exc:
        raise SchemaError(f"{p}: not parseable as CSV ({exc})") from exc
    got = list(frame.columns)
    if got != expected:
        raise SchemaError(
            f"{p}: header mismatch\n"
            f"  expected: {','.join(expected)}\n"
            f"  got:      {','.join(got)}"
        )
    if frame.empty:
        raise SchemaError(f"{p}: no data rows")
    for col in RESULT_COLUMNS:
        coerced = pd.to_numeric(frame[col], errors="coerce")
        if coerced.isna().any():
            bad = frame.loc[coerced.isna(), col].iloc[0]
            raise SchemaError(f"{p}: non-numeric value {bad!r} in column {col}")
        frame[col] = coerced
    if stepsize:
        frame["step_rule"] = frame["step_rule"].astype(str)
    return frame
