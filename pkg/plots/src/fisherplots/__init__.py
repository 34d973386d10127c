"""Figure rendering for market-simulation result CSVs: cumulative fairness
regret curves, log-log individual-regret decay with a fitted slope, and the
step-rule comparison."""

from .figures import CHECKPOINTS, FORMATS, KINDS, FigureSpec, render
from .schema import (
    RESULT_COLUMNS,
    STEPSIZE_COLUMNS,
    MissingFile,
    SchemaError,
    load_results,
)

__all__ = [
    "CHECKPOINTS",
    "FORMATS",
    "KINDS",
    "FigureSpec",
    "render",
    "RESULT_COLUMNS",
    "STEPSIZE_COLUMNS",
    "MissingFile",
    "SchemaError",
    "load_results",
]
