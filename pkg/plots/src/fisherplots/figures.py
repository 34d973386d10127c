"""The three figure kinds rendered from simulator result CSVs.

The only statistics computed here are trial means per period and, for the
log-log figure, a straight-line fit in log space. Anything smarter belongs
in the simulator; this layer just draws what the files already contain.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be pinned first)
import numpy as np  # noqa: E402

from .schema import SchemaError, load_results  # noqa: E402

KINDS = ("regret_curves", "loglog_individual", "stepsize_comparison")
FORMATS = ("png", "svg")

# Sampling grid for the log-log fit; matches the grid the simulator reports
# slopes on. Falls back to a geometric grid for runs shorter than the first
# checkpoint.
CHECKPOINTS = (500, 1000, 2000, 5000)

RULE_ORDER = ("constant_one", "inverse_t", "inverse_sqrt_t")


@dataclass(frozen=True)
class FigureSpec:
    """What to draw, from which CSVs, into which image file."""

    kind: str
    inputs: tuple
    out: str
    format: str | None = None  # inferred from the out suffix when None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SchemaError(
                f"unknown figure kind {self.kind!r}; expected one of {', '.join(KINDS)}"
            )
        if not self.inputs:
            raise SchemaError("a figure needs at least one input CSV")
        fmt = self.format or Path(self.out).suffix.lstrip(".").lower()
        if fmt not in FORMATS:
            raise SchemaError(f"unsupported image format {fmt!r} (png or svg)")
        object.__setattr__(self, "inputs", tuple(str(p) for p in self.inputs))
        object.__setattr__(self, "format", fmt)


def render(spec: FigureSpec) -> dict:
    """Draw the figure, save it, and return what was drawn.

    The returned dict carries the plotted series (and fitted slopes where
    applicable) keyed by curve label, so callers and tests can check the
    data without parsing image files.
    """
    if spec.kind == "regret_curves":
        meta = _regret_curves(spec)
    elif spec.kind == "loglog_individual":
        meta = _loglog_individual(spec)
    else:
        meta = _stepsize_comparison(spec)
    meta["kind"] = spec.kind
    meta["out"] = spec.out
    return meta


def _labels(paths) -> list:
    """One label per input; results.csv files are told apart by parent dir."""
    names = []
    for raw in paths:
        p = Path(raw)
        if p.stem == "results" and p.parent.name:
            names.append(p.parent.name)
        else:
            names.append(p.stem)
    if len(set(names)) != len(names):
        names = [str(Path(raw)) for raw in paths]
    return names


def _checkpoints(horizon: int) -> list:
    pts = [t for t in CHECKPOINTS if t <= horizon]
    if len(pts) >= 2:
        return pts
    grid = np.unique(np.geomspace(max(2, horizon // 8), horizon, 4).astype(int))
    return [int(t) for t in grid if 1 <= t <= horizon]


def _save(fig, spec: FigureSpec) -> None:
    fig.savefig(spec.out, format=spec.format, dpi=150)
    plt.close(fig)


def _regret_curves(spec: FigureSpec) -> dict:
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    series = {}
    for path, label in zip(spec.inputs, _labels(spec.inputs)):
        frame = load_results(path)
        mean = frame.groupby("t")["fairness_regret_cum"].mean()
        ax.plot(mean.index.to_numpy(), mean.to_numpy(), label=label)
        series[label] = {"t": [int(t) for t in mean.index], "mean": [float(v) for v in mean]}
    ax.set_xlabel("period t")
    ax.set_ylabel("cumulative fairness regret (mean over trials)")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    _save(fig, spec)
    return {"series": series}


def _loglog_individual(spec: FigureSpec) -> dict:
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    series, slopes, annotations = {}, {}, {}
    for path, label in zip(spec.inputs, _labels(spec.inputs)):
        frame = load_results(path)
        mean = frame.groupby("t")["individual_regret_cum"].mean()
        have = set(int(t) for t in mean.index)
        grid = [t for t in _checkpoints(int(mean.index.max())) if t in have]
        if len(grid) < 2:
            raise SchemaError(
                f"{path}: fewer than two checkpoint periods present (need the "
                f"grid {_checkpoints(int(mean.index.max()))} or a longer run)"
            )
        ts = np.asarray(grid, dtype=float)
        rel = mean.loc[grid].to_numpy(dtype=float) / ts
        keep = rel > 0
        if keep.sum() < 2:
            raise SchemaError(
                f"{path}: need at least two positive regret values for a log-log fit"
            )
        ts, rel = ts[keep], rel[keep]
        slope, intercept = np.polyfit(np.log10(ts), np.log10(rel), 1)
        fit = 10.0 ** (intercept + slope * np.log10(ts))
        note = f"slope ≈ {slope:.3f}"
        pts, = ax.loglog(ts, rel, "o", label=label)
        ax.loglog(ts, fit, "-", color=pts.get_color(), label=f"{label} fit: {note}")
        series[label] = {"t": [int(t) for t in ts], "relative": [float(v) for v in rel]}
        slopes[label] = float(slope)
        annotations[label] = note
    ax.set_xlabel("period t")
    ax.set_ylabel("relative individual regret (mean over trials)")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    _save(fig, spec)
    return {"series": series, "slopes": slopes, "annotations": annotations}


def _stepsize_comparison(spec: FigureSpec) -> dict:
    if len(spec.inputs) != 1:
        raise SchemaError(
            "stepsize_comparison reads exactly one step-rule results CSV "
            f"(got {len(spec.inputs)} inputs)"
        )
    frame = load_results(spec.inputs[0], stepsize=True)
    rules = list(frame["step_rule"].unique())
    ordered = [r for r in RULE_ORDER if r in rules] + sorted(set(rules) - set(RULE_ORDER))
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    series, finals = {}, {}
    for rule in ordered:
        mean = frame[frame["step_rule"] == rule].groupby("t")["fairness_regret_cum"].mean()
        ax.plot(mean.index.to_numpy(), mean.to_numpy(), label=rule)
        series[rule] = {"t": [int(t) for t in mean.index], "mean": [float(v) for v in mean]}
        finals[rule] = float(mean.iloc[-1])
    ax.set_xlabel("period t")
    ax.set_ylabel("cumulative fairness regret (mean over trials)")
    ax.grid(True, alpha=0.3)
    ax.legend(title="step rule")
    fig.tight_layout()
    _save(fig, spec)
    return {"series": series, "finals": finals}
