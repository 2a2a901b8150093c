"""Figure rendering over simulation CSVs.

Two figure kinds: per-run pseudo-regret staircases from trace files, and
windowed episode-regret curves with reference lines. Rendering is a pure
view over the CSV contents; it never touches run logs or recomputes
statistics beyond the cumulative staircase sum.
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["PlotSpec", "render_trace", "render_regexp"]

TRACE_COLUMNS = ("round", "action", "reward")
CURVE_COLUMNS = ("policy", "t", "estimate", "n_samples")


@dataclass(frozen=True)
class PlotSpec:
    """A render request: input files, figure kind, output path, extra lines."""

    inputs: tuple[str, ...]
    kind: str  # "trace" | "regexp"
    output: str
    hlines: tuple[tuple[float, str], ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.kind not in ("trace", "regexp"):
            raise ValueError(f"unknown figure kind {self.kind!r}")
        if not self.inputs:
            raise ValueError("need at least one input file")


def _read_rows(path: str | Path, required: tuple[str, ...]) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in required if c not in header]
        if missing:
            raise ValueError(f"{path}: missing columns {missing}; header was {header}")
        return list(reader)


def _policy_of(path: str | Path) -> str:
    match = re.match(r"trace_(.+)_\d+$", Path(path).stem)
    return match.group(1) if match else Path(path).stem


def render_trace(
    trace_paths: list[str | Path],
    gap: float,
    output: str | Path,
    optimal_arm: int = 0,
):
    """Cumulative gap * suboptimal-count staircases, one panel per policy."""
    if gap <= 0:
        raise ValueError("gap must be positive")
    by_policy: dict[str, list[tuple[str, np.ndarray]]] = {}
    for path in trace_paths:
        rows = _read_rows(path, TRACE_COLUMNS)
        if not rows:
            raise ValueError(f"{path}: no data rows")
        actions = np.array([int(r["action"]) for r in rows])
        stair = gap * np.cumsum(actions != optimal_arm)
        by_policy.setdefault(_policy_of(path), []).append((str(path), stair))
    fig, axes = plt.subplots(
        1, len(by_policy), figsize=(5.2 * len(by_policy), 3.6), squeeze=False
    )
    for ax, (policy, stairs) in zip(axes[0], sorted(by_policy.items())):
        for name, stair in stairs:
            rounds = np.arange(1, len(stair) + 1)
            ax.step(rounds, stair, where="post", label=Path(name).stem)
        ax.set_title(policy)
        ax.set_xlabel("round")
        ax.set_ylabel("pseudo-regret")
        ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(output)
    return fig


def render_regexp(
    curve_path: str | Path,
    predicted: float | None,
    delta: float | None,
    output: str | Path,
    hlines: tuple[tuple[float, str], ...] = (),
    policy: str | None = None,
):
    """Windowed estimate vs round with n_samples-weighted markers.

    Draws a dotted line at `delta`, a solid line at `predicted`, and any
    extra dashed reference lines, all exactly at the supplied values.
    """
    rows = _read_rows(curve_path, CURVE_COLUMNS)
    if policy is not None:
        rows = [r for r in rows if r["policy"] == policy]
    series: dict[str, list[tuple[int, float, int]]] = {}
    for r in rows:
        if r["estimate"] == "":
            continue
        series.setdefault(r["policy"], []).append(
            (int(r["t"]), float(r["estimate"]), int(r["n_samples"]))
        )
    if not any(series.values()):
        raise ValueError(f"{curve_path}: no non-empty curve points to draw")
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    for name, points in sorted(series.items()):
        points.sort()
        ts = np.array([p[0] for p in points])
        ests = np.array([p[1] for p in points])
        ns = np.array([p[2] for p in points], dtype=float)
        sizes = 4.0 + 46.0 * ns / ns.max()
        ax.plot(ts, ests, lw=0.9, label=name)
        ax.scatter(ts, ests, s=sizes, alpha=0.55)
    if delta is not None:
        ax.axhline(delta, linestyle=":", color="black", label=f"optimal = {delta:g}")
    if predicted is not None:
        ax.axhline(predicted, linestyle="-", color="crimson", lw=1.0,
                   label=f"predicted = {predicted:g}")
    for value, label in hlines:
        ax.axhline(value, linestyle="--", color="gray", lw=0.8, label=label)
    ax.set_xlabel("round")
    ax.set_ylabel("windowed episode regret")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(output)
    return fig
