"""Trajectory analytics over finished runs.

Exploration episodes, windowed pseudo-regret samples, the locally averaged
regret-of-exploration estimator, and the finite-horizon sliding-regret proxy
(max windowed regret past a cutoff). Everything here is a pure function of
immutable RunLogs, restricted to the two-arm case.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import BanditInstance, RunLog

__all__ = [
    "EpisodeSample",
    "RegExpCurve",
    "detect_episodes",
    "episode_samples",
    "regexp_estimate",
    "build_regexp_curve",
    "max_window_regret",
    "max_window_regret_from_positions",
    "suboptimal_run_lengths",
]


@dataclass(frozen=True)
class EpisodeSample:
    """One (episode start, windowed regret) observation."""

    tau: int
    window_suboptimal_count: int
    window_regret: float
    run_id: int = 0


@dataclass(frozen=True)
class RegExpCurve:
    """Windowed means of episode regret on a grid of rounds.

    `points` holds (t, estimate, n_samples); the estimate is None whenever
    no episode fell within the window (never a fabricated 0.0).
    """

    points: tuple[tuple[int, float | None, int], ...]
    window: int
    episode_horizon: int


def _require_two_arms(instance: BanditInstance) -> None:
    if instance.k != 2:
        raise NotImplementedError("trajectory metrics are defined for the two-arm case")


def detect_episodes(log: RunLog, optimal: int) -> np.ndarray:
    """Rounds where a suboptimal streak begins.

    The first suboptimal pull ever, then every round t with A_t suboptimal
    and A_{t-1} optimal. Returned 1-based, strictly increasing.
    """
    if int(log.actions.max(initial=0)) > 1:
        raise NotImplementedError("episode detection is defined for the two-arm case")
    sub = np.asarray(log.actions) != optimal
    prev = np.empty_like(sub)
    prev[0] = False
    prev[1:] = sub[:-1]
    return np.flatnonzero(sub & ~prev) + 1


def episode_samples(log: RunLog, instance: BanditInstance, t_window: int, run_id: int = 0) -> list[EpisodeSample]:
    """One sample per episode tau with tau + t_window <= horizon.

    Windows of consecutive episodes may overlap; all are kept.
    """
    _require_two_arms(instance)
    if t_window < 1:
        raise ValueError("window length must be >= 1")
    taus = detect_episodes(log, instance.optimal_arm)
    out = []
    for tau in taus:
        tau = int(tau)
        if tau + t_window > log.horizon:
            continue
        count = log.suboptimal_count(tau, tau + t_window)
        out.append(
            EpisodeSample(
                tau=tau,
                window_suboptimal_count=count,
                window_regret=instance.gap * count,
                run_id=run_id,
            )
        )
    return out


def regexp_estimate(samples, t: int, w: int) -> tuple[float | None, int]:
    """Mean window regret over samples with |tau - t| < w, and their count.

    Returns (None, 0) when no sample lands in the window.
    """
    if w < 1:
        raise ValueError("estimator window must be >= 1")
    total = 0.0
    n = 0
    for s in samples:
        if abs(s.tau - t) < w:
            total += s.window_regret
            n += 1
    if n == 0:
        return None, 0
    return total / n, n


def build_regexp_curve(samples, horizon: int, t_window: int, w: int, step: int | None = None) -> RegExpCurve:
    """Evaluate the estimator on an arithmetic grid (default step w//4)."""
    if step is None:
        step = max(1, w // 4)
    episode_horizon = horizon - t_window
    taus = np.array([s.tau for s in samples], dtype=np.int64)
    regs = np.array([s.window_regret for s in samples], dtype=np.float64)
    order = np.argsort(taus, kind="stable")
    taus = taus[order]
    regs = regs[order]
    csum = np.concatenate(([0.0], np.cumsum(regs)))
    points = []
    for t in range(step, episode_horizon + 1, step):
        lo = np.searchsorted(taus, t - w, side="right")
        hi = np.searchsorted(taus, t + w, side="left")
        n = int(hi - lo)
        est = (csum[hi] - csum[lo]) / n if n else None
        points.append((t, est, n))
    return RegExpCurve(points=tuple(points), window=w, episode_horizon=episode_horizon)


def max_window_regret(
    log: RunLog, instance: BanditInstance, t_window: int, t_min: int
) -> tuple[int, float]:
    """Maximize the windowed pseudo-regret over starts s in [t_min, horizon - t_window].

    Single pass over the suboptimal-pull prefix counts; returns the earliest
    maximizing start and the value.
    """
    _require_two_arms(instance)
    horizon = log.horizon
    if t_min < 1 or t_min + t_window > horizon:
        raise ValueError("window does not fit: need 1 <= t_min and t_min + t_window <= horizon")
    prefix = log.subopt_prefix
    s_max = horizon - t_window
    # counts[s-1] = suboptimal pulls in [s, s+t_window) for s = t_min..s_max
    hi = prefix[t_min + t_window - 2 : s_max + t_window - 1]
    lo = np.concatenate(([0], prefix))[t_min - 1 : s_max]
    counts = hi - lo
    best = int(np.argmax(counts))
    return t_min + best, float(instance.gap * counts[best])


def max_window_regret_from_positions(
    positions: np.ndarray, horizon: int, gap: float, t_window: int, t_min: int
) -> float:
    """Same maximum as `max_window_regret`, from sorted suboptimal-pull rounds.

    Candidate starts are the positions themselves clipped into the feasible
    range (shifting a window start right up to its first covered position
    never drops a pull), plus t_min.
    """
    if t_min < 1 or t_min + t_window > horizon:
        raise ValueError("window does not fit: need 1 <= t_min and t_min + t_window <= horizon")
    s_max = horizon - t_window
    positions = np.asarray(positions, dtype=np.int64)
    starts = np.unique(np.clip(positions, t_min, s_max))
    starts = np.concatenate(([t_min], starts))
    counts = np.searchsorted(positions, starts + t_window, side="left") - np.searchsorted(
        positions, starts, side="left"
    )
    return float(gap * counts.max(initial=0))


def suboptimal_run_lengths(log: RunLog, optimal: int, t_min: int = 1) -> list[int]:
    """Lengths of maximal consecutive suboptimal blocks starting at or after t_min."""
    sub = np.asarray(log.actions) != optimal
    prev = np.empty_like(sub)
    prev[0] = False
    prev[1:] = sub[:-1]
    starts = np.flatnonzero(sub & ~prev)
    nxt = np.empty_like(sub)
    nxt[-1] = False
    nxt[:-1] = sub[1:]
    ends = np.flatnonzero(sub & ~nxt)
    lengths = ends - starts + 1
    keep = starts + 1 >= t_min
    return [int(x) for x in lengths[keep]]
