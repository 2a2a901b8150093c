"""The seven decision rules.

Five index policies (UCB, MOSS, UCB-V, KL-UCB, reworked IMED) and two
randomized policies (Thompson Sampling, MED). Index values are floats in
[0, I_max] with I_max possibly +inf; an unvisited arm scores +inf (KL-UCB
caps at 1). Before any rule is evaluated, every arm is pulled once in id
order (bootstrap), so the rules only ever see pulls >= 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from ._kernels import (
    KIND_IMED,
    KIND_KLUCB,
    KIND_MED,
    KIND_MOSS,
    KIND_TS,
    KIND_UCB,
    KIND_UCBV,
)
from .core import ArmStats, History
from ._rng import RunRng

__all__ = [
    "PolicyConfig",
    "POLICY_KINDS",
    "INDEX_KINDS",
    "RANDOMIZED_KINDS",
    "ucb_index",
    "moss_index",
    "ucbv_index",
    "klucb_index",
    "imed_index",
    "ts_draw",
    "med_distribution",
    "select_arm",
]

_KIND_CODES = {
    "ucb": KIND_UCB,
    "moss": KIND_MOSS,
    "ucbv": KIND_UCBV,
    "klucb": KIND_KLUCB,
    "imed": KIND_IMED,
    "ts": KIND_TS,
    "med": KIND_MED,
}
POLICY_KINDS = tuple(_KIND_CODES)
INDEX_KINDS = ("ucb", "moss", "ucbv", "klucb", "imed")
RANDOMIZED_KINDS = ("ts", "med")


@dataclass(frozen=True)
class PolicyConfig:
    """A policy kind plus the knobs that kind reads."""

    kind: str
    ucbv_c: float = 1.0
    klucb_tolerance: float = 1e-9
    klucb_max_iters: int = 100

    def __post_init__(self):
        kind = self.kind.lower()
        object.__setattr__(self, "kind", kind)
        if kind not in _KIND_CODES:
            raise ValueError(f"unknown policy kind {self.kind!r}; expected one of {POLICY_KINDS}")
        if self.ucbv_c <= 0:
            raise ValueError("ucbv_c must be positive")
        if not (0 < self.klucb_tolerance <= 1e-6):
            raise ValueError("klucb_tolerance must lie in (0, 1e-6]")
        if self.klucb_max_iters < 1:
            raise ValueError("klucb_max_iters must be positive")

    @property
    def kind_code(self) -> int:
        return _KIND_CODES[self.kind]

    def label(self) -> str:
        return self.kind


def ucb_index(stats: ArmStats, t: int) -> float:
    """mu_hat + sqrt(2 log t / N); +inf for an unvisited arm."""
    if stats.pulls == 0:
        return math.inf
    return _kernels._ucb_index(stats.empirical_mean, stats.pulls, math.log(t))


def moss_index(stats: ArmStats, t: int, k: int) -> float:
    """mu_hat + sqrt(max(log(t / (K N)), 0) / N); +inf for an unvisited arm."""
    if stats.pulls == 0:
        return math.inf
    return _kernels._moss_index(stats.empirical_mean, stats.pulls, float(t), float(k))


def ucbv_index(stats: ArmStats, t: int, c: float = 1.0) -> float:
    """Empirical-variance index with exploration constant c > 0."""
    if c <= 0:
        raise ValueError("c must be positive")
    if stats.pulls == 0:
        return math.inf
    return _kernels._ucbv_index(stats.empirical_mean, stats.pulls, math.log(t), float(c))


def klucb_index(stats: ArmStats, t: int, tol: float = 1e-9, max_iters: int = 100) -> float:
    """Largest mu in [mu_hat, 1) with N kl(mu_hat, mu) <= log t, by bisection.

    Returns 1 for an unvisited arm (the maximal index value).
    """
    if stats.pulls == 0:
        return 1.0
    return _kernels._klucb_index(
        stats.empirical_mean, stats.pulls, math.log(t), float(tol), int(max_iters)
    )


def imed_index(stats: ArmStats, best_empirical_mean: float, t: int) -> float:
    """log t / (N kl(mu_hat, mu_hat*) + log N); +inf when unvisited or when
    the denominator vanishes (empirical best arm seen exactly once)."""
    if stats.pulls == 0:
        return math.inf
    return _kernels._imed_index(
        stats.empirical_mean, float(best_empirical_mean), stats.pulls, math.log(t)
    )


def _stats_arrays(history: History) -> tuple[np.ndarray, np.ndarray]:
    pulls = np.array([a.pulls for a in history.per_arm], dtype=np.int64)
    successes = np.array([a.successes for a in history.per_arm], dtype=np.int64)
    return pulls, successes


def ts_draw(history: History, rng: RunRng) -> int:
    """Sample theta_a ~ Beta(1+S_a, 1+N_a-S_a) per arm, return the argmax.

    Well-defined for unvisited arms (their posterior is uniform). Draws are
    taken in arm order from `rng`; ties (a null event) resolve to the lowest
    arm id.
    """
    pulls, successes = _stats_arrays(history)
    return int(_kernels._ts_pick(pulls, successes, rng.state))


def med_distribution(history: History) -> np.ndarray:
    """Sampling distribution p_a proportional to exp(-N_a kl(mu_hat_a, mu_hat*)).

    Every arm must have been pulled at least once (the bootstrap guarantees
    this during simulation). The empirical-best arm has unnormalized weight
    exactly 1.
    """
    pulls, successes = _stats_arrays(history)
    if (pulls == 0).any():
        raise ValueError("med_distribution requires every arm pulled at least once")
    weights = np.empty(history.k, dtype=np.float64)
    _kernels._med_weights(pulls, successes, weights)
    return weights / weights.sum()


def index_values(policy: PolicyConfig, history: History) -> np.ndarray:
    """All per-arm index values for an index-policy config (pulls >= 1)."""
    if policy.kind not in INDEX_KINDS:
        raise ValueError(f"{policy.kind!r} is not an index policy")
    pulls, successes = _stats_arrays(history)
    if (pulls == 0).any():
        raise ValueError("index_values requires every arm pulled at least once")
    out = np.empty(history.k, dtype=np.float64)
    _kernels._index_values(
        policy.kind_code,
        pulls,
        successes,
        history.t,
        float(policy.ucbv_c),
        float(policy.klucb_tolerance),
        int(policy.klucb_max_iters),
        out,
    )
    return out


def select_arm(policy: PolicyConfig, history: History, instance_k: int, rng: RunRng) -> int:
    """The round decision.

    Bootstrap phase (any unvisited arm): lowest-id unvisited arm, no draw.
    Index kinds: argmax of the index, exact ties broken uniformly from `rng`.
    Randomized kinds: Thompson or MED sampling from `rng`.
    """
    if history.k != instance_k:
        raise ValueError("history arm count does not match the instance")
    pulls, successes = _stats_arrays(history)
    scratch = np.empty(history.k, dtype=np.float64)
    return int(
        _kernels._select_arm(
            policy.kind_code,
            pulls,
            successes,
            history.t,
            rng.state,
            float(policy.ucbv_c),
            float(policy.klucb_tolerance),
            int(policy.klucb_max_iters),
            scratch,
        )
    )
