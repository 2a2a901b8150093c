"""Bandit environments, per-run state, and the deterministic simulation loop.

Conventions used throughout the package: rounds are 1-indexed (the decision
at round t sees the stats accumulated over rounds 1..t-1), arms are
0-indexed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._kernels import _simulate
from ._rng import RunRng, derive_run_seed, mix64, seed_state

__all__ = [
    "BanditInstance",
    "ArmStats",
    "History",
    "RunLog",
    "draw_reward",
    "run_once",
    "pseudo_regret",
    "derive_run_seed",
    "mix64",
    "RunRng",
]


@dataclass(frozen=True)
class BanditInstance:
    """Bernoulli bandit ground truth: one mean per arm, all distinct, in (0,1)."""

    means: tuple[float, ...]

    def __post_init__(self):
        means = tuple(float(m) for m in self.means)
        object.__setattr__(self, "means", means)
        if len(means) < 2:
            raise ValueError("need at least two arms")
        if any(not (0.0 < m < 1.0) for m in means):
            raise ValueError("every mean must lie strictly inside (0, 1)")
        if len(set(means)) != len(means):
            raise ValueError("means must be pairwise distinct")

    @property
    def k(self) -> int:
        return len(self.means)

    @property
    def optimal_arm(self) -> int:
        return int(np.argmax(self.means))

    @property
    def gap(self) -> float:
        """Largest mean minus second-largest mean."""
        top = sorted(self.means, reverse=True)
        return top[0] - top[1]


@dataclass
class ArmStats:
    """Visit and success counts of one arm."""

    pulls: int = 0
    successes: int = 0

    def __post_init__(self):
        if not (0 <= self.successes <= self.pulls):
            raise ValueError("need 0 <= successes <= pulls")

    @property
    def empirical_mean(self) -> float | None:
        """S/N, or None while the arm is unvisited."""
        if self.pulls == 0:
            return None
        return self.successes / self.pulls

    def update(self, reward: int) -> None:
        self.pulls += 1
        self.successes += int(reward)


@dataclass
class History:
    """Everything a policy is allowed to see before the round-t decision."""

    t: int
    per_arm: list[ArmStats] = field(default_factory=list)

    @classmethod
    def fresh(cls, k: int) -> "History":
        return cls(t=1, per_arm=[ArmStats() for _ in range(k)])

    @property
    def k(self) -> int:
        return len(self.per_arm)

    def record(self, arm: int, reward: int) -> None:
        self.per_arm[arm].update(reward)
        self.t += 1


@dataclass(frozen=True)
class RunLog:
    """One seeded trajectory.

    `actions` and `rewards` have one entry per round; `subopt_prefix[i]`
    counts suboptimal pulls among rounds 1..i+1.
    """

    seed: int
    actions: np.ndarray
    rewards: np.ndarray
    subopt_prefix: np.ndarray

    @property
    def horizon(self) -> int:
        return len(self.actions)

    def suboptimal_count(self, s: int, e: int) -> int:
        """Number of suboptimal pulls among rounds t with s <= t < e."""
        horizon = self.horizon
        if not (1 <= s <= e <= horizon + 1):
            raise ValueError(f"window [{s}, {e}) out of range for horizon {horizon}")
        hi = self.subopt_prefix[e - 2] if e >= 2 else 0
        lo = self.subopt_prefix[s - 2] if s >= 2 else 0
        return int(hi - lo)


def draw_reward(instance: BanditInstance, arm: int, rng: RunRng) -> int:
    """Bernoulli(means[arm]) reward; consumes exactly one uniform."""
    if not (0 <= arm < instance.k):
        raise ValueError(f"invalid arm id {arm} for a {instance.k}-arm instance")
    return 1 if rng.uniform() < instance.means[arm] else 0


def run_once(instance: BanditInstance, policy, horizon: int, seed: int) -> RunLog:
    """Simulate rounds 1..horizon; a pure function of (instance, policy, seed)."""
    from .policies import PolicyConfig  # local import to avoid a cycle

    if not isinstance(policy, PolicyConfig):
        policy = PolicyConfig(kind=str(policy))
    if horizon < instance.k:
        raise ValueError("horizon must be at least the number of arms")
    means = np.asarray(instance.means, dtype=np.float64)
    state = seed_state(int(seed))
    actions, rewards = _simulate(
        means,
        policy.kind_code,
        int(horizon),
        state,
        float(policy.ucbv_c),
        float(policy.klucb_tolerance),
        int(policy.klucb_max_iters),
    )
    subopt = np.cumsum(actions != instance.optimal_arm, dtype=np.int64)
    return RunLog(
        seed=int(seed),
        actions=actions.astype(np.int16),
        rewards=rewards.astype(np.int8),
        subopt_prefix=subopt,
    )


def pseudo_regret(log: RunLog, instance: BanditInstance, s: int, e: int) -> float:
    """gap * #(suboptimal pulls in rounds [s, e)); lies in [0, (e-s)*gap]."""
    if instance.k != 2:
        raise NotImplementedError("pseudo-regret via the gap is defined for two arms")
    return instance.gap * log.suboptimal_count(s, e)
