"""Stochastic bandit simulation engine with trajectory-level regret analytics."""

from .core import (
    ArmStats,
    BanditInstance,
    History,
    RunLog,
    RunRng,
    derive_run_seed,
    draw_reward,
    pseudo_regret,
    run_once,
)
from .harness import ExperimentConfig, analyze_experiment, run_experiment
from .metrics import (
    EpisodeSample,
    RegExpCurve,
    build_regexp_curve,
    detect_episodes,
    episode_samples,
    max_window_regret,
    regexp_estimate,
    suboptimal_run_lengths,
)
from .policies import (
    PolicyConfig,
    imed_index,
    klucb_index,
    med_distribution,
    moss_index,
    select_arm,
    ts_draw,
    ucb_index,
    ucbv_index,
)
from .theory import (
    RegimeInfo,
    WalkSpec,
    assumption_check,
    bernoulli_kl,
    beta_cdf,
    expected_sigma,
    predicted_regexp,
    regime_info,
    sanov_bounds,
    ts_pick_probability,
)

__version__ = "0.1.0"
