import math

import numpy as np
import pytest

import slideregret as sr
from slideregret.core import ArmStats, History, RunRng
from slideregret.policies import (
    PolicyConfig,
    imed_index,
    index_values,
    klucb_index,
    med_distribution,
    moss_index,
    select_arm,
    ts_draw,
    ucb_index,
    ucbv_index,
)
from slideregret.theory import bernoulli_kl, beta_cdf

KL_08_09 = 0.044403007586882315  # bernoulli_kl(0.8, 0.9), checked in test_theory


def test_policy_config_validation():
    with pytest.raises(ValueError):
        PolicyConfig("nope")
    with pytest.raises(ValueError):
        PolicyConfig("ucbv", ucbv_c=0.0)
    with pytest.raises(ValueError):
        PolicyConfig("klucb", klucb_tolerance=1e-3)
    assert PolicyConfig("UCB").kind == "ucb"


def test_ucb_index_values():
    assert ucb_index(ArmStats(0, 0), t=5) == math.inf
    assert ucb_index(ArmStats(2, 1), t=round(math.e)) == pytest.approx(
        0.5 + math.sqrt(2 * math.log(round(math.e)) / 2)
    )
    # exact picks: t = e gives log t = 1
    assert sr.policies.ucb_index(ArmStats(2, 1), t=math.e) == pytest.approx(1.5)
    assert sr.policies.ucb_index(ArmStats(8, 0), t=math.e**4) == pytest.approx(1.0)


def test_moss_index_values():
    assert moss_index(ArmStats(0, 0), t=5, k=2) == math.inf
    # clamp active: t <= K N
    assert moss_index(ArmStats(4, 2), t=8, k=2) == pytest.approx(0.5)
    assert moss_index(ArmStats(1, 0), t=7, k=8) == pytest.approx(0.0)
    # log(t / (K N)) = 1 at t = 2e, N = 1, K = 2
    assert moss_index(ArmStats(1, 0), t=2 * math.e, k=2) == pytest.approx(1.0)
    assert moss_index(ArmStats(1, 1), t=2 * math.e, k=2) == pytest.approx(2.0)


def test_ucbv_index_values():
    assert ucbv_index(ArmStats(0, 0), t=5) == math.inf
    # degenerate empirical mean: variance term vanishes
    t = math.e**2
    assert ucbv_index(ArmStats(3, 0), t=t, c=2.0) == pytest.approx(0.0 + 6.0 * 2 / 3)
    assert ucbv_index(ArmStats(3, 3), t=t, c=2.0) == pytest.approx(1.0 + 6.0 * 2 / 3)
    # N = log t: 0.5 + sqrt(0.5) + 3c
    t = math.e**4
    assert ucbv_index(ArmStats(4, 2), t=t, c=1.0) == pytest.approx(0.5 + math.sqrt(0.5) + 3.0)
    # formula evaluation cross-check (independent arithmetic)
    t = math.e**10
    expected = 0.8 + math.sqrt(2 * 0.8 * 0.2 * 10 / 100) + 3 * 10 / 100
    assert ucbv_index(ArmStats(100, 80), t=t, c=1.0) == pytest.approx(expected, abs=1e-12)
    assert expected == pytest.approx(1.2788854381999831, abs=1e-10)
    with pytest.raises(ValueError):
        ucbv_index(ArmStats(3, 1), t=5, c=0.0)


def test_klucb_index_values():
    assert klucb_index(ArmStats(0, 0), t=5) == 1.0
    # log t = 0 pins the index at the empirical mean
    assert klucb_index(ArmStats(4, 2), t=1) == pytest.approx(0.5, abs=1e-8)
    # kl(0, mu) = -log(1 - mu): solve -log(1 - mu) = 1
    assert klucb_index(ArmStats(1, 0), t=math.e) == pytest.approx(
        1 - math.exp(-1), abs=1e-8
    )
    assert klucb_index(ArmStats(1, 1), t=100) == pytest.approx(1.0, abs=1e-9)


def test_klucb_bracket_invariant():
    rng = np.random.default_rng(7)
    for _ in range(200):
        mu = float(rng.uniform(0, 1))
        n = int(rng.integers(1, 5000))
        t = float(rng.uniform(1.0, 1e7))
        stats = ArmStats(n, round(mu * n))
        idx = klucb_index(stats, t)
        mu_hat = stats.empirical_mean
        assert mu_hat - 1e-12 <= idx <= 1.0
        log_t = math.log(t)
        assert n * bernoulli_kl(mu_hat, idx) <= log_t + 1e-9
        if idx < 1.0 - 2e-9:
            # the index is within bisection tolerance of the supremum
            assert n * bernoulli_kl(mu_hat, min(idx + 2e-9, 1 - 1e-12)) >= log_t - 1e-7


def test_klucb_monotone_in_n_and_t():
    stats_small = ArmStats(5, 3)
    stats_big = ArmStats(50, 30)
    assert klucb_index(stats_big, 100) <= klucb_index(stats_small, 100)
    assert klucb_index(stats_small, 10) <= klucb_index(stats_small, 1000)


def test_imed_index_values():
    assert imed_index(ArmStats(0, 0), 0.9, t=5) == math.inf
    # empirical best arm: kl term zero, index = log t / log N
    assert imed_index(ArmStats(7, 7), 1.0, t=math.e**2) == pytest.approx(
        2 / math.log(7)
    )
    # empirical best arm seen once: denominator zero
    assert imed_index(ArmStats(1, 1), 1.0, t=10) == math.inf
    # formula evaluation cross-check
    t = math.e**10
    expected = 10.0 / (100 * KL_08_09 + math.log(100))
    assert imed_index(ArmStats(100, 80), 0.9, t=t) == pytest.approx(expected, abs=1e-12)
    assert expected == pytest.approx(1.1055256338958739, abs=1e-12)
    # mu_hat* = 1 with mu_hat < 1: infinite kl drives the index to 0
    assert imed_index(ArmStats(5, 2), 1.0, t=10) == 0.0


@pytest.mark.parametrize(
    "kind,index_fn",
    [
        ("ucb", lambda s, t: ucb_index(s, t)),
        ("moss", lambda s, t: moss_index(s, t, 2)),
        ("ucbv", lambda s, t: ucbv_index(s, t, 1.0)),
        ("klucb", lambda s, t: klucb_index(s, t)),
        ("imed", lambda s, t: imed_index(s, 0.9, t)),
    ],
)
def test_index_monotonicity_grid(kind, index_fn):
    # nondecreasing in mu_hat, nonincreasing in N, nondecreasing in t.
    # The ucbv variance bonus is only monotone in mu_hat below 1/2, and the
    # imed kl term needs mu_hat <= mu_hat*; grids are restricted accordingly.
    if kind == "ucbv":
        mu_grid = [0.0, 0.125, 0.25, 0.375, 0.5]
    elif kind == "imed":
        mu_grid = [0.0, 0.25, 0.5, 0.75, 0.9]
    else:
        mu_grid = [0.0, 0.25, 0.5, 0.75, 1.0]
    n_grid = [1, 2, 5, 20, 100]
    t_grid = [2, 10, 100, 10_000]

    def stats(n, mu):
        return ArmStats(n * 8, round(mu * n * 8))

    for t in t_grid:
        for n in n_grid:
            vals = [index_fn(stats(n, mu), t) for mu in mu_grid]
            assert all(b >= a - 1e-9 for a, b in zip(vals, vals[1:])), (kind, "mu", t, n)
    for t in t_grid:
        for mu in mu_grid:
            vals = [index_fn(stats(n, mu), t) for n in n_grid]
            assert all(b <= a + 1e-9 for a, b in zip(vals, vals[1:])), (kind, "n", t, mu)
    for n in n_grid:
        for mu in mu_grid:
            vals = []
            for t in t_grid:
                if kind == "moss" and t <= 2 * n * 8:
                    continue  # clamp active: index constant in t there
                vals.append(index_fn(stats(n, mu), t))
            assert all(b >= a - 1e-9 for a, b in zip(vals, vals[1:])), (kind, "t", n, mu)


def test_ts_draw_uniform_prior():
    history = History.fresh(2)
    rng = RunRng(555)
    picks = sum(ts_draw(history, rng) == 0 for _ in range(100_000))
    assert abs(picks / 100_000 - 0.5) < 0.01


def test_ts_draw_exchangeable_posteriors():
    history = History(t=11, per_arm=[ArmStats(5, 3), ArmStats(5, 3)])
    rng = RunRng(556)
    picks = sum(ts_draw(history, rng) == 0 for _ in range(100_000))
    assert abs(picks / 100_000 - 0.5) < 0.01


def test_posterior_sample_mean():
    # S=3, N=5 -> Beta(4, 3), mean 4/7
    rng = RunRng(77)
    draws = rng.betas(4, 3, 100_000)
    assert abs(draws.mean() - 4 / 7) < 0.005


@pytest.mark.parametrize("a,b", [(1, 1), (4, 3), (2, 9), (30, 11)])
def test_ts_marginal_matches_beta_cdf(a, b):
    # Kolmogorov-Smirnov distance of the sampler against the exact CDF
    rng = RunRng(9001 + 7 * a + b)
    draws = np.sort(rng.betas(a, b, 100_000))
    idx = np.arange(0, draws.size, 199)
    cdf = np.array([beta_cdf(a, b, x) for x in draws[idx]])
    hi = (idx + 1) / draws.size
    lo = idx / draws.size
    ks = max(np.max(np.abs(cdf - hi)), np.max(np.abs(cdf - lo)))
    assert ks < 0.01


def test_med_distribution_values():
    # equal empirical means: uniform
    history = History(t=21, per_arm=[ArmStats(10, 5), ArmStats(10, 5)])
    assert np.allclose(med_distribution(history), [0.5, 0.5])
    # hand case at (0.9, 0.8) with 10 pulls each
    history = History(t=21, per_arm=[ArmStats(10, 9), ArmStats(10, 8)])
    p = med_distribution(history)
    w2 = math.exp(-10 * KL_08_09)
    assert p[1] == pytest.approx(w2 / (1 + w2), abs=1e-12)
    assert p[1] == pytest.approx(0.39078, abs=1e-4)
    assert p.sum() == pytest.approx(1.0, abs=1e-12)


def test_med_distribution_monotone_decay():
    values = []
    for n2 in (10, 20, 40, 80, 160):
        history = History(
            t=n2 + 11, per_arm=[ArmStats(10, 9), ArmStats(n2, round(0.8 * n2))]
        )
        values.append(med_distribution(history)[1])
    assert all(b < a for a, b in zip(values, values[1:]))
    assert values[-1] < 1e-2


def test_med_distribution_relabel_invariance():
    rng = np.random.default_rng(0)
    for _ in range(50):
        n1, n2 = rng.integers(1, 100, size=2)
        s1, s2 = rng.integers(0, n1 + 1), rng.integers(0, n2 + 1)
        h = History(t=int(n1 + n2 + 1), per_arm=[ArmStats(int(n1), int(s1)), ArmStats(int(n2), int(s2))])
        h_swapped = History(t=h.t, per_arm=list(reversed(h.per_arm)))
        p = med_distribution(h)
        q = med_distribution(h_swapped)
        assert np.allclose(p, q[::-1], atol=1e-14)
        assert p.sum() == pytest.approx(1.0, abs=1e-12)


def test_med_requires_visited_arms():
    with pytest.raises(ValueError):
        med_distribution(History.fresh(2))


def test_select_arm_bootstrap_order():
    history = History.fresh(3)
    rng = RunRng(1)
    policy = PolicyConfig("ucb")
    picks = []
    for _ in range(3):
        arm = select_arm(policy, history, 3, rng)
        picks.append(arm)
        history.record(arm, 0)
    assert picks == [0, 1, 2]


def test_select_arm_exact_argmax():
    history = History(t=40, per_arm=[ArmStats(30, 20), ArmStats(9, 8)])
    policy = PolicyConfig("ucb")
    vals = index_values(policy, history)
    arm = select_arm(policy, history, 2, RunRng(3))
    assert arm == int(np.argmax(vals))


def test_select_arm_tie_break_uniform():
    # identical stats: identical finite indexes, broken by the stream
    history = History(t=11, per_arm=[ArmStats(5, 3), ArmStats(5, 3)])
    policy = PolicyConfig("ucb")
    rng = RunRng(42)
    picks = sum(select_arm(policy, history, 2, rng) == 0 for _ in range(10_000))
    assert abs(picks / 10_000 - 0.5) < 0.02
