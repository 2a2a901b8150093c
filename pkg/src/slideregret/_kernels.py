"""Jitted scalar index formulas and the per-run simulation loop.

The Python-level policy API wraps the scalar functions below, and the
simulation loop calls the exact same functions, so there is a single
implementation of every decision rule.

Per-round draw order (the reproducibility contract): policy draws first
(posterior samples, categorical draw, or tie-break uniform when needed),
then exactly one uniform for the reward.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from ._rng import _beta, _uniform

# Policy kind codes shared with the Python layer.
KIND_UCB = 0
KIND_MOSS = 1
KIND_UCBV = 2
KIND_KLUCB = 3
KIND_IMED = 4
KIND_TS = 5
KIND_MED = 6


@njit(cache=True)
def _kl_bern(p, q):
    # kl(p, q) with 0*log 0 = 0; +inf when q is degenerate and p disagrees.
    if p == q:
        return 0.0
    if q <= 0.0 or q >= 1.0:
        return np.inf
    acc = 0.0
    if p > 0.0:
        acc += p * np.log(p / q)
    if p < 1.0:
        acc += (1.0 - p) * np.log((1.0 - p) / (1.0 - q))
    return acc


@njit(cache=True)
def _ucb_index(mu_hat, n, log_t):
    return mu_hat + np.sqrt(2.0 * log_t / n)


@njit(cache=True)
def _moss_index(mu_hat, n, t, k):
    radicand = np.log(t / (k * n))
    if radicand < 0.0:
        radicand = 0.0
    return mu_hat + np.sqrt(radicand / n)


@njit(cache=True)
def _ucbv_index(mu_hat, n, log_t, c):
    var = mu_hat * (1.0 - mu_hat)
    return mu_hat + np.sqrt(2.0 * var * log_t / n) + 3.0 * c * log_t / n


@njit(cache=True)
def _klucb_index(mu_hat, n, log_t, tol, max_iters):
    # Largest mu in [mu_hat, 1) with n * kl(mu_hat, mu) <= log_t, by bisection
    # from the feasible side.
    hi_cap = 1.0 - 1e-12
    if mu_hat >= hi_cap:
        return 1.0
    target = log_t / n
    if _kl_bern(mu_hat, hi_cap) <= target:
        return hi_cap
    lo = mu_hat
    hi = hi_cap
    it = 0
    while hi - lo > tol and it < max_iters:
        mid = 0.5 * (lo + hi)
        if _kl_bern(mu_hat, mid) <= target:
            lo = mid
        else:
            hi = mid
        it += 1
    return lo


@njit(cache=True)
def _imed_index(mu_hat, mu_star, n, log_t):
    klv = _kl_bern(mu_hat, mu_star)
    if not np.isfinite(klv):
        return 0.0
    den = n * klv + np.log(n)
    if den <= 0.0:
        return np.inf
    return log_t / den


@njit(cache=True)
def _index_values(kind, pulls, successes, t, ucbv_c, klucb_tol, klucb_iters, out):
    """Fill `out` with the configured index of every (visited) arm."""
    k = pulls.shape[0]
    log_t = np.log(float(t))
    mu_star = 0.0
    if kind == KIND_IMED:
        for a in range(k):
            m = successes[a] / pulls[a]
            if m > mu_star:
                mu_star = m
    for a in range(k):
        mu_hat = successes[a] / pulls[a]
        if kind == KIND_UCB:
            out[a] = _ucb_index(mu_hat, pulls[a], log_t)
        elif kind == KIND_MOSS:
            out[a] = _moss_index(mu_hat, pulls[a], float(t), float(k))
        elif kind == KIND_UCBV:
            out[a] = _ucbv_index(mu_hat, pulls[a], log_t, ucbv_c)
        elif kind == KIND_KLUCB:
            out[a] = _klucb_index(mu_hat, pulls[a], log_t, klucb_tol, klucb_iters)
        else:
            out[a] = _imed_index(mu_hat, mu_star, pulls[a], log_t)


@njit(cache=True)
def _ts_pick(pulls, successes, state):
    """Posterior samples theta_a ~ Beta(1+S_a, 1+N_a-S_a) in arm order;
    argmax with ties resolved to the lowest arm id."""
    k = pulls.shape[0]
    best = 0
    best_theta = -1.0
    for a in range(k):
        theta = _beta(state, 1.0 + successes[a], 1.0 + pulls[a] - successes[a])
        if theta > best_theta:
            best = a
            best_theta = theta
    return best


@njit(cache=True)
def _med_weights(pulls, successes, out):
    """Unnormalized MED weights exp(-N_a kl(mu_hat_a, mu_hat*)); best arm gets 1."""
    k = pulls.shape[0]
    mu_star = 0.0
    for a in range(k):
        m = successes[a] / pulls[a]
        if m > mu_star:
            mu_star = m
    for a in range(k):
        out[a] = np.exp(-pulls[a] * _kl_bern(successes[a] / pulls[a], mu_star))


@njit(cache=True)
def _select_arm(kind, pulls, successes, t, state, ucbv_c, klucb_tol, klucb_iters, scratch):
    """One decision: bootstrap first, then the configured rule.

    Mutates `state` only when the rule draws (TS, MED, or an index tie).
    `scratch` is a float64 work array of length K.
    """
    k = pulls.shape[0]
    for a in range(k):
        if pulls[a] == 0:
            return a

    if kind == KIND_TS:
        return _ts_pick(pulls, successes, state)

    if kind == KIND_MED:
        _med_weights(pulls, successes, scratch)
        total = 0.0
        for a in range(k):
            total += scratch[a]
        u = _uniform(state) * total
        acc = 0.0
        for a in range(k):
            acc += scratch[a]
            if u < acc:
                return a
        return k - 1

    _index_values(kind, pulls, successes, t, ucbv_c, klucb_tol, klucb_iters, scratch)
    best_val = scratch[0]
    for a in range(1, k):
        if scratch[a] > best_val:
            best_val = scratch[a]
    n_tied = 0
    for a in range(k):
        if scratch[a] == best_val:
            n_tied += 1
    if n_tied > 1:
        # One uniform picks among the tied arms.
        pick = int(_uniform(state) * n_tied)
        if pick >= n_tied:
            pick = n_tied - 1
    else:
        pick = 0
    seen = 0
    for a in range(k):
        if scratch[a] == best_val:
            if seen == pick:
                return a
            seen += 1
    return k - 1


@njit(cache=True)
def _simulate(means, kind, horizon, state, ucbv_c, klucb_tol, klucb_iters):
    k = means.shape[0]
    pulls = np.zeros(k, dtype=np.int64)
    successes = np.zeros(k, dtype=np.int64)
    scratch = np.empty(k, dtype=np.float64)
    actions = np.empty(horizon, dtype=np.int64)
    rewards = np.empty(horizon, dtype=np.int64)
    for t in range(1, horizon + 1):
        a = _select_arm(kind, pulls, successes, t, state, ucbv_c, klucb_tol, klucb_iters, scratch)
        u = _uniform(state)
        r = 1 if u < means[a] else 0
        pulls[a] += 1
        successes[a] += r
        actions[t - 1] = a
        rewards[t - 1] = r
    return actions, rewards
