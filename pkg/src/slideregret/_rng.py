"""Deterministic random streams for simulation runs.

Every run owns a single xoshiro256++ stream seeded from a 64-bit integer.
The same stream feeds policy draws and environment rewards, so a run is a
pure function of its seed regardless of thread or process scheduling.
Per-run seeds are derived from (master_seed, run_index) with a splitmix64
style mixer.
"""

from __future__ import annotations

import numpy as np
from numba import njit

_MASK64 = (1 << 64) - 1
_INV_2_53 = 1.0 / (1 << 53)


def mix64(z: int) -> int:
    """splitmix64 finalizer: a 64-bit bijective mixer."""
    z = (z + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_run_seed(master_seed: int, run_index: int) -> int:
    """Per-run seed = mix(mix(master) ^ mix(index)); collision-free in practice."""
    return mix64(mix64(master_seed & _MASK64) ^ mix64(run_index & _MASK64))


def seed_state(seed: int) -> np.ndarray:
    """Expand a 64-bit seed into a 4-word xoshiro256++ state via splitmix64."""
    state = np.empty(4, dtype=np.uint64)
    z = seed & _MASK64
    for i in range(4):
        z = (z + 0x9E3779B97F4A7C15) & _MASK64
        state[i] = np.uint64(mix64(z))
    return state


@njit(cache=True)
def _rotl(x, k):
    return np.uint64((x << np.uint64(k)) | (x >> np.uint64(64 - k)))


@njit(cache=True)
def _next_u64(state):
    s0 = state[0]
    s3 = state[3]
    result = np.uint64(_rotl(np.uint64(s0 + s3), 23) + s0)
    t = np.uint64(state[1] << np.uint64(17))
    state[2] ^= state[0]
    state[3] ^= state[1]
    state[1] ^= state[2]
    state[0] ^= state[3]
    state[2] ^= t
    state[3] = _rotl(state[3], 45)
    return result


@njit(cache=True)
def _uniform(state):
    """One double in [0, 1) from the top 53 bits of the next word."""
    return float(_next_u64(state) >> np.uint64(11)) * _INV_2_53


@njit(cache=True)
def _normal(state):
    # Box-Muller, cosine branch only; two uniforms per variate.
    u1 = _uniform(state)
    while u1 <= 1e-300:
        u1 = _uniform(state)
    u2 = _uniform(state)
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)


@njit(cache=True)
def _gamma(state, shape):
    # Marsaglia-Tsang squeeze; valid for shape >= 1 (Beta posteriors here).
    d = shape - 1.0 / 3.0
    c = 1.0 / np.sqrt(9.0 * d)
    while True:
        x = _normal(state)
        v = 1.0 + c * x
        if v <= 0.0:
            continue
        v = v * v * v
        u = _uniform(state)
        if u < 1.0 - 0.0331 * x * x * x * x:
            return d * v
        if np.log(u) < 0.5 * x * x + d * (1.0 - v + np.log(v)):
            return d * v


@njit(cache=True)
def _beta(state, a, b):
    g1 = _gamma(state, a)
    g2 = _gamma(state, b)
    return g1 / (g1 + g2)


@njit(cache=True)
def _fill_uniform(state, out):
    for i in range(out.shape[0]):
        out[i] = _uniform(state)


@njit(cache=True)
def _fill_beta(state, a, b, out):
    for i in range(out.shape[0]):
        out[i] = _beta(state, a, b)


class RunRng:
    """Seeded xoshiro256++ stream with the samplers the policies need."""

    def __init__(self, seed: int):
        self.seed = int(seed)
        self.state = seed_state(self.seed)

    def uniform(self) -> float:
        return _uniform(self.state)

    def uniforms(self, n: int) -> np.ndarray:
        out = np.empty(n, dtype=np.float64)
        _fill_uniform(self.state, out)
        return out

    def normal(self) -> float:
        return _normal(self.state)

    def beta(self, a: float, b: float) -> float:
        if a < 1.0 or b < 1.0:
            raise ValueError("beta sampler requires a, b >= 1")
        return _beta(self.state, float(a), float(b))

    def betas(self, a: float, b: float, n: int) -> np.ndarray:
        if a < 1.0 or b < 1.0:
            raise ValueError("beta sampler requires a, b >= 1")
        out = np.empty(n, dtype=np.float64)
        _fill_beta(self.state, float(a), float(b), out)
        return out
