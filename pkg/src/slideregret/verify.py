"""Oracle cross-check suites backing the `verify` command.

Each suite pits an implementation against an independently coded oracle:
high-precision arithmetic for the KL formula, exact binomial sums for the
tail brackets, adaptive quadrature of the Beta density for the CDF
identity, exhaustive path enumeration for the stopping-time DP, and
finite differences for the tabulated regime constants. Suites accept a
`kl` override so tests can inject perturbations and watch them fail.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath
import numpy as np
from numba import njit

from . import theory
from .theory import WalkSpec, _exact_threshold

__all__ = [
    "SuiteResult",
    "suite_kl",
    "suite_sanov",
    "suite_beta_binomial",
    "suite_sigma_dp",
    "suite_regimes",
    "run_all_suites",
    "SUITE_NAMES",
    "sigma_enumeration",
    "beta_cdf_quadrature",
]

SUITE_NAMES = ("kl", "sanov", "beta-binomial", "sigma-dp", "regimes")

_SANOV_PINNED = {
    # (n, q, eps, tail) -> (lb, ub), frozen from direct formula evaluation:
    # lb = exp(-10 kl(0.2, 0.5)) / 11, ub = 10 exp(-10 kl(0.3, 0.5)).
    (10, 0.5, 0.2, "lower"): (0.013229013843969852, 4.391875285380546),
}


@dataclass
class SuiteResult:
    name: str
    passed: bool
    checks: int
    failures: list[str] = field(default_factory=list)

    def record(self, ok: bool, message: str) -> None:
        self.checks += 1
        if not ok:
            self.passed = False
            if len(self.failures) < 8:
                self.failures.append(message)


def _new_result(name: str) -> SuiteResult:
    return SuiteResult(name=name, passed=True, checks=0)


# ---------------------------------------------------------------------------
# kl


def _kl_reference(p: float, q: float) -> float:
    """KL divergence evaluated in 50-digit arithmetic."""
    with mpmath.workdps(50):
        mp, mq = mpmath.mpf(p), mpmath.mpf(q)
        acc = mpmath.mpf(0)
        if p > 0:
            acc += mp * mpmath.log(mp / mq)
        if p < 1:
            acc += (1 - mp) * mpmath.log((1 - mp) / (1 - mq))
        return float(acc)


def suite_kl(kl=theory.bernoulli_kl) -> SuiteResult:
    res = _new_result("kl")
    grid = [0.01, 0.1, 0.2, 0.35, 0.5, 0.65, 0.8, 0.9, 0.99]
    for p in [0.0, *grid, 1.0]:
        res.record(kl(p, p) == 0.0, f"kl({p},{p}) != 0")
    for q in grid:
        res.record(
            abs(kl(0.0, q) + math.log1p(-q)) <= 1e-15, f"kl(0,{q}) closed form mismatch"
        )
        res.record(abs(kl(1.0, q) + math.log(q)) <= 1e-15, f"kl(1,{q}) closed form mismatch")
    res.record(math.isinf(kl(0.5, 0.0)), "kl(p,0) should be +inf for p > 0")
    res.record(math.isinf(kl(0.5, 1.0)), "kl(p,1) should be +inf for p < 1")
    for p in grid:
        for q in grid:
            v = kl(p, q)
            res.record(v >= 0.0, f"kl({p},{q}) negative")
            if p != q:
                res.record(v > 0.0, f"kl({p},{q}) should be positive")
                ref = _kl_reference(p, q)
                res.record(
                    abs(v - ref) <= 1e-12 * max(1.0, abs(ref)),
                    f"kl({p},{q}) = {v} vs reference {ref}",
                )
    # Convexity in the second argument on sampled triples.
    for p in grid:
        for q1 in grid:
            for q2 in grid:
                mid = 0.5 * (q1 + q2)
                lhs = kl(p, mid)
                rhs = 0.5 * (kl(p, q1) + kl(p, q2))
                res.record(lhs <= rhs + 1e-12, f"kl({p},.) not convex at ({q1},{q2})")
    return res


# ---------------------------------------------------------------------------
# sanov


def _binomial_tail(n: int, q: float, k: int, tail: str) -> float:
    """Exact P(S_n <= k) or P(S_n >= k) by direct pmf summation."""
    pmf = [math.comb(n, j) * q**j * (1.0 - q) ** (n - j) for j in range(n + 1)]
    if tail == "lower":
        return sum(pmf[: max(k, -1) + 1])
    return sum(pmf[k:]) if k <= n else 0.0


def suite_sanov(kl=theory.bernoulli_kl) -> SuiteResult:
    res = _new_result("sanov")
    for (n, q, eps, tail), (lb_pin, ub_pin) in _SANOV_PINNED.items():
        lb, ub = theory.sanov_bounds(n, q, eps, tail, kl=kl)
        res.record(abs(lb - lb_pin) <= 1e-12, f"pinned lb drifted: {lb} vs {lb_pin}")
        res.record(abs(ub - ub_pin) <= 1e-12, f"pinned ub drifted: {ub} vs {ub_pin}")
    for n in range(2, 65):
        for q10 in range(1, 10):
            q = q10 / 10.0
            eps = 1.0 / n + 0.01
            while True:
                checked_any = False
                if q - eps >= 0.0:
                    lb, ub = theory.sanov_bounds(n, q, eps, "lower", kl=kl)
                    exact = _binomial_tail(n, q, math.floor(n * (q - eps)), "lower")
                    res.record(
                        lb <= exact <= ub and lb <= ub,
                        f"lower bracket broken at n={n} q={q} eps={eps:.4f}: "
                        f"{lb} <= {exact} <= {ub}",
                    )
                    checked_any = True
                if q + eps <= 1.0:
                    lb, ub = theory.sanov_bounds(n, q, eps, "upper", kl=kl)
                    exact = _binomial_tail(n, q, math.ceil(n * (q + eps)), "upper")
                    res.record(
                        lb <= exact <= ub and lb <= ub,
                        f"upper bracket broken at n={n} q={q} eps={eps:.4f}: "
                        f"{lb} <= {exact} <= {ub}",
                    )
                    checked_any = True
                if not checked_any:
                    break
                eps += 0.05
    return res


# ---------------------------------------------------------------------------
# beta-binomial


@njit(cache=True)
def _beta_pdf_value(x, alpha, beta, log_norm):
    if x <= 0.0:
        if alpha == 1:
            return math.exp(log_norm + (beta - 1) * math.log1p(-x))
        return 0.0
    if x >= 1.0:
        if beta == 1:
            return math.exp(log_norm + (alpha - 1) * math.log(x))
        return 0.0
    acc = log_norm
    if alpha != 1:
        acc += (alpha - 1) * math.log(x)
    if beta != 1:
        acc += (beta - 1) * math.log1p(-x)
    return math.exp(acc)


@njit(cache=True)
def _simpson_cell(a, b, alpha, beta, log_norm, tol):
    # Iterative adaptive Simpson with an explicit stack.
    stack = np.empty((256, 8))
    fa = _beta_pdf_value(a, alpha, beta, log_norm)
    fb = _beta_pdf_value(b, alpha, beta, log_norm)
    m = 0.5 * (a + b)
    fm = _beta_pdf_value(m, alpha, beta, log_norm)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    stack[0, 0] = a
    stack[0, 1] = b
    stack[0, 2] = fa
    stack[0, 3] = fm
    stack[0, 4] = fb
    stack[0, 5] = whole
    stack[0, 6] = tol
    stack[0, 7] = 0.0
    top = 1
    total = 0.0
    while top > 0:
        top -= 1
        a0 = stack[top, 0]
        b0 = stack[top, 1]
        fa0 = stack[top, 2]
        fm0 = stack[top, 3]
        fb0 = stack[top, 4]
        whole0 = stack[top, 5]
        tol0 = stack[top, 6]
        depth0 = stack[top, 7]
        m0 = 0.5 * (a0 + b0)
        lm = 0.5 * (a0 + m0)
        rm = 0.5 * (m0 + b0)
        flm = _beta_pdf_value(lm, alpha, beta, log_norm)
        frm = _beta_pdf_value(rm, alpha, beta, log_norm)
        left = (m0 - a0) / 6.0 * (fa0 + 4.0 * flm + fm0)
        right = (b0 - m0) / 6.0 * (fm0 + 4.0 * frm + fb0)
        if depth0 >= 40.0 or abs(left + right - whole0) <= 15.0 * tol0 or top >= 253:
            total += left + right + (left + right - whole0) / 15.0
            continue
        stack[top, 0] = a0
        stack[top, 1] = m0
        stack[top, 2] = fa0
        stack[top, 3] = flm
        stack[top, 4] = fm0
        stack[top, 5] = left
        stack[top, 6] = tol0 / 2.0
        stack[top, 7] = depth0 + 1.0
        top += 1
        stack[top, 0] = m0
        stack[top, 1] = b0
        stack[top, 2] = fm0
        stack[top, 3] = frm
        stack[top, 4] = fb0
        stack[top, 5] = right
        stack[top, 6] = tol0 / 2.0
        stack[top, 7] = depth0 + 1.0
        top += 1
    return total


@njit(cache=True)
def _beta_cdf_grid(alpha, beta, xs, cell_tol):
    log_norm = math.lgamma(alpha + beta) - math.lgamma(alpha) - math.lgamma(beta)
    out = np.empty(xs.shape[0])
    acc = 0.0
    prev = 0.0
    for i in range(xs.shape[0]):
        acc += _simpson_cell(prev, xs[i], alpha, beta, log_norm, cell_tol)
        out[i] = acc
        prev = xs[i]
    return out


def beta_cdf_quadrature(alpha: int, beta: int, xs: np.ndarray) -> np.ndarray:
    """Oracle Beta CDF at ascending grid points, by per-cell adaptive Simpson
    integration of the density to a ~1e-10 cumulative target."""
    return _beta_cdf_grid(float(alpha), float(beta), np.asarray(xs, dtype=np.float64), 1e-12)


def suite_beta_binomial(max_total: int = 102, tol: float = 1e-8) -> SuiteResult:
    res = _new_result("beta-binomial")
    xs = np.arange(1, 100) / 100.0
    for total in range(2, max_total + 1):
        for alpha in range(1, total):
            beta = total - alpha
            oracle = beta_cdf_quadrature(alpha, beta, xs)
            values = np.array([theory.beta_cdf(alpha, beta, x) for x in xs])
            err = float(np.max(np.abs(values - oracle)))
            res.record(
                err <= tol,
                f"beta_cdf({alpha},{beta}) deviates from quadrature by {err:.3e}",
            )
    return res


# ---------------------------------------------------------------------------
# sigma-dp


def sigma_enumeration(mu2: float, drift: float, t_max: int) -> np.ndarray:
    """E[sigma_T] for T = 1..t_max by exhaustive 2^t_max path enumeration."""
    if t_max > 20:
        raise ValueError("enumeration oracle is exponential; keep t_max <= 20")
    theta = mu2 + drift
    paths = np.arange(1 << t_max, dtype=np.uint32)
    bits = ((paths[:, None] >> np.arange(t_max, dtype=np.uint32)) & 1).astype(np.int64)
    ones = bits.sum(axis=1)
    probs = mu2**ones * (1.0 - mu2) ** (t_max - ones)
    sums = np.cumsum(bits, axis=1)
    steps = np.arange(1, t_max + 1)
    exact = _exact_threshold(mu2, drift)
    if exact is not None:
        num, den = exact
        survive = sums * den - steps * num > 0
    else:
        survive = sums - steps * theta > 1e-12
    prefix_alive = np.logical_and.accumulate(survive, axis=1).sum(axis=1)
    out = np.empty(t_max)
    for t_horizon in range(1, t_max + 1):
        sigma = np.minimum(prefix_alive + 1, t_horizon)
        out[t_horizon - 1] = float(probs @ sigma)
    return out


def suite_sigma_dp(t_max: int = 16) -> SuiteResult:
    res = _new_result("sigma-dp")
    pinned = theory.expected_sigma(WalkSpec(mu2=0.8, drift=0.05, T=2))
    res.record(abs(pinned - 1.8) <= 1e-12, f"pinned E[sigma_2] = {pinned}, expected 1.8")
    mu2_grid = (0.1, 0.3, 0.5, 0.7, 0.8)
    drift_grid = (0.02, 0.05, 0.1, 0.2, 0.3)
    for mu2 in mu2_grid:
        for drift in drift_grid:
            oracle = sigma_enumeration(mu2, drift, t_max)
            for t_horizon in range(1, t_max + 1):
                dp = theory.expected_sigma(WalkSpec(mu2=mu2, drift=drift, T=t_horizon))
                res.record(
                    abs(dp - oracle[t_horizon - 1]) <= 1e-12,
                    f"DP vs enumeration mismatch at mu2={mu2} drift={drift} "
                    f"T={t_horizon}: {dp} vs {oracle[t_horizon - 1]}",
                )
    return res


# ---------------------------------------------------------------------------
# regimes


def suite_regimes(t: float = 1e8, rel_tol: float = 0.05) -> SuiteResult:
    res = _new_result("regimes")
    mu1, mu2 = 0.9, 0.8
    reports = {}
    for kind in ("ucb", "moss", "klucb", "imed"):
        rep = theory.assumption_check(kind, mu1, mu2, t, rel_tol=rel_tol)
        reports[kind] = rep
        res.record(
            rep.within_tol,
            f"{kind}: rho_hat {rep.rho_hat:.6f} deviates from tabulated "
            f"{rep.rho_expected:.6f} by {100 * rep.rho_rel_deviation:.2f}% (> {100 * rel_tol:.0f}%)",
        )
    a, b = reports["klucb"].rho_hat, reports["imed"].rho_hat
    res.record(
        abs(a - b) <= rel_tol * max(abs(a), abs(b)),
        f"klucb and imed rho_hat disagree: {a:.6f} vs {b:.6f} "
        f"({100 * abs(a - b) / max(abs(a), abs(b)):.2f}% > {100 * rel_tol:.0f}%)",
    )
    return res


# ---------------------------------------------------------------------------


def run_all_suites() -> list[SuiteResult]:
    """All five suites at their pinned sizes, in their canonical order."""
    return [
        suite_kl(),
        suite_sanov(),
        suite_beta_binomial(),
        suite_sigma_dp(),
        suite_regimes(),
    ]
