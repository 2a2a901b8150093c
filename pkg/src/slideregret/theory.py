"""Closed-form and exactly computable quantities.

Bernoulli KL divergence, quantitative large-deviation brackets for binomial
tails, the Beta CDF computed through its binomial-tail identity, posterior
comparison probabilities, the expected clipped stopping time of the
drift-thresholded Bernoulli random walk, and the per-policy asymptotic
regime constants with a finite-difference cross-checker.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import _kernels
from .core import ArmStats, BanditInstance

__all__ = [
    "bernoulli_kl",
    "sanov_bounds",
    "beta_cdf",
    "beta_log_pdf",
    "ts_pick_probability",
    "WalkSpec",
    "expected_sigma",
    "RegimeInfo",
    "regime_info",
    "predicted_regexp",
    "prediction_record",
    "AssumptionReport",
    "assumption_check",
]

_TIE_TOL = 1e-12
_MAX_EXACT_DENOMINATOR = 10**6


def bernoulli_kl(p: float, q: float) -> float:
    """kl(p, q) = p log(p/q) + (1-p) log((1-p)/(1-q)), with 0 log 0 = 0.

    Defined for p, q in [0, 1]; a degenerate q with p != q returns +inf
    (documented sentinel). Zero exactly when p == q.
    """
    if not (0.0 <= p <= 1.0) or not (0.0 <= q <= 1.0):
        raise ValueError("kl arguments must lie in [0, 1]")
    if p == q:
        return 0.0
    if q <= 0.0 or q >= 1.0:
        return math.inf
    acc = 0.0
    if p > 0.0:
        acc += p * math.log(p / q)
    if p < 1.0:
        acc += (1.0 - p) * math.log((1.0 - p) / (1.0 - q))
    return acc


def _clip01(x: float) -> float:
    return min(1.0, max(0.0, x))


def sanov_bounds(
    n: int, q: float, eps: float, tail: str, kl=bernoulli_kl
) -> tuple[float, float]:
    """Quantitative bracket for one binomial tail probability.

    Lower tail P(S_n <= n(q - eps)):
        e^{-n kl(q-eps-1/n, q)} / (n+1)  <=  P  <=  n e^{-n kl(q-eps, q)}.
    Upper tail P(S_n >= n(q + eps)) uses the mirror-image pair
    (q+eps+1/n and q+eps). Requires eps > 1/n; kl arguments are clipped
    into [0, 1]. The upper bound is returned unclipped (it may exceed 1).
    """
    if n < 1:
        raise ValueError("n must be a positive integer")
    if not (0.0 < q < 1.0):
        raise ValueError("q must lie in (0, 1)")
    if eps <= 1.0 / n:
        raise ValueError("need eps > 1/n")
    if tail == "lower":
        far, near = q - eps - 1.0 / n, q - eps
    elif tail == "upper":
        far, near = q + eps + 1.0 / n, q + eps
    else:
        raise ValueError("tail must be 'lower' or 'upper'")
    lb = math.exp(-n * kl(_clip01(far), q)) / (n + 1)
    ub = n * math.exp(-n * kl(_clip01(near), q))
    return lb, ub


def _binom_pmf_log(n: int, j: int, log_x: float, log_1mx: float) -> float:
    return (
        math.lgamma(n + 1)
        - math.lgamma(j + 1)
        - math.lgamma(n - j + 1)
        + j * log_x
        + (n - j) * log_1mx
    )


def beta_cdf(alpha: int, beta: int, x: float) -> float:
    """Beta(alpha, beta) CDF via the binomial-tail identity.

    For integer alpha, beta >= 1 and S ~ Binom(alpha+beta-1, x):
    F(x) = P(S >= alpha). The sum is taken on the side of the binomial mode
    that makes its terms decreasing, so the term recurrence never underflows
    before the mass has been captured.
    """
    for name, v in (("alpha", alpha), ("beta", beta)):
        if v != int(v):
            raise NotImplementedError(f"{name} must be an integer (integer posteriors only)")
        if int(v) < 1:
            raise ValueError(f"{name} must be >= 1")
    alpha, beta = int(alpha), int(beta)
    if not (0.0 <= x <= 1.0):
        raise ValueError("x must lie in [0, 1]")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    n = alpha + beta - 1
    log_x, log_1mx = math.log(x), math.log1p(-x)
    ratio = x / (1.0 - x)
    if alpha >= n * x:
        # Survival sum upward from j = alpha: decreasing terms.
        term = math.exp(_binom_pmf_log(n, alpha, log_x, log_1mx))
        acc = term
        for j in range(alpha, n):
            term *= (n - j) / (j + 1) * ratio
            acc += term
            if term <= acc * 1e-18:
                break
        return min(acc, 1.0)
    # Lower sum downward from j = alpha - 1: decreasing terms.
    term = math.exp(_binom_pmf_log(n, alpha - 1, log_x, log_1mx))
    acc = term
    for j in range(alpha - 1, 0, -1):
        term *= j / (n - j + 1) / ratio
        acc += term
        if term <= acc * 1e-18:
            break
    return max(1.0 - acc, 0.0)


def beta_log_pdf(alpha: int, beta: int, x: float) -> float:
    """Log density of Beta(alpha, beta) at x in (0, 1), integer parameters."""
    norm = math.lgamma(alpha + beta) - math.lgamma(alpha) - math.lgamma(beta)
    acc = norm
    if alpha != 1:
        acc += (alpha - 1) * math.log(x)
    if beta != 1:
        acc += (beta - 1) * math.log1p(-x)
    return acc


def _adaptive_simpson(f, a: float, b: float, tol: float, max_depth: int = 40) -> float:
    fa, fb = f(a), f(b)
    m = 0.5 * (a + b)
    fm = f(m)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)

    def recurse(a, b, fa, fm, fb, whole, tol, depth):
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
        right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
        if depth >= max_depth or abs(left + right - whole) <= 15.0 * tol:
            return left + right + (left + right - whole) / 15.0
        return recurse(a, m, fa, flm, fm, left, tol / 2.0, depth + 1) + recurse(
            m, b, fm, frm, fb, right, tol / 2.0, depth + 1
        )

    return recurse(a, b, fa, fm, fb, whole, tol, 0)


def ts_pick_probability(stats1: ArmStats, stats2: ArmStats) -> float:
    """P(theta_2 > theta_1) for independent posterior draws
    theta_a ~ Beta(1 + S_a, 1 + N_a - S_a), by adaptive quadrature of
    F_1(x) f_2(x) over [0, 1]."""
    a1, b1 = 1 + stats1.successes, 1 + stats1.pulls - stats1.successes
    a2, b2 = 1 + stats2.successes, 1 + stats2.pulls - stats2.successes

    def integrand(x: float) -> float:
        if x <= 0.0 or x >= 1.0:
            # Integrable endpoint; the limit is finite for integer parameters.
            x = min(max(x, 1e-300), 1.0 - 1e-16)
        return beta_cdf(a1, b1, x) * math.exp(beta_log_pdf(a2, b2, x))

    p = _adaptive_simpson(integrand, 0.0, 1.0, 1e-8)
    return min(1.0, max(0.0, p))


@dataclass(frozen=True)
class WalkSpec:
    """Bernoulli(mu2) random walk stopped when the centered running mean
    falls to the drift threshold, clipped at horizon T."""

    mu2: float
    drift: float
    T: int

    def __post_init__(self):
        if not (0.0 < self.mu2 < 1.0):
            raise ValueError("mu2 must lie in (0, 1)")
        if self.drift <= 0.0:
            raise ValueError("drift must be positive")
        if self.T < 1:
            raise ValueError("T must be >= 1")


def _exact_threshold(mu2: float, drift: float) -> tuple[int, int] | None:
    """(num, den) with mu2 + drift = num/den when both are exact small rationals."""
    fm = Fraction(mu2).limit_denominator(_MAX_EXACT_DENOMINATOR)
    fd = Fraction(drift).limit_denominator(_MAX_EXACT_DENOMINATOR)
    if float(fm) != mu2 or float(fd) != drift:
        return None
    theta = fm + fd
    return theta.numerator, theta.denominator


def _survival_mask(t: int, theta: float, exact: tuple[int, int] | None) -> np.ndarray:
    """Mask over sums s = 0..t of 'the walk is still running after step t'.

    Stopping rule: stop as soon as s - t*theta <= 0; ties are decided in
    scaled-integer arithmetic when theta is an exact small rational, else
    with a 1e-12 absolute tolerance.
    """
    s = np.arange(t + 1)
    if exact is not None:
        num, den = exact
        return s * den - t * num > 0
    return s - t * theta > _TIE_TOL


def expected_sigma(spec: WalkSpec) -> float:
    """E[sigma_T] via the survival-sum identity E = sum_{t<T} P(sigma > t).

    Dynamic program over (step, running sum) restricted to surviving states;
    O(T^2) states.
    """
    theta = spec.mu2 + spec.drift
    exact = _exact_threshold(spec.mu2, spec.drift)
    expectation = 1.0  # P(sigma > 0) = 1
    p = np.array([1.0])
    for t in range(1, spec.T):
        q = np.zeros(t + 1)
        q[1:] += p * spec.mu2
        q[:-1] += p * (1.0 - spec.mu2)
        q[~_survival_mask(t, theta, exact)] = 0.0
        p = q
        survival = p.sum()
        expectation += survival
        if survival == 0.0:
            break
    return float(expectation)


# ---------------------------------------------------------------------------
# Asymptotic regimes


@dataclass(frozen=True)
class RegimeInfo:
    """Per-policy asymptotic-regime quantities.

    n2(t) = n2_coefficient * log t is the suboptimal-arm visit rate;
    d_mu2_I2 and n2_d_n_I2 are the regime derivatives of the suboptimal
    index (the latter as the product n2 * dI/dn, which is log-t-free for
    ucb/moss/klucb/imed); rho = -n2_d_n_I2 / ((1-mu2) d_mu2_I2) sets the
    exploration walk drift rho*(1-mu2).

    For ucbv the tabulated derivatives retain log-t factors, so they (and
    rho) are evaluated at `reference_t` and rho may leave [0, 1).
    """

    kind: str
    mu1: float
    mu2: float
    n2_coefficient: float
    d_mu2_I2: float
    n2_d_n_I2: float
    rho: float
    reference_t: float | None = None

    def __post_init__(self):
        if self.kind != "ucbv" and not (0.0 <= self.rho < 1.0):
            raise ValueError(f"rho must lie in [0, 1); got {self.rho}")

    def n2_at(self, t: float) -> float:
        return self.n2_coefficient * math.log(t)

    @property
    def drift(self) -> float:
        return self.rho * (1.0 - self.mu2)


def regime_info(
    kind: str, mu1: float, mu2: float, c: float | None = None, reference_t: float = 1e4
) -> RegimeInfo:
    """Tabulated asymptotic-regime quantities for an index policy."""
    if not (0.0 < mu2 < mu1 < 1.0):
        raise ValueError("need 0 < mu2 < mu1 < 1")
    gap = mu1 - mu2
    kind = kind.lower()
    if kind in ("ucb", "moss"):
        coeff = (2.0 if kind == "ucb" else 1.0) / gap**2
        d_mu = 1.0
        n2_dn = -gap / 2.0
        ref = None
    elif kind in ("klucb", "imed"):
        klv = bernoulli_kl(mu2, mu1)
        lam = math.log(mu1 * (1.0 - mu2) / (mu2 * (1.0 - mu1)))
        coeff = 1.0 / klv
        if kind == "klucb":
            omega = gap / (mu1 * (1.0 - mu1))
            d_mu = lam / omega
            n2_dn = -klv / omega
        else:
            d_mu = lam / klv
            n2_dn = -1.0
        ref = None
    elif kind == "ucbv":
        if c is None:
            c = 1.0
        if c <= 0:
            raise ValueError("ucbv needs c > 0")
        var = mu2 * (1.0 - mu2)
        coeff = 2.0 * var / gap**2 * (1.0 + math.sqrt(1.0 + 6.0 * c * gap / var)) ** 2
        log_t = math.log(reference_t)
        n2 = coeff * log_t
        d_mu = 1.0 + (1.0 - 2.0 * mu2) * math.sqrt(log_t / (2.0 * n2 * var))
        d_n = -(log_t / n2) * (math.sqrt(var * log_t / (2.0 * n2)) + 6.0 * c * log_t / n2)
        n2_dn = n2 * d_n
        ref = float(reference_t)
    elif kind in ("ts", "med"):
        raise ValueError(f"{kind!r} is not an index policy; it has no asymptotic-regime row")
    else:
        raise ValueError(f"unknown policy kind {kind!r}")
    rho = -n2_dn / ((1.0 - mu2) * d_mu)
    return RegimeInfo(
        kind=kind,
        mu1=mu1,
        mu2=mu2,
        n2_coefficient=coeff,
        d_mu2_I2=d_mu,
        n2_d_n_I2=n2_dn,
        rho=rho,
        reference_t=ref,
    )


def predicted_regexp(
    kind: str,
    instance: BanditInstance,
    T: int,
    c: float | None = None,
    reference_t: float = 1e4,
) -> float:
    """gap * E[sigma_T] for index policies; the optimal value gap for ts/med."""
    if instance.k != 2:
        raise NotImplementedError("predictions are defined for the two-arm case")
    gap = instance.gap
    kind = kind.lower()
    if kind in ("ts", "med"):
        return gap
    mu1 = max(instance.means)
    mu2 = min(instance.means)
    info = regime_info(kind, mu1, mu2, c=c, reference_t=reference_t)
    drift = info.drift
    if drift >= 1.0 - mu2:
        # The walk stops at its first step with certainty.
        return gap
    return gap * expected_sigma(WalkSpec(mu2=mu2, drift=drift, T=T))


def prediction_record(
    kind: str,
    mu1: float,
    mu2: float,
    T: int,
    c: float | None = None,
    reference_t: float = 1e4,
) -> dict:
    """The JSON payload of the `predict` command."""
    instance = BanditInstance(means=(mu1, mu2))
    kind = kind.lower()
    record = {"policy": kind, "mu1": mu1, "mu2": mu2, "T": T}
    if kind in ("ts", "med"):
        record.update(rho=None, drift=None, expected_sigma=None, predicted_regexp=mu1 - mu2)
        return record
    info = regime_info(kind, mu1, mu2, c=c, reference_t=reference_t)
    drift = info.drift
    if drift >= 1.0 - mu2:
        esigma = 1.0
    else:
        esigma = expected_sigma(WalkSpec(mu2=mu2, drift=drift, T=T))
    record.update(
        rho=info.rho,
        drift=drift,
        expected_sigma=esigma,
        predicted_regexp=(mu1 - mu2) * esigma,
    )
    if kind == "ucbv":
        record["c"] = 1.0 if c is None else c
        record["reference_t"] = reference_t
    return record


# ---------------------------------------------------------------------------
# Numeric assumption checking


@dataclass(frozen=True)
class AssumptionReport:
    """Finite-difference measurements of an index at its asymptotic regime."""

    kind: str
    t: float
    n2: float
    rho_expected: float
    rho_hat: float
    rho_rel_deviation: float
    t_vs_n_derivative_ratio: float
    cross_mu_derivative_ratio: float
    within_tol: bool


def _index_callables(kind: str, mu1: float, c: float):
    """(I2(m2, n, t), I1(m2, t)) built on the same scalar index kernels."""
    if kind == "ucb":
        i2 = lambda m2, n, t: _kernels._ucb_index(m2, n, math.log(t))
        i1 = lambda m2, t: _kernels._ucb_index(mu1, t, math.log(t))
    elif kind == "moss":
        i2 = lambda m2, n, t: _kernels._moss_index(m2, n, t, 2.0)
        i1 = lambda m2, t: _kernels._moss_index(mu1, t, t, 2.0)
    elif kind == "ucbv":
        i2 = lambda m2, n, t: _kernels._ucbv_index(m2, n, math.log(t), c)
        i1 = lambda m2, t: _kernels._ucbv_index(mu1, t, math.log(t), c)
    elif kind == "klucb":
        i2 = lambda m2, n, t: _kernels._klucb_index(m2, n, math.log(t), 1e-12, 200)
        i1 = lambda m2, t: _kernels._klucb_index(mu1, t, math.log(t), 1e-12, 200)
    elif kind == "imed":
        i2 = lambda m2, n, t: _kernels._imed_index(m2, mu1, n, math.log(t))
        i1 = lambda m2, t: _kernels._imed_index(mu1, max(mu1, m2), t, math.log(t))
    else:
        raise ValueError(f"{kind!r} is not an index policy")
    return i2, i1


def assumption_check(
    kind: str,
    mu1: float,
    mu2: float,
    t: float,
    rel_tol: float = 0.05,
    c: float | None = None,
) -> AssumptionReport:
    """Measure the regime derivatives of an index by central differences.

    Evaluates the index at (mu2, mu1, n2(t), t) with steps 1e-6 in the
    empirical mean and 1 in the visit count and in t, then compares the
    measured rho_hat = -n2 dI2/dn / ((1-mu2) dI2/dmu2) against the
    tabulated rho. Also reports |dI2/dt| / |dI2/dn| and
    |dI1/dmu2| / |dI2/dmu2| (both expected small).
    """
    kind = kind.lower()
    c_val = 1.0 if c is None else float(c)
    info = regime_info(kind, mu1, mu2, c=c_val, reference_t=t)
    n2 = info.n2_at(t)
    if n2 < 10:
        raise ValueError("t is too small: need n2(t) >= 10")
    i2, i1 = _index_callables(kind, mu1, c_val)

    h_mu = 1e-6
    d_mu2_i2 = (i2(mu2 + h_mu, n2, t) - i2(mu2 - h_mu, n2, t)) / (2.0 * h_mu)
    d_n_i2 = (i2(mu2, n2 + 1.0, t) - i2(mu2, n2 - 1.0, t)) / 2.0
    d_t_i2 = (i2(mu2, n2, t + 1.0) - i2(mu2, n2, t - 1.0)) / 2.0
    d_mu2_i1 = (i1(mu2 + h_mu, t) - i1(mu2 - h_mu, t)) / (2.0 * h_mu)

    rho_hat = -n2 * d_n_i2 / ((1.0 - mu2) * d_mu2_i2)
    rel_dev = abs(rho_hat - info.rho) / abs(info.rho)
    return AssumptionReport(
        kind=kind,
        t=float(t),
        n2=n2,
        rho_expected=info.rho,
        rho_hat=rho_hat,
        rho_rel_deviation=rel_dev,
        t_vs_n_derivative_ratio=abs(d_t_i2) / abs(d_n_i2),
        cross_mu_derivative_ratio=abs(d_mu2_i1) / abs(d_mu2_i2),
        within_tol=rel_dev <= rel_tol,
    )
