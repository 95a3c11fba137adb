"""Statistics core: correlation, multiple-comparison correction, logistic fits.

Everything downstream of the meeting pipeline that produces a p-value goes
through this module. The special functions (regularized incomplete beta,
Student-t tail, normal CDF) are implemented here rather than imported from
scipy so that reported p-values are reproducible bit-for-bit from this repo
alone. Accuracy targets:

- ``incomplete_beta``: relative error <= 1e-10 for the t-tail parameter
  range used here (degrees of freedom up to 200), verified in tests against
  arbitrary-precision quadrature.
- ``normal_cdf``: built on ``math.erfc`` (double precision, error far below
  the 1e-7 target for Wald p-values).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import DegenerateDataError, ValidationError

# Newton solver limits for fit_logistic.
_MAX_NEWTON_ITER = 50
_COEF_TOL = 1e-10
_SEPARATION_SLOPE = 15.0


# ---------------------------------------------------------------------------
# Special functions


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta function (modified Lentz).

    Converges quickly for x < (a + 1) / (a + b + 2); the caller applies the
    symmetry transform for the other half of the domain.
    """
    eps = 1e-16
    fpmin = 1e-300
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < fpmin:
        d = fpmin
    d = 1.0 / d
    h = d
    for m in range(1, 400):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < fpmin:
            d = fpmin
        c = 1.0 + aa / c
        if abs(c) < fpmin:
            c = fpmin
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < fpmin:
            d = fpmin
        c = 1.0 + aa / c
        if abs(c) < fpmin:
            c = fpmin
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            return h
    raise ValidationError("no_convergence", f"incomplete beta cf did not converge for a={a}, b={b}, x={x}")


def incomplete_beta(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function I_x(a, b)."""
    if a <= 0 or b <= 0:
        raise ValidationError("bad_shape_parameter", f"a and b must be > 0, got a={a}, b={b}")
    if x < 0.0 or x > 1.0:
        raise ValidationError("x_out_of_range", f"x must be in [0, 1], got {x}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def t_sf(t: float, df: float) -> float:
    """Upper tail P(T > t) of Student's t with ``df`` degrees of freedom."""
    if df <= 0:
        raise ValidationError("bad_df", f"degrees of freedom must be > 0, got {df}")
    x = df / (df + t * t)
    tail = 0.5 * incomplete_beta(0.5 * df, 0.5, x)
    return tail if t >= 0 else 1.0 - tail


def t_cdf(t: float, df: float) -> float:
    """CDF of Student's t."""
    return 1.0 - t_sf(t, df)


def normal_cdf(z: float) -> float:
    """Standard normal CDF via erfc (stable in both tails)."""
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


# ---------------------------------------------------------------------------
# Correlation


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    """Product-moment correlation coefficient.

    Computed with single-pass co-moment updates (Welford style), which keeps
    it independent of the naive two-pass formula used as the test oracle.
    """
    if len(x) != len(y):
        raise ValidationError("length_mismatch", f"len(x)={len(x)} != len(y)={len(y)}")
    n = len(x)
    if n < 3:
        raise ValidationError("too_few_points", f"need at least 3 points, got {n}")
    mean_x = 0.0
    mean_y = 0.0
    c_xx = 0.0
    c_yy = 0.0
    c_xy = 0.0
    for k, (xi, yi) in enumerate(zip(x, y), start=1):
        dx = xi - mean_x
        dy = yi - mean_y
        mean_x += dx / k
        mean_y += dy / k
        c_xx += dx * (xi - mean_x)
        c_yy += dy * (yi - mean_y)
        c_xy += dx * (yi - mean_y)
    if c_xx <= 0.0 or c_yy <= 0.0:
        raise DegenerateDataError("degenerate_variance", "an input vector has zero variance")
    r = c_xy / math.sqrt(c_xx * c_yy)
    if abs(r) > 1.0 + 1e-12:
        raise ValidationError("correlation_out_of_range", f"|r|={abs(r)} exceeds 1")
    return max(-1.0, min(1.0, r))


class PearsonP(NamedTuple):
    """Two-sided p-value for a correlation; ``exact`` marks the |r| = 1 boundary."""

    p: float
    exact: bool


def pearson_p(r: float, n: int) -> PearsonP:
    """Two-sided p-value for Pearson r via the t transform with n - 2 df.

    t = r * sqrt((n - 2) / (1 - r^2)); the two-sided tail is evaluated with
    the regularized incomplete beta. |r| = 1 short-circuits to p = 0 with
    the ``exact`` flag set, since the transform diverges there.
    """
    if n < 3:
        raise ValidationError("too_few_points", f"need n >= 3, got {n}")
    if abs(r) > 1.0:
        raise ValidationError("correlation_out_of_range", f"|r|={abs(r)} exceeds 1")
    if abs(r) == 1.0:
        return PearsonP(0.0, True)
    df = n - 2
    t = r * math.sqrt(df / (1.0 - r * r))
    # Two-sided tail: 2 * P(T > |t|) = I_{df/(df+t^2)}(df/2, 1/2).
    p = incomplete_beta(0.5 * df, 0.5, df / (df + t * t))
    return PearsonP(min(1.0, p), False)


# ---------------------------------------------------------------------------
# Multiple-comparison correction


def holm_adjust(p_raw: Sequence[float]) -> list[float]:
    """Holm step-down adjusted p-values, in the input order.

    Sort ascending, take the running maximum of (m - j + 1) * p_(j) capped
    at 1, and map back to the original positions.
    """
    for p in p_raw:
        if not (0.0 <= p <= 1.0):
            raise ValidationError("p_out_of_range", f"p-value {p} outside [0, 1]")
    m = len(p_raw)
    order = sorted(range(m), key=lambda i: p_raw[i])
    adjusted = [0.0] * m
    running = 0.0
    for rank, idx in enumerate(order):
        running = max(running, (m - rank) * p_raw[idx])
        adjusted[idx] = min(1.0, running)
    return adjusted


# ---------------------------------------------------------------------------
# Logistic regression


@dataclass(frozen=True)
class LogisticFit:
    """Intercept + slope logistic fit with Wald inference on the slope."""

    beta0: float
    beta1: float
    se1: float
    iterations: int
    converged: bool
    odds_ratio: float
    p_wald: float


def _log_likelihood(eta: np.ndarray, y: np.ndarray) -> float:
    # log(1 + e^eta) computed as max(eta, 0) + log1p(e^-|eta|) for stability
    return float(np.sum(y * eta - (np.maximum(eta, 0.0) + np.log1p(np.exp(-np.abs(eta))))))


def logistic_score(x: Sequence[float], y: Sequence[float], beta0: float, beta1: float) -> tuple[float, float]:
    """Analytic gradient of the log-likelihood at (beta0, beta1).

    Exposed separately so tests can compare it against finite differences.
    """
    xv = np.asarray(x, dtype=float)
    yv = np.asarray(y, dtype=float)
    eta = beta0 + beta1 * xv
    mu = 1.0 / (1.0 + np.exp(-eta))
    resid = yv - mu
    return float(np.sum(resid)), float(np.sum(resid * xv))


def logistic_log_likelihood(x: Sequence[float], y: Sequence[float], beta0: float, beta1: float) -> float:
    """Log-likelihood of the intercept + slope model (used by tests)."""
    xv = np.asarray(x, dtype=float)
    yv = np.asarray(y, dtype=float)
    return _log_likelihood(beta0 + beta1 * xv, yv)


def fit_logistic(x: Sequence[float], y: Sequence[int]) -> LogisticFit:
    """Maximum-likelihood logistic regression of binary y on scalar x.

    Newton iterations on the log-likelihood with the observed information
    matrix, halving the step whenever it would decrease the likelihood.
    Convergence is declared when the largest coefficient change drops below
    1e-10; 50 iterations is the cutoff. The slope's standard error comes
    from the inverse information matrix at the solution.

    A slope walking past |beta1| = 15 while the likelihood is still
    improving is reported as perfect separation rather than returned; the
    threshold assumes a predictor on a roughly unit-to-tens scale.
    """
    xv = np.asarray(x, dtype=float)
    yv = np.asarray(y, dtype=float)
    if xv.shape != yv.shape or xv.ndim != 1:
        raise ValidationError("length_mismatch", "x and y must be equal-length vectors")
    if len(xv) < 10:
        raise ValidationError("too_few_points", f"need at least 10 points, got {len(xv)}")
    if not np.all((yv == 0.0) | (yv == 1.0)):
        raise ValidationError("nonbinary_outcome", "y must contain only 0 and 1")
    if yv.min() == yv.max():
        raise DegenerateDataError("degenerate_outcome", "y contains a single class")

    design = np.column_stack([np.ones_like(xv), xv])
    beta = np.zeros(2)
    ll = _log_likelihood(design @ beta, yv)
    converged = False
    iterations = 0
    for iterations in range(1, _MAX_NEWTON_ITER + 1):
        eta = design @ beta
        mu = 1.0 / (1.0 + np.exp(-eta))
        w = mu * (1.0 - mu)
        score = design.T @ (yv - mu)
        info = design.T @ (design * w[:, None])
        try:
            step = np.linalg.solve(info, score)
        except np.linalg.LinAlgError:
            raise DegenerateDataError("perfect_separation", "information matrix is singular") from None
        # Step halving: never accept a likelihood decrease.
        scale = 1.0
        for _ in range(30):
            candidate = beta + scale * step
            ll_new = _log_likelihood(design @ candidate, yv)
            if ll_new >= ll - 1e-12:
                break
            scale *= 0.5
        improving = ll_new > ll + 1e-12
        beta = beta + scale * step
        delta = float(np.max(np.abs(scale * step)))
        ll = ll_new
        if abs(beta[1]) > _SEPARATION_SLOPE and improving:
            raise DegenerateDataError("perfect_separation", f"slope diverged past |{_SEPARATION_SLOPE}| while likelihood improves")
        if delta < _COEF_TOL:
            converged = True
            break

    eta = design @ beta
    mu = 1.0 / (1.0 + np.exp(-eta))
    w = mu * (1.0 - mu)
    info = design.T @ (design * w[:, None])
    cov = np.linalg.inv(info)
    se1 = float(math.sqrt(cov[1, 1]))
    z = abs(beta[1]) / se1 if se1 > 0 else math.inf
    p_wald = 2.0 * (1.0 - normal_cdf(z))
    return LogisticFit(
        beta0=float(beta[0]),
        beta1=float(beta[1]),
        se1=se1,
        iterations=iterations,
        converged=converged,
        odds_ratio=math.exp(float(beta[1])),
        p_wald=p_wald,
    )


# ---------------------------------------------------------------------------
# Odds ratios, stars, NPS


def odds_ratio_from_odds(odds_a: tuple[float, float], odds_b: tuple[float, float]) -> float:
    """Ratio of odds_b to odds_a, each given as a (numerator, denominator) pair.

    Example: baseline odds 1:5 against improved odds 3:7 gives
    (3/7) / (1/5) = 15/7, a little over 2.
    """
    for name, (num, den) in (("odds_a", odds_a), ("odds_b", odds_b)):
        if den <= 0:
            raise ValidationError("zero_denominator", f"{name} has non-positive denominator {den}")
        if num <= 0:
            raise ValidationError("nonpositive_odds", f"{name} has non-positive numerator {num}")
    return (odds_b[0] / odds_b[1]) / (odds_a[0] / odds_a[1])


def significance_stars(p: float) -> str:
    """Star tier for a p-value: thresholds 0.05 / 0.01 / 0.001 / 0.0001, strict."""
    if p < 0.0001:
        return "****"
    if p < 0.001:
        return "***"
    if p < 0.01:
        return "**"
    if p < 0.05:
        return "*"
    return ""


def nps(scores: Sequence[int]) -> int:
    """Net promoter score: % of 9-10 answers minus % of 0-6 answers, rounded.

    Ties at .5 round to even (Python's round).
    """
    if not scores:
        raise ValidationError("empty_scores", "need at least one score")
    promoters = 0
    detractors = 0
    for s in scores:
        if not (0 <= s <= 10):
            raise ValidationError("score_out_of_range", f"score {s} outside 0..10")
        if s >= 9:
            promoters += 1
        elif s <= 6:
            detractors += 1
    n = len(scores)
    return round(100.0 * (promoters - detractors) / n)


@dataclass(frozen=True)
class StatsRow:
    """One reported line: an outcome, its statistic, and its significance."""

    attribute: str
    statistic: float
    n: int
    p_raw: float
    p_adjusted: float
    stars: str
