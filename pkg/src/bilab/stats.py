"""Monte Carlo estimates, merging, and log-log exponent fits."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence, Tuple

import numpy as np

__all__ = ["Estimate", "from_samples", "merge", "loglog_fit", "binomial_estimate"]


@dataclass(frozen=True)
class Estimate:
    """Running (mean, stderr, n) summary of i.i.d. samples.

    Internally keeps the sum of squared deviations (M2, Welford style) so that
    merging two estimates is associative and order-independent up to float
    round-off.
    """

    mean: float
    m2: float
    n: int

    @property
    def var(self) -> float:
        return self.m2 / (self.n - 1) if self.n > 1 else 0.0

    @property
    def stderr(self) -> float:
        return math.sqrt(self.var / self.n) if self.n > 0 else 0.0

    def as_dict(self) -> dict:
        return {"mean": self.mean, "stderr": self.stderr, "n": self.n}


def from_samples(xs: Sequence[float]) -> Estimate:
    a = np.asarray(xs, dtype=float)
    n = a.size
    if n == 0:
        return Estimate(0.0, 0.0, 0)
    mean = float(a.mean())
    m2 = float(((a - mean) ** 2).sum())
    return Estimate(mean, m2, n)


def merge(a: Estimate, b: Estimate) -> Estimate:
    """Chan et al. parallel merge of two summaries."""
    if a.n == 0:
        return b
    if b.n == 0:
        return a
    n = a.n + b.n
    delta = b.mean - a.mean
    mean = a.mean + delta * (b.n / n)
    m2 = a.m2 + b.m2 + delta * delta * (a.n * b.n / n)
    return Estimate(mean, m2, n)


def binomial_estimate(hits: int, trials: int) -> Tuple[float, float]:
    """Frequency and its stderr sqrt(p(1-p)/n)."""
    if trials <= 0:
        raise ValueError("trials must be positive")
    p = hits / trials
    return p, math.sqrt(p * (1.0 - p) / trials)


def loglog_fit(points: Sequence[Tuple[float, float]]) -> Tuple[float, float, float]:
    """Least-squares slope of log y against log x.

    Returns (slope, intercept, slope_ci) where slope_ci is the half-width of a
    ~95% confidence interval (2 standard errors) from the residuals.  With two
    points the CI is 0 by convention: there is nothing to estimate it from.
    """
    if len(points) < 2:
        raise ValueError("need at least two points for a log-log fit")
    xs = np.array([p[0] for p in points], dtype=float)
    ys = np.array([p[1] for p in points], dtype=float)
    if np.any(xs <= 0) or np.any(ys <= 0):
        raise ValueError("log-log fit requires positive coordinates")
    lx, ly = np.log(xs), np.log(ys)
    n = len(points)
    A = np.vstack([lx, np.ones(n)]).T
    coef, residuals, *_ = np.linalg.lstsq(A, ly, rcond=None)
    slope, intercept = float(coef[0]), float(coef[1])
    if n > 2 and residuals.size:
        s2 = float(residuals[0]) / (n - 2)
        sxx = float(((lx - lx.mean()) ** 2).sum())
        ci = 2.0 * math.sqrt(s2 / sxx) if sxx > 0 else 0.0
    else:
        ci = 0.0
    return slope, intercept, ci
