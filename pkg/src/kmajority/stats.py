"""Small self-contained statistical tests used by the experiment harness.

Two-sample Kolmogorov-Smirnov with the exact equal-sample-size null
distribution (reflection/ballot formula on lattice paths), falling back to
the asymptotic Smirnov approximation for unequal sizes.  Disruption times
are integers, so ties are common; the continuous-null critical values are
then conservative, which is the safe direction for the non-rejection checks
these tests back.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

__all__ = ["KSResult", "MannWhitneyResult", "ks_two_sample", "mann_whitney_u"]


@dataclass(frozen=True)
class KSResult:
    statistic: float
    n: int
    m: int
    p_value: float
    alpha: float
    reject: bool
    method: str


@dataclass(frozen=True)
class MannWhitneyResult:
    u_statistic: float
    z_score: float
    p_value: float  # one-sided, H1: first sample stochastically larger


def _ks_statistic_scaled(x: np.ndarray, y: np.ndarray) -> int:
    """max over the pooled grid of |m*F_x - n*F_y| scaled by n*m (exact int)."""
    n, m = len(x), len(y)
    grid = np.unique(np.concatenate([x, y]))
    cx = np.searchsorted(np.sort(x), grid, side="right").astype(object)
    cy = np.searchsorted(np.sort(y), grid, side="right").astype(object)
    return int(np.max(np.abs(cx * m - cy * n)))


def _ks_survival_equal(n: int, c: int) -> float:
    """P(D >= c/n) for two samples of size n under the continuous null.

    Lattice-path reflection: among the C(2n, n) equally likely interleavings,
    those whose walk reaches height +-c are counted by the alternating sum
    2 * sum_j (-1)^(j-1) C(2n, n - j*c).
    """
    if c <= 0:
        return 1.0
    if c > n:
        return 0.0
    total = math.comb(2 * n, n)
    acc = 0
    j = 1
    while j * c <= n:
        term = math.comb(2 * n, n - j * c)
        acc += term if j % 2 == 1 else -term
        j += 1
    p = Fraction(2 * acc, total)
    return float(min(Fraction(1), max(Fraction(0), p)))


def _ks_survival_asymptotic(lam: float) -> float:
    """Smirnov limit law P(sup |B| > lam) = 2 sum (-1)^(j-1) exp(-2 j^2 lam^2)."""
    if lam <= 0.0:
        return 1.0
    total = 0.0
    for j in range(1, 101):
        term = math.exp(-2.0 * j * j * lam * lam)
        total += term if j % 2 == 1 else -term
        if term < 1e-16:
            break
    return min(1.0, max(0.0, 2.0 * total))


def ks_two_sample(a, b, alpha: float = 0.01) -> KSResult:
    """Two-sided two-sample KS test; exact p-value when the samples have
    equal size, asymptotic otherwise."""
    x = np.asarray(a, dtype=float)
    y = np.asarray(b, dtype=float)
    if x.size == 0 or y.size == 0:
        raise ValueError("KS test requires non-empty samples")
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha!r}")
    n, m = len(x), len(y)
    scaled = _ks_statistic_scaled(x, y)
    d = scaled / (n * m)
    if n == m:
        p = _ks_survival_equal(n, scaled // n)
        method = "exact-equal-n"
    else:
        lam = d * math.sqrt(n * m / (n + m))
        p = _ks_survival_asymptotic(lam)
        method = "asymptotic"
    return KSResult(statistic=d, n=n, m=m, p_value=p, alpha=alpha,
                    reject=p <= alpha, method=method)


def mann_whitney_u(a, b) -> MannWhitneyResult:
    """One-sided Mann-Whitney U with tie-corrected normal approximation.

    Tests H1: sample ``a`` is stochastically larger than sample ``b``.
    """
    x = np.asarray(a, dtype=float)
    y = np.asarray(b, dtype=float)
    if x.size == 0 or y.size == 0:
        raise ValueError("Mann-Whitney requires non-empty samples")
    n, m = len(x), len(y)
    gt = np.sum(x[:, None] > y[None, :])
    eq = np.sum(x[:, None] == y[None, :])
    u = float(gt) + 0.5 * float(eq)
    mean = n * m / 2.0
    pooled = np.concatenate([x, y])
    _, counts = np.unique(pooled, return_counts=True)
    big_n = n + m
    tie_term = float(np.sum(counts.astype(np.int64) ** 3 - counts)) / (big_n * (big_n - 1))
    var = n * m / 12.0 * ((big_n + 1) - tie_term)
    if var <= 0.0:
        # all observations identical: no evidence either way
        return MannWhitneyResult(u_statistic=u, z_score=0.0, p_value=0.5)
    z = (u - mean) / math.sqrt(var)
    p = 0.5 * math.erfc(z / math.sqrt(2.0))
    return MannWhitneyResult(u_statistic=u, z_score=z, p_value=p)
