"""Mean-field analysis of biased k-majority dynamics.

The per-round update of a node that samples ``k`` neighbors with replacement
is summarized by a scalar map on [0, 1]:

* edge bias (Z-channel noise on every read, strength ``p``)::

      F(x) = P(Bin(k, (1-p) x) >= (k+1)/2)

* node bias (node corrupted outright with probability ``p``)::

      Fhat(x) = (1-p) P(Bin(k, x) >= (k+1)/2)

Iterating the map gives the mean-field trajectory of the fraction of nodes
holding the initial majority state.  This module evaluates both maps and
their first two derivatives exactly (to double precision), locates their
fixed points {0, phi_minus, phi_plus} and the tangency point mu where
F' = 1, and computes the critical bias values:

* ``p_star_k``   -- largest bias admitting a nontrivial fixed point;
* ``p_star_kq``  -- largest bias whose unstable fixed point phi_minus still
  sits at or below the initial majority level ``q``.

Everything here is a pure function of its arguments; no shared state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

__all__ = [
    "MAX_K",
    "BiasMode",
    "Regime",
    "MeanFieldParams",
    "FixedPointSet",
    "CriticalValues",
    "Trajectory",
    "binom_pmf",
    "binom_tail_geq",
    "eval_F",
    "eval_F_even",
    "eval_dF",
    "eval_d2F",
    "fixed_points",
    "closed_form_k3",
    "critical_bias_k",
    "critical_bias_kq",
    "trajectory",
]

# Exact pmf summation is capped here; beyond this the dyadic anchors get slow
# and the tool makes no accuracy promises.
MAX_K = 10_000

DEFAULT_TOL = 1e-10
_MAX_BISECT = 200


class BiasMode(Enum):
    """Which of the two bias mechanisms the map models."""

    EDGE = "edge"
    NODE = "node"


class Regime(Enum):
    """Fixed-point structure of the update map."""

    SUBCRITICAL = "subcritical"      # roots {0, phi-, phi+}, phi- < phi+
    CRITICAL = "critical"            # roots {0, phi} (tangency)
    SUPERCRITICAL = "supercritical"  # only root 0


@dataclass(frozen=True)
class MeanFieldParams:
    """Sample size, bias strength and bias mechanism."""

    k: int
    p: float
    mode: BiasMode = BiasMode.EDGE

    def __post_init__(self) -> None:
        if not isinstance(self.k, int) or self.k < 1:
            raise ValueError(f"sample size k must be a positive integer, got {self.k!r}")
        if self.k > MAX_K:
            raise ValueError(f"sample size k={self.k} exceeds the supported cap {MAX_K}")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"bias p must lie in [0, 1], got {self.p!r}")
        if not isinstance(self.mode, BiasMode):
            raise ValueError(f"mode must be a BiasMode, got {self.mode!r}")


@dataclass(frozen=True)
class FixedPointSet:
    """Solutions of F(x) = x in [0, 1].

    ``trivial_root`` (0) is always present.  ``phi_minus``/``phi_plus`` are
    the unstable/stable nontrivial roots when they exist; in the critical
    regime they coincide.  ``mu`` is the tangency abscissa with F'(mu) = 1,
    reported whenever the solver located it.
    """

    regime: Regime
    phi_minus: float | None
    phi_plus: float | None
    mu: float | None
    trivial_root: float = 0.0

    def nontrivial_roots(self) -> list[float]:
        if self.regime is Regime.SUPERCRITICAL:
            return []
        if self.regime is Regime.CRITICAL:
            return [self.phi_plus]
        return [self.phi_minus, self.phi_plus]

    def roots(self) -> list[float]:
        return [self.trivial_root] + self.nontrivial_roots()


@dataclass(frozen=True)
class CriticalValues:
    """Critical bias thresholds for a given sample size."""

    p_star_k: float
    p_star_kq: float | None
    k: int
    q: float | None
    tolerance: float


@dataclass(frozen=True)
class Trajectory:
    """Deterministic orbit q0, F(q0), F(F(q0)), ..."""

    q0: float
    values: list[float]
    params: MeanFieldParams


# ---------------------------------------------------------------------------
# Exact binomial machinery
# ---------------------------------------------------------------------------


def _pmf_anchor(k: int, i: int, theta: float) -> float:
    """C(k,i) theta^i (1-theta)^(k-i), correctly rounded.

    theta is a double, hence an exact dyadic rational a / 2^s; the pmf is the
    exact rational comb * a^i * (2^s - a)^(k-i) / 2^(s k), converted to float
    with a single correctly-rounded division.
    """
    a, b = theta.as_integer_ratio()
    num = math.comb(k, i) * a**i * (b - a) ** (k - i)
    return float(Fraction(num, b**k))


def binom_pmf(k: int, i: int, theta: float) -> float:
    """P(Bin(k, theta) = i), exact to double precision."""
    _check_k(k)
    if not 0.0 <= theta <= 1.0:
        raise ValueError(f"theta must lie in [0, 1], got {theta!r}")
    if not 0 <= i <= k:
        raise ValueError(f"pmf index must lie in [0, {k}], got {i}")
    if theta == 0.0:
        return 1.0 if i == 0 else 0.0
    if theta == 1.0:
        return 1.0 if i == k else 0.0
    return _pmf_anchor(k, i, theta)


def binom_tail_geq(k: int, theta: float, m: int) -> float:
    """P(Bin(k, theta) >= m) by exact pmf summation.

    The pmf at the end of the requested tail that is nearest the mode is
    evaluated exactly (dyadic rational arithmetic), and the remaining terms
    follow by the multiplicative recurrence
    pmf(i+1) = pmf(i) * theta/(1-theta) * (k-i)/(i+1), walking away from the
    mode so the terms only decay.  The smaller of the two tails is the one
    summed: the upper tail directly when m > k*theta, otherwise 1 minus the
    lower tail.  Absolute error <= 1e-14 for k <= MAX_K.
    """
    _check_k(k)
    if not 0.0 <= theta <= 1.0:
        raise ValueError(f"theta must lie in [0, 1], got {theta!r}")
    if m < 0:
        raise ValueError(f"tail threshold m must be >= 0, got {m}")
    if m > k + 1:
        raise ValueError(f"tail threshold m must be <= k+1={k + 1}, got {m}")
    if m == 0:
        return 1.0
    if m == k + 1:
        return 0.0
    if theta == 0.0:
        return 0.0
    if theta == 1.0:
        return 1.0
    if theta == 0.5 and 2 * m == k + 1:
        return 0.5  # symmetric split of Bin(k, 1/2), exact
    if m > k * theta:
        return _tail_sum(k, theta, start=m, upward=True)
    return 1.0 - _tail_sum(k, theta, start=m - 1, upward=False)


def _tail_sum(k: int, theta: float, start: int, upward: bool) -> float:
    """Sum pmf terms from ``start`` toward the far tail (terms decay)."""
    term = _pmf_anchor(k, start, theta)
    terms = [term]
    if upward:
        odds = theta / (1.0 - theta)
        i = start
        while i < k and term > 0.0:
            term *= odds * (k - i) / (i + 1)
            i += 1
            terms.append(term)
            if term < terms[0] * 1e-20:
                break  # remaining mass < k * term <= 1e-16 * leading term
    else:
        inv_odds = (1.0 - theta) / theta
        i = start
        while i > 0 and term > 0.0:
            term *= inv_odds * i / (k - i + 1)
            i -= 1
            terms.append(term)
            if term < terms[0] * 1e-20:
                break
    return math.fsum(terms)


def _check_k(k: int) -> None:
    if not isinstance(k, int) or k < 0:
        raise ValueError(f"k must be a nonnegative integer, got {k!r}")
    if k > MAX_K:
        raise ValueError(f"k={k} exceeds the supported cap {MAX_K}")


def _check_x(x: float) -> None:
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"argument x must lie in [0, 1], got {x!r}")


# ---------------------------------------------------------------------------
# The update map and its derivatives
# ---------------------------------------------------------------------------


def eval_F(params: MeanFieldParams, x: float) -> float:
    """Update map for odd sample sizes.

    Edge bias: P(Bin(k, (1-p) x) >= (k+1)/2).
    Node bias: (1-p) P(Bin(k, x) >= (k+1)/2).
    """
    _check_x(x)
    k, p = params.k, params.p
    if k % 2 == 0:
        raise ValueError(f"eval_F requires odd k (got k={k}); use eval_F_even")
    m = (k + 1) // 2
    if params.mode is BiasMode.EDGE:
        return binom_tail_geq(k, (1.0 - p) * x, m)
    return (1.0 - p) * binom_tail_geq(k, x, m)


def eval_F_even(params: MeanFieldParams, x: float) -> float:
    """Update map for even sample sizes; ties count with weight 1/2.

    P(Bin(k, z) > k/2) + P(Bin(k, z) = k/2) / 2 with z = (1-p) x for edge
    bias, or z = x and an overall (1-p) factor for node bias.  Agrees with
    eval_F at sample size k-1 (same mode).
    """
    _check_x(x)
    k, p = params.k, params.p
    if k % 2 == 1:
        raise ValueError(f"eval_F_even requires even k, got k={k}")
    if k < 2:
        raise ValueError(f"eval_F_even requires k >= 2, got k={k}")
    h = k // 2
    if params.mode is BiasMode.EDGE:
        z = (1.0 - p) * x
        return binom_tail_geq(k, z, h + 1) + 0.5 * binom_pmf(k, h, z)
    return (1.0 - p) * (binom_tail_geq(k, x, h + 1) + 0.5 * binom_pmf(k, h, x))


def eval_dF(params: MeanFieldParams, x: float) -> float:
    """First derivative of the update map (odd k).

    Edge bias: k (1-p) P(Bin(k-1, (1-p) x) = (k-1)/2); node bias replaces the
    pmf argument (1-p) x by x (chain rule through the axis contraction).
    """
    _check_x(x)
    k, p = params.k, params.p
    if k % 2 == 0:
        raise ValueError(f"eval_dF requires odd k, got k={k}")
    h = (k - 1) // 2
    u = (1.0 - p) * x if params.mode is BiasMode.EDGE else x
    return k * (1.0 - p) * binom_pmf(k - 1, h, u)


def eval_d2F(params: MeanFieldParams, x: float) -> float:
    """Second derivative of the update map (odd k).

    Edge bias: k (k-1) (1-p)^2 C(k-2, (k-1)/2) (u - u^2)^((k-3)/2) (1 - 2u)
    with u = (1-p) x; positive exactly on u < 1/2, i.e. x < 1/(2(1-p)).
    Node bias: same with u = x and prefactor k (k-1) (1-p).  For k = 1 the
    map is linear and the second derivative is identically 0.
    """
    _check_x(x)
    k, p = params.k, params.p
    if k % 2 == 0:
        raise ValueError(f"eval_d2F requires odd k, got k={k}")
    if k == 1:
        return 0.0
    if params.mode is BiasMode.EDGE:
        u = (1.0 - p) * x
        scale = k * (k - 1) * (1.0 - p) ** 2
    else:
        u = x
        scale = k * (k - 1) * (1.0 - p)
    if k == 3:
        return scale * (1.0 - 2.0 * u)
    if u <= 0.0 or u >= 1.0:
        return 0.0
    # C(k-2, h) (u - u^2)^((k-3)/2) == P(Bin(k-2, u) = h) / u with h = (k-1)/2
    return scale * binom_pmf(k - 2, (k - 1) // 2, u) * (1.0 - 2.0 * u) / u


# ---------------------------------------------------------------------------
# Root finding
# ---------------------------------------------------------------------------


def _bisect(f, lo: float, hi: float, f_lo: float, f_hi: float, tol: float) -> float:
    """Bisection on a bracketed sign change; stops once the bracket is
    narrower than tol and the midpoint residual is within tol."""
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if (f_lo > 0.0) == (f_hi > 0.0):
        raise ValueError("bisection bracket does not straddle a sign change")
    for _ in range(_MAX_BISECT):
        mid = 0.5 * (lo + hi)
        f_mid = f(mid)
        if f_mid == 0.0:
            return mid
        if (f_mid > 0.0) == (f_lo > 0.0):
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol and abs(f_mid) <= tol:
            break
    return 0.5 * (lo + hi)


def _classify(params: MeanFieldParams, tol: float):
    """Regime of the edge-bias map plus the tangency point when it exists.

    Returns (regime, mu, psi_mu).  Nontrivial roots can only live in
    (1/(2(1-p)), 1], where the map is concave, so F' is decreasing there;
    the regime is read off the sign of F(mu) - mu at the point where F' = 1.
    """
    p = params.p
    if p >= 0.5:
        # 1/(2(1-p)) >= 1: the search interval is empty (map convex on [0,1])
        return Regime.SUPERCRITICAL, None, None
    a = 0.5 / (1.0 - p)
    g = lambda x: eval_dF(params, x) - 1.0
    g_a, g_1 = g(a), g(1.0)
    if g_a <= 0.0:
        # F' <= 1 on the whole concave region while F(a) = 1/2 <= a:
        # F stays below the diagonal, no nontrivial root.
        return Regime.SUPERCRITICAL, None, None
    if g_1 >= 0.0:
        # F' >= 1 throughout, so F - x is increasing up to F(1) - 1 < 0.
        return Regime.SUPERCRITICAL, None, None
    mu = _bisect(g, a, 1.0, g_a, g_1, tol)
    psi_mu = eval_F(params, mu) - mu
    if abs(psi_mu) <= tol:
        return Regime.CRITICAL, mu, psi_mu
    if psi_mu < 0.0:
        return Regime.SUPERCRITICAL, mu, psi_mu
    return Regime.SUBCRITICAL, mu, psi_mu


def fixed_points(params: MeanFieldParams, tol: float = DEFAULT_TOL) -> FixedPointSet:
    """All solutions of F(x) = x (or Fhat(x) = x for node bias).

    0 is always a root.  Nontrivial roots are bracketed against the tangency
    point mu (F' is monotone on the concave region, so each bracket holds a
    single sign change) and located by bisection; |F(root) - root| <= tol.
    Node-bias sets are the edge-bias sets contracted by (1-p).
    """
    if tol <= 0.0:
        raise ValueError(f"tolerance must be positive, got {tol!r}")
    k, p = params.k, params.p
    if k % 2 == 0:
        raise ValueError(f"fixed_points requires odd k, got k={k}")
    if k == 1:
        raise ValueError("fixed_points requires k >= 3 (the k=1 map is linear)")
    if params.mode is BiasMode.NODE:
        edge = fixed_points(MeanFieldParams(k, p, BiasMode.EDGE), tol)
        s = 1.0 - p
        scale = lambda v: None if v is None else s * v
        return FixedPointSet(
            regime=edge.regime,
            phi_minus=scale(edge.phi_minus),
            phi_plus=scale(edge.phi_plus),
            mu=scale(edge.mu),
        )
    regime, mu, psi_mu = _classify(params, tol)
    if regime is Regime.SUPERCRITICAL:
        return FixedPointSet(Regime.SUPERCRITICAL, None, None, mu=None)
    if regime is Regime.CRITICAL:
        return FixedPointSet(Regime.CRITICAL, mu, mu, mu=mu)
    a = 0.5 / (1.0 - p)
    psi = lambda x: eval_F(params, x) - x
    psi_a, psi_1 = psi(a), psi(1.0)
    # boundary roots: p = 0 puts phi- exactly at a = 1/2 and phi+ at 1
    phi_minus = a if psi_a >= 0.0 else _bisect(psi, a, mu, psi_a, psi_mu, tol)
    phi_plus = 1.0 if psi_1 >= 0.0 else _bisect(psi, mu, 1.0, psi_mu, psi_1, tol)
    return FixedPointSet(Regime.SUBCRITICAL, phi_minus, phi_plus, mu=mu)


def closed_form_k3(p: float) -> FixedPointSet:
    """Exact k = 3 edge-bias fixed points via the quadratic formula.

    F(x) = 3(1-p)^2 x^2 - 2(1-p)^3 x^3, so the nontrivial roots solve
    2(1-p)^3 x^2 - 3(1-p)^2 x + 1 = 0 with discriminant (1-p)^3 (1-9p).
    Serves as the independent oracle for the numeric solver.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"bias p must lie in [0, 1], got {p!r}")
    if p >= 1.0:
        return FixedPointSet(Regime.SUPERCRITICAL, None, None, None)
    t = 1.0 - 9.0 * p
    if t < 0.0:
        return FixedPointSet(Regime.SUPERCRITICAL, None, None, None)
    c = 1.0 - p
    root_disc = math.sqrt(c**3 * t)
    den = 4.0 * c**3
    phi_minus = (3.0 * c * c - root_disc) / den
    phi_plus = (3.0 * c * c + root_disc) / den
    if root_disc == 0.0:
        return FixedPointSet(Regime.CRITICAL, phi_minus, phi_minus, mu=phi_minus)
    return FixedPointSet(Regime.SUBCRITICAL, phi_minus, phi_plus, mu=None)


# ---------------------------------------------------------------------------
# Critical bias values
# ---------------------------------------------------------------------------


def critical_bias_k(k: int, tol: float = DEFAULT_TOL) -> CriticalValues:
    """Largest bias for which a nontrivial fixed point survives.

    Bisection on p over [1/9, 1/2]: below the answer the map is subcritical
    or critical, above it supercritical.  Holds for both bias modes (the
    node-bias map is an axis contraction of the edge-bias map, which leaves
    existence of nontrivial roots unchanged).
    """
    if not isinstance(k, int) or k % 2 == 0:
        raise ValueError(f"critical_bias_k requires odd k, got {k!r}")
    if k == 1:
        raise ValueError("k = 1 (voter) has no critical bias: disruption at any p > 0")
    if k < 0 or k > MAX_K:
        raise ValueError(f"k={k} out of supported range")
    if tol <= 0.0:
        raise ValueError(f"tolerance must be positive, got {tol!r}")
    lo, hi = 1.0 / 9.0, 0.5
    for _ in range(_MAX_BISECT):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        regime, _, _ = _classify(MeanFieldParams(k, mid, BiasMode.EDGE), tol)
        if regime is Regime.SUPERCRITICAL:
            hi = mid
        else:
            lo = mid
    return CriticalValues(p_star_k=0.5 * (lo + hi), p_star_kq=None, k=k, q=None, tolerance=tol)


def critical_bias_kq(k: int, q: float, tol: float = DEFAULT_TOL) -> CriticalValues:
    """Critical bias under Bernoulli(q) initialization.

    The threshold is the largest p <= p_star_k with phi_minus(p) <= q;
    phi_minus is increasing in p, so bisection on p applies.  q = 1 always
    gives p_star_k itself.
    """
    if not 0.5 < q <= 1.0:
        raise ValueError(f"initial majority level q must lie in (1/2, 1], got {q!r}")
    base = critical_bias_k(k, tol)
    p_star = base.p_star_k

    def phi_minus_at(p: float) -> float | None:
        fp = fixed_points(MeanFieldParams(k, p, BiasMode.EDGE), tol)
        return None if fp.regime is Regime.SUPERCRITICAL else fp.phi_minus

    # Probe just inside the subcritical window: if even the largest phi_minus
    # stays below q, the q-threshold coincides with p_star_k.
    probe = phi_minus_at(max(0.0, p_star - 2.0 * tol))
    if probe is not None and probe <= q:
        return CriticalValues(p_star_k=p_star, p_star_kq=p_star, k=k, q=q, tolerance=tol)
    lo, hi = 0.0, p_star
    for _ in range(_MAX_BISECT):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        pm = phi_minus_at(mid)
        if pm is not None and pm <= q:
            lo = mid
        else:
            hi = mid
    return CriticalValues(p_star_k=p_star, p_star_kq=0.5 * (lo + hi), k=k, q=q, tolerance=tol)


# ---------------------------------------------------------------------------
# Trajectory recursion
# ---------------------------------------------------------------------------


def trajectory(params: MeanFieldParams, q0: float, T: int) -> Trajectory:
    """Iterate the update map T times from q0 (even k dispatches to the
    tie-aware map, which follows the same law as k-1)."""
    _check_x(q0)
    if not isinstance(T, int) or T < 0:
        raise ValueError(f"round count T must be a nonnegative integer, got {T!r}")
    step = eval_F if params.k % 2 == 1 else eval_F_even
    values = [float(q0)]
    for _ in range(T):
        values.append(step(params, values[-1]))
    return Trajectory(q0=float(q0), values=values, params=params)
