"""Closed-form moments for isolated nodes in the intersection graph.

Everything here is an exact function of (n, r, p).  Writing q = 1 - p*l(r)
with l(r) = min(1, 2r):

  * per-node isolation probability (circle):  q^(n-1);
  * per-node isolation probability (interval): a piecewise expression that
    keeps the boundary corrections, continuous in r across 0.5 and 1;
  * pair isolation probability (circle): the one-dimensional integral
    2 * int_0^1/2 (1 - p*1{z<=r}) * bt(z)^(n-2) dz, where
    bt(z) = 1 - 2 p l(r) + p^2 ut(z; r) and ut(z; r) is the probability that
    a uniform point lies within range r of two reference points at arc
    distance z.  bt is affine in z on each piece, so the integral has an
    elementary antiderivative and is evaluated exactly here;
  * the corresponding upper bounds on the pair moment and on the ratio
    R_n = E[pair] / E[single]^2 used by the second-moment method;
  * the first/second moment sandwich
        1 - E[I_n]  <=  P{I_n = 0}  <=  1 - E[I_n]^2 / E[I_n^2].

Numerical policy: powers (1-x)^k are evaluated as exp(k*log1p(-x)) and
differences of such powers via expm1, so large-n sweeps neither underflow
prematurely nor lose digits to cancellation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from scipy import integrate

from .core import Metric, ModelParams


class UndefinedRatioError(ArithmeticError):
    """The ratio bound has a vanishing denominator (p = 1 with l(r) = 1)."""


def _pow1m(x: float, k: float) -> float:
    """(1 - x)^k for x in [0, 1], k >= 0, stable for large k."""
    if k == 0:
        return 1.0
    if x >= 1.0:
        return 0.0
    if x <= 0.0:
        return 1.0
    return math.exp(k * math.log1p(-x))


def _pow1m_diff(x_small: float, delta: float, k: float) -> float:
    """(1 - x_small)^k - (1 - x_small - delta)^k without cancellation.

    Callers supply delta as an exactly-formed product so the log ratio
    log((1 - x_small - delta)/(1 - x_small)) = log1p(-delta/(1 - x_small))
    never subtracts nearly equal logarithms.
    """
    if delta < 0.0:
        raise ValueError("delta must be nonnegative")
    lead = _pow1m(x_small, k)
    if lead == 0.0 or delta == 0.0:
        return 0.0
    if x_small + delta >= 1.0:
        return lead
    gap = k * math.log1p(-delta / (1.0 - x_small))
    return lead * -math.expm1(gap)


def ell(r: float) -> float:
    """min(1, 2r): probability that a uniform point falls within range r."""
    if not (r >= 0.0):
        raise ValueError(f"transmission range must be >= 0, got {r}")
    return min(1.0, 2.0 * r)


def a_circle(x: float, r: float) -> float:
    """P{arc distance from x to a uniform point <= r}; no border effects."""
    if not (0.0 <= x <= 1.0):
        raise ValueError(f"x must lie in [0, 1], got {x}")
    return ell(r)


def a_interval(x: float, r: float) -> float:
    """P{|x - Y| <= r} for Y uniform on [0,1]; continuous piecewise-linear in x."""
    if not (0.0 <= x <= 1.0):
        raise ValueError(f"x must lie in [0, 1], got {x}")
    if not (r > 0.0):
        raise ValueError(f"transmission range must be > 0, got {r}")
    if r >= 1.0:
        return 1.0
    lo = min(r, 1.0 - r)
    hi = max(r, 1.0 - r)
    if x <= lo:
        return x + r
    if x >= hi:
        return 1.0 - x + r
    return ell(r)


def _require_n(n: int, least: int = 2) -> None:
    if n < least:
        raise ValueError(f"need n >= {least}, got {n}")


def first_moment_circle(n: int, params: ModelParams) -> float:
    """E[single-node isolation indicator] on the circle: (1 - p*l(r))^(n-1)."""
    _require_n(n)
    return _pow1m(params.p * ell(params.r), n - 1)


def first_moment_interval(n: int, params: ModelParams) -> float:
    """Exact per-node isolation probability on the interval.

    Case-selected closed form: for 0 < r < 1 and p > 0,

        |2r-1| (1 - p*l(r))^(n-1) + (2/(np)) ((1-pr)^n - (1 - p*l(r))^n),

    degenerating to (1-p)^(n-1) for r >= 1 and to 1 for p = 0.
    Continuous in r across the case boundaries at 0.5 and 1.
    """
    _require_n(n)
    r, p = params.r, params.p
    if p == 0.0:
        return 1.0
    if r >= 1.0:
        return _pow1m(p, n - 1)
    pl = p * ell(r)
    if n * pl < 1e-8:
        # first-order expansion 1 - (n-1) p P{|X-Y| <= r}; the quadratic
        # correction is below double precision on this range
        return 1.0 - (n - 1) * p * (2.0 * r - r * r)
    bulk = abs(2.0 * r - 1.0) * _pow1m(pl, n - 1)
    border = (2.0 / (n * p)) * _pow1m_diff(p * r, p * (ell(r) - r), n)
    return bulk + border


def first_moment_interval_upper(n: int, params: ModelParams) -> float:
    """Upper bound (1 - p*l)^(n-1) + (2/(np)) (1 - p*l/2)^n, valid for all r."""
    _require_n(n)
    r, p = params.r, params.p
    if not (p > 0.0):
        raise ValueError("upper bound needs p > 0")
    pl = p * ell(r)
    return _pow1m(pl, n - 1) + (2.0 / (n * p)) * _pow1m(0.5 * pl, n)


def u_tilde_circle(z: float, r: float) -> float:
    """P{uniform point within arc range r of both 0 and z}, z in [0, 0.5].

    Piecewise linear: 2r - z until the two range arcs stop overlapping on
    one side only; 0 once they separate (r < 1/4); 4r - 1 once they also
    overlap around the far side (r >= 1/4); identically 1 for r >= 1/2.
    """
    if not (0.0 <= z <= 0.5):
        raise ValueError(f"z must lie in [0, 0.5], got {z}")
    if not (r > 0.0):
        raise ValueError(f"transmission range must be > 0, got {r}")
    if r >= 0.5:
        return 1.0
    if r < 0.25:
        return 2.0 * r - z if z <= 2.0 * r else 0.0
    return 2.0 * r - z if z <= 1.0 - 2.0 * r else 4.0 * r - 1.0


def b_tilde_circle(z: float, params: ModelParams) -> float:
    """P{a third node connects to neither of two nodes at arc distance z}."""
    r, p = params.r, params.p
    if r == 0.0:
        return 1.0
    return 1.0 - 2.0 * p * ell(r) + p * p * u_tilde_circle(z, r)


def _int_affine_pow(c: float, d: float, a: float, b: float, m: int) -> float:
    """int_a^b (c + d z)^m dz for an affine piece with c + d z in [0, 1]."""
    if b <= a:
        return 0.0
    if m == 0:
        return b - a
    if d == 0.0:
        if c <= 0.0:
            return 0.0
        return (b - a) * math.exp(m * math.log(c))
    ca = c + d * a
    cb = c + d * b
    if max(ca, cb) <= 0.0:
        return 0.0
    # d < 0 on every piece here, so ca >= cb >= 0 up to roundoff
    t = d * (b - a) / ca
    if abs(t) * (m + 1) < 1e-12:
        # essentially-constant piece; the t-based form would divide one
        # rounding-noise quantity by another
        mid = c + d * 0.5 * (a + b)
        if mid <= 0.0:
            return 0.0
        return (b - a) * math.exp(m * math.log(mid))
    lead = math.exp((m + 1) * math.log(ca))
    if 1.0 + t <= 0.0:
        term = -1.0
    else:
        term = math.expm1((m + 1) * math.log1p(t))
    return lead * term / (d * (m + 1))


def _circle_pieces(r: float, p: float) -> list[tuple[float, float, float, float]]:
    """(lo, hi, c, d) pieces of bt on [0, 0.5] for 0 < r < 0.5."""
    kink = 2.0 * r if r < 0.25 else 1.0 - 2.0 * r
    c_affine = 1.0 - 4.0 * p * r + 2.0 * p * p * r
    d_affine = -p * p
    u_const = 0.0 if r < 0.25 else 4.0 * r - 1.0
    c_const = 1.0 - 4.0 * p * r + p * p * u_const
    pieces = []
    if kink > 0.0:
        pieces.append((0.0, min(kink, 0.5), c_affine, d_affine))
    if kink < 0.5:
        pieces.append((max(kink, 0.0), 0.5, c_const, 0.0))
    return pieces


def pair_moment_circle_exact(n: int, params: ModelParams) -> float:
    """Exact E[two-node joint isolation] on the circle.

    2 * int_0^1/2 (1 - p*1{z<=r}) bt(z)^(n-2) dz, evaluated piece by piece:
    bt is affine on each piece, so each term is an elementary power integral.
    """
    _require_n(n)
    r, p = params.r, params.p
    if p == 0.0 or r == 0.0:
        return 1.0
    if r >= 0.5:
        return _pow1m(p, 2 * n - 3)
    m = n - 2
    total = 0.0
    for lo, hi, c, d in _circle_pieces(r, p):
        cut = min(max(r, lo), hi)
        total += (1.0 - p) * _int_affine_pow(c, d, lo, cut, m)
        total += _int_affine_pow(c, d, cut, hi, m)
    return 2.0 * total


def pair_moment_circle_upper(n: int, params: ModelParams) -> float:
    """Case-selected upper bound on the circle pair moment.

    Exact for r >= 0.5 and for p = 0; a strict bound on 0 < r < 0.5 obtained
    by dropping the (1 - p*1{z<=r}) factor before integrating.
    """
    _require_n(n)
    r, p = params.r, params.p
    if p == 0.0 or r == 0.0:
        return 1.0
    if r >= 0.5:
        return _pow1m(p, 2 * n - 3)
    if r < 0.25:
        tail = (1.0 - 4.0 * r) * _pow1m(4.0 * p * r, n - 2)
        delta = 2.0 * p * p * r
        if delta == 0.0:  # p*p underflowed; use the p -> 0 limit of the head
            return tail + 4.0 * r * _pow1m(4.0 * p * r, n - 2)
        head = (2.0 / ((n - 1) * p * p)) * _pow1m_diff(
            2.0 * p * r * (2.0 - p), delta, n - 1)
        return tail + head
    return ((4.0 * r - 1.0) * _pow1m(2.0 * p * r, 2 * (n - 2))
            + (2.0 - 4.0 * r) * _pow1m(2.0 * p * r * (2.0 - p), n - 2))


def ratio_upper(n: int, params: ModelParams) -> float:
    """Upper bound on R_n = E[pair] / E[single]^2 on the circle.

    Equals 1/(1-p) exactly for r >= 0.5 and 1 for p = 0.  Raises
    UndefinedRatioError at (r >= 0.5, p = 1) where the denominator vanishes.
    May legitimately overflow to inf far from the critical scaling.
    """
    _require_n(n)
    r, p = params.r, params.p
    if p == 0.0:
        return 1.0
    if r >= 0.5:
        if p == 1.0:
            raise UndefinedRatioError(
                "first moment vanishes at p=1 with l(r)=1; ratio undefined")
        return 1.0 / (1.0 - p)
    if r < 0.25:
        y = 2.0 * p * p * r / (1.0 - 4.0 * p * r)
        if y == 0.0:  # p*p underflowed; p -> 0 limit of the growth term is 4r
            return (1.0 - 4.0 * r) / (1.0 - 4.0 * p * r) + 4.0 * r
        try:
            grow = math.expm1((n - 1) * math.log1p(y))
        except OverflowError:
            grow = math.inf
        return (1.0 - 4.0 * r) / (1.0 - 4.0 * p * r) + 2.0 * grow / ((n - 1) * p * p)
    expo = ((n - 2) * math.log1p(-2.0 * p * r * (2.0 - p))
            - 2.0 * (n - 1) * math.log1p(-2.0 * p * r))
    try:
        grow = math.exp(expo)
    except OverflowError:
        grow = math.inf
    return (4.0 * r - 1.0) / (1.0 - 2.0 * p * r) ** 2 + (2.0 - 4.0 * r) * grow


def _first_moment(metric: Metric, n: int, params: ModelParams) -> float:
    if metric is Metric.CIRCLE:
        return first_moment_circle(n, params)
    return first_moment_interval(n, params)


def u_interval(x: float, y: float, r: float) -> float:
    """P{|x-Z| <= r and |y-Z| <= r}: overlap length of the two range windows."""
    lo = max(max(x, y) - r, 0.0)
    hi = min(min(x, y) + r, 1.0)
    return max(0.0, hi - lo)


def pair_moment_interval_quadrature(n: int, params: ModelParams) -> float:
    """E[two-node joint isolation] on the interval by 2D adaptive quadrature.

    Integrates (1 - p*1{|x-y|<=r}) * b(x,y)^(n-2) over the unit square with
    b(x,y) = 1 - p a(x) - p a(y) + p^2 u(x,y); breakpoints of the integrand
    are handed to the quadrature so kinks do not stall convergence.
    """
    _require_n(n)
    r, p = params.r, params.p
    if p == 0.0 or r == 0.0:
        return 1.0
    m = n - 2

    def inner(y: float, x: float, ax: float) -> float:
        ay = a_interval(y, r)
        b = 1.0 - p * ax - p * ay + p * p * u_interval(x, y, r)
        if b <= 0.0:
            bm = 1.0 if m == 0 else 0.0
        else:
            bm = math.exp(m * math.log(b))
        factor = 1.0 - p if abs(x - y) <= r else 1.0
        return factor * bm

    axis_breaks = [t for t in (r, 1.0 - r, 2.0 * r, 1.0 - 2.0 * r) if 0.0 < t < 1.0]

    def outer(x: float) -> float:
        ax = a_interval(x, r)
        # y = x is a kink of the overlap length u(x, .)
        pts = sorted({t for t in axis_breaks
                      + [x, x - 2.0 * r, x - r, x + r, x + 2.0 * r]
                      if 0.0 < t < 1.0})
        val, _ = integrate.quad(inner, 0.0, 1.0, args=(x, ax), points=pts,
                                limit=200, epsabs=1e-300, epsrel=1e-11)
        return val

    pts = sorted(set(axis_breaks))
    val, _ = integrate.quad(outer, 0.0, 1.0, points=pts, limit=200,
                            epsabs=1e-300, epsrel=1e-9)
    return val


def probability_bounds(n: int, params: ModelParams, metric: Metric,
                       clamp: bool = True) -> tuple[float, float | None]:
    """First/second-moment sandwich on P{no isolated nodes}.

    Returns (1 - E[I_n], 1 - E[I_n]^2 / E[I_n^2]).  The exact second moment
    is available in closed form only on the circle; for the interval the
    upper slot is None.  With clamp=False the lower bound is reported raw
    (it is negative whenever E[I_n] > 1).
    """
    _require_n(n)
    e1 = _first_moment(metric, n, params)
    ei = n * e1
    if ei == 0.0:
        return 1.0, 1.0
    lower = 1.0 - ei
    if clamp:
        lower = min(1.0, max(0.0, lower))
    if metric is not Metric.CIRCLE:
        return lower, None
    pair = pair_moment_circle_exact(n, params)
    ei2 = n * e1 + n * (n - 1) * pair
    upper = 1.0 - ei * ei / ei2
    if clamp:
        upper = min(1.0, max(0.0, upper))
    return lower, upper


@dataclass(frozen=True)
class MomentReport:
    """All moment quantities for one (metric, n, r, p) configuration."""

    metric: Metric
    n: int
    params: ModelParams
    first_moment_per_node: float
    expected_isolated: float
    pair_moment: float
    pair_moment_kind: str  # "exact" (circle closed form) or "quadrature"
    second_moment: float
    ratio_bound: float | None  # None when undefined (p=1 with l(r)=1)
    prob_lower: float
    prob_upper: float | None


def moment_report(n: int, params: ModelParams, metric: Metric,
                  clamp: bool = True) -> MomentReport:
    """Assemble the full MomentReport; interval pair moment via quadrature."""
    _require_n(n)
    e1 = _first_moment(metric, n, params)
    if metric is Metric.CIRCLE:
        pair = pair_moment_circle_exact(n, params)
        kind = "exact"
    else:
        pair = pair_moment_interval_quadrature(n, params)
        kind = "quadrature"
    ei = n * e1
    ei2 = n * e1 + n * (n - 1) * pair
    if ei == 0.0:
        lower, upper = 1.0, 1.0
    else:
        lower = 1.0 - ei
        if clamp:
            lower = min(1.0, max(0.0, lower))
        upper = 1.0 - ei * ei / ei2
        if clamp:
            upper = min(1.0, max(0.0, upper))
    if metric is Metric.CIRCLE:
        try:
            ratio: float | None = ratio_upper(n, params)
        except UndefinedRatioError:
            ratio = None
    else:
        ratio = None
    return MomentReport(metric, n, params, e1, ei, pair, kind, ei2, ratio, lower, upper)
