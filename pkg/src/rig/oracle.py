"""Independent verification backends for the closed-form moments.

Each check recomputes a quantity from its defining integral or by exhaustive
enumeration, with none of the case analysis used by the closed forms:

  * quad_first_moment: adaptive quadrature of int_0^1 (1 - p a(x))^(n-1) dx,
    with a(x) recomputed as a clipped window length;
  * quad_pair_moment: nested adaptive quadrature of the double integral
    E[(1 - p 1{d(x,y)<=r}) b(x,y)^(n-2)] over the unit square, with the
    joint-range probability u(x,y) recomputed from window-overlap lengths;
  * mc_utilde: Monte Carlo frequency for the two-arc membership probability;
  * exhaustive_small_er: exact isolation law of the Bernoulli graph for
    n <= 4 by summing all 2^(n(n-1)/2) edge configurations.

``run_suite`` bundles a battery of these into OracleReports; the CLI's
verify command renders them and fails on any miss.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy import integrate

from . import analytic, core
from .core import Metric, ModelParams


@dataclass(frozen=True)
class OracleReport:
    """One closed-form-vs-oracle comparison."""

    name: str
    closed_form: float
    oracle_value: float
    abs_err: float
    rel_err: float
    tolerance: float
    passed: bool


def _report(name: str, closed: float, orc: float, tol: float) -> OracleReport:
    abs_err = abs(closed - orc)
    rel_err = 0.0 if abs_err == 0.0 else abs_err / max(abs(closed), abs(orc))
    return OracleReport(name, closed, orc, abs_err, rel_err, tol,
                        abs_err <= tol or rel_err <= tol)


def _pow_log(base: float, k: int) -> float:
    if k == 0:
        return 1.0
    if base <= 0.0:
        return 0.0
    return math.exp(k * math.log(base))


def _range_length(metric: Metric, x: float, r: float) -> float:
    """Measure of {y : d(x, y) <= r} as a clipped window length."""
    if metric is Metric.INTERVAL:
        return min(x + r, 1.0) - max(x - r, 0.0)
    return min(1.0, 2.0 * r)


def _joint_range_length(metric: Metric, x: float, y: float, r: float) -> float:
    """Measure of {z : d(x, z) <= r and d(y, z) <= r} via window overlaps."""
    if metric is Metric.INTERVAL:
        lo = max(max(x, y) - r, 0.0)
        hi = min(min(x, y) + r, 1.0)
        return max(0.0, hi - lo)
    if r >= 0.5:
        return 1.0
    gap = abs(x - y)
    gap = min(gap, 1.0 - gap)
    near = max(0.0, 2.0 * r - gap)
    far = max(0.0, 2.0 * r - (1.0 - gap))
    return near + far


def _metric_distance(metric: Metric, x: float, y: float) -> float:
    d = abs(x - y)
    if metric is Metric.CIRCLE:
        d = min(d, 1.0 - d)
    return d


def quad_first_moment(metric: Metric, n: int, params: ModelParams,
                      tol: float = 1e-10) -> OracleReport:
    """Quadrature of the defining single-node integral vs the closed form."""
    r, p = params.r, params.p
    exp = n - 1

    def integrand(x: float) -> float:
        base = 1.0 - p * _range_length(metric, x, r)
        return _pow_log(base, exp)

    pts = sorted({t for t in (r, 1.0 - r) if 0.0 < t < 1.0})
    orc, _ = integrate.quad(integrand, 0.0, 1.0, points=pts or None,
                            limit=300, epsabs=1e-300, epsrel=1e-11)
    if metric is Metric.CIRCLE:
        closed = analytic.first_moment_circle(n, params)
        name = f"first_moment circle n={n} r={r:g} p={p:g}"
    else:
        closed = analytic.first_moment_interval(n, params)
        name = f"first_moment interval n={n} r={r:g} p={p:g}"
    return _report(name, closed, orc, tol)


def quad_pair_moment_value(metric: Metric, n: int, params: ModelParams) -> float:
    """Nested quadrature of the two-node double integral over [0,1]^2.

    The inner tolerance sits well below the outer one so the outer
    integrator never chases inner-quadrature noise.
    """
    r, p = params.r, params.p
    m = n - 2

    axis = sorted({t for t in (r, 1.0 - r, 2.0 * r, 1.0 - 2.0 * r)
                   if 0.0 < t < 1.0})

    def inner(y: float, x: float, ax: float) -> float:
        ay = _range_length(metric, y, r)
        b = 1.0 - p * ax - p * ay + p * p * _joint_range_length(metric, x, y, r)
        factor = 1.0 - p if _metric_distance(metric, x, y) <= r else 1.0
        return factor * _pow_log(b, m)

    def outer(x: float) -> float:
        ax = _range_length(metric, x, r)
        # y = x is a genuine kink of b(x, .): |x-y| bottoms out there
        shifts = [x, x - 2.0 * r, x - r, x + r, x + 2.0 * r]
        if metric is Metric.CIRCLE:
            shifts += [x - 1.0 + r, x + 1.0 - r, x - 1.0 + 2.0 * r,
                       x + 1.0 - 2.0 * r]
        pts = sorted({t for t in axis + shifts if 0.0 < t < 1.0})
        val, _ = integrate.quad(inner, 0.0, 1.0, args=(x, ax),
                                points=pts or None, limit=300,
                                epsabs=1e-300, epsrel=3e-13)
        return val

    val, _ = integrate.quad(outer, 0.0, 1.0, points=axis or None, limit=200,
                            epsabs=1e-300, epsrel=1e-9)
    return val


def quad_pair_moment(metric: Metric, n: int, params: ModelParams,
                     tol: float = 1e-8) -> OracleReport:
    """2D quadrature of the pair integral vs the module's pair moment.

    Circle: checks the exact closed form.  Interval: independent
    re-evaluation of the quadrature value at a different tolerance.
    """
    orc = quad_pair_moment_value(metric, n, params)
    if metric is Metric.CIRCLE:
        closed = analytic.pair_moment_circle_exact(n, params)
        name = f"pair_moment circle n={n} r={params.r:g} p={params.p:g}"
    else:
        closed = analytic.pair_moment_interval_quadrature(n, params)
        name = f"pair_moment interval n={n} r={params.r:g} p={params.p:g}"
    return _report(name, closed, orc, tol)


def mc_utilde(z: float, r: float, samples: int, seed: int) -> OracleReport:
    """Monte Carlo frequency of the two-arc membership event vs u_tilde.

    Passes at five standard errors of the hypothesized value.
    """
    if samples < 1:
        raise ValueError("need samples >= 1")
    closed = analytic.u_tilde_circle(z, r)
    rng = core.trial_stream(seed, 2_000_001)
    xs = rng.random(samples)
    hit = (np.minimum(xs, 1.0 - xs) <= r)
    d = np.abs(xs - z)
    hit &= np.minimum(d, 1.0 - d) <= r
    freq = float(np.count_nonzero(hit)) / samples
    tol = 5.0 * math.sqrt(max(closed * (1.0 - closed), 0.0) / samples)
    return _report(f"u_tilde_circle z={z:g} r={r:g} (MC {samples})",
                   closed, freq, tol)


def exhaustive_small_er(n: int, p: float, *, mc_trials: int = 4000,
                        seed: int = 0) -> list[OracleReport]:
    """Exact ER isolation law by enumeration, cross-checked three ways.

    Sums all 2^(n(n-1)/2) edge configurations weighted by p^k (1-p)^(m-k),
    then compares E[I_n] against the per-node closed form n(1-p)^(n-1) and
    both E[I_n] and P{I_n = 0} against a Monte Carlo run through the
    package's own sampler and counter.
    """
    if n not in (2, 3, 4):
        raise ValueError("exhaustive enumeration capped at n=4")
    pairs = list(combinations(range(n), 2))
    m = len(pairs)
    exact_mean = 0.0
    exact_p0 = 0.0
    for mask in range(1 << m):
        k = bin(mask).count("1")
        weight = p ** k * (1.0 - p) ** (m - k)
        touched = set()
        for b, (i, j) in enumerate(pairs):
            if mask >> b & 1:
                touched.add(i)
                touched.add(j)
        isolated = n - len(touched)
        exact_mean += weight * isolated
        exact_p0 += weight * (isolated == 0)
    formula_mean = n * (1.0 - p) ** (n - 1)
    counts = np.empty(mc_trials, dtype=np.int64)
    for t in range(mc_trials):
        s = core.sample(n, p, seed, key=(2_000_002, t))
        counts[t] = core.count_isolated_er(s).count
    mc_mean = float(counts.mean())
    mc_p0 = float(np.count_nonzero(counts == 0)) / mc_trials
    se_mean = 5.0 * math.sqrt(max(float(np.var(counts)), 1.0 / mc_trials) / mc_trials)
    se_p0 = 5.0 * math.sqrt(max(exact_p0 * (1.0 - exact_p0), 1.0 / mc_trials) / mc_trials)
    tag = f"n={n} p={p:g}"
    return [
        _report(f"ER E[I] enumeration vs formula {tag}", formula_mean,
                exact_mean, 1e-12),
        _report(f"ER E[I] enumeration vs MC {tag}", exact_mean, mc_mean, se_mean),
        _report(f"ER P(I=0) enumeration vs MC {tag}", exact_p0, mc_p0, se_p0),
    ]


_FIRST_MOMENT_CASES = [
    (10, 0.15, 0.4), (25, 0.05, 0.9), (50, 0.3, 0.25), (100, 0.1, 0.23),
    (100, 0.45, 0.6), (40, 0.7, 0.5), (25, 1.2, 0.3), (60, 0.5, 0.8),
]
_PAIR_CASES_QUICK = [
    (4, 0.1, 0.5), (7, 0.18, 0.65), (12, 0.3, 0.7), (9, 0.42, 0.35),
    (10, 0.6, 0.4), (6, 0.26, 0.9),
]
_PAIR_CASES_FULL = [
    (30, 0.05, 0.9), (50, 0.12, 0.45), (25, 0.24, 0.25), (40, 0.26, 0.33),
    (60, 0.33, 0.15), (45, 0.49, 0.2), (100, 0.1, 0.2302585092994046),
]
_UTILDE_CASES = [(0.05, 0.1), (0.3, 0.1), (0.5, 0.3), (0.2, 0.26), (0.0, 0.4)]


def run_suite(full: bool = False, seed: int = 1729) -> list[OracleReport]:
    """The default verification battery; every report must pass."""
    reports: list[OracleReport] = []
    for n, r, p in _FIRST_MOMENT_CASES:
        params = ModelParams(r, p)
        for metric in (Metric.CIRCLE, Metric.INTERVAL):
            reports.append(quad_first_moment(metric, n, params))
    for n, r, p in _PAIR_CASES_QUICK:
        reports.append(quad_pair_moment(Metric.CIRCLE, n, ModelParams(r, p)))
    samples = 1_000_000 if full else 200_000
    for z, r in _UTILDE_CASES:
        reports.append(mc_utilde(z, r, samples, seed))
    for n in (2, 3, 4):
        for p in (0.3, 0.6):
            reports.extend(exhaustive_small_er(n, p, seed=seed))
    if full:
        for n, r, p in _PAIR_CASES_FULL:
            reports.append(quad_pair_moment(Metric.CIRCLE, n, ModelParams(r, p)))
        for n, r, p in [(6, 0.2, 0.5), (9, 0.35, 0.7), (5, 0.8, 0.4)]:
            reports.append(quad_pair_moment(Metric.INTERVAL, n,
                                            ModelParams(r, p), tol=1e-7))
    return reports
