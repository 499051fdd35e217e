"""Deviation sequences and critical scalings for the isolated-node laws.

The edge probability of the intersection graph is p*l(r) with
l(r) = min(1, 2r).  Scalings are measured against two reference curves:

  * p*l(r) = (log n + alpha) / n            (circle zero-one law), and
  * p*l(r) = (2(log n - log log n) + alpha') / n   (interval one law).

``deviation_alpha`` / ``deviation_alpha_prime`` read the deviations off a
given (n, r, p); the solvers invert them for one free parameter.  Natural
logarithms throughout.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .analytic import ell
from .core import ModelParams


class InfeasibleScalingError(ValueError):
    """The requested scaling cannot be met by any parameter in range."""


def _require_n(n: int, least: int) -> None:
    if n < least:
        raise ValueError(f"need n >= {least}, got {n}")


def deviation_alpha(n: int, params: ModelParams) -> float:
    """n * p * l(r) - log n: offset from the circle critical scaling."""
    _require_n(n, 2)
    return n * params.p * ell(params.r) - math.log(n)


def _one_law_target(n: int) -> float:
    return 2.0 * (math.log(n) - math.log(math.log(n)))


def deviation_alpha_prime(n: int, params: ModelParams) -> float:
    """n * p * l(r) - 2(log n - log log n): offset from the interval one-law scaling."""
    _require_n(n, 3)
    return n * params.p * ell(params.r) - _one_law_target(n)


def _solve_p(n: int, r: float, target: float) -> float:
    if not (r > 0.0):
        raise InfeasibleScalingError("need r > 0 so that l(r) > 0")
    p = target / (n * ell(r))
    if not (0.0 <= p <= 1.0):
        raise InfeasibleScalingError(
            f"required p = {p:.6g} falls outside [0, 1] at n={n}, r={r}")
    return p


def _solve_r(n: int, p: float, target: float) -> float:
    if not (0.0 < p <= 1.0):
        raise InfeasibleScalingError("need p in (0, 1]")
    needed_ell = target / (n * p)
    if needed_ell < 0.0:
        raise InfeasibleScalingError(
            f"required l(r) = {needed_ell:.6g} is negative at n={n}, p={p}")
    if needed_ell > 1.0:
        raise InfeasibleScalingError(
            f"required l(r) = {needed_ell:.6g} exceeds 1 (saturated) at n={n}, p={p}")
    return needed_ell / 2.0


def solve_p_for_alpha(n: int, r: float, alpha: float) -> float:
    """p with n*p*l(r) = log n + alpha; infeasible outside [0, 1]."""
    _require_n(n, 2)
    return _solve_p(n, r, math.log(n) + alpha)


def solve_p_for_alpha_prime(n: int, r: float, alpha_prime: float) -> float:
    """p with n*p*l(r) = 2(log n - log log n) + alpha'."""
    _require_n(n, 3)
    return _solve_p(n, r, _one_law_target(n) + alpha_prime)


def solve_r_for_alpha(n: int, p: float, alpha: float) -> float:
    """r with n*p*l(r) = log n + alpha; r = 0.5 when l must saturate exactly."""
    _require_n(n, 2)
    return _solve_r(n, p, math.log(n) + alpha)


def solve_r_for_alpha_prime(n: int, p: float, alpha_prime: float) -> float:
    """r with n*p*l(r) = 2(log n - log log n) + alpha'."""
    _require_n(n, 3)
    return _solve_r(n, p, _one_law_target(n) + alpha_prime)


def classical_critical_er(n: int) -> float:
    """Critical edge probability log n / n for the Bernoulli graph alone."""
    _require_n(n, 2)
    return math.log(n) / n


def classical_critical_geo(n: int) -> float:
    """Critical range log n / (2n) for the geometric graph alone."""
    _require_n(n, 2)
    return math.log(n) / (2.0 * n)


def deviation_beta_geo(n: int, r: float) -> float:
    """n * l(r) - log n, the range deviation through the edge probability.

    Saturates at n - log n once 2r >= 1, i.e. beta = min(alpha, n - log n)
    for the plain range deviation alpha = 2nr - log n.
    """
    _require_n(n, 2)
    return n * ell(r) - math.log(n)


@dataclass(frozen=True)
class DeviationReport:
    """Deviations implied by one (n, r, p) configuration."""

    n: int
    params: ModelParams
    p_ell: float
    alpha: float
    alpha_prime: float | None  # None for n < 3 (log log n not positive)


def deviation_report(n: int, params: ModelParams) -> DeviationReport:
    """Read both deviations off (n, r, p); round-trips with the solvers."""
    _require_n(n, 2)
    p_ell = params.p * ell(params.r)
    alpha = deviation_alpha(n, params)
    alpha_prime = deviation_alpha_prime(n, params) if n >= 3 else None
    return DeviationReport(n, params, p_ell, alpha, alpha_prime)
