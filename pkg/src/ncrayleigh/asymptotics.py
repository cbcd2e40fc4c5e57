"""High-power approximations of the capacity supremum."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .channel import LN2, _check_nr
from .errors import DomainError
from .numerics import Bracket, find_root_monotone
from .specfun import AccuracySpec, digamma, trigamma
from .supremum import _check_power, capacity_supremum


@dataclass(frozen=True)
class AsymptoticReport:
    zeta_approx: float
    capacity_approx: float
    exact_capacity: float
    exact_zeta: float

    @property
    def gap(self) -> float:
        return self.exact_capacity - self.capacity_approx


def _log_array_power(n_r: int, p: float) -> float:
    return math.log(_check_nr(n_r)) + math.log1p(_check_power(p))


def asymptotic_zeta(n_r: int, p: float) -> float:
    """zeta_s ~ 1 / ln(n_r (1 + P)) as P grows."""
    lg = _log_array_power(n_r, p)
    if lg <= 0.0:
        raise DomainError(f"need n_r (1 + P) > 1, got n_r={n_r}, P={p}")
    return 1.0 / lg


def asymptotic_capacity(n_r: int, p: float) -> float:
    """Double-log growth ln(ln(n_r (1 + P)))."""
    lg = _log_array_power(n_r, p)
    if lg <= 1.0:
        raise DomainError(f"need ln(n_r (1 + P)) > 1, got {lg}")
    return math.log(lg)


def double_log_reference(snr: float) -> float:
    """ln(1 + ln(1 + snr)), the high-SNR reference curve without its constant."""
    if not snr >= 0.0:
        raise DomainError(f"snr must be non-negative, got {snr!r}")
    return math.log1p(math.log1p(snr))


def min_power_beta_positive(n_r: int) -> float:
    """Infimum over alpha of the beta > 0 branch power (its alpha -> inf limit)."""
    n_r = _check_nr(n_r)
    return math.expm1(2.0 * (digamma(n_r) + LN2) - math.log(2.0 * n_r))


def zero_power_zeta(n_r: int) -> float:
    """Root of ln z - psi(z) = ln n_r - psi(n_r); the answer is n_r itself."""
    n_r = _check_nr(n_r)
    target = math.log(n_r) - digamma(n_r)

    def f(z):
        return math.log(z) - digamma(z) - target

    # decreasing in z; bracket generously around the root
    return find_root_monotone(
        f, Bracket(n_r / 3.0, 3.0 * n_r), AccuracySpec(abs_tol=1e-15, rel_tol=1e-14),
        fprime=lambda z: 1.0 / z - trigamma(z),
    )


def asymptotic_report(n_r: int, p: float) -> AsymptoticReport:
    exact = capacity_supremum(n_r, p)
    return AsymptoticReport(
        zeta_approx=asymptotic_zeta(n_r, p),
        capacity_approx=asymptotic_capacity(n_r, p),
        exact_capacity=exact.nats,
        exact_zeta=exact.zeta_or_alpha,
    )
