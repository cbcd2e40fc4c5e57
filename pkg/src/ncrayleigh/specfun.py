"""Gamma-family special functions on the positive real axis.

All three functions follow the same recipe: shift the argument upward by
the recurrence until it reaches ``ASYMPTOTIC_THRESHOLD`` and then sum the
Stirling-type asymptotic series.  ``log_gamma`` additionally uses the
Taylor series of ``ln Gamma(1 + z)`` near its two zeros (x = 1 and x = 2)
so that the relative error stays small where the function vanishes.

Accuracy (checked against mpmath in the test suite):

* ``log_gamma``: relative error below 1e-13 on [1e-6, 1e6].
* ``digamma``: absolute error below 1e-12 wherever |psi(x)| < 1e3; for
  x close to 0 the error is a few ulp of psi(x) (about 1e-10 at x = 1e-6).
* ``trigamma``: absolute error below 1e-10 wherever psi_1(x) < 1e5, a few
  ulp of psi_1(x) otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import DomainError

EULER_GAMMA = 0.57721566490153286060651209008240243
"""Euler-Mascheroni constant, equal to -psi(1)."""

ASYMPTOTIC_THRESHOLD = 8.0

_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)

_BERNOULLI = (
    Fraction(1, 6),
    Fraction(-1, 30),
    Fraction(1, 42),
    Fraction(-1, 30),
    Fraction(5, 66),
    Fraction(-691, 2730),
    Fraction(7, 6),
    Fraction(-3617, 510),
    Fraction(43867, 798),
    Fraction(-174611, 330),
)
"""B_2, B_4, ..., B_20."""

# Stirling coefficients B_2k / (2k (2k-1)) for ln Gamma.
_LGAMMA_COEF = tuple(float(b / ((2 * k) * (2 * k - 1))) for k, b in enumerate(_BERNOULLI, 1))
# B_2k / (2k) for psi.
_DIGAMMA_COEF = tuple(float(b / (2 * k)) for k, b in enumerate(_BERNOULLI, 1))
# B_2k for psi_1.
_TRIGAMMA_COEF = tuple(float(b) for b in _BERNOULLI)


@dataclass(frozen=True)
class AccuracySpec:
    """Absolute/relative tolerance pair used by the iterative solvers."""

    abs_tol: float = 1e-10
    rel_tol: float = 1e-10

    def __post_init__(self):
        if not (self.abs_tol >= 0.0 and self.rel_tol >= 0.0):
            raise ValueError("tolerances must be non-negative")
        if self.abs_tol == 0.0 and self.rel_tol == 0.0:
            raise ValueError("at least one tolerance must be strictly positive")

    def width_ok(self, width: float, x: float) -> bool:
        return width <= self.rel_tol * abs(x)


def _zeta_int(s: int) -> float:
    """Riemann zeta at an integer s >= 2 by Euler-Maclaurin summation."""
    n = 12
    head = math.fsum(k ** -s for k in range(1, n))
    tail = n ** (1 - s) / (s - 1) + 0.5 * n ** -s
    rising = float(s)
    power = n ** (-s - 1)
    for j, b in enumerate(_BERNOULLI, 1):
        tail += float(b) / math.factorial(2 * j) * rising * power
        rising *= (s + 2 * j - 1) * (s + 2 * j)
        power /= n * n
    return head + tail


_SERIES_RADIUS = 0.25
_SERIES_TERMS = 40
# Taylor coefficients of ln Gamma(1+z) = -gamma z + sum_{k>=2} (-1)^k zeta(k) z^k / k.
_LGAMMA1P_COEF = (-EULER_GAMMA,) + tuple(
    (-1) ** k * _zeta_int(k) / k for k in range(2, _SERIES_TERMS + 2)
)


def _check(x, name: str) -> float:
    x = float(x)
    if not math.isfinite(x) or x <= 0.0:
        raise DomainError(f"{name} requires a finite positive argument, got {x!r}")
    return x


def _lgamma1p_series(z: float) -> float:
    acc = 0.0
    for c in reversed(_LGAMMA1P_COEF):
        acc = acc * z + c
    return acc * z


def _lgamma_stirling(x: float) -> float:
    inv = 1.0 / x
    inv2 = inv * inv
    acc = 0.0
    for c in reversed(_LGAMMA_COEF):
        acc = acc * inv2 + c
    return (x - 0.5) * math.log(x) - x + _HALF_LOG_2PI + acc * inv


def log_gamma(x: float) -> float:
    """Natural logarithm of the gamma function for x > 0."""
    x = _check(x, "log_gamma")
    if abs(x - 1.0) <= _SERIES_RADIUS:
        return _lgamma1p_series(x - 1.0)
    if abs(x - 2.0) <= _SERIES_RADIUS:
        z = x - 2.0
        return _lgamma1p_series(z) + math.log1p(z)
    if x < _SERIES_RADIUS:
        return _lgamma1p_series(x) - math.log(x)
    if x >= ASYMPTOTIC_THRESHOLD:
        return _lgamma_stirling(x)
    prod = 1.0
    while x < ASYMPTOTIC_THRESHOLD:
        prod *= x
        x += 1.0
    return _lgamma_stirling(x) - math.log(prod)


def digamma(x: float) -> float:
    """Digamma function psi(x) = d/dx ln Gamma(x) for x > 0."""
    x = _check(x, "digamma")
    shift = []
    while x < ASYMPTOTIC_THRESHOLD:
        shift.append(1.0 / x)
        x += 1.0
    inv2 = 1.0 / (x * x)
    acc = 0.0
    for c in reversed(_DIGAMMA_COEF):
        acc = acc * inv2 + c
    value = math.log(x) - 0.5 / x - acc * inv2
    # smallest corrections first
    for term in reversed(shift):
        value -= term
    return value


def trigamma(x: float) -> float:
    """Trigamma function psi_1(x) = d/dx psi(x) for x > 0."""
    x = _check(x, "trigamma")
    shift = []
    while x < ASYMPTOTIC_THRESHOLD:
        shift.append(1.0 / (x * x))
        x += 1.0
    inv = 1.0 / x
    inv2 = inv * inv
    acc = 0.0
    for c in reversed(_TRIGAMMA_COEF):
        acc = acc * inv2 + c
    value = inv + 0.5 * inv2 + acc * inv2 * inv
    for term in reversed(shift):
        value += term
    return value
