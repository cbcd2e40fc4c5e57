"""Lagrange-optimal output law and the capacity supremum.

Maximizing h(Y) - h(Y|X) subject to normalization, the output power
E[Y^2] = 2 n_r (1 + P) and the log moment E[ln Y] = (beta + psi(n_r) + ln 2)/2
gives a generalized-gamma output density with shape zeta,

    p(y) = 2 (zeta / s)^zeta y^(2 zeta - 1) exp(-zeta y^2 / s) / Gamma(zeta),
    s = 2 n_r (1 + P),

and the capacity C(zeta) = G(zeta) - G(n_r) with
G(t) = ln Gamma(t) + t (1 - psi(t)).  The supremum is reached at beta = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Tuple

import numpy as np

from .channel import ENTROPY_QUADRATURE, LN2, _check_nr, conditional_entropy_from_beta
from .errors import DomainError, NoSolution
from .numerics import Bracket, QuadratureSpec, find_root_monotone, integrate_semi_infinite
from .specfun import EULER_GAMMA, AccuracySpec, digamma, log_gamma, trigamma

ROOT_ACCURACY = AccuracySpec(abs_tol=1e-14, rel_tol=1e-15)

METHODS = ("supremum", "beta_positive", "asymptotic", "discrete", "coherent_mc", "sengupta")


@dataclass(frozen=True)
class CapacityResult:
    nats: float
    method: str
    zeta_or_alpha: float = math.nan
    beta: float = math.nan
    diagnostics: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")

    @property
    def bits(self) -> float:
        return self.nats / LN2


@dataclass(frozen=True)
class LagrangeSolution:
    lambda1: float
    lambda2: float
    lambda3: float
    zeta: float

    def constraint_residuals(self, n_r: int, p: float, beta: float) -> Tuple[float, float, float]:
        """Residuals of the normalization, power and log-moment equations.

        Each equation comes from integrating exp((l1 - 1) + l2 y^2 + l3 ln y)
        in closed form; the log-moment one uses
        int y^t exp(-u y^2) ln y dy = u^(-(t+1)/2) Gamma((t+1)/2) (psi((t+1)/2) - ln u) / 4.
        """
        u = -self.lambda2
        a = 0.5 * (1.0 + self.lambda3)
        log_c = self.lambda1 - 1.0
        norm = math.exp(log_c - a * math.log(u) + log_gamma(a)) / 2.0
        power = math.exp(log_c - (a + 1.0) * math.log(u) + log_gamma(a + 1.0)) / 2.0
        logm = math.exp(log_c - a * math.log(u) + log_gamma(a)) / 4.0 * (digamma(a) - math.log(u))
        s = _output_power(n_r, p)
        return (
            abs(norm - 1.0),
            abs(power - s) / s,
            abs(logm - 0.5 * (beta + digamma(n_r) + LN2)),
        )


def _check_zeta(zeta) -> float:
    zeta = float(zeta)
    if not (zeta > 0.0 and math.isfinite(zeta)):
        raise DomainError(f"zeta must be finite and positive, got {zeta!r}")
    return zeta


def _check_power(p) -> float:
    p = float(p)
    if not (p >= 0.0 and math.isfinite(p)):
        raise DomainError(f"power must be finite and non-negative, got {p!r}")
    return p


def _output_power(n_r: int, p: float) -> float:
    return 2.0 * n_r * (1.0 + p)


def g_function(tau: float) -> float:
    """G(tau) = ln Gamma(tau) + tau (1 - psi(tau)); strictly decreasing."""
    tau = _check_zeta(tau)
    return log_gamma(tau) + tau * (1.0 - digamma(tau))


def beta_of_zeta(zeta: float, n_r: int, p: float) -> float:
    """beta = ln(n_r (1 + P) / zeta) + psi(zeta) - psi(n_r)."""
    zeta = _check_zeta(zeta)
    n_r = _check_nr(n_r)
    p = _check_power(p)
    return math.log(n_r) + math.log1p(p) - math.log(zeta) + digamma(zeta) - digamma(n_r)


def _zeta_equation(n_r: int, log_rhs: float) -> Tuple[Callable[[float], float], Callable[[float], float]]:
    # ln zeta - psi(zeta) equals log_rhs at the root; both sides decrease in zeta
    def f(z):
        return digamma(z) - math.log(z) + log_rhs

    def fprime(z):
        return trigamma(z) - 1.0 / z

    return f, fprime


def _solve_decreasing_log_psi(n_r: int, log_rhs: float, hi: float) -> float:
    """Root zeta in (0, hi] of ln zeta - psi(zeta) = log_rhs; f(hi) >= 0 required."""
    f, fprime = _zeta_equation(n_r, log_rhs)
    lo = 0.5 * hi
    while f(lo) > 0.0:
        lo *= 0.5
        if lo < 1e-300:
            raise NoSolution("zeta bracket collapsed to zero")
    if f(hi) == 0.0:
        return hi
    return find_root_monotone(f, Bracket(lo, hi), ROOT_ACCURACY, fprime=fprime)


def solve_zeta_s(n_r: int, p: float) -> float:
    """Unique zeta_s in (0, n_r] with psi(z) - ln z = psi(n_r) - ln(n_r (1 + P))."""
    n_r = _check_nr(n_r)
    p = _check_power(p)
    log_rhs = math.log(n_r) + math.log1p(p) - digamma(n_r)
    return _solve_decreasing_log_psi(n_r, log_rhs, float(n_r))


def capacity_of_zeta(zeta: float, n_r: int) -> float:
    """C(zeta) = G(zeta) - G(n_r)."""
    return g_function(zeta) - g_function(_check_nr(n_r))


def capacity_supremum(n_r: int, p: float) -> CapacityResult:
    """Capacity supremum G(zeta_s) - G(n_r), the beta = 0 solution."""
    n_r = _check_nr(n_r)
    p = _check_power(p)
    zeta = solve_zeta_s(n_r, p)
    f, _ = _zeta_equation(n_r, math.log(n_r) + math.log1p(p) - digamma(n_r))
    # C is non-negative in exact arithmetic; clip rounding noise at P ~ 0
    nats = max(capacity_of_zeta(zeta, n_r), 0.0)
    return CapacityResult(nats, "supremum", zeta, 0.0, {"zeta_residual": abs(f(zeta))})


def lagrange_solution(zeta: float, n_r: int, p: float) -> LagrangeSolution:
    zeta = _check_zeta(zeta)
    n_r = _check_nr(n_r)
    p = _check_power(p)
    s = _output_power(n_r, p)
    lambda2 = -zeta / s
    lambda3 = 2.0 * zeta - 1.0
    lambda1 = 1.0 + LN2 + zeta * math.log(zeta / s) - log_gamma(zeta)
    return LagrangeSolution(lambda1, lambda2, lambda3, zeta)


@dataclass(frozen=True)
class OptimalOutputDensity:
    """Normalized generalized-gamma output law with shape zeta and E[Y^2] = 2 n_r (1 + P)."""

    zeta: float
    n_r: int
    p: float

    def __post_init__(self):
        _check_zeta(self.zeta)
        _check_nr(self.n_r)
        _check_power(self.p)

    @property
    def power(self) -> float:
        return _output_power(self.n_r, self.p)

    @property
    def _log_const(self) -> float:
        z = self.zeta
        return LN2 + z * math.log(z / self.power) - log_gamma(z)

    def log_pdf_at_log(self, log_y):
        """ln p evaluated at ln y (keeps tiny y representable)."""
        log_y = np.asarray(log_y, dtype=float)
        z = self.zeta
        return self._log_const + (2.0 * z - 1.0) * log_y - z * np.exp(2.0 * log_y) / self.power

    def log_pdf(self, y):
        y = np.asarray(y, dtype=float)
        if np.any(y < 0.0):
            raise DomainError("y must be non-negative")
        with np.errstate(divide="ignore"):
            ly = np.log(y)
        out = self.log_pdf_at_log(ly)
        if self.zeta > 0.5:
            out = np.where(y == 0.0, -np.inf, out)
        elif self.zeta == 0.5:
            out = np.where(y == 0.0, self._log_const, out)
        return out[()] if out.ndim == 0 else out

    def pdf(self, y):
        return np.exp(self.log_pdf(y))

    def expect(self, g_of_log_y: Callable[[np.ndarray], np.ndarray],
               spec: QuadratureSpec = ENTROPY_QUADRATURE) -> float:
        """E[g(Y)] by quadrature; ``g_of_log_y`` receives ln y.

        For zeta < 1 the density has an integrable y^(2 zeta - 1) spike at the
        origin; there the integral is taken in u = (zeta y^2 / s)^zeta, where
        the weight becomes exp(-u^(1/zeta)) / Gamma(1 + zeta) and is smooth.
        """
        z = self.zeta
        s = self.power
        if z >= 1.0:
            mode = math.sqrt((2.0 * z - 1.0) * s / (2.0 * z))

            def f(y):
                ly = np.log(y)
                return np.exp(self.log_pdf_at_log(ly)) * g_of_log_y(ly)

            return integrate_semi_infinite(f, spec, scale=max(mode, 1e-3), points=[mode])

        half_log_scale = 0.5 * math.log(s / z)
        norm = log_gamma(1.0 + z)

        def f(u):
            lu = np.log(u)
            w = np.exp(lu / z)
            ly = half_log_scale + 0.5 * lu / z
            return np.exp(-w - norm) * g_of_log_y(ly)

        return integrate_semi_infinite(f, spec, scale=1.0, points=[1.0])

    def constraint_residuals(self, beta: float = 0.0, spec: QuadratureSpec = ENTROPY_QUADRATURE):
        """Quadrature residuals of the three output constraints.

        Returns (|int p - 1|, |int y^2 p - s|, |int p ln y - (beta + psi(n_r) + ln 2)/2|).
        """
        mass = self.expect(np.ones_like, spec)
        second = self.expect(lambda ly: np.exp(2.0 * ly), spec)
        logm = self.expect(lambda ly: ly, spec)
        target = 0.5 * (beta + digamma(self.n_r) + LN2)
        return abs(mass - 1.0), abs(second - self.power), abs(logm - target)

    def entropy(self, spec: QuadratureSpec = ENTROPY_QUADRATURE) -> float:
        """Differential entropy -E[ln p(Y)] by quadrature."""
        return self.expect(lambda ly: -self.log_pdf_at_log(ly), spec)


def optimal_output_density(y, zeta: float, n_r: int, p: float):
    """Density value of the optimal output law at y."""
    return OptimalOutputDensity(float(zeta), int(n_r), float(p)).pdf(y)


def capacity_via_entropies(zeta: float, n_r: int, p: float,
                           spec: QuadratureSpec = ENTROPY_QUADRATURE) -> float:
    """h(Y) by quadrature of the optimal law minus h(Y|X) at beta(zeta)."""
    dens = OptimalOutputDensity(_check_zeta(zeta), _check_nr(n_r), _check_power(p))
    beta = beta_of_zeta(zeta, n_r, p)
    return dens.entropy(spec) - conditional_entropy_from_beta(beta, n_r)


def beta_positive_log_power(alpha: float, n_r: int) -> float:
    """ln(1 + P(alpha)) on the beta = psi(n_r) + ln 2 branch."""
    alpha = _check_zeta(alpha)
    beta = digamma(n_r) + LN2
    return math.log(alpha) - math.log(2.0 * n_r) + 2.0 * beta - digamma(alpha)


def beta_positive_power(alpha: float, n_r: int) -> float:
    """P(alpha) = alpha/(2 n_r) exp(2 (psi(n_r) + ln 2) - psi(alpha)) - 1."""
    return math.expm1(beta_positive_log_power(alpha, _check_nr(n_r)))


def capacity_beta_positive(n_r: int, p: float) -> CapacityResult:
    """Capacity G(alpha) - G(n_r) on the beta = psi(n_r) + ln 2 branch.

    P(alpha) decreases from +inf (alpha -> 0) to its alpha -> inf limit, so
    a root exists only when P exceeds that limit.  Raises NoSolution
    otherwise.
    """
    n_r = _check_nr(n_r)
    p = _check_power(p)
    beta = digamma(n_r) + LN2
    log_rhs = math.log1p(p)
    limit = 2.0 * beta - math.log(2.0 * n_r)
    if log_rhs <= limit:
        raise NoSolution(
            f"no alpha > 0 reaches P={p!r} for n_r={n_r} (infimum of P(alpha) is {math.expm1(limit)!r})"
        )

    def h(a):
        return beta_positive_log_power(a, n_r) - log_rhs

    hi = float(n_r)
    while h(hi) > 0.0:
        hi *= 2.0
        if hi > 1e15:
            raise NoSolution(f"P={p!r} lies too close to the infimum for a finite alpha")
    lo = 0.5 * hi
    while h(lo) < 0.0:
        lo *= 0.5
    alpha = find_root_monotone(
        h, Bracket(lo, hi), ROOT_ACCURACY, fprime=lambda a: 1.0 / a - trigamma(a)
    )
    return CapacityResult(
        capacity_of_zeta(alpha, n_r), "beta_positive", alpha, beta, {"power_residual": abs(h(alpha))}
    )


def taricco_siso_form(zeta_s: float) -> Tuple[float, float]:
    """Single-antenna closed forms (capacity, power) as functions of zeta_s."""
    z = _check_zeta(zeta_s)
    psi = digamma(z)
    capacity = (z - EULER_GAMMA - 1.0) + log_gamma(z) - z * psi
    power = z * math.exp(-EULER_GAMMA - psi) - 1.0
    return capacity, power
