"""Scalar magnitude model of the non-coherent Rayleigh MIMO channel.

With no phase information the channel reduces to a law for y = |Y| given
x = |X|: a chi distribution with 2*n_r degrees of freedom and per-dimension
variance 1 + x^2,

    p(y | x) = y^(2 n_r - 1) exp(-y^2 / (2 (1 + x^2))) / (2^(n_r-1) Gamma(n_r) (1 + x^2)^n_r).

Everything is evaluated in log space so that large receive arrays do not
overflow.  Entropies are in nats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence, Tuple

import numpy as np

from . import kernels
from .errors import DomainError
from .numerics import QuadratureSpec, integrate_semi_infinite
from .specfun import AccuracySpec, digamma, log_gamma

LN2 = math.log(2.0)

ENTROPY_QUADRATURE = QuadratureSpec(AccuracySpec(abs_tol=1e-12, rel_tol=1e-13), max_subdivisions=2000)


@dataclass(frozen=True)
class AntennaConfig:
    n_r: int
    n_t: int = 1

    def __post_init__(self):
        _check_nr(self.n_r)
        if int(self.n_t) != self.n_t or self.n_t < 1:
            raise DomainError(f"n_t must be a positive integer, got {self.n_t!r}")


@dataclass(frozen=True)
class PowerBudget:
    """Average input power constraint E[x^2] <= p_linear."""

    p_linear: float

    def __post_init__(self):
        if not (self.p_linear >= 0.0 and math.isfinite(self.p_linear)):
            raise DomainError(f"power must be finite and non-negative, got {self.p_linear!r}")

    @classmethod
    def from_db(cls, snr_db: float) -> "PowerBudget":
        return cls(10.0 ** (snr_db / 10.0))

    @property
    def snr_db(self) -> float:
        return 10.0 * math.log10(self.p_linear) if self.p_linear > 0 else -math.inf


class DiscreteInput:
    """Finite input-magnitude law sum_i p_i delta(x - x_i).

    Magnitudes must be non-negative, finite and strictly increasing;
    probabilities must lie in (0, 1] and sum to one within 1e-12.
    """

    __slots__ = ("magnitudes", "probabilities")

    def __init__(self, magnitudes: Sequence[float], probabilities: Sequence[float]):
        x = np.array(magnitudes, dtype=float).ravel()
        p = np.array(probabilities, dtype=float).ravel()
        if x.size == 0 or x.shape != p.shape:
            raise DomainError("need the same non-zero number of magnitudes and probabilities")
        if not np.all(np.isfinite(x)) or np.any(x < 0.0):
            raise DomainError("magnitudes must be finite and non-negative")
        if np.any(np.diff(x) <= 0.0):
            raise DomainError("magnitudes must be strictly increasing")
        if not np.all((p > 0.0) & (p <= 1.0)):
            raise DomainError("probabilities must lie in (0, 1]")
        if abs(math.fsum(p) - 1.0) > 1e-12:
            raise DomainError(f"probabilities sum to {math.fsum(p)!r}, not 1")
        x.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "magnitudes", x)
        object.__setattr__(self, "probabilities", p)

    def __setattr__(self, name, value):
        raise AttributeError("DiscreteInput is immutable")

    @classmethod
    def from_pairs(cls, points: Iterable[Tuple[float, float]]) -> "DiscreteInput":
        pts = sorted(points)
        return cls([x for x, _ in pts], [p for _, p in pts])

    @classmethod
    def point_mass(cls, x: float = 0.0) -> "DiscreteInput":
        return cls([x], [1.0])

    @classmethod
    def normalized(cls, magnitudes, weights) -> "DiscreteInput":
        """Sort, merge duplicates and renormalize raw (x, weight) data."""
        x = np.asarray(magnitudes, dtype=float)
        w = np.asarray(weights, dtype=float)
        order = np.argsort(x, kind="stable")
        x, w = x[order], w[order]
        keep_x, keep_w = [], []
        for xi, wi in zip(x, w):
            if keep_x and xi == keep_x[-1]:
                keep_w[-1] += wi
            else:
                keep_x.append(xi)
                keep_w.append(wi)
        keep_w = np.array(keep_w)
        keep_w = keep_w / keep_w.sum()
        # absorb the residual rounding into the largest weight
        keep_w[np.argmax(keep_w)] += 1.0 - math.fsum(keep_w)
        return cls(keep_x, keep_w)

    @property
    def size(self) -> int:
        return self.magnitudes.size

    @property
    def power(self) -> float:
        return float(math.fsum(self.probabilities * self.magnitudes ** 2))

    @property
    def variances(self) -> np.ndarray:
        """Per-dimension output variance 1 + x_i^2 of each component."""
        return 1.0 + self.magnitudes ** 2

    def __len__(self):
        return self.size

    def __iter__(self):
        return iter(zip(self.magnitudes.tolist(), self.probabilities.tolist()))

    def __eq__(self, other):
        if not isinstance(other, DiscreteInput):
            return NotImplemented
        return np.array_equal(self.magnitudes, other.magnitudes) and np.array_equal(
            self.probabilities, other.probabilities
        )

    def __repr__(self):
        pts = ", ".join(f"({x:.6g}, {p:.6g})" for x, p in self)
        return f"DiscreteInput([{pts}])"


def _check_nr(n_r) -> int:
    if int(n_r) != n_r or n_r < 1:
        raise DomainError(f"n_r must be a positive integer, got {n_r!r}")
    return int(n_r)


def _log_norm(n_r: int) -> float:
    return -(n_r - 1) * LN2 - log_gamma(n_r)


def conditional_log_pdf(y, x, n_r: int):
    """ln p(y | x); -inf at y = 0."""
    n_r = _check_nr(n_r)
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    if np.any(y < 0.0) or np.any(x < 0.0):
        raise DomainError("y and x must be non-negative")
    v = 1.0 + x * x
    with np.errstate(divide="ignore"):
        out = (2 * n_r - 1) * np.log(y) - y * y / (2.0 * v) + _log_norm(n_r) - n_r * np.log(v)
    return out[()] if out.ndim == 0 else out


def conditional_magnitude_pdf(y, x, n_r: int):
    """Density p(y | x) of the output magnitude given the input magnitude."""
    return np.exp(conditional_log_pdf(y, x, n_r))


def _mixture_params(inp: DiscreteInput, n_r: int):
    v = inp.variances
    log_coef = np.log(inp.probabilities) - n_r * np.log(v)
    return log_coef, 0.5 / v, float(2 * n_r - 1), _log_norm(n_r)


def output_log_pdf(y, inp: DiscreteInput, n_r: int):
    n_r = _check_nr(n_r)
    y = np.asarray(y, dtype=float)
    if np.any(y < 0.0):
        raise DomainError("y must be non-negative")
    flat = np.ascontiguousarray(y.ravel())
    out = kernels.mixture_log_pdf(flat, *_mixture_params(inp, n_r)).reshape(y.shape)
    return out[()] if out.ndim == 0 else out


def output_pdf(y, inp: DiscreteInput, n_r: int):
    """Output magnitude density: the input-weighted mixture of p(y | x_i)."""
    return np.exp(output_log_pdf(y, inp, n_r))


def mixture_modes(inp: DiscreteInput, n_r: int) -> np.ndarray:
    """Mode sqrt((2 n_r - 1)(1 + x_i^2)) of every mixture component."""
    return np.sqrt((2 * n_r - 1) * inp.variances)


def log_moment_beta(inp: DiscreteInput) -> float:
    """beta = E[ln(1 + x^2)] under the input law."""
    return float(math.fsum(inp.probabilities * np.log1p(inp.magnitudes ** 2)))


def conditional_entropy_from_beta(beta: float, n_r: int) -> float:
    """h(Y|X) as a function of beta = E[ln(1 + x^2)]."""
    n_r = _check_nr(n_r)
    return 0.5 * beta + log_gamma(n_r) - 0.5 * LN2 - (n_r - 0.5) * digamma(n_r) + n_r


def conditional_entropy(inp: DiscreteInput, n_r: int) -> float:
    """Closed-form output conditional entropy h(Y|X) in nats."""
    return conditional_entropy_from_beta(log_moment_beta(inp), n_r)


def _mixture_quadrature(inp: DiscreteInput, n_r: int, integrand, spec: QuadratureSpec) -> float:
    modes = mixture_modes(inp, n_r)
    params = _mixture_params(inp, n_r)

    def f(y):
        logp = kernels.mixture_log_pdf(np.ascontiguousarray(y), *params)
        return integrand(y, logp)

    return integrate_semi_infinite(f, spec, scale=float(modes[-1]), points=modes.tolist())


def output_entropy(inp: DiscreteInput, n_r: int, spec: QuadratureSpec = ENTROPY_QUADRATURE) -> float:
    """h(Y) = -int p_Y ln p_Y by adaptive quadrature."""
    n_r = _check_nr(n_r)

    def integrand(y, logp):
        p = np.exp(logp)
        return np.where(p > 0.0, -p * logp, 0.0)

    return _mixture_quadrature(inp, n_r, integrand, spec)


def mutual_information(inp: DiscreteInput, n_r: int, spec: QuadratureSpec = ENTROPY_QUADRATURE) -> float:
    """I(X;Y) = h(Y) - h(Y|X) in nats."""
    return output_entropy(inp, n_r, spec) - conditional_entropy(inp, n_r)


def output_log_moment(inp: DiscreteInput, n_r: int, spec: QuadratureSpec = ENTROPY_QUADRATURE) -> float:
    """E[ln Y] under the output mixture, by quadrature."""
    n_r = _check_nr(n_r)

    def integrand(y, logp):
        return np.exp(logp) * np.log(y)

    return _mixture_quadrature(inp, n_r, integrand, spec)


def log_output_moment_target(beta: float, n_r: int) -> float:
    """Closed form 0.5 (beta + psi(n_r) + ln 2) for E[ln Y]."""
    return 0.5 * (beta + digamma(n_r) + LN2)


def verify_log_output_moment(inp: DiscreteInput, n_r: int, spec: QuadratureSpec = ENTROPY_QUADRATURE) -> float:
    """Residual |E[ln Y] - 0.5 (beta + psi(n_r) + ln 2)| with E[ln Y] by quadrature."""
    lhs = output_log_moment(inp, n_r, spec)
    return abs(lhs - log_output_moment_target(log_moment_beta(inp), n_r))
