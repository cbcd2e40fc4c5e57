"""Reference capacities and a vector-channel simulator.

Random numbers
--------------
All sampling uses numpy's Philox4x64 counter-based generator.  Samples are
split into fixed blocks of ``BLOCK_SIZE``; block ``b`` draws from
``Philox(SeedSequence(seed, spawn_key=(b,)))``.  A sample's stream therefore
depends only on (seed, sample index), and results are identical whatever
the number of workers.

Variance convention
-------------------
Channel gains and noise are circular complex Gaussian with unit variance
in *each real dimension* (E|h|^2 = 2).  Much of the literature uses unit
total variance instead, which shifts every coherent-capacity curve by a
factor of two in SNR.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, List

import numpy as np

from . import kernels
from .channel import AntennaConfig, DiscreteInput, _check_nr
from .errors import DomainError
from .numerics import QuadratureSpec, fixed_point_solve, integrate_semi_infinite
from .specfun import AccuracySpec
from .supremum import CapacityResult

BLOCK_SIZE = 4096

MU_QUADRATURE = QuadratureSpec(AccuracySpec(abs_tol=1e-13, rel_tol=1e-13), max_subdivisions=2000)
MU_ACCURACY = AccuracySpec(abs_tol=1e-10, rel_tol=1e-12)


@dataclass(frozen=True)
class MonteCarloEstimate:
    mean: float
    stderr: float
    samples: int
    seed: int


@dataclass(frozen=True)
class SenguptaSolution:
    mu: float
    capacity: float
    residual: float = field(default=0.0)


def block_generator(seed: int, block: int) -> np.random.Generator:
    """Generator for one fixed-size sample block of a seeded run."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed), spawn_key=(int(block),))))


def _blocks(samples: int) -> List[int]:
    full, rest = divmod(samples, BLOCK_SIZE)
    return [BLOCK_SIZE] * full + ([rest] if rest else [])


def _map_blocks(fn: Callable[[int, int], np.ndarray], samples: int, workers: int) -> np.ndarray:
    sizes = _blocks(samples)
    jobs = list(enumerate(sizes))
    if workers <= 1 or len(jobs) == 1:
        parts = [fn(b, n) for b, n in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda job: fn(*job), jobs))
    return np.concatenate(parts)


def coherent_capacity_mc(config: AntennaConfig, p: float, samples: int = 100_000,
                         seed: int = 0, workers: int = 1) -> MonteCarloEstimate:
    """E_H ln det(I + (P / n_t) H H*) with the receiver knowing H."""
    if samples < 1000:
        raise DomainError("coherent_capacity_mc needs at least 1000 samples")
    if not p >= 0.0:
        raise DomainError(f"power must be non-negative, got {p!r}")
    if p == 0.0:
        return MonteCarloEstimate(0.0, 0.0, samples, seed)
    c = float(p) / config.n_t
    shape = (config.n_r, config.n_t)

    def block(b, n):
        rng = block_generator(seed, b)
        h_re = rng.standard_normal((n, *shape))
        h_im = rng.standard_normal((n, *shape))
        return kernels.log_det_batch(h_re, h_im, c)

    values = _map_blocks(block, samples, workers)
    mean = float(np.mean(values))
    stderr = float(np.std(values, ddof=1) / math.sqrt(samples))
    return MonteCarloEstimate(mean, stderr, samples, seed)


def _mu_map(n_t: int, p: float, spec: QuadratureSpec) -> Callable[[float], float]:
    a = 1.0 + p / n_t

    def F(mu):
        rate = 1.0 / (mu * a)
        # mass spreads logarithmically over [1, mu a]
        cut = mu * a
        return integrate_semi_infinite(
            lambda y: np.exp(-rate * y) / (1.0 + y), spec, scale=math.sqrt(cut), points=[1.0, cut]
        )

    return F


def sengupta_mu(n_t: int, p: float, accuracy: AccuracySpec = MU_ACCURACY) -> float:
    """Fixed point of mu = int_0^inf exp(-y / (mu (1 + P/n_t))) / (1 + y) dy."""
    if int(n_t) != n_t or n_t < 1:
        raise DomainError(f"n_t must be a positive integer, got {n_t!r}")
    if not p > 0.0:
        raise DomainError(f"sengupta_mu needs P > 0, got {p!r}")
    F = _mu_map(int(n_t), float(p), MU_QUADRATURE)
    return fixed_point_solve(F, math.log1p(p / n_t), accuracy, max_iter=500, damping=0.5)


def sengupta_solution(config: AntennaConfig, p: float) -> SenguptaSolution:
    mu = sengupta_mu(config.n_t, p)
    residual = abs(_mu_map(config.n_t, p, MU_QUADRATURE)(mu) - mu)
    n_t = config.n_t
    cap = 0.5 * math.log(config.n_r / (2.0 * math.pi)) + math.log(mu) + p / (mu * n_t * (1.0 + p / n_t))
    return SenguptaSolution(mu, cap, residual)


def sengupta_capacity(config: AntennaConfig, p: float) -> CapacityResult:
    """Large-receive-array capacity 0.5 ln(n_r / 2 pi) + ln mu + P / (mu n_t (1 + P/n_t))."""
    sol = sengupta_solution(config, p)
    return CapacityResult(sol.capacity, "sengupta", diagnostics={"mu": sol.mu, "fixed_point_residual": sol.residual})


def simulate_output_magnitude(inp: DiscreteInput, n_r: int, n_samples: int, seed: int = 0) -> np.ndarray:
    """Draw |Y| = |h x + N| with x from ``inp`` sent on a single transmit antenna."""
    n_r = _check_nr(n_r)
    if n_samples < 1:
        raise DomainError("n_samples must be >= 1")
    cdf = np.cumsum(inp.probabilities)
    cdf[-1] = 1.0

    def block(b, n):
        rng = block_generator(seed, b)
        idx = np.searchsorted(cdf, rng.random(n), side="right")
        x = inp.magnitudes[np.minimum(idx, inp.size - 1)]
        g = rng.standard_normal((4, n, n_r))
        re = g[0] * x[:, None] + g[2]
        im = g[1] * x[:, None] + g[3]
        return np.sqrt((re * re + im * im).sum(axis=1))

    return _map_blocks(block, n_samples, 1)
