"""Discrete-input capacity under an average power constraint.

The optimizer works on a fixed output discretization: composite
Gauss-Legendre panels in ln y, shared by every candidate input so that all
mutual-information values it compares are computed the same way.  On that
grid the channel is a matrix of log-densities and the two expensive steps
(the output mixture and the per-point relative entropies) are kernels.

Strategy, starting from two points {0, sqrt(P)}:

1. probabilities at fixed locations by Blahut-Arimoto updates
   p_i <- p_i exp(D_i - s x_i^2), with the multiplier s re-solved each step
   so the power constraint holds;
2. each location moved to the local maximum of i(x) - s x^2 with the
   output law frozen, accepted only if the capacity does not decrease;
3. a new point added where the Kuhn-Tucker function
   i(x) - C - s (x^2 - P) peaks, until it is below tolerance everywhere.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from . import kernels
from .channel import LN2, DiscreteInput, _check_nr, _log_norm, mutual_information
from .errors import DomainError, NoConvergence
from .numerics import Bracket, find_root_monotone
from .specfun import AccuracySpec
from .supremum import CapacityResult, _check_power

log = logging.getLogger(__name__)

KT_TOLERANCE = 1e-4
IMPROVEMENT_CUTOFF = 1e-5
MAX_SHAKES = 8

_GOLDEN = 0.5 * (math.sqrt(5.0) - 1.0)


@dataclass(frozen=True)
class OptimizerOptions:
    max_points: int = 8
    accuracy: AccuracySpec = field(default_factory=lambda: AccuracySpec(abs_tol=KT_TOLERANCE, rel_tol=IMPROVEMENT_CUTOFF))
    max_outer_iterations: int = 60
    seed: int = 0

    def __post_init__(self):
        if self.max_points < 2:
            raise ValueError("max_points must be >= 2")
        if self.max_outer_iterations < 1:
            raise ValueError("max_outer_iterations must be >= 1")


@dataclass(frozen=True)
class KtReport:
    violation: float
    power_multiplier: float
    equality_residual: float


class OutputGrid:
    """Quadrature nodes in ln y covering every input magnitude up to ``x_max``.

    With the default order the grid reproduces the adaptive mutual
    information to about 1e-12 for small arrays and 1e-9 at n_r = 32, far
    below the Kuhn-Tucker tolerance.
    """

    def __init__(self, n_r: int, x_max: float, order: int = 16):
        n_r = _check_nr(n_r)
        self.n_r = n_r
        self.x_max = float(x_max)
        v_max = 1.0 + self.x_max ** 2
        # below y_lo the mass (y^2 / 2)^n_r / n_r! of a unit-variance component is < 1e-16
        lo = max(math.log(1e-8), 0.5 * (LN2 + (math.lgamma(n_r + 1.0) - 37.0) / n_r))
        w_hi = n_r + 45.0 + 8.0 * math.sqrt(n_r)
        hi = 0.5 * math.log(2.0 * v_max * w_hi)
        width = min(0.5, 2.0 / math.sqrt(n_r))
        panels = int(math.ceil((hi - lo) / width))
        edges = np.linspace(lo, hi, panels + 1)
        t, w = np.polynomial.legendre.leggauss(order)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[:-1] + edges[1:])
        self.log_y = np.ascontiguousarray((mid[:, None] + half[:, None] * t[None, :]).ravel())
        # dy = y d(ln y)
        self.weights = np.ascontiguousarray((half[:, None] * w[None, :]).ravel() * np.exp(self.log_y))
        self._const = _log_norm(n_r)

    def covers(self, x_max: float) -> bool:
        return x_max <= self.x_max

    def log_conditional(self, x) -> np.ndarray:
        var = np.ascontiguousarray(1.0 + np.asarray(x, dtype=float).ravel() ** 2)
        return kernels.conditional_log_matrix(self.log_y, var, self.n_r, self._const)


def _default_x_max(n_r: int, p: float) -> float:
    return 3.0 * math.sqrt(p * n_r + 1.0)


def _grid_for(inp_max: float, n_r: int, p: float) -> OutputGrid:
    return OutputGrid(n_r, 4.0 * max(_default_x_max(n_r, p), inp_max, 1.0))


def marginal_information_density(x, inp: DiscreteInput, n_r: int, grid: Optional[OutputGrid] = None):
    """i(x) = D(p(.|x) || p_Y) for the output law induced by ``inp``.

    Vectorized over ``x``; integrates on an ``OutputGrid``.
    """
    n_r = _check_nr(n_r)
    xs = np.asarray(x, dtype=float)
    if np.any(xs < 0.0):
        raise DomainError("x must be non-negative")
    top = max(float(xs.max(initial=0.0)), float(inp.magnitudes[-1]))
    if grid is None or not grid.covers(top) or grid.n_r != n_r:
        grid = OutputGrid(n_r, 2.0 * top + 3.0)
    log_mix = kernels.mixture_from_matrix(grid.log_conditional(inp.magnitudes), np.log(inp.probabilities))
    out = kernels.relative_entropies(grid.log_conditional(xs), log_mix, grid.weights).reshape(xs.shape)
    return out[()] if out.ndim == 0 else out


class _Problem:
    """Grid-backed mutual information and Blahut-Arimoto for one (n_r, P)."""

    def __init__(self, n_r: int, p: float, grid: OutputGrid):
        self.n_r = n_r
        self.p = p
        self.grid = grid

    def densities(self, x: np.ndarray, probs: np.ndarray):
        logc = self.grid.log_conditional(x)
        log_mix = kernels.mixture_from_matrix(logc, np.log(probs))
        return logc, log_mix

    def info_density(self, x, log_mix) -> np.ndarray:
        return kernels.relative_entropies(self.grid.log_conditional(np.atleast_1d(x)), log_mix, self.grid.weights)

    def _tilt(self, log_p, d, x2, s):
        e = log_p + d - s * x2
        e -= e.max()
        q = np.exp(e)
        return q / q.sum()

    def _multiplier(self, log_p, d, x2) -> float:
        """Smallest s >= 0 whose tilted law meets the power constraint."""
        q0 = self._tilt(log_p, d, x2, 0.0)
        if float(q0 @ x2) <= self.p:
            return 0.0
        if x2.min() >= self.p:
            raise DomainError("no mass point satisfies x^2 < P")

        def excess(s):
            # all mass may collapse onto x = 0 for large s
            return math.log(max(float(self._tilt(log_p, d, x2, s) @ x2), 1e-300)) - math.log(self.p)

        def slope(s):
            q = self._tilt(log_p, d, x2, s)
            m2 = max(float(q @ x2), 1e-300)
            return -(float(q @ (x2 * x2)) / m2 - m2)

        hi = 1.0
        while excess(hi) > 0.0:
            hi *= 2.0
        return find_root_monotone(excess, Bracket(0.0, hi), AccuracySpec(abs_tol=1e-13, rel_tol=1e-14), fprime=slope)

    @staticmethod
    def _gap(d, x2, probs, s) -> float:
        score = d - s * x2
        return float(score.max() - probs @ score)

    @staticmethod
    def _stationary_multiplier(d, x2, probs) -> float:
        a = x2 - probs @ x2
        denom = float(probs @ (a * a))
        if denom <= 0.0:
            return 0.0
        return -float(probs @ (a * (d - probs @ d))) / denom

    def _newton_step(self, logc, log_mix, d, x2, free, power_active: bool):
        """Maximizer of the quadratic model of I on the constraint plane, moving only ``free``."""
        e = np.exp(logc[free] - 0.5 * log_mix)
        hess = -(e * self.grid.weights) @ e.T
        xf = x2[free]
        rows = [np.ones_like(xf)] + ([xf] if power_active else [])
        a = np.array(rows)
        n, k = xf.size, a.shape[0]
        kkt = np.zeros((n + k, n + k))
        kkt[:n, :n] = hess
        kkt[:n, n:] = a.T
        kkt[n:, :n] = a
        rhs = np.concatenate([-(d[free] - 1.0), np.zeros(k)])
        step = np.zeros_like(x2)
        step[free] = np.linalg.lstsq(kkt, rhs, rcond=None)[0][:n]
        return step

    def blahut_arimoto(self, x: np.ndarray, probs: np.ndarray, tol: float = 1e-11, max_iter: int = 3000):
        """Optimal probabilities at fixed locations; returns (probs, capacity, multiplier).

        Plain Blahut-Arimoto updates bring the law near the optimum; a
        constrained Newton iteration then finishes, falling back to a burst
        of updates whenever a Newton step fails to increase the objective.
        Every update after the first keeps the power constraint, so values
        are only compared between feasible laws.
        """
        x2 = x * x
        logc = self.grid.log_conditional(x)
        probs = np.asarray(probs, dtype=float)
        s = 0.0
        hold = 0
        best, stall = -math.inf, 0
        for _ in range(max_iter):
            log_p = np.log(np.maximum(probs, 1e-300))
            log_mix = kernels.mixture_from_matrix(logc, log_p)
            d = kernels.relative_entropies(logc, log_mix, self.grid.weights)
            s_tilt = self._multiplier(log_p, d, x2)
            feasible = float(probs @ x2) <= self.p * (1.0 + 1e-12)
            # any s >= 0 gives a valid certificate; the two estimates agree at the optimum
            s, gap = s_tilt, self._gap(d, x2, probs, s_tilt)
            if s_tilt > 0.0:
                s_fit = max(self._stationary_multiplier(d, x2, probs), 0.0)
                gap_fit = self._gap(d, x2, probs, s_fit)
                if gap_fit < gap:
                    s, gap = s_fit, gap_fit
            if feasible:
                if gap <= tol:
                    break
                value = float(probs @ d)
                if value > best + 1e-15:
                    best, stall = value, 0
                else:
                    stall += 1
                    if stall >= 50:
                        log.debug("probability solve stalled at gap %.3e", gap)
                        break
            if feasible and gap < 1e-3 and x.size > 2 and hold == 0:
                trial = self._newton_polish(logc, x2, probs, d, s_tilt > 0.0)
                if trial is not None:
                    probs = trial
                    continue
                hold = 20
            hold = max(hold - 1, 0)
            probs = self._tilt(log_p, d, x2, s_tilt)
        else:
            log.debug("probability solve hit %d iterations at gap %.3e", max_iter, gap)
        if float(probs @ x2) > self.p * (1.0 + 1e-12):
            log_p = np.log(np.maximum(probs, 1e-300))
            d = kernels.relative_entropies(logc, kernels.mixture_from_matrix(logc, log_p), self.grid.weights)
            probs = self._tilt(log_p, d, x2, self._multiplier(log_p, d, x2))
            d = kernels.relative_entropies(logc, kernels.mixture_from_matrix(logc, np.log(probs)),
                                           self.grid.weights)
        capacity = float(probs @ d)
        return probs, capacity, s

    def _newton_polish(self, logc, x2, probs, d, power_active: bool):
        """One damped constrained Newton step; None if it does not help.

        Components that would be driven through zero are held fixed, which
        is the active-set treatment of the p_i >= 0 bounds.
        """
        if power_active and abs(float(probs @ x2) - self.p) > 1e-12 * self.p:
            return None
        base = float(probs @ d)
        log_mix = kernels.mixture_from_matrix(logc, np.log(probs))
        # near-zero components make the Hessian singular to working precision
        free = probs > 1e-10
        while True:
            if free.sum() <= (2 if power_active else 1):
                return None
            step = self._newton_step(logc, log_mix, d, x2, free, power_active)
            neg = step < 0.0
            with np.errstate(divide="ignore"):
                ratio = np.where(neg, -probs / np.where(neg, step, 1.0), np.inf)
            k = int(np.argmin(ratio))
            if ratio[k] >= 1.0:
                t = 1.0
                break
            if probs[k] < 1e-8:
                free[k] = False
                continue
            t = 0.99 * float(ratio[k])
            break
        for _ in range(30):
            trial = probs + t * step
            if np.all(trial > 0.0) and abs(trial.sum() - 1.0) < 1e-12:
                trial = trial / trial.sum()
                if power_active and abs(float(trial @ x2) - self.p) > 1e-12 * self.p:
                    return None
                lm = kernels.mixture_from_matrix(logc, np.log(trial))
                value = float(trial @ kernels.relative_entropies(logc, lm, self.grid.weights))
                if value > base:
                    return trial
            t *= 0.5
        return None

    def scan(self, xs: np.ndarray, log_mix, capacity: float, s: float) -> np.ndarray:
        """Kuhn-Tucker function i(x) - C - s (x^2 - P) on ``xs``."""
        return self.info_density(xs, log_mix) - capacity - s * (xs * xs - self.p)


def _golden_max(fn, lo: np.ndarray, hi: np.ndarray, iters: int = 40) -> np.ndarray:
    """Elementwise golden-section maximization of a vectorized ``fn`` on [lo, hi]."""
    a, b = lo.copy(), hi.copy()
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = fn(c), fn(d)
    for _ in range(iters):
        left = fc >= fd
        # left: keep [a, d]; right: keep [c, b]
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        new = np.where(left, b - _GOLDEN * (b - a), a + _GOLDEN * (b - a))
        fnew = fn(new)
        c, d, fc, fd = (np.where(left, new, d), np.where(left, c, new),
                        np.where(left, fnew, fd), np.where(left, fc, fnew))
    cands = np.stack([lo, c, d, hi])
    vals = np.stack([fn(lo), fc, fd, fn(hi)])
    return cands[np.argmax(vals, axis=0), np.arange(lo.size)]


def _prune(x: np.ndarray, probs: np.ndarray, n_r: int, merge: float = 0.05):
    """Merge indistinguishable points and drop points with no mass at all.

    Two components are merged when their log-variances differ by less than
    ``merge / sqrt(n_r)``; the merged point keeps their combined power.
    Low-mass points are kept: the outermost support point can carry almost
    no probability and still hold down the Kuhn-Tucker function at large x.
    """
    order = np.argsort(x)
    x, probs = x[order], probs[order]
    tol = merge / math.sqrt(n_r)
    keep_x: List[float] = []
    keep_p: List[float] = []
    for xi, pi in zip(x, probs):
        if keep_x and math.log1p(xi * xi) - math.log1p(keep_x[-1] ** 2) < tol:
            tot = keep_p[-1] + pi
            if tot > 0.0:
                keep_x[-1] = math.sqrt((keep_x[-1] ** 2 * keep_p[-1] + xi * xi * pi) / tot)
            keep_p[-1] = tot
        else:
            keep_x.append(float(xi))
            keep_p.append(float(pi))
    x, probs = np.array(keep_x), np.array(keep_p)
    # the smallest point must stay below sqrt(P) or the power constraint is unreachable
    mask = probs > 0.0
    mask[0] = True
    x, probs = x[mask], probs[mask]
    return x, probs / probs.sum()


def _refine_locations(prob: _Problem, x, probs, capacity, s, step: float, x_cap: float):
    """One pass of frozen-output location ascent with an acceptance test."""
    _, log_mix = prob.densities(x, probs)
    lo = np.maximum(x - step, 0.0)
    hi = np.minimum(x + step, x_cap)
    target = _golden_max(lambda t: prob.info_density(t, log_mix) - s * t * t, lo, hi)
    move = target - x
    shrink = 1.0
    for _ in range(6):
        trial = np.maximum(x + shrink * move, 0.0)
        tx, tp = _prune(trial, probs, prob.n_r)
        if (tx * tx).min() < prob.p:
            tp, tc, ts = prob.blahut_arimoto(tx, tp)
            if tc >= capacity - 1e-13:
                return tx, tp, tc, ts, True
        shrink *= 0.5
    return x, probs, capacity, s, False


def _drop_inactive(prob: _Problem, x, probs, s, level_tol: float):
    """Remove low-mass points whose information density sits below the support level."""
    _, log_mix = prob.densities(x, probs)
    score = prob.info_density(x, log_mix) - s * x * x
    level = float(probs @ score)
    keep = ~((probs < 1e-6) & (score < level - level_tol))
    keep[np.argmin(x)] = True
    return x[keep], probs[keep] / probs[keep].sum()


def optimize_discrete_input(n_r: int, p: float, opts: OptimizerOptions = OptimizerOptions(),
                            trace: Optional[List[Tuple[DiscreteInput, float]]] = None
                            ) -> Tuple[DiscreteInput, CapacityResult]:
    """Maximize I(X;Y) over finite input laws with E[x^2] <= P.

    Every candidate is accepted only if the (grid) capacity does not
    decrease, so the sequence of accepted states is monotone.  When
    ``trace`` is a list, each accepted (input, capacity) pair is appended.
    """
    n_r = _check_nr(n_r)
    p = _check_power(p)
    if p == 0.0:
        inp = DiscreteInput.point_mass(0.0)
        if trace is not None:
            trace.append((inp, 0.0))
        return inp, CapacityResult(0.0, "discrete", diagnostics={"kt_violation": 0.0, "points": 1.0})

    kt_tol = opts.accuracy.abs_tol
    cutoff = opts.accuracy.rel_tol
    rng = np.random.default_rng(opts.seed)
    x_cap = 3.0 * _default_x_max(n_r, p)
    prob = _Problem(n_r, p, OutputGrid(n_r, 1.5 * x_cap))
    noise = 1e-12

    def record(x, probs, c):
        if trace is not None:
            trace.append((DiscreteInput.normalized(x, probs), c))

    def kt_scan(x, probs, capacity, s):
        scan_max = max(_default_x_max(n_r, p), 3.0 * float(x.max()))
        xs = np.union1d(np.linspace(0.0, scan_max, 600), x)
        _, log_mix = prob.densities(x, probs)
        kt = prob.scan(xs, log_mix, capacity, s)
        worst = float(kt.max())
        inner = xs <= 1.5 * float(x.max())
        k = int(np.argmax(np.where(inner, kt, -np.inf)))
        if kt[k] <= kt_tol and worst > kt_tol:
            # only the tail is violated; seed a point where it first turns positive
            k = int(np.argmax(~inner & (kt > kt_tol)))
        return worst, float(xs[k]), scan_max / 600

    def without_inactive(x, probs, capacity, s, violation):
        """Drop inactive points if that costs neither capacity nor Kuhn-Tucker margin."""
        tx, tp = _drop_inactive(prob, x, probs, s, kt_tol)
        if tx.size == x.size:
            return None
        tp, tc, ts = prob.blahut_arimoto(tx, tp)
        if tc < capacity - noise:
            return None
        tv = kt_scan(tx, tp, tc, ts)[0]
        if tv > max(violation, kt_tol):
            return None
        return tx, tp, tc, ts, tv

    x = np.array([0.0, math.sqrt(p)])
    probs, capacity, s = prob.blahut_arimoto(x, np.array([0.5, 0.5]))
    record(x, probs, capacity)
    step = 0.5 * math.sqrt(p) + 0.1
    violation = math.inf
    last_gain = math.inf
    shakes = 0
    outer = 0
    stopped = False
    for outer in range(1, opts.max_outer_iterations + 1):
        tx, tp = _prune(x, probs, n_r)
        if tx.size < x.size:
            tp, tc, ts = prob.blahut_arimoto(tx, tp)
            if tc >= capacity - noise:
                x, probs, capacity, s = tx, tp, tc, ts
                record(x, probs, capacity)
        for _ in range(4):
            x, probs, new_c, s, moved = _refine_locations(prob, x, probs, capacity, s, step, x_cap)
            gain = new_c - capacity
            capacity = new_c
            if moved:
                record(x, probs, capacity)
            if not moved or gain < 1e-12:
                step = max(0.5 * step, 1e-4)
                break

        violation, x_new, spacing = kt_scan(x, probs, capacity, s)
        log.debug("outer %d: N=%d C=%.10f viol=%.3e s=%.4g", outer, x.size, capacity, violation, s)
        if violation <= kt_tol:
            stopped = True
            break
        near = np.min(np.abs(x - x_new)) < 2.0 * spacing
        if not near and x.size < opts.max_points:
            tx, tp = _prune(np.append(x, x_new), np.append(0.95 * probs, 0.05), n_r)
            tp, tc, ts = prob.blahut_arimoto(tx, tp)
            last_gain = tc - capacity
            log.debug("add point at %.5g: gain %.3e", x_new, last_gain)
            if tc >= capacity - noise:
                x, probs, capacity, s = tx, tp, tc, ts
                record(x, probs, capacity)
            step = max(step, 0.25 * math.sqrt(p))
        elif near:
            log.debug("peak at %.5g sits next to the support", x_new)
            # keep moving locations
            step = max(step, 4.0 * spacing)
        else:
            freed = without_inactive(x, probs, capacity, s, violation)
            if freed is not None:
                x, probs, capacity, s, _ = freed
                record(x, probs, capacity)
                continue
            if (last_gain < cutoff and step <= 1e-4) or shakes >= MAX_SHAKES:
                # the point budget is exhausted; report the violation as is
                stopped = True
                break
            # at the point budget: shake the location nearest the peak
            shakes += 1
            i = int(np.argmin(np.abs(x - x_new)))
            tx = x.copy()
            tx[i] = abs(x[i] + rng.normal(scale=0.05 * (1.0 + x[i])))
            tx, tp = _prune(tx, probs, n_r)
            if (tx * tx).min() < p:
                tp, tc, ts = prob.blahut_arimoto(tx, tp)
                last_gain = tc - capacity
                if tc >= capacity - noise:
                    x, probs, capacity, s = tx, tp, tc, ts
                    record(x, probs, capacity)
                if last_gain > cutoff:
                    shakes = 0
    if not stopped and violation > 10.0 * kt_tol:
        raise NoConvergence(
            f"discrete optimizer stopped with Kuhn-Tucker violation {violation:.3e} after "
            f"{opts.max_outer_iterations} outer iterations"
        )

    cleaned = without_inactive(x, probs, capacity, s, violation)
    if cleaned is not None:
        x, probs, capacity, s, violation = cleaned
        record(x, probs, capacity)
    x = np.where(x < 1e-6, 0.0, x)
    inp = DiscreteInput.normalized(x, probs)
    exact = mutual_information(inp, n_r)
    diag = {
        "kt_violation": violation,
        "power_multiplier": s,
        "grid_capacity": capacity,
        "points": float(inp.size),
        "outer_iterations": float(outer),
    }
    return inp, CapacityResult(exact, "discrete", diagnostics=diag)


def kt_check(inp: DiscreteInput, n_r: int, p: float, capacity: float, grid_points: int = 1500) -> KtReport:
    """Kuhn-Tucker test of a candidate capacity-achieving input.

    The power multiplier is the non-negative least-squares fit of the
    mass-point equalities.  When every mass point has x^2 = P the fit is
    undetermined and the smallest multiplier that keeps the KT function
    non-positive on the grid is used instead.
    """
    n_r = _check_nr(n_r)
    p = _check_power(p)
    x_max = max(3.0 * float(inp.magnitudes[-1]), _default_x_max(n_r, p))
    xs = np.union1d(np.linspace(0.0, x_max, grid_points), inp.magnitudes)
    grid = OutputGrid(n_r, 1.5 * x_max)
    i_grid = marginal_information_density(xs, inp, n_r, grid)
    i_pts = marginal_information_density(inp.magnitudes, inp, n_r, grid)

    a = inp.magnitudes ** 2 - p
    r = i_pts - capacity
    denom = float(a @ a)
    if denom > 1e-24:
        lam = max(float(a @ r) / denom, 0.0)
    else:
        over = xs * xs - p > 1e-12
        lam = max(float(np.max((i_grid[over] - capacity) / (xs[over] ** 2 - p))), 0.0) if over.any() else 0.0
    kt = i_grid - capacity - lam * (xs * xs - p)
    return KtReport(
        violation=max(float(kt.max()), 0.0),
        power_multiplier=lam,
        equality_residual=float(np.max(np.abs(r - lam * a))),
    )
