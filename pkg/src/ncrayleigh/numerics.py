"""Root finding, semi-infinite quadrature and fixed-point iteration.

The quadrature integrates on [0, inf) after the change of variables
``y = scale * t / (1 - t)``, which sends the half line onto [0, 1).  The
transformed interval is handled by a global adaptive 15-point
Gauss-Kronrod rule (QUADPACK's QK15 with its error heuristic).  Integrands
are called with numpy arrays of abscissae and must return arrays.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import BracketInvalid, NoConvergence, NonFinite
from .specfun import AccuracySpec

_EPS = np.finfo(float).eps
_TINY = np.finfo(float).tiny

# 15-point Kronrod abscissae (non-negative half) and weights; every other
# abscissa starting at index 1 belongs to the embedded 7-point Gauss rule.
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

# Full 15-node layout: -x0..-x6, 0, x6..x0.
_NODES = np.concatenate([-_XGK[:-1], [0.0], _XGK[-2::-1]])
_KW = np.concatenate([_WGK[:-1], [_WGK[-1]], _WGK[-2::-1]])
_GW = np.zeros(15)
_GW[[1, 3, 5]] = _WG[:3]
_GW[7] = _WG[3]
_GW[[9, 11, 13]] = _WG[2::-1]


@dataclass(frozen=True)
class Bracket:
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise BracketInvalid(f"bracket requires lo < hi, got [{self.lo}, {self.hi}]")


@dataclass(frozen=True)
class QuadratureSpec:
    accuracy: AccuracySpec = field(default_factory=AccuracySpec)
    max_subdivisions: int = 2000

    def __post_init__(self):
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")


def find_root_monotone(
    f: Callable[[float], float],
    bracket: Bracket,
    accuracy: AccuracySpec = AccuracySpec(),
    *,
    fprime: Optional[Callable[[float], float]] = None,
    max_iter: int = 300,
) -> float:
    """Root of a monotone function on a sign-changing bracket.

    Bisection keeps the root bracketed; each step first tries a Newton step
    (or a secant step through the bracket ends when ``fprime`` is absent)
    and falls back to the midpoint if the candidate leaves the bracket or
    the bracket stops shrinking fast enough.

    Returns x with ``|f(x)| <= abs_tol`` or, when the bracket has collapsed
    to ``rel_tol * |x|``, the bracket end with the smaller residual.
    """
    a, b = float(bracket.lo), float(bracket.hi)
    fa, fb = float(f(a)), float(f(b))
    if not (math.isfinite(fa) and math.isfinite(fb)):
        raise NonFinite(f"non-finite function value at bracket ends: f({a})={fa}, f({b})={fb}")
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if (fa > 0.0) == (fb > 0.0):
        raise BracketInvalid(f"no sign change on [{a}, {b}]: f(lo)={fa}, f(hi)={fb}")

    x = 0.5 * (a + b)
    width_before = b - a
    for it in range(max_iter):
        fx = float(f(x))
        if not math.isfinite(fx):
            raise NonFinite(f"non-finite function value f({x})={fx}")
        if abs(fx) <= accuracy.abs_tol:
            return x
        if (fx > 0.0) == (fa > 0.0):
            a, fa = x, fx
        else:
            b, fb = x, fx
        width = b - a
        if width <= accuracy.rel_tol * abs(x) or width <= 4.0 * _EPS * max(abs(a), abs(b)):
            return a if abs(fa) <= abs(fb) else b

        cand = math.nan
        if fprime is not None:
            d = float(fprime(x))
            if d != 0.0 and math.isfinite(d):
                cand = x - fx / d
        else:
            cand = b - fb * (b - a) / (fb - fa)
        # force a bisection every other step unless the bracket halves
        stalled = it % 2 == 1 and width > 0.5 * width_before
        if it % 2 == 1:
            width_before = width
        if stalled or not (a < cand < b):
            cand = 0.5 * (a + b)
        x = cand
    raise NoConvergence(f"root not found within {max_iter} iterations on [{a}, {b}]")


def _qk15(g: Callable[[np.ndarray], np.ndarray], intervals: np.ndarray):
    """QK15 on each row [a, b] of ``intervals``; returns (result, error)."""
    a = intervals[:, 0:1]
    b = intervals[:, 1:2]
    center = 0.5 * (a + b)
    half = 0.5 * (b - a)
    t = center + half * _NODES
    vals = g(t.ravel()).reshape(t.shape)
    if not np.all(np.isfinite(vals)):
        bad = t[~np.isfinite(vals)][0]
        raise NonFinite(f"integrand is not finite at transformed abscissa t={bad!r}")
    res_k = vals @ _KW
    res_g = vals @ _GW
    mean = 0.5 * res_k
    resabs = np.abs(vals) @ _KW
    resasc = np.abs(vals - mean[:, None]) @ _KW
    h = np.abs(half[:, 0])
    res_k *= half[:, 0]
    resabs *= h
    resasc *= h
    err = np.abs((res_k - res_g * half[:, 0]))
    with np.errstate(divide="ignore", invalid="ignore"):
        scaled = np.where(
            (resasc != 0.0) & (err != 0.0),
            resasc * np.minimum(1.0, (200.0 * err / np.where(resasc == 0.0, 1.0, resasc)) ** 1.5),
            err,
        )
    floor = 50.0 * _EPS * resabs
    err = np.where(resabs > _TINY / (50.0 * _EPS), np.maximum(floor, scaled), scaled)
    return res_k, err


def integrate_semi_infinite(
    f: Callable[[np.ndarray], np.ndarray],
    spec: QuadratureSpec = QuadratureSpec(),
    *,
    scale: float = 1.0,
    points: Sequence[float] = (),
) -> float:
    """Integral of ``f`` over [0, inf).

    ``scale`` sets the point y = scale that maps to the middle of the
    transformed interval; choose it near the bulk of the integrand.
    ``points`` are abscissae in y where the interval is split up front
    (modes, kinks).
    """
    if not scale > 0.0:
        raise ValueError("scale must be positive")

    def g(t):
        one_minus = 1.0 - t
        y = scale * t / one_minus
        return f(y) * (scale / (one_minus * one_minus))

    cuts = sorted({float(p) / (scale + float(p)) for p in points if 0.0 < p < math.inf})
    edges = np.array([0.0, *cuts, 1.0])
    return _adaptive(g, edges, spec)


def integrate_interval(
    f: Callable[[np.ndarray], np.ndarray],
    lo: float,
    hi: float,
    spec: QuadratureSpec = QuadratureSpec(),
    *,
    points: Sequence[float] = (),
) -> float:
    """Integral of ``f`` over a finite interval [lo, hi]."""
    cuts = sorted({float(p) for p in points if lo < p < hi})
    return _adaptive(f, np.array([lo, *cuts, hi], dtype=float), spec)


def _adaptive(g, edges: np.ndarray, spec: QuadratureSpec) -> float:
    acc = spec.accuracy
    intervals = np.column_stack([edges[:-1], edges[1:]])
    res, err = _qk15(g, intervals)
    heap = [(-e, float(lo), float(hi), float(r)) for e, (lo, hi), r in zip(err, intervals, res)]
    heapq.heapify(heap)
    total = math.fsum(res)
    total_err = math.fsum(err)

    while True:
        if total_err <= max(acc.abs_tol, acc.rel_tol * abs(total)):
            total = math.fsum(item[3] for item in heap)
            total_err = math.fsum(-item[0] for item in heap)
            if total_err <= max(acc.abs_tol, acc.rel_tol * abs(total)):
                return total
        if len(heap) >= spec.max_subdivisions:
            raise NoConvergence(
                f"quadrature hit {spec.max_subdivisions} subintervals with error "
                f"estimate {total_err:.3e} (result {total:.12g})"
            )
        neg_e, lo, hi, r = heapq.heappop(heap)
        mid = 0.5 * (lo + hi)
        if not (lo < mid < hi) or (hi - lo) <= 4.0 * _EPS * max(abs(lo), abs(hi)):
            raise NoConvergence(
                f"quadrature subinterval [{lo!r}, {hi!r}] cannot be split further "
                f"(error estimate {total_err:.3e})"
            )
        halves = np.array([[lo, mid], [mid, hi]])
        hres, herr = _qk15(g, halves)
        total += float(hres[0] + hres[1]) - r
        total_err += float(herr[0] + herr[1]) + neg_e
        heapq.heappush(heap, (-float(herr[0]), lo, mid, float(hres[0])))
        heapq.heappush(heap, (-float(herr[1]), mid, hi, float(hres[1])))


def fixed_point_solve(
    F: Callable[[float], float],
    x0: float,
    accuracy: AccuracySpec = AccuracySpec(),
    max_iter: int = 1000,
    *,
    damping: float = 0.5,
) -> float:
    """Damped iteration ``x <- (1 - damping) x + damping F(x)``.

    Stops at the first iterate with ``|F(x) - x| <= abs_tol`` (``rel_tol *
    |x|`` when ``abs_tol`` is zero).
    """
    if not 0.0 < damping <= 1.0:
        raise ValueError("damping must lie in (0, 1]")
    x = float(x0)
    for _ in range(max_iter):
        fx = float(F(x))
        if not math.isfinite(fx):
            raise NonFinite(f"fixed-point map is not finite at x={x!r}")
        resid = abs(fx - x)
        tol = accuracy.abs_tol if accuracy.abs_tol > 0.0 else accuracy.rel_tol * abs(x)
        if resid <= tol:
            return x
        x = (1.0 - damping) * x + damping * fx
    raise NoConvergence(f"fixed point not reached in {max_iter} iterations (last x={x!r})")
