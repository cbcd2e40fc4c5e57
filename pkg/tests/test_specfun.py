import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ncrayleigh.errors import DomainError
from ncrayleigh.specfun import EULER_GAMMA, AccuracySpec, digamma, log_gamma, trigamma

mp.mp.dps = 40

GRID = np.logspace(-6, 6, 241)


def test_euler_constant():
    assert EULER_GAMMA == pytest.approx(float(mp.euler), abs=1e-16)


@pytest.mark.parametrize("x, expected", [
    (1.0, 0.0),
    (5.0, math.log(24.0)),
    (0.5, 0.5 * math.log(math.pi)),
])
def test_log_gamma_values(x, expected):
    assert log_gamma(x) == pytest.approx(expected, rel=1e-13, abs=1e-15)
    assert log_gamma(x) == pytest.approx(float(mp.loggamma(x)), rel=1e-13, abs=1e-15)


@pytest.mark.parametrize("x, expected", [
    (1.0, -EULER_GAMMA),
    (2.0, 1.0 - EULER_GAMMA),
    (0.5, -EULER_GAMMA - 2.0 * math.log(2.0)),
])
def test_digamma_values(x, expected):
    assert digamma(x) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("x, expected", [
    (1.0, math.pi ** 2 / 6.0),
    (2.0, math.pi ** 2 / 6.0 - 1.0),
    (0.5, math.pi ** 2 / 2.0),
])
def test_trigamma_values(x, expected):
    assert trigamma(x) == pytest.approx(expected, abs=1e-14)


def test_log_gamma_relative_accuracy_against_mpmath():
    worst = 0.0
    for x in GRID:
        ref = float(mp.loggamma(x))
        worst = max(worst, abs(log_gamma(x) - ref) / max(abs(ref), 1e-300))
    assert worst <= 1e-13


def test_log_gamma_near_its_zeros():
    for x in (1.0 + 1e-9, 1.0 - 1e-7, 2.0 + 1e-8, 2.0 - 1e-6):
        ref = float(mp.loggamma(x))
        assert abs(log_gamma(x) - ref) <= 1e-13 * abs(ref)


def _ulp_or(tol, ref):
    # a few ulp of the reference is the best a double can do near the pole
    return max(tol, 8.0 * np.spacing(abs(ref)))


def test_digamma_accuracy_against_mpmath():
    for x in GRID:
        ref = float(mp.digamma(x))
        assert abs(digamma(x) - ref) <= _ulp_or(1e-12, ref), x


def test_trigamma_accuracy_against_mpmath():
    for x in GRID:
        ref = float(mp.psi(1, x))
        assert abs(trigamma(x) - ref) <= _ulp_or(1e-10, ref), x


@pytest.mark.parametrize("fn", [log_gamma, digamma, trigamma])
@pytest.mark.parametrize("bad", [0.0, -1.0, -0.5, math.inf, math.nan])
def test_domain_errors(fn, bad):
    with pytest.raises(DomainError):
        fn(bad)


def test_recurrences_on_random_points():
    rng = np.random.default_rng(20)
    xs = rng.uniform(0.0, 100.0, 1000)
    xs = xs[xs > 0]
    for x in xs:
        assert abs(digamma(x + 1.0) - digamma(x) - 1.0 / x) <= 1e-11 * max(1.0, 1.0 / x)
        assert abs(log_gamma(x + 1.0) - log_gamma(x) - math.log(x)) <= 1e-11 * max(1.0, abs(math.log(x)))


@given(st.floats(min_value=1e-3, max_value=1e3))
def test_trigamma_exceeds_reciprocal(x):
    assert trigamma(x) > 1.0 / x


@given(st.floats(min_value=1e-3, max_value=1.0 - 1e-3))
def test_reflection(x):
    lhs = digamma(1.0 - x) - digamma(x)
    assert lhs == pytest.approx(math.pi / math.tan(math.pi * x), abs=1e-9)


@given(st.floats(min_value=1e-4, max_value=1e4), st.floats(min_value=1e-4, max_value=1e4))
def test_digamma_increasing(a, b):
    if a < b:
        assert digamma(a) <= digamma(b)


def test_accuracy_spec_validation():
    AccuracySpec(abs_tol=0.0, rel_tol=1e-8)
    with pytest.raises(ValueError):
        AccuracySpec(abs_tol=0.0, rel_tol=0.0)
    with pytest.raises(ValueError):
        AccuracySpec(abs_tol=-1.0, rel_tol=1e-3)
