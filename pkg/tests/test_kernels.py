import os
import subprocess
import sys

import numpy as np
import pytest

from ncrayleigh import kernels
from ncrayleigh.channel import AntennaConfig, DiscreteInput, mutual_information
from ncrayleigh.discrete import OutputGrid
from ncrayleigh.reference import coherent_capacity_mc

pytestmark = pytest.mark.skipif(not kernels.HAVE_NUMBA, reason="numba not installed")


@pytest.fixture
def restore_backend():
    before = kernels.BACKEND
    yield
    kernels.set_backend(before)


def _both(fn):
    out = {}
    for name in ("numpy", "numba"):
        kernels.set_backend(name)
        out[name] = fn()
    return out["numpy"], out["numba"]


def test_mixture_log_pdf_agree(restore_backend):
    rng = np.random.default_rng(0)
    y = np.linspace(0.0, 30.0, 500)
    var = 1 + rng.uniform(0, 9, 5) ** 2
    coef = np.log(rng.dirichlet(np.ones(5))) - 3 * np.log(var)
    a, b = _both(lambda: kernels.mixture_log_pdf(y, coef, 0.5 / var, 5.0, -2.0))
    finite = np.isfinite(a)
    assert np.array_equal(finite, np.isfinite(b))
    assert np.allclose(a[finite], b[finite], rtol=1e-13, atol=1e-12)


def test_grid_kernels_agree(restore_backend):
    grid = OutputGrid(3, 20.0)
    x = np.array([0.0, 1.0, 4.0, 9.0])
    var = 1 + x * x
    log_p = np.log(np.array([0.4, 0.3, 0.2, 0.1]))
    l_a, l_b = _both(lambda: kernels.conditional_log_matrix(grid.log_y, var, 3, -1.5))
    assert np.allclose(l_a, l_b, rtol=1e-13, atol=1e-11)
    m_a, m_b = _both(lambda: kernels.mixture_from_matrix(l_a, log_p))
    assert np.allclose(m_a, m_b, rtol=1e-13, atol=1e-11)
    d_a, d_b = _both(lambda: kernels.relative_entropies(l_a, m_a, grid.weights))
    assert np.allclose(d_a, d_b, rtol=1e-11, atol=1e-13)


def test_log_det_agree(restore_backend):
    rng = np.random.default_rng(1)
    for n_r, n_t in [(1, 1), (3, 2), (2, 4)]:
        h = rng.standard_normal((2, 200, n_r, n_t))
        a, b = _both(lambda: kernels.log_det_batch(h[0], h[1], 0.7))
        assert np.allclose(a, b, rtol=1e-12, atol=1e-12)
        g = h[0] + 1j * h[1]
        ref = np.linalg.slogdet(np.eye(n_r) + 0.7 * g @ np.conj(np.swapaxes(g, 1, 2)))[1]
        assert np.allclose(a, ref, rtol=1e-12, atol=1e-12)


def test_high_level_results_agree(restore_backend):
    inp = DiscreteInput([0.0, 2.0], [0.7, 0.3])
    a, b = _both(lambda: mutual_information(inp, 2))
    assert a == pytest.approx(b, abs=1e-12)
    a, b = _both(lambda: coherent_capacity_mc(AntennaConfig(2, 2), 3.0, samples=5000, seed=5).mean)
    assert a == pytest.approx(b, rel=1e-12)


def test_backend_selection(restore_backend):
    kernels.set_backend("numpy")
    assert kernels.BACKEND == "numpy"
    kernels.set_backend(" NUMBA ")
    assert kernels.BACKEND == "numba"
    with pytest.raises(ValueError):
        kernels.set_backend("cuda")


def test_backend_env_flag():
    out = subprocess.run(
        [sys.executable, "-c", "from ncrayleigh import kernels; print(kernels.BACKEND)"],
        env={**os.environ, kernels.BACKEND_ENV: "numpy"},
        capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "numpy"
