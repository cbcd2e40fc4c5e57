"""Hot inner loops, each with a numba and a pure-numpy implementation.

The backend is chosen at import time from the ``NCRAYLEIGH_BACKEND``
environment variable (``numba`` or ``numpy``).  When the variable is unset
numba is used if it can be imported.  ``set_backend`` switches at runtime;
callers always go through the module attributes (``kernels.mixture_log_pdf``
and friends), so a switch takes effect immediately.

The two backends agree to rounding error but are not bit-identical; the
determinism guarantees elsewhere in the package hold per backend.
"""

from __future__ import annotations

import os
from types import SimpleNamespace

import numpy as np

BACKEND_ENV = "NCRAYLEIGH_BACKEND"


# --------------------------------------------------------------------------
# numpy implementations


def _np_mixture_log_pdf(y, log_coef, inv_two_var, log_y_power, const):
    """log sum_i exp(log_coef[i] - y^2 * inv_two_var[i]) + log_y_power*ln y + const."""
    y = np.asarray(y, dtype=float)
    yy = (y * y)[:, None]
    expo = log_coef[None, :] - yy * inv_two_var[None, :]
    top = expo.max(axis=1)
    lse = top + np.log(np.exp(expo - top[:, None]).sum(axis=1))
    with np.errstate(divide="ignore"):
        return lse + log_y_power * np.log(y) + const


def _np_conditional_log_matrix(log_y, var, n_r, const):
    """L[i, k] = ln p(y_k | x_i) given log y_k and var_i = 1 + x_i^2."""
    y2 = np.exp(2.0 * log_y)
    lv = np.log(var)
    return ((2 * n_r - 1) * log_y[None, :] + const) - y2[None, :] / (2.0 * var[:, None]) - n_r * lv[:, None]


def _np_mixture_from_matrix(logc, log_p):
    expo = logc + log_p[:, None]
    top = expo.max(axis=0)
    return top + np.log(np.exp(expo - top[None, :]).sum(axis=0))


def _np_relative_entropies(logc, log_mix, weights):
    dens = np.exp(logc)
    return (dens * (logc - log_mix[None, :])) @ weights


def _np_log_det_batch(h_re, h_im, c):
    h = h_re + 1j * h_im
    n_r, n_t = h.shape[1], h.shape[2]
    if n_t <= n_r:
        gram = np.conj(np.swapaxes(h, 1, 2)) @ h
    else:
        gram = h @ np.conj(np.swapaxes(h, 1, 2))
    m = gram.shape[1]
    a = np.eye(m)[None, :, :] + c * gram
    chol = np.linalg.cholesky(a)
    diag = np.real(np.diagonal(chol, axis1=1, axis2=2))
    return 2.0 * np.log(diag).sum(axis=1)


NUMPY = SimpleNamespace(
    name="numpy",
    mixture_log_pdf=_np_mixture_log_pdf,
    conditional_log_matrix=_np_conditional_log_matrix,
    mixture_from_matrix=_np_mixture_from_matrix,
    relative_entropies=_np_relative_entropies,
    log_det_batch=_np_log_det_batch,
)


# --------------------------------------------------------------------------
# numba implementations


def _build_numba():
    import math

    from numba import njit

    @njit(cache=True)
    def mixture_log_pdf(y, log_coef, inv_two_var, log_y_power, const):
        n = y.shape[0]
        m = log_coef.shape[0]
        out = np.empty(n)
        for k in range(n):
            yy = y[k] * y[k]
            top = -np.inf
            for i in range(m):
                e = log_coef[i] - yy * inv_two_var[i]
                if e > top:
                    top = e
            acc = 0.0
            for i in range(m):
                acc += math.exp(log_coef[i] - yy * inv_two_var[i] - top)
            if y[k] > 0.0:
                out[k] = top + math.log(acc) + log_y_power * math.log(y[k]) + const
            else:
                out[k] = -np.inf
        return out

    @njit(cache=True)
    def conditional_log_matrix(log_y, var, n_r, const):
        m = var.shape[0]
        n = log_y.shape[0]
        out = np.empty((m, n))
        for i in range(m):
            inv2v = 0.5 / var[i]
            lv = n_r * math.log(var[i])
            for k in range(n):
                ly = log_y[k]
                out[i, k] = (2 * n_r - 1) * ly + const - math.exp(2.0 * ly) * inv2v - lv
        return out

    @njit(cache=True)
    def mixture_from_matrix(logc, log_p):
        m, n = logc.shape
        out = np.empty(n)
        for k in range(n):
            top = -np.inf
            for i in range(m):
                e = logc[i, k] + log_p[i]
                if e > top:
                    top = e
            acc = 0.0
            for i in range(m):
                acc += math.exp(logc[i, k] + log_p[i] - top)
            out[k] = top + math.log(acc)
        return out

    @njit(cache=True)
    def relative_entropies(logc, log_mix, weights):
        m, n = logc.shape
        out = np.zeros(m)
        for i in range(m):
            acc = 0.0
            for k in range(n):
                lc = logc[i, k]
                acc += weights[k] * math.exp(lc) * (lc - log_mix[k])
            out[i] = acc
        return out

    @njit(cache=True)
    def log_det_batch(h_re, h_im, c):
        s_count, n_r, n_t = h_re.shape
        small_t = n_t <= n_r
        m = n_t if small_t else n_r
        inner = n_r if small_t else n_t
        out = np.empty(s_count)
        a = np.empty((m, m), dtype=np.complex128)
        low = np.zeros((m, m), dtype=np.complex128)
        for s in range(s_count):
            for i in range(m):
                for j in range(i + 1):
                    acc = 0.0 + 0.0j
                    for k in range(inner):
                        if small_t:
                            hi = complex(h_re[s, k, i], h_im[s, k, i])
                            hj = complex(h_re[s, k, j], h_im[s, k, j])
                            acc += hi * hj.conjugate()
                        else:
                            hi = complex(h_re[s, i, k], h_im[s, i, k])
                            hj = complex(h_re[s, j, k], h_im[s, j, k])
                            acc += hi * hj.conjugate()
                    a[i, j] = c * acc
                a[i, i] += 1.0
            logdet = 0.0
            for j in range(m):
                d = a[j, j].real
                for k in range(j):
                    d -= low[j, k].real ** 2 + low[j, k].imag ** 2
                root = math.sqrt(d)
                low[j, j] = root
                logdet += 2.0 * math.log(root)
                for i in range(j + 1, m):
                    acc = a[i, j]
                    for k in range(j):
                        acc -= low[i, k] * low[j, k].conjugate()
                    low[i, j] = acc / root
            out[s] = logdet
        return out

    return SimpleNamespace(
        name="numba",
        mixture_log_pdf=mixture_log_pdf,
        conditional_log_matrix=conditional_log_matrix,
        mixture_from_matrix=mixture_from_matrix,
        relative_entropies=relative_entropies,
        log_det_batch=log_det_batch,
    )


try:
    NUMBA = _build_numba()
except ImportError:  # pragma: no cover - exercised only without numba
    NUMBA = None

HAVE_NUMBA = NUMBA is not None

BACKEND = "numpy"
mixture_log_pdf = NUMPY.mixture_log_pdf
conditional_log_matrix = NUMPY.conditional_log_matrix
mixture_from_matrix = NUMPY.mixture_from_matrix
relative_entropies = NUMPY.relative_entropies
log_det_batch = NUMPY.log_det_batch


def set_backend(name: str) -> None:
    """Bind the module-level kernels to ``"numba"`` or ``"numpy"``."""
    global BACKEND, mixture_log_pdf, conditional_log_matrix, mixture_from_matrix
    global relative_entropies, log_det_batch
    name = name.strip().lower()
    if name == "numba":
        if NUMBA is None:
            raise RuntimeError("numba backend requested but numba is not importable")
        impl = NUMBA
    elif name == "numpy":
        impl = NUMPY
    else:
        raise ValueError(f"unknown backend {name!r}; expected 'numba' or 'numpy'")
    BACKEND = impl.name
    mixture_log_pdf = impl.mixture_log_pdf
    conditional_log_matrix = impl.conditional_log_matrix
    mixture_from_matrix = impl.mixture_from_matrix
    relative_entropies = impl.relative_entropies
    log_det_batch = impl.log_det_batch


set_backend(os.environ.get(BACKEND_ENV, "numba" if HAVE_NUMBA else "numpy"))
