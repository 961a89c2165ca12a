"""Hot numeric kernels with optional numba acceleration.

The bath models that admit an exponential-sum representation
alpha(t) = sum_j c_j exp(-z_j t) (t >= 0) funnel all their evaluations through
the kernels below.  Adaptive per-point truncation makes these scalar loops, so
they are compiled with numba unless the environment variable
``OQSOLVE_NO_NUMBA=1`` selects the pure-numpy fallbacks.  Both paths produce
identical results; ``benchmarks/bench_kernels.py`` compares their speed.
"""

from __future__ import annotations

import os

import numpy as np

ENABLE_NUMBA = os.environ.get("OQSOLVE_NO_NUMBA", "0") != "1"

if ENABLE_NUMBA:
    try:
        import numba
    except ImportError:  # pragma: no cover
        ENABLE_NUMBA = False


def jit_decorator(func):
    if ENABLE_NUMBA:
        return numba.jit(nopython=True, cache=True)(func)
    return func


# ---------------------------------------------------------------------------
# exponential-sum alpha(t) = sum_j c_j exp(-z_j t), t >= 0
# ---------------------------------------------------------------------------

def _exp_sum_eval_impl(c, z, t, rtol, kmin):
    out = np.zeros(t.shape[0], dtype=np.complex128)
    n = c.shape[0]
    for i in range(t.shape[0]):
        acc = 0.0 + 0.0j
        for j in range(n):
            term = c[j] * np.exp(-z[j] * t[i])
            acc += term
            if j >= kmin and abs(term) < rtol * abs(acc):
                break
        out[i] = acc
    return out


def _coeff_full_eval_impl(c, z, iw, t, rtol, kmin):
    # A(t; w) = sum_j c_j (1 - exp(-(z_j + i w) t)) / (z_j + i w)
    out = np.zeros(t.shape[0], dtype=np.complex128)
    n = c.shape[0]
    for i in range(t.shape[0]):
        acc = 0.0 + 0.0j
        for j in range(n):
            p = z[j] + iw
            term = c[j] * (1.0 - np.exp(-p * t[i])) / p
            acc += term
            if j >= kmin and abs(term) < rtol * abs(acc):
                break
        out[i] = acc
    return out


def _exp_shift_div_eval_impl(c, z, iw, t, rtol, kmin):
    # R(t; w) = sum_j c_j exp(-(z_j + i w) t) / (z_j + i w)
    out = np.zeros(t.shape[0], dtype=np.complex128)
    n = c.shape[0]
    for i in range(t.shape[0]):
        acc = 0.0 + 0.0j
        for j in range(n):
            p = z[j] + iw
            term = c[j] * np.exp(-p * t[i]) / p
            acc += term
            if j >= kmin and abs(term) < rtol * abs(acc):
                break
        out[i] = acc
    return out


def _laplace_eval_impl(c, z, s, rtol, kmin):
    # alpha_hat(s) = sum_j c_j / (z_j + s), one value per s
    out = np.zeros(s.shape[0], dtype=np.complex128)
    n = c.shape[0]
    for i in range(s.shape[0]):
        acc = 0.0 + 0.0j
        for j in range(n):
            term = c[j] / (z[j] + s[i])
            acc += term
            if j >= kmin and abs(term) < rtol * abs(acc):
                break
        out[i] = acc
    return out


# ---------------------------------------------------------------------------
# vectorized numpy fallbacks (no early termination; full-length sums)
# ---------------------------------------------------------------------------

def _exp_sum_eval_numpy(c, z, t, rtol=0.0, kmin=0):
    out = np.empty(len(t), dtype=np.complex128)
    for i, ti in enumerate(t):
        out[i] = np.sum(c * np.exp(-z * ti))
    return out


def _coeff_full_eval_numpy(c, z, iw, t, rtol=0.0, kmin=0):
    p = z + iw
    out = np.empty(len(t), dtype=np.complex128)
    for i, ti in enumerate(t):
        out[i] = np.sum(c * (1.0 - np.exp(-p * ti)) / p)
    return out


def _exp_shift_div_eval_numpy(c, z, iw, t, rtol=0.0, kmin=0):
    p = z + iw
    out = np.empty(len(t), dtype=np.complex128)
    for i, ti in enumerate(t):
        out[i] = np.sum(c * np.exp(-p * ti) / p)
    return out


def _laplace_eval_numpy(c, z, s, rtol=0.0, kmin=0):
    out = np.empty(len(s), dtype=np.complex128)
    for i, si in enumerate(s):
        out[i] = np.sum(c / (z + si))
    return out


if ENABLE_NUMBA:
    exp_sum_eval = jit_decorator(_exp_sum_eval_impl)
    coeff_full_eval = jit_decorator(_coeff_full_eval_impl)
    exp_shift_div_eval = jit_decorator(_exp_shift_div_eval_impl)
    laplace_eval = jit_decorator(_laplace_eval_impl)
else:
    exp_sum_eval = _exp_sum_eval_numpy
    coeff_full_eval = _coeff_full_eval_numpy
    exp_shift_div_eval = _exp_shift_div_eval_numpy
    laplace_eval = _laplace_eval_numpy

# both paths exposed for the benchmark comparison
exp_sum_eval_numpy = _exp_sum_eval_numpy
coeff_full_eval_numpy = _coeff_full_eval_numpy
exp_shift_div_eval_numpy = _exp_shift_div_eval_numpy
laplace_eval_numpy = _laplace_eval_numpy
