"""Sparse accumulation kernels for the graded operator engine.

Numba versions are used unless ``CAPELLI_DISABLE_NUMBA=1`` is set (or numba
is missing); the NumPy fallbacks compute identical results.

Every kernel takes a modulus ``p``.  ``p == 0`` means plain int64
arithmetic, which the caller may only request after proving that no
intermediate value exceeds 2**62.  For ``p > 0`` the data and inputs must
already be reduced and ``p < 2**28``, so that 64 products can be summed
before a reduction.
"""
from __future__ import annotations

import os

import numpy as np

DISABLE_ENV = "CAPELLI_DISABLE_NUMBA"
MAX_MODULUS = 1 << 28
BATCH = 64

# the bundled TBB is too old for numba; skip probing it
os.environ.setdefault("NUMBA_THREADING_LAYER", "omp")

try:
    import numba
    from numba import njit, prange
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False


def numba_enabled() -> bool:
    return HAVE_NUMBA and os.environ.get(DISABLE_ENV, "0").lower() not in ("1", "true", "yes")


def set_threads(threads: int | None) -> int:
    """Set the numba worker count; returns the count in effect."""
    if not HAVE_NUMBA:
        return 1
    limit = numba.config.NUMBA_NUM_THREADS
    threads = limit if threads is None or threads <= 0 else min(threads, limit)
    numba.set_num_threads(threads)
    return threads


# -- numpy -------------------------------------------------------------------------

def spmm_acc_numpy(indptr, indices, data, x, out, p):
    """out += A @ x (mod p when p > 0); A given in CSR form."""
    if indices.size == 0:
        return
    nonempty = np.flatnonzero(indptr[1:] > indptr[:-1])
    if p:
        prod = (data[:, None] * x[indices]) % p
        sums = np.add.reduceat(prod, indptr[nonempty], axis=0) % p
        out[nonempty] = (out[nonempty] + sums) % p
    else:
        prod = data[:, None] * x[indices]
        out[nonempty] += np.add.reduceat(prod, indptr[nonempty], axis=0)


def axpy_acc_numpy(x, out, p, scale):
    if p:
        out[...] = (out + (scale % p) * x) % p
    else:
        out += scale * x


# -- numba -------------------------------------------------------------------------

if HAVE_NUMBA:
    @njit(parallel=True, cache=True)
    def _spmm_acc_numba(indptr, indices, data, x, out, p):
        nrows = indptr.size - 1
        k = x.shape[1]
        for r in prange(nrows):
            lo = indptr[r]
            hi = indptr[r + 1]
            if lo == hi:
                continue
            orow = out[r]
            pending = 0
            for t in range(lo, hi):
                v = data[t]
                xr = x[indices[t]]
                for c in range(k):
                    orow[c] += v * xr[c]
                if p:
                    pending += 1
                    if pending == BATCH:
                        for c in range(k):
                            orow[c] %= p
                        pending = 0
            if p:
                for c in range(k):
                    orow[c] %= p

    @njit(parallel=True, cache=True)
    def _axpy_acc_numba(x, out, p, scale):
        rows, k = x.shape
        s = scale % p if p else scale
        for r in prange(rows):
            for c in range(k):
                v = out[r, c] + s * x[r, c]
                out[r, c] = v % p if p else v
else:  # pragma: no cover
    _spmm_acc_numba = _axpy_acc_numba = None


def _check_modulus(p: int) -> None:
    if p < 0 or p >= MAX_MODULUS:
        raise ValueError(f"modulus must be 0 (exact) or below 2**28, got {p}")


def spmm_acc(indptr, indices, data, x, out, p):
    _check_modulus(p)
    if numba_enabled():
        _spmm_acc_numba(indptr, indices, data, x, out, np.int64(p))
    else:
        spmm_acc_numpy(indptr, indices, data, x, out, p)


def axpy_acc(x, out, p, scale):
    _check_modulus(p)
    if numba_enabled():
        _axpy_acc_numba(x, out, np.int64(p), np.int64(scale))
    else:
        axpy_acc_numpy(x, out, p, scale)
