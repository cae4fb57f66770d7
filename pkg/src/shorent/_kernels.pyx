# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled in-place statevector kernels.

All kernels take a contiguous complex128 amplitude array whose index bit q is
qubit q.  The pure-numpy twin lives in ``_pykernels``; both must agree to
machine precision.
"""
import numpy as np
cimport numpy as cnp

ctypedef double complex cplx
ctypedef long long idx_t

cdef double _SQRT1_2 = 0.70710678118654752440

BACKEND = "cython"


def hadamard(cplx[::1] amps, int target):
    cdef idx_t size = amps.shape[0]
    cdef idx_t stride = (<idx_t>1) << target
    cdef idx_t i, lo, i0, i1
    cdef cplx a0, a1
    with nogil:
        for i in range(size >> 1):
            lo = i & (stride - 1)
            i0 = ((i - lo) << 1) | lo
            i1 = i0 | stride
            a0 = amps[i0]
            a1 = amps[i1]
            amps[i0] = (a0 + a1) * _SQRT1_2
            amps[i1] = (a0 - a1) * _SQRT1_2


def pauli_x(cplx[::1] amps, int target):
    cdef idx_t size = amps.shape[0]
    cdef idx_t stride = (<idx_t>1) << target
    cdef idx_t i, lo, i0, i1
    cdef cplx tmp
    with nogil:
        for i in range(size >> 1):
            lo = i & (stride - 1)
            i0 = ((i - lo) << 1) | lo
            i1 = i0 | stride
            tmp = amps[i0]
            amps[i0] = amps[i1]
            amps[i1] = tmp


cdef inline idx_t _insert_zero(idx_t i, int bit) noexcept nogil:
    cdef idx_t low = i & (((<idx_t>1) << bit) - 1)
    return ((i - low) << 1) | low


def controlled_phase(cplx[::1] amps, int control, int target, cplx phase):
    cdef idx_t size = amps.shape[0]
    cdef int lo = control if control < target else target
    cdef int hi = target if control < target else control
    cdef idx_t mask = ((<idx_t>1) << control) | ((<idx_t>1) << target)
    cdef idx_t i, k
    with nogil:
        for i in range(size >> 2):
            k = _insert_zero(_insert_zero(i, lo), hi) | mask
            amps[k] = amps[k] * phase


def swap(cplx[::1] amps, int a, int b):
    cdef idx_t size = amps.shape[0]
    cdef idx_t ma = (<idx_t>1) << a
    cdef idx_t mb = (<idx_t>1) << b
    cdef idx_t i, j
    cdef cplx tmp
    if a == b:
        return
    cdef int lo = a if a < b else b
    cdef int hi = b if a < b else a
    cdef idx_t k
    with nogil:
        for k in range(size >> 2):
            i = _insert_zero(_insert_zero(k, lo), hi) | ma
            j = i ^ ma ^ mb
            tmp = amps[i]
            amps[i] = amps[j]
            amps[j] = tmp


def controlled_permute(cplx[::1] amps, int control, int low_bits, cnp.int64_t[::1] perm):
    """Move amplitude at lower value b to perm[b] wherever the control bit is set."""
    cdef idx_t size = amps.shape[0]
    cdef idx_t block = (<idx_t>1) << low_bits
    cdef idx_t cmask = (<idx_t>1) << control
    cdef idx_t base, b
    cdef cplx[::1] buf = np.empty(block, dtype=np.complex128)
    with nogil:
        base = 0
        while base < size:
            if base & cmask:
                for b in range(block):
                    buf[b] = amps[base + b]
                for b in range(block):
                    amps[base + perm[b]] = buf[b]
            base += block


def single_qubit_rdm(const cplx[::1] amps, int target):
    cdef idx_t size = amps.shape[0]
    cdef idx_t stride = (<idx_t>1) << target
    cdef idx_t i, lo, i0, i1
    cdef double p0 = 0.0, p1 = 0.0
    cdef cplx off = 0
    cdef cplx a0, a1
    with nogil:
        for i in range(size >> 1):
            lo = i & (stride - 1)
            i0 = ((i - lo) << 1) | lo
            i1 = i0 | stride
            a0 = amps[i0]
            a1 = amps[i1]
            p0 += a0.real * a0.real + a0.imag * a0.imag
            p1 += a1.real * a1.real + a1.imag * a1.imag
            off += a0 * a1.conjugate()
    return np.array([[p0, off], [off.conjugate(), p1]], dtype=np.complex128)


def two_qubit_rdm(const cplx[::1] amps, int qa, int qb):
    """Reduced matrix of (qa, qb); row index bit 0 is qa, bit 1 is qb."""
    cdef idx_t size = amps.shape[0]
    cdef idx_t ma = (<idx_t>1) << qa
    cdef idx_t mb = (<idx_t>1) << qb
    cdef idx_t i, k
    cdef int r, c
    cdef int lo = qa if qa < qb else qb
    cdef int hi = qb if qa < qb else qa
    cdef cplx v[4]
    cdef cplx acc[16]
    for k in range(16):
        acc[k] = 0
    with nogil:
        for k in range(size >> 2):
            i = _insert_zero(_insert_zero(k, lo), hi)
            v[0] = amps[i]
            v[1] = amps[i | ma]
            v[2] = amps[i | mb]
            v[3] = amps[i | ma | mb]
            for r in range(4):
                for c in range(4):
                    acc[4 * r + c] = acc[4 * r + c] + v[r] * v[c].conjugate()
    out = np.empty((4, 4), dtype=np.complex128)
    for r in range(4):
        for c in range(4):
            out[r, c] = acc[4 * r + c]
    return out
