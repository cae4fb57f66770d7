"""Pure-numpy statevector kernels; the fallback when the extension is absent.

Same call surface and semantics as the compiled ``_kernels`` module.
"""
from __future__ import annotations

import numpy as np

BACKEND = "numpy"

_SQRT1_2 = 0.70710678118654752440


def _split(amps: np.ndarray, q: int) -> np.ndarray:
    # axis 1 is the bit of qubit q
    return amps.reshape(-1, 2, 1 << q)


def _split2(amps: np.ndarray, a: int, b: int) -> tuple[np.ndarray, bool]:
    hi, lo = max(a, b), min(a, b)
    view = amps.reshape(-1, 2, 1 << (hi - lo - 1), 2, 1 << lo)
    return view, a > b


def hadamard(amps: np.ndarray, target: int) -> None:
    v = _split(amps, target)
    a0 = v[:, 0].copy()
    a1 = v[:, 1]
    v[:, 0] = (a0 + a1) * _SQRT1_2
    v[:, 1] = (a0 - a1) * _SQRT1_2


def pauli_x(amps: np.ndarray, target: int) -> None:
    v = _split(amps, target)
    v[:, [0, 1]] = v[:, [1, 0]]


def controlled_phase(amps: np.ndarray, control: int, target: int, phase: complex) -> None:
    v, _ = _split2(amps, control, target)
    v[:, 1, :, 1, :] *= phase


def swap(amps: np.ndarray, a: int, b: int) -> None:
    if a == b:
        return
    v, _ = _split2(amps, a, b)
    tmp = v[:, 0, :, 1, :].copy()
    v[:, 0, :, 1, :] = v[:, 1, :, 0, :]
    v[:, 1, :, 0, :] = tmp


def controlled_permute(amps: np.ndarray, control: int, low_bits: int, perm: np.ndarray) -> None:
    """Move amplitude at lower value b to perm[b] wherever the control bit is set."""
    v = amps.reshape(-1, 2, 1 << (control - low_bits), 1 << low_bits)
    block = v[:, 1]
    block[..., perm] = block.copy()


def single_qubit_rdm(amps: np.ndarray, target: int) -> np.ndarray:
    v = _split(amps, target)
    a0, a1 = v[:, 0].ravel(), v[:, 1].ravel()
    off = np.vdot(a1, a0)
    return np.array(
        [[np.vdot(a0, a0).real, off], [np.conj(off), np.vdot(a1, a1).real]],
        dtype=np.complex128,
    )


def two_qubit_rdm(amps: np.ndarray, qa: int, qb: int) -> np.ndarray:
    """Reduced matrix of (qa, qb); row index bit 0 is qa, bit 1 is qb."""
    v, a_high = _split2(amps, qa, qb)
    cols = []
    for k in range(4):
        ba, bb = k & 1, k >> 1
        hi_bit, lo_bit = (ba, bb) if a_high else (bb, ba)
        cols.append(v[:, hi_bit, :, lo_bit, :].ravel())
    m = np.stack(cols)
    return m @ m.conj().T
