"""Dense statevector and the gate set used by the order-finding circuit.

Basis convention: with a lower register of width n, the global index is
``i = a * 2**n + b`` where ``a`` is the upper-register value and ``b`` the
lower-register value. Lower qubit j is bit j of the index; upper qubit j is
bit n + j and carries weight 2**j in ``a``.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence, Union

import numpy as np

from . import kernels
from .numtheory import is_coprime, modpow

NORM_TOL = 1e-9


class NumericalError(RuntimeError):
    """A numerical invariant (norm, hermiticity, spectrum) was violated."""


@dataclass(frozen=True)
class RegisterLayout:
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"lower register width must be >= 1, got {self.n}")

    @property
    def upper_width(self) -> int:
        return 2 * self.n

    @property
    def total(self) -> int:
        return 3 * self.n

    @property
    def upper_dim(self) -> int:
        return 1 << (2 * self.n)

    @property
    def lower_dim(self) -> int:
        return 1 << self.n

    def upper_qubit(self, j: int) -> int:
        if not 0 <= j < 2 * self.n:
            raise IndexError(f"upper qubit {j} outside register of width {2 * self.n}")
        return self.n + j

    def lower_qubit(self, j: int) -> int:
        if not 0 <= j < self.n:
            raise IndexError(f"lower qubit {j} outside register of width {self.n}")
        return j

    @property
    def upper_qubits(self) -> tuple[int, ...]:
        return tuple(range(self.n, 3 * self.n))

    @property
    def lower_qubits(self) -> tuple[int, ...]:
        return tuple(range(self.n))

    def index(self, a: int, b: int) -> int:
        return (a << self.n) | b


class StateVector:
    """Pure state of ``total_qubits`` qubits as a dense complex128 array."""

    __slots__ = ("total_qubits", "amps")

    def __init__(self, total_qubits: int, amps: np.ndarray | None = None):
        size = 1 << total_qubits
        if amps is None:
            amps = np.zeros(size, dtype=np.complex128)
            amps[0] = 1.0
        else:
            amps = np.ascontiguousarray(amps, dtype=np.complex128)
            if amps.shape != (size,):
                raise ValueError(f"expected {size} amplitudes, got shape {amps.shape}")
        self.total_qubits = total_qubits
        self.amps = amps

    @classmethod
    def basis(cls, total_qubits: int, index: int) -> "StateVector":
        state = cls(total_qubits)
        state.amps[0] = 0.0
        state.amps[index] = 1.0
        return state

    def copy(self) -> "StateVector":
        return StateVector(self.total_qubits, self.amps.copy())

    def snapshot(self) -> "StateVector":
        """Read-only copy, safe to hand to analytics."""
        snap = self.copy()
        snap.amps.flags.writeable = False
        return snap

    def norm_sq(self) -> float:
        return float(np.vdot(self.amps, self.amps).real)

    def check_norm(self, tol: float = NORM_TOL) -> None:
        drift = abs(self.norm_sq() - 1.0)
        if drift > tol:
            raise NumericalError(f"state norm drifted by {drift:.3e}")

    def fidelity(self, other: "StateVector") -> float:
        return float(abs(np.vdot(self.amps, other.amps)) ** 2)

    def __repr__(self) -> str:
        return f"StateVector(total_qubits={self.total_qubits})"


# -- gates -----------------------------------------------------------------


@dataclass(frozen=True)
class Hadamard:
    target: int

    def adjoint(self) -> "Hadamard":
        return self


@dataclass(frozen=True)
class BitFlip:
    target: int

    def adjoint(self) -> "BitFlip":
        return self


@dataclass(frozen=True)
class ControlledPhase:
    control: int
    target: int
    angle: float

    def adjoint(self) -> "ControlledPhase":
        return ControlledPhase(self.control, self.target, -self.angle)


@dataclass(frozen=True)
class Swap:
    a: int
    b: int

    def adjoint(self) -> "Swap":
        return self


@dataclass(frozen=True)
class ControlledModMul:
    """Lower value b -> b * multiplier mod modulus when ``control`` is set.

    Values b >= modulus are left in place; the circuit never populates them.
    """

    control: int
    multiplier: int
    modulus: int
    lower_width: int

    def adjoint(self) -> "ControlledModMul":
        inverse = pow(self.multiplier, -1, self.modulus)
        return ControlledModMul(self.control, inverse, self.modulus, self.lower_width)

    def permutation(self) -> np.ndarray:
        perm = np.arange(1 << self.lower_width, dtype=np.int64)
        b = np.arange(self.modulus, dtype=np.int64)
        perm[: self.modulus] = b * self.multiplier % self.modulus
        return perm


Gate = Union[Hadamard, BitFlip, ControlledPhase, Swap, ControlledModMul]


def _check_index(q: int, total: int) -> None:
    if not 0 <= q < total:
        raise IndexError(f"qubit {q} out of range for {total}-qubit state")


def apply_gate(state: StateVector, gate: Gate) -> StateVector:
    """Apply ``gate`` in place and return the same state."""
    k = kernels.active
    total = state.total_qubits
    amps = state.amps
    if isinstance(gate, Hadamard):
        _check_index(gate.target, total)
        k.hadamard(amps, gate.target)
    elif isinstance(gate, BitFlip):
        _check_index(gate.target, total)
        k.pauli_x(amps, gate.target)
    elif isinstance(gate, ControlledPhase):
        _check_index(gate.control, total)
        _check_index(gate.target, total)
        if gate.control == gate.target:
            raise ValueError("controlled phase needs distinct control and target")
        k.controlled_phase(amps, gate.control, gate.target, cmath.exp(1j * gate.angle))
    elif isinstance(gate, Swap):
        _check_index(gate.a, total)
        _check_index(gate.b, total)
        k.swap(amps, gate.a, gate.b)
    elif isinstance(gate, ControlledModMul):
        _check_index(gate.control, total)
        if gate.control < gate.lower_width:
            raise ValueError("modular multiplication control must lie outside the lower register")
        if gate.modulus > 1 << gate.lower_width:
            raise ValueError("lower register too narrow for the modulus")
        if not is_coprime(gate.multiplier % gate.modulus, gate.modulus):
            raise ValueError(
                f"multiplier {gate.multiplier} not coprime to {gate.modulus}; not a permutation"
            )
        k.controlled_permute(amps, gate.control, gate.lower_width, gate.permutation())
    else:
        raise TypeError(f"unsupported gate {gate!r}")
    return state


def apply_gates(state: StateVector, gates: Iterable[Gate]) -> StateVector:
    for gate in gates:
        apply_gate(state, gate)
    return state


def modmul_gate(control: int, instance) -> ControlledModMul:
    """The controlled x**(2**control) multiplier for upper qubit ``control``."""
    layout = instance.layout
    if not 0 <= control < layout.upper_width:
        raise IndexError(f"control {control} outside upper register of width {layout.upper_width}")
    if not is_coprime(instance.x % instance.N, instance.N):
        raise ValueError(f"gcd({instance.x}, {instance.N}) != 1")
    multiplier = modpow(instance.x, 1 << control, instance.N)
    return ControlledModMul(layout.upper_qubit(control), multiplier, instance.N, layout.n)


def apply_controlled_modmul(state: StateVector, control: int, instance) -> StateVector:
    return apply_gate(state, modmul_gate(control, instance))


# -- Fourier transforms ----------------------------------------------------


def iqft_gates(qubits: Sequence[int]) -> list[Gate]:
    """Elementary gates of the inverse QFT on ``qubits`` (least significant first).

    Most significant qubit first: Hadamard, then phase -2*pi/2**m controlled by
    each less significant qubit, then the bit-reversal swaps.
    """
    qubits = list(qubits)
    w = len(qubits)
    gates: list[Gate] = []
    for k in range(w - 1, -1, -1):
        gates.append(Hadamard(qubits[k]))
        for l in range(k - 1, -1, -1):
            m = k - l + 1
            gates.append(ControlledPhase(qubits[l], qubits[k], -2 * math.pi / (1 << m)))
    for i in range(w // 2):
        gates.append(Swap(qubits[i], qubits[w - 1 - i]))
    return gates


def qft_gates(qubits: Sequence[int]) -> list[Gate]:
    return [g.adjoint() for g in reversed(iqft_gates(qubits))]


def inverse_qft(
    state: StateVector,
    qubits: Sequence[int],
    step_hook: Callable[[int, StateVector], None] | None = None,
) -> StateVector:
    """Apply the inverse QFT gate by gate; ``step_hook(g, state)`` after each gate."""
    for q in qubits:
        _check_index(q, state.total_qubits)
    if len(set(qubits)) != len(qubits):
        raise ValueError("IQFT qubits must be distinct")
    for g, gate in enumerate(iqft_gates(qubits)):
        apply_gate(state, gate)
        if step_hook is not None:
            step_hook(g, state)
    return state


def qft(state: StateVector, qubits: Sequence[int]) -> StateVector:
    return apply_gates(state, qft_gates(qubits))


# -- measurement -----------------------------------------------------------


def measure_distribution(state: StateVector, layout: RegisterLayout) -> np.ndarray:
    """Probability of each upper-register outcome c, marginal over the lower register."""
    if state.total_qubits != layout.total:
        raise ValueError("state does not match register layout")
    probs = np.abs(state.amps.reshape(layout.upper_dim, layout.lower_dim)) ** 2
    return probs.sum(axis=1)


def collapse(state: StateVector, layout: RegisterLayout, outcome: int, min_prob: float = 1e-15) -> StateVector:
    """Normalized lower-register state after the upper register reads ``outcome``."""
    if not 0 <= outcome < layout.upper_dim:
        raise IndexError(f"outcome {outcome} outside [0, {layout.upper_dim})")
    row = state.amps.reshape(layout.upper_dim, layout.lower_dim)[outcome]
    p = float(np.vdot(row, row).real)
    if p <= min_prob:
        raise ValueError(f"outcome {outcome} has probability {p:.3e}")
    return StateVector(layout.n, row / math.sqrt(p))
