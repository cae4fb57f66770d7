"""The order-finding circuit: initialization, modular exponentiation, IQFT.

Checkpoints are reported to an optional hook as ``hook(checkpoint, snapshot)``
where the snapshot is a read-only copy of the state.
"""
from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import numtheory as nt
from .qstate import (
    BitFlip,
    Hadamard,
    RegisterLayout,
    StateVector,
    apply_controlled_modmul,
    apply_gate,
    inverse_qft,
    measure_distribution,
)

DEFAULT_MAX_QUBITS = 21


class InvalidInstanceError(ValueError):
    """Problem parameters rejected before any simulation runs."""


@dataclass(frozen=True)
class ShorInstance:
    N: int
    x: int
    max_qubits: int = DEFAULT_MAX_QUBITS
    strict: bool = False
    layout: RegisterLayout = field(init=False)
    warning: Optional[str] = field(init=False, default=None)

    def __post_init__(self):
        N, x = self.N, self.x
        if N < 3:
            raise InvalidInstanceError(f"N must be >= 3, got {N}")
        if not 1 < x < N:
            raise InvalidInstanceError(f"base must satisfy 1 < x < N, got x={x}, N={N}")
        if nt.gcd(x, N) != 1:
            raise InvalidInstanceError(f"base {x} shares the factor {nt.gcd(x, N)} with {N}")
        layout = RegisterLayout(nt.register_width(N))
        if layout.total > self.max_qubits:
            raise InvalidInstanceError(
                f"N={N} needs {layout.total} qubits, above the cap of {self.max_qubits}"
            )
        object.__setattr__(self, "layout", layout)
        if N % 2 == 0 or len(nt.small_prime_factors(N)) < 2:
            note = f"N={N} is not an odd composite"
            if self.strict:
                raise InvalidInstanceError(note)
            warnings.warn(note, stacklevel=2)
            object.__setattr__(self, "warning", note)

    @property
    def n(self) -> int:
        return self.layout.n

    @property
    def M(self) -> int:
        return self.layout.upper_dim

    @property
    def period(self) -> int:
        return nt.multiplicative_order(self.x, self.N)


class Stage(enum.IntEnum):
    INIT = 0
    MODEXP = 1
    IQFT_STEP = 2
    IQFT = 3
    MEASURED = 4


@dataclass(frozen=True, order=True)
class CheckpointId:
    stage: Stage
    index: int = 0

    @classmethod
    def init(cls) -> "CheckpointId":
        return cls(Stage.INIT)

    @classmethod
    def after_modexp(cls, j: int) -> "CheckpointId":
        return cls(Stage.MODEXP, j)

    @classmethod
    def iqft_step(cls, g: int) -> "CheckpointId":
        return cls(Stage.IQFT_STEP, g)

    @classmethod
    def after_iqft(cls) -> "CheckpointId":
        return cls(Stage.IQFT)

    @classmethod
    def post_measurement(cls, c: int) -> "CheckpointId":
        return cls(Stage.MEASURED, c)

    @property
    def label(self) -> str:
        if self.stage is Stage.INIT:
            return "init"
        if self.stage is Stage.MODEXP:
            return f"modexp:{self.index}"
        if self.stage is Stage.IQFT_STEP:
            return f"iqft_step:{self.index}"
        if self.stage is Stage.IQFT:
            return "iqft"
        return f"measured:{self.index}"

    @classmethod
    def parse(cls, label: str) -> "CheckpointId":
        name, _, idx = label.partition(":")
        stage = {
            "init": Stage.INIT,
            "modexp": Stage.MODEXP,
            "iqft_step": Stage.IQFT_STEP,
            "iqft": Stage.IQFT,
            "measured": Stage.MEASURED,
        }[name]
        return cls(stage, int(idx) if idx else 0)

    def __str__(self) -> str:
        return self.label


TraceHook = Callable[[CheckpointId, StateVector], None]


def _emit(hook: TraceHook | None, checkpoint: CheckpointId, state: StateVector) -> None:
    if hook is not None:
        hook(checkpoint, state.snapshot())


def prepare_initial(instance: ShorInstance) -> StateVector:
    """Uniform superposition on the upper register, |1> on the lower one."""
    layout = instance.layout
    state = StateVector(layout.total)
    apply_gate(state, BitFlip(layout.lower_qubit(0)))
    for q in layout.upper_qubits:
        apply_gate(state, Hadamard(q))
    return state


def run_modexp(state: StateVector, instance: ShorInstance, hook: TraceHook | None = None) -> StateVector:
    for j in range(instance.layout.upper_width):
        apply_controlled_modmul(state, j, instance)
        _emit(hook, CheckpointId.after_modexp(j), state)
    return state


def run_full(
    instance: ShorInstance,
    hook: TraceHook | None = None,
    fine_iqft: bool = False,
) -> StateVector:
    """Pre-measurement state of the full circuit.

    With ``fine_iqft`` the hook also sees every elementary IQFT gate.
    """
    state = prepare_initial(instance)
    state.check_norm()
    _emit(hook, CheckpointId.init(), state)
    run_modexp(state, instance, hook)
    state.check_norm()
    step_hook = None
    if fine_iqft and hook is not None:
        step_hook = lambda g, s: _emit(hook, CheckpointId.iqft_step(g), s)  # noqa: E731
    inverse_qft(state, instance.layout.upper_qubits, step_hook)
    state.check_norm()
    _emit(hook, CheckpointId.after_iqft(), state)
    return state


def final_distribution(instance: ShorInstance) -> np.ndarray:
    return measure_distribution(run_full(instance), instance.layout)


def sample_outcome(distribution: np.ndarray, rng: np.random.Generator | int | None) -> int:
    """Draw an outcome index proportionally to ``distribution``."""
    p = np.asarray(distribution, dtype=float)
    total = p.sum()
    if abs(total - 1.0) > 1e-6:
        raise ValueError(f"distribution sums to {total}, not 1")
    if np.any(p < -1e-12):
        raise ValueError("distribution has negative entries")
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    cdf = np.cumsum(np.clip(p, 0.0, None))
    u = rng.random() * cdf[-1]
    return int(min(np.searchsorted(cdf, u, side="right"), len(p) - 1))
