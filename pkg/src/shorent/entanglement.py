"""Entanglement measures on statevector snapshots.

Logarithms are base 2 throughout. Eigenvalues at or below ``EIG_FLOOR`` are
dropped from entropy sums; ``ZERO_TOL`` is the threshold for "no negativity"
and ``PATTERN_TOL`` the single-qubit entropy that flags a qubit as entangled.
"""
from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

from . import kernels
from .circuit import CheckpointId, Stage
from .qstate import NumericalError, RegisterLayout, StateVector

EIG_FLOOR = 1e-12
NEG_EIG_TOL = 1e-9
ZERO_TOL = 1e-9
PATTERN_TOL = 1e-6
HERMITIAN_TOL = 1e-8

RDM_QUBIT_CAP = 12
NEGATIVITY_WIDTH_CAP = 12
# All-mode limits used when analytics run at every checkpoint of a trace
NEGATIVITY_ALL_WIDTH = 8
SUBSET_ALL_TOTAL_QUBITS = 15
SUBSET_ALL_COUNT = 5000
DEFAULT_SAMPLE_COUNT = 200

_SIGMA_YY = np.array(
    [[0, 0, 0, -1], [0, 0, 1, 0], [0, 1, 0, 0], [-1, 0, 0, 0]], dtype=np.complex128
)


class Scope(str, enum.Enum):
    GLOBAL = "global"
    UPPER = "upper"
    LOWER = "lower"


@dataclass(frozen=True)
class QubitSubset:
    scope: Scope
    indices: tuple[int, ...]

    def __post_init__(self):
        idx = tuple(sorted(set(self.indices)))
        if not idx:
            raise ValueError("qubit subset must be nonempty")
        if len(idx) != len(self.indices):
            raise ValueError(f"duplicate qubits in {self.indices}")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "scope", Scope(self.scope))

    def width(self, layout: RegisterLayout | None) -> int:
        if self.scope is Scope.UPPER:
            return layout.upper_width
        if self.scope is Scope.LOWER:
            return layout.n
        return layout.total if layout is not None else max(self.indices) + 1

    def resolve(self, layout: RegisterLayout | None = None) -> tuple[int, ...]:
        """Global qubit indices of this subset."""
        if self.scope is Scope.GLOBAL:
            return self.indices
        if layout is None:
            raise ValueError(f"{self.scope.value} subset needs a register layout")
        if self.indices[-1] >= self.width(layout) or self.indices[0] < 0:
            raise IndexError(f"{self.indices} outside the {self.scope.value} register")
        if self.scope is Scope.UPPER:
            return tuple(layout.upper_qubit(j) for j in self.indices)
        return tuple(layout.lower_qubit(j) for j in self.indices)

    @property
    def descriptor(self) -> str:
        return f"{self.scope.value}[{' '.join(map(str, self.indices))}]"


def register_qubits(layout: RegisterLayout, scope: Scope | str) -> tuple[int, ...]:
    scope = Scope(scope)
    if scope is Scope.UPPER:
        return layout.upper_qubits
    if scope is Scope.LOWER:
        return layout.lower_qubits
    return tuple(range(layout.total))


@dataclass(frozen=True)
class ReducedDensityMatrix:
    """Density matrix of ``qubits`` (global indices, ascending).

    Row index bit t corresponds to ``qubits[t]``.
    """

    qubits: tuple[int, ...]
    matrix: np.ndarray

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def validate(self, tol: float = 1e-9) -> None:
        m = self.matrix
        if np.max(np.abs(m - m.conj().T), initial=0.0) > tol:
            raise NumericalError("reduced density matrix is not Hermitian")
        if abs(np.trace(m).real - 1.0) > tol:
            raise NumericalError(f"reduced density matrix has trace {np.trace(m).real}")
        if hermitian_eigenvalues(m)[-1] < -tol:
            raise NumericalError("reduced density matrix has a negative eigenvalue")


# -- linear algebra --------------------------------------------------------


def hermitian_eigenvalues(matrix: np.ndarray, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Real eigenvalues of a Hermitian matrix, descending.

    LAPACK's divide-and-conquer tridiagonal solver; real input takes the real
    symmetric path.
    """
    m = np.asarray(matrix)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if np.max(np.abs(m - m.conj().T), initial=0.0) > tol:
        raise ValueError("matrix is not Hermitian")
    if np.iscomplexobj(m):
        if not np.any(m.imag):
            m = m.real
    return np.linalg.eigvalsh(m)[::-1]


def entropy_of_spectrum(eigenvalues: Iterable[float]) -> float:
    ev = np.asarray(list(eigenvalues) if not isinstance(eigenvalues, np.ndarray) else eigenvalues)
    if ev.size and ev.min() < -NEG_EIG_TOL:
        raise NumericalError(f"density matrix eigenvalue {ev.min():.3e} below clamp tolerance")
    ev = ev[ev > EIG_FLOOR]
    # rounding can push a zero entropy a few ulps negative
    return max(float(-(ev * np.log2(ev)).sum()), 0.0)


def entropy(rdm: ReducedDensityMatrix | np.ndarray) -> float:
    """Von Neumann entropy in bits."""
    m = rdm.matrix if isinstance(rdm, ReducedDensityMatrix) else rdm
    return entropy_of_spectrum(hermitian_eigenvalues(m))


def binary_entropy(p: float) -> float:
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


# -- partial trace ---------------------------------------------------------


def _as_qubits(state: StateVector, subset, layout: RegisterLayout | None) -> tuple[int, ...]:
    if isinstance(subset, QubitSubset):
        qubits = subset.resolve(layout)
    else:
        qubits = tuple(sorted(set(int(q) for q in subset)))
        if not qubits:
            raise ValueError("qubit subset must be nonempty")
    for q in qubits:
        if not 0 <= q < state.total_qubits:
            raise IndexError(f"qubit {q} out of range for {state.total_qubits}-qubit state")
    return qubits


def _subset_matrix(amps: np.ndarray, total: int, qubits: Sequence[int]) -> np.ndarray:
    """Amplitudes as a (2**k, 2**(total-k)) matrix, row index over ``qubits``."""
    tensor = amps.reshape((2,) * total)
    # tensor axis i holds qubit total-1-i
    keep = [total - 1 - q for q in reversed(qubits)]
    rest = [i for i in range(total) if i not in set(keep)]
    return np.transpose(tensor, keep + rest).reshape(1 << len(qubits), -1)


def reduced_density(
    state: StateVector,
    subset: QubitSubset | Sequence[int],
    layout: RegisterLayout | None = None,
    cap: int = RDM_QUBIT_CAP,
) -> ReducedDensityMatrix:
    qubits = _as_qubits(state, subset, layout)
    if len(qubits) > cap:
        raise ValueError(f"subset of {len(qubits)} qubits exceeds the cap of {cap}")
    k = kernels.active
    if len(qubits) == 1:
        rho = k.single_qubit_rdm(state.amps, qubits[0])
    elif len(qubits) == 2:
        rho = k.two_qubit_rdm(state.amps, qubits[0], qubits[1])
    else:
        m = _subset_matrix(state.amps, state.total_qubits, qubits)
        rho = m @ m.conj().T
    return ReducedDensityMatrix(qubits, rho)


def subset_entropy(state: StateVector, qubits: Sequence[int]) -> float:
    """Entropy of a subset of a pure state, via the smaller side of the cut."""
    qubits = tuple(sorted(qubits))
    total = state.total_qubits
    if len(qubits) == total:
        return 0.0
    if len(qubits) <= 2:
        return entropy(reduced_density(state, qubits))
    m = _subset_matrix(state.amps, total, qubits)
    gram = m @ m.conj().T if m.shape[0] <= m.shape[1] else m.T @ m.conj()
    return entropy(gram)


def register_entropy(state: StateVector, layout: RegisterLayout) -> float:
    """Entanglement between the two registers, from the lower (smaller) register."""
    m = state.amps.reshape(layout.upper_dim, layout.lower_dim)
    return entropy(m.T @ m.conj())


def per_qubit_entropies(state: StateVector, qubits: Sequence[int] | None = None) -> np.ndarray:
    if qubits is None:
        qubits = range(state.total_qubits)
    k = kernels.active
    return np.array([entropy(k.single_qubit_rdm(state.amps, q)) for q in qubits])


def entanglement_pattern(state: StateVector, tol: float = PATTERN_TOL) -> list[bool]:
    """Per-qubit flag: single-qubit entropy above ``tol``."""
    return [bool(e > tol) for e in per_qubit_entropies(state)]


# -- partial transpose -----------------------------------------------------


def partial_transpose(matrix: np.ndarray, positions: Iterable[int], k: int) -> np.ndarray:
    """Transpose the qubits at ``positions`` (bit positions within the matrix)."""
    t = matrix.reshape((2,) * (2 * k))
    perm = list(range(2 * k))
    for pos in positions:
        row, col = k - 1 - pos, 2 * k - 1 - pos
        perm[row], perm[col] = perm[col], perm[row]
    return np.transpose(t, perm).reshape(1 << k, 1 << k)


def negativity(rdm: ReducedDensityMatrix, part: QubitSubset | Sequence[int], layout: RegisterLayout | None = None) -> float:
    """Tr|rho^T_part| - 1 for the cut ``part`` | rest within ``rdm.qubits``."""
    part_q = part.resolve(layout) if isinstance(part, QubitSubset) else tuple(sorted(set(part)))
    if not part_q:
        raise ValueError("negativity part must be nonempty")
    if len(part_q) >= len(rdm.qubits):
        raise ValueError("negativity part must be a proper subset")
    where = {q: t for t, q in enumerate(rdm.qubits)}
    try:
        positions = [where[q] for q in part_q]
    except KeyError as exc:
        raise ValueError(f"qubit {exc.args[0]} is not in the reduced matrix") from None
    pt = partial_transpose(rdm.matrix, positions, len(rdm.qubits))
    mu = hermitian_eigenvalues(pt)
    eta = float(np.abs(mu).sum() - 1.0)
    if eta < -NEG_EIG_TOL:
        raise NumericalError(f"negativity {eta:.3e} below zero")
    return max(eta, 0.0)


# -- concurrence -----------------------------------------------------------


def concurrence_eof(rdm2: ReducedDensityMatrix | np.ndarray, clamp: bool = True) -> tuple[float, float]:
    """Two-qubit concurrence and entanglement of formation.

    ``clamp=False`` skips the max(., 0) on the concurrence and returns the
    signed value; the resulting "E_f" is a diagnostic, not an entanglement
    measure (it is nonzero for separable states).
    """
    rho = rdm2.matrix if isinstance(rdm2, ReducedDensityMatrix) else np.asarray(rdm2)
    if rho.shape != (4, 4):
        raise ValueError(f"concurrence needs a 4x4 matrix, got {rho.shape}")
    rho_tilde = _SIGMA_YY @ rho.conj() @ _SIGMA_YY
    # eigenvalues of rho*rho_tilde equal those of sqrt(rho) rho_tilde sqrt(rho)
    w, v = np.linalg.eigh((rho + rho.conj().T) / 2)
    sqrt_rho = (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T
    r = sqrt_rho @ rho_tilde @ sqrt_rho
    lam = np.sqrt(np.clip(np.linalg.eigvalsh((r + r.conj().T) / 2), 0.0, None))[::-1]
    c = float(lam[0] - lam[1] - lam[2] - lam[3])
    if clamp:
        c = min(max(c, 0.0), 1.0)
    eof = binary_entropy(0.5 + 0.5 * math.sqrt(max(1.0 - c * c, 0.0)))
    return c, eof


# -- subset iteration ------------------------------------------------------


@dataclass(frozen=True)
class SubsetMode:
    """Enumerate every subset (``all``) or draw ``count`` distinct ones."""

    kind: str = "all"
    count: int = DEFAULT_SAMPLE_COUNT
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("all", "sample"):
            raise ValueError(f"unknown subset mode {self.kind!r}")
        if self.count < 1:
            raise ValueError("sample count must be positive")

    @classmethod
    def parse(cls, text: str, seed: int = 0) -> "SubsetMode":
        if text == "all":
            return cls("all", seed=seed)
        name, _, count = text.partition(":")
        if name != "sample":
            raise ValueError(f"subset mode must be 'all' or 'sample:COUNT', got {text!r}")
        return cls("sample", int(count) if count else DEFAULT_SAMPLE_COUNT, seed)

    @property
    def label(self) -> str:
        return "all" if self.kind == "all" else f"sample:{self.count}"


ALL = SubsetMode()


def iter_subsets(width: int, k: int, mode: SubsetMode = ALL, all_cap: int | None = None) -> Iterator[tuple[int, ...]]:
    if not 1 <= k <= width:
        raise ValueError(f"subset size {k} out of range 1..{width}")
    total = math.comb(width, k)
    if mode.kind == "all" or mode.count >= total:
        if mode.kind == "all" and all_cap is not None and total > all_cap:
            raise ValueError(f"C({width},{k}) = {total} subsets exceeds the all-mode cap {all_cap}")
        yield from itertools.combinations(range(width), k)
        return
    rng = np.random.default_rng([mode.seed, width, k])
    seen: set[tuple[int, ...]] = set()
    while len(seen) < mode.count:
        s = tuple(sorted(int(i) for i in rng.choice(width, size=k, replace=False)))
        if s in seen:
            continue
        seen.add(s)
        yield s


def subset_entropy_average(
    state: StateVector,
    layout: RegisterLayout,
    register: Scope | str,
    size: int,
    mode: SubsetMode = ALL,
    all_cap: int | None = SUBSET_ALL_COUNT,
) -> float:
    """Mean entropy over size-``size`` subsets of one register."""
    qubits = register_qubits(layout, register)
    values = [
        subset_entropy(state, [qubits[i] for i in s])
        for s in iter_subsets(len(qubits), size, mode, all_cap)
    ]
    return math.fsum(values) / len(values)


# -- negativity scans ------------------------------------------------------


@dataclass
class NegativityScan:
    per_size_mean: dict[int, float]
    per_size_count: dict[int, int]
    max: float

    def mean(self, size: int) -> float:
        return self.per_size_mean[size]


def negativity_scan(
    rdm: ReducedDensityMatrix,
    mode: SubsetMode = ALL,
    sizes: Iterable[int] | None = None,
    width_cap: int = NEGATIVITY_WIDTH_CAP,
) -> NegativityScan:
    """Negativity over bipartitions of ``rdm.qubits`` with parts of size 1..w//2.

    In all mode the w/2 cut is evaluated once per complementary pair.
    """
    w = len(rdm.qubits)
    if w > width_cap:
        raise ValueError(f"register of width {w} exceeds the negativity cap {width_cap}")
    if w < 2:
        raise ValueError("negativity needs at least two qubits")
    sizes = range(1, w // 2 + 1) if sizes is None else sizes
    means, counts = {}, {}
    top = 0.0
    for k in sizes:
        values = []
        for s in iter_subsets(w, k, mode):
            if mode.kind == "all" and 2 * k == w and 0 not in s:
                continue
            values.append(negativity(rdm, [rdm.qubits[i] for i in s]))
        means[k] = math.fsum(values) / len(values)
        counts[k] = len(values)
        top = max(top, max(values))
    return NegativityScan(means, counts, top)


def register_rdm(state: StateVector, layout: RegisterLayout, register: Scope | str) -> ReducedDensityMatrix:
    scope = Scope(register)
    if scope is Scope.UPPER:
        m = state.amps.reshape(layout.upper_dim, layout.lower_dim)
        return ReducedDensityMatrix(layout.upper_qubits, m @ m.conj().T)
    if scope is Scope.LOWER:
        m = state.amps.reshape(layout.upper_dim, layout.lower_dim)
        return ReducedDensityMatrix(layout.lower_qubits, m.T @ m.conj())
    raise ValueError("register rdm needs the upper or lower scope")


# -- reports ---------------------------------------------------------------


@dataclass
class AnalyticsOptions:
    entropy: bool = True
    subsets: bool = True
    negativity: bool = True
    eof: bool = True
    pattern: bool = True
    mode: SubsetMode = ALL
    eof_pairs: str = "all"

    @classmethod
    def one_qubit(cls) -> "AnalyticsOptions":
        return cls(subsets=False, negativity=False, eof=False)


@dataclass
class EntanglementReport:
    checkpoint: CheckpointId
    run_id: str = ""
    register_entropy: float | None = None
    per_qubit_entropy: list[float] = field(default_factory=list)
    subset_entropy_averages: dict[tuple[str, int], float] = field(default_factory=dict)
    negativity_results: dict[tuple[str, str], float] = field(default_factory=dict)
    pairwise_eof: dict[tuple[int, int], float] = field(default_factory=dict)
    pattern: list[bool] = field(default_factory=list)

    def max_negativity(self, register: str) -> float:
        return self.negativity_results.get((register, "max"), 0.0)

    def to_dict(self) -> dict:
        return {
            "checkpoint": self.checkpoint.label,
            "run_id": self.run_id,
            "register_entropy": self.register_entropy,
            "per_qubit_entropy": list(self.per_qubit_entropy),
            "subset_entropy_averages": {
                f"{reg}:{k}": v for (reg, k), v in self.subset_entropy_averages.items()
            },
            "negativity_results": {f"{reg}:{key}": v for (reg, key), v in self.negativity_results.items()},
            "pairwise_eof": {f"{a}-{b}": v for (a, b), v in self.pairwise_eof.items()},
            "pattern": list(self.pattern),
        }


def _eof_pairs(layout: RegisterLayout, which: str, total: int) -> list[tuple[int, int]]:
    if which == "cross":
        return [(lo, up) for lo in layout.lower_qubits for up in layout.upper_qubits]
    return list(itertools.combinations(range(total), 2))


def build_report(
    state: StateVector,
    layout: RegisterLayout,
    checkpoint: CheckpointId,
    options: AnalyticsOptions | None = None,
    run_id: str = "",
) -> EntanglementReport:
    """Every enabled measure at one checkpoint.

    A post-measurement snapshot holds the lower register only; register-level
    quantities then refer to that register alone.
    """
    opts = options or AnalyticsOptions()
    report = EntanglementReport(checkpoint, run_id)
    lower_only = state.total_qubits == layout.n
    if not lower_only and state.total_qubits != layout.total:
        raise ValueError("state does not match register layout")
    if lower_only:
        registers = {Scope.LOWER.value: tuple(range(layout.n))}
    else:
        registers = {Scope.UPPER.value: layout.upper_qubits, Scope.LOWER.value: layout.lower_qubits}

    if opts.entropy:
        if not lower_only:
            report.register_entropy = register_entropy(state, layout)
        report.per_qubit_entropy = per_qubit_entropies(state).tolist()
    if opts.pattern:
        if report.per_qubit_entropy:
            report.pattern = [e > PATTERN_TOL for e in report.per_qubit_entropy]
        else:
            report.pattern = entanglement_pattern(state)
    if opts.subsets:
        for name, qubits in registers.items():
            for size in range(1, len(qubits) + 1):
                values = [
                    subset_entropy(state, [qubits[i] for i in s])
                    for s in iter_subsets(len(qubits), size, opts.mode, SUBSET_ALL_COUNT)
                ]
                report.subset_entropy_averages[(name, size)] = math.fsum(values) / len(values)
    if opts.negativity:
        for name, qubits in registers.items():
            if len(qubits) < 2:
                continue
            if lower_only:
                m = state.amps.reshape(-1, 1)
                rdm = ReducedDensityMatrix(qubits, m @ m.conj().T)
            else:
                rdm = register_rdm(state, layout, name)
            scan = negativity_scan(rdm, opts.mode)
            for size, value in scan.per_size_mean.items():
                report.negativity_results[(name, f"size:{size}")] = value
            report.negativity_results[(name, "max")] = scan.max
    if opts.eof:
        pairs = (
            list(itertools.combinations(range(state.total_qubits), 2))
            if lower_only
            else _eof_pairs(layout, opts.eof_pairs, state.total_qubits)
        )
        for a, b in pairs:
            _, eof = concurrence_eof(reduced_density(state, (a, b)))
            report.pairwise_eof[(a, b)] = eof
    return report


def check_trace_options(layout: RegisterLayout, options: AnalyticsOptions) -> None:
    """Reject all-mode analytics that would not finish in reasonable time."""
    if options.negativity:
        if layout.upper_width > NEGATIVITY_WIDTH_CAP:
            raise ValueError(
                f"negativity scans need registers of at most {NEGATIVITY_WIDTH_CAP} qubits; "
                f"the upper register has {layout.upper_width}"
            )
        if options.mode.kind == "all" and layout.upper_width > NEGATIVITY_ALL_WIDTH:
            raise ValueError(
                f"all-mode negativity is limited to {NEGATIVITY_ALL_WIDTH}-qubit registers; "
                "use --subset-mode sample:COUNT"
            )
    if options.subsets and options.mode.kind == "all" and layout.total > SUBSET_ALL_TOTAL_QUBITS:
        raise ValueError(
            f"all-mode subset entropies are limited to {SUBSET_ALL_TOTAL_QUBITS} qubits; "
            "use --subset-mode sample:COUNT"
        )


def per_qubit_entropy_delta(
    before: EntanglementReport, after: EntanglementReport, layout: RegisterLayout
) -> float:
    """Summed change of upper-register single-qubit entropies across the IQFT."""
    if before.run_id != after.run_id:
        raise ValueError(f"reports come from different runs: {before.run_id!r} vs {after.run_id!r}")
    if before.checkpoint.stage is not Stage.MODEXP or after.checkpoint.stage is not Stage.IQFT:
        raise ValueError("delta needs the last modexp report and the IQFT report")
    if len(before.per_qubit_entropy) != layout.total or len(after.per_qubit_entropy) != layout.total:
        raise ValueError("reports lack per-qubit entropies for the full state")
    return math.fsum(after.per_qubit_entropy[q] - before.per_qubit_entropy[q] for q in layout.upper_qubits)
