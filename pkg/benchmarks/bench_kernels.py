"""Compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--qubits 21] [--repeat 5]

Times each kernel on a random state, then one full N=119 circuit per backend.
"""
import argparse
import time

import numpy as np

from shorent import kernels
from shorent.circuit import ShorInstance, run_full


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def kernel_cases(mod, amps, total):
    perm = np.arange(1 << 7, dtype=np.int64)
    perm[:119] = np.arange(119) * 92 % 119
    mid = total // 2
    return {
        "hadamard": lambda: mod.hadamard(amps, mid),
        "pauli_x": lambda: mod.pauli_x(amps, mid),
        "controlled_phase": lambda: mod.controlled_phase(amps, 3, mid, np.exp(0.3j)),
        "swap": lambda: mod.swap(amps, 2, total - 1),
        "controlled_permute": lambda: mod.controlled_permute(amps, total - 1, 7, perm),
        "single_qubit_rdm": lambda: mod.single_qubit_rdm(amps, mid),
        "two_qubit_rdm": lambda: mod.two_qubit_rdm(amps, 1, mid),
    }


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--qubits", type=int, default=21)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    names = kernels.available()
    rng = np.random.default_rng(0)
    base = rng.normal(size=1 << args.qubits) + 1j * rng.normal(size=1 << args.qubits)
    base /= np.linalg.norm(base)

    results = {}
    for name in names:
        mod = kernels.load(name)
        amps = base.copy()
        for case, fn in kernel_cases(mod, amps, args.qubits).items():
            results[(case, name)] = best_of(fn, args.repeat)

    inst = ShorInstance(119, 92)
    for name in names:
        kernels.active = kernels.load(name)
        results[("run_full N=119", name)] = best_of(lambda: run_full(inst), max(1, args.repeat // 2))

    header = f"{'kernel':<20}" + "".join(f"{n + ' ms':>14}" for n in names)
    if len(names) == 2:
        header += f"{'speedup':>10}"
    print(f"{args.qubits} qubits, best of {args.repeat}")
    print(header)
    for case in dict.fromkeys(c for c, _ in results):
        row = f"{case:<20}" + "".join(f"{results[(case, n)] * 1e3:>14.2f}" for n in names)
        if len(names) == 2:
            row += f"{results[(case, names[1])] / results[(case, names[0])]:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
