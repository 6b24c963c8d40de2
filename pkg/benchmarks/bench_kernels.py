"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5] [--json out.json]

Each kernel runs on the same random inputs under both backends; outputs are
compared before timing so a speedup never hides a wrong answer.
"""
import argparse
import json
import timeit

import numpy as np

from ogm.kernels import get_backend


def _masks(rng, count, n):
    x = rng.integers(0, 2 ** n, size=count, dtype=np.uint64)
    z = rng.integers(0, 2 ** n, size=count, dtype=np.uint64)
    return x, z


def make_cases(seed=0):
    rng = np.random.default_rng(seed)
    n = 14
    tx, tz = _masks(rng, 600, 20)
    bx, bz = _masks(rng, 400, 20)
    outcomes = rng.integers(0, 2 ** n, size=20000, dtype=np.uint64)
    counts = rng.integers(1, 50, size=outcomes.size, dtype=np.int64)
    supps = rng.integers(0, 2 ** n, size=300, dtype=np.uint64)
    psi = rng.standard_normal(2 ** n) + 1j * rng.standard_normal(2 ** n)
    psi /= np.linalg.norm(psi)
    hx, hz = _masks(rng, 200, n)
    coeffs = rng.standard_normal(200)
    return {
        "cover_matrix": lambda k: k.cover_matrix(tx, tz, bx, bz),
        "parity_sums": lambda k: k.parity_sums(outcomes, counts, supps),
        "pauli_expectation": lambda k: np.array([k.pauli_expectation(psi, x, z) for x, z in zip(hx[:50], hz[:50])]),
        "apply_pauli_sum": lambda k: k.apply_pauli_sum(psi, hx, hz, coeffs),
    }


def run(repeat=5, seed=0):
    fast, slow = get_backend("cython"), get_backend("python")
    rows = []
    for name, fn in make_cases(seed).items():
        a, b = np.asarray(fn(fast)), np.asarray(fn(slow))
        if not np.allclose(a, b, rtol=1e-10, atol=1e-10):
            raise AssertionError(f"{name}: backends disagree")
        t_fast = min(timeit.repeat(lambda: fn(fast), number=1, repeat=repeat))
        t_slow = min(timeit.repeat(lambda: fn(slow), number=1, repeat=repeat))
        rows.append({"kernel": name, "cython_s": t_fast, "python_s": t_slow, "speedup": t_slow / t_fast})
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--json")
    args = ap.parse_args()
    rows = run(args.repeat, args.seed)
    print(f"{'kernel':<20}{'cython [s]':>12}{'python [s]':>12}{'speedup':>10}")
    for r in rows:
        print(f"{r['kernel']:<20}{r['cython_s']:>12.5f}{r['python_s']:>12.5f}{r['speedup']:>9.1f}x")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
