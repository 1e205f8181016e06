#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-numpy fallback, and the
two master-equation engines against each other.

Usage: python benchmarks/bench_backends.py [--repeats N]
"""

import argparse
import math
import time

import numpy as np

from qrsim import _kernels_py, analytic, oracle
from qrsim.model import SystemParams, TimeGrid

try:
    from qrsim import _kernels_cy
except ImportError:
    _kernels_cy = None


def timeit(fn, repeats):
    best = math.inf
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def bench_rate(repeats):
    args = dict(
        sigma0=-1.0, t0=0.0, dt=2.5e-4, n_steps=200_000,
        pref=0.005, w_qr=400.0, kappa=1.0,
        n_plus=0.3176, n_minus=2.2, wt_plus=2.0, wt_minus=0.0,
        lor_plus=0.1176, lor_minus=2.0, full=True,
    )
    rows = []
    t_py = timeit(lambda: _kernels_py.rate_rk4(**args), repeats)
    rows.append(("rate-equation RK4 (200k steps)", "python", t_py, 1.0))
    if _kernels_cy is not None:
        t_cy = timeit(lambda: _kernels_cy.rate_rk4(**args), repeats)
        rows.append(("rate-equation RK4 (200k steps)", "cython", t_cy, t_py / t_cy))
    return rows


def bench_lindblad(repeats):
    n = 10
    d = 2 * n
    p = SystemParams(omega_q=60.0, omega_r=50.0, omega_d=51.0, g=1.0,
                     kappa=1.0, epsilon=0.5, n_th=0.1)
    ops = oracle.build_operators(oracle.HilbertSpec(n))
    cfg = oracle.OracleConfig(frame="lab", hilbert=oracle.HilbertSpec(n))
    terms = oracle.build_hamiltonian(p, cfg, ops)
    a1 = math.sqrt(p.kappa * (p.n_th + 1)) * ops.a
    a2 = math.sqrt(p.kappa * p.n_th) * ops.adag
    drift = -1j * terms.static - 0.5 * (a1.conj().T @ a1 + a2.conj().T @ a2)
    rho0 = oracle.sector_steady_state(p, -1, oracle.HilbertSpec(n))
    steps = 2000

    def run(kernels):
        rho = np.array(rho0, order="C", copy=True)
        kernels.lindblad_step_interval(
            rho, drift, a1, a2, terms.drive_plus, terms.drive_minus,
            terms.omega_d, 0.0, 5e-4, steps,
        )
        return rho

    label = f"lab-frame Lindblad RK4 (dim {d}, {steps} steps)"
    rows = []
    t_py = timeit(lambda: run(_kernels_py), repeats)
    rows.append((label, "python", t_py, 1.0))
    if _kernels_cy is not None:
        t_cy = timeit(lambda: run(_kernels_cy), repeats)
        rows.append((label, "cython", t_cy, t_py / t_cy))
        assert np.max(np.abs(run(_kernels_py) - run(_kernels_cy))) < 1e-12
    return rows


def bench_engines(repeats):
    # same physics through both engines: the powered transfer matrix makes
    # long time-independent runs affordable
    p = SystemParams(omega_q=5400.0, omega_r=5000.0, omega_d=5001.0, g=20.0,
                     kappa=1.0, epsilon=0.0, n_th=0.2)
    spec = oracle.HilbertSpec(10)
    grid = TimeGrid(0.0, 100.0, 100)
    rho0 = oracle.sector_steady_state(p, -1, spec)
    times = {}
    for engine in ("propagator", "stepper"):
        cfg = oracle.OracleConfig(hilbert=spec, engine=engine)
        times[engine] = timeit(
            lambda: oracle.evolve(rho0, grid, p, cfg), 1 if engine == "stepper" else repeats
        )
    label = f"rotating-frame evolve to t=100/kappa (dim {spec.dim})"
    return [
        (label, "stepper", times["stepper"], 1.0),
        (label, "propagator", times["propagator"], times["stepper"] / times["propagator"]),
    ]


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()
    if _kernels_cy is None:
        print("note: compiled kernels unavailable; python numbers only")
    rows = bench_rate(args.repeats) + bench_lindblad(args.repeats) + bench_engines(args.repeats)
    width = max(len(r[0]) for r in rows)
    print(f"{'workload':<{width}}  {'backend':<10} {'best (s)':>10}  {'speedup':>8}")
    for name, backend, seconds, speedup in rows:
        extra = f"{speedup:8.1f}x" if speedup else "        "
        print(f"{name:<{width}}  {backend:<10} {seconds:>10.4f}  {extra}")


if __name__ == "__main__":
    main()
