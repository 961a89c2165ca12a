"""Benchmark the JIT-compiled correlation-function kernels against the pure
numpy fallbacks.

Run:  python benchmarks/bench_kernels.py
The fallback path can be forced package-wide with OQSOLVE_NO_NUMBA=1.
"""

import time

import numpy as np

from oqsolve import accel


def _time(fn, *args, repeat=5):
    fn(*args)  # warm-up (includes JIT compilation on the accelerated path)
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    rng = np.random.default_rng(7)
    n_terms = 120_000
    # smoothly decaying coefficients, matching the structure of Matsubara sums
    c = (0.5 + np.abs(rng.normal(size=n_terms))) / np.arange(1, n_terms + 1) ** 1.5
    z = np.arange(1, n_terms + 1) * 0.5 + 0j
    tgrid = np.linspace(0.01, 20.0, 200)
    rtol, kmin = 1e-13, 4

    cases = [
        ("exp_sum_eval", accel.exp_sum_eval, accel.exp_sum_eval_numpy,
         (c, z, tgrid, rtol, kmin)),
        ("coeff_full_eval", accel.coeff_full_eval, accel.coeff_full_eval_numpy,
         (c, z, 1.3j, tgrid, rtol, kmin)),
        ("exp_shift_div_eval", accel.exp_shift_div_eval, accel.exp_shift_div_eval_numpy,
         (c, z, 1.3j, tgrid, rtol, kmin)),
        ("laplace_eval", accel.laplace_eval, accel.laplace_eval_numpy,
         (c, z, np.linspace(0.25, 5.0, 200) + 1.0j, rtol, kmin)),
    ]

    print(f"numba enabled: {accel.ENABLE_NUMBA}  (terms={n_terms}, points={tgrid.size})")
    print(f"{'kernel':<20} {'accelerated':>12} {'numpy':>12} {'speedup':>9} {'max diff':>10}")
    for name, fast, slow, args in cases:
        tf = _time(fast, *args)
        ts = _time(slow, *args)
        diff = float(np.max(np.abs(np.atleast_1d(fast(*args)) - np.atleast_1d(slow(*args)))))
        print(f"{name:<20} {tf * 1e3:>10.2f}ms {ts * 1e3:>10.2f}ms {ts / tf:>8.1f}x {diff:>10.2e}")


if __name__ == "__main__":
    main()
