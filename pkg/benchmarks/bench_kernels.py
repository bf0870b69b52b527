#!/usr/bin/env python3
"""Timing comparison of the numba kernels against the numpy fallback.

Kernels are timed at sizes matching real workloads (contour quadrature,
Newton inversion batches, shell-integral energies), then two end-to-end
operations are timed with each backend patched in.  Requires numba; if
it is missing, only the numpy column is reported.

Usage: python3 benchmarks/bench_kernels.py [--repeats N]
"""

import argparse
import contextlib
import time

import numpy as np

from dtoda import backend, homogeneous
from dtoda.conformal import ExteriorMap
from dtoda.inverse import InverseProblem, cold_start_map, solve_domain
from dtoda.moments import forward_moments

_KERNELS = ("laurent_eval", "laurent_deriv", "newton_invert",
            "power_sums", "log_energy_pairs")


def _workloads():
    rng = np.random.default_rng(7)
    r = 1.3
    u = (rng.uniform(-1, 1, 7) + 1j * rng.uniform(-1, 1, 7)) * 0.04
    w = np.exp(2j * np.pi * np.arange(2048) / 2048) * rng.uniform(1.0, 2.0, 2048)
    z = backend.laurent_eval(r, u, w)
    w0 = w * (1.0 + 0.05 * rng.standard_normal(2048))
    g = np.conj(z) * 1j * w * backend.laurent_deriv(r, u, w)
    rho = np.linspace(1.0, 3.0, 160)
    C = ((rng.uniform(-1, 1, (160, 64)) + 1j * rng.uniform(-1, 1, (160, 64)))
         * 0.5 ** np.arange(1, 65))
    wt = rng.uniform(0.5, 1.5, 160)
    c0 = rng.uniform(0.5, 1.5, 160)
    return {
        "laurent_eval": (r, u, w),
        "laurent_deriv": (r, u, w),
        "newton_invert": (r, u, z, w0, 1e-12, 60),
        "power_sums": (z, g, 24),
        "log_energy_pairs": (rho, wt, c0, C, 64),
    }


def _time(fn, args, repeats):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


@contextlib.contextmanager
def _patched(impl):
    saved = {k: getattr(backend, k) for k in _KERNELS}
    for k in _KERNELS:
        setattr(backend, k, impl[k])
    try:
        yield
    finally:
        for k, v in saved.items():
            setattr(backend, k, v)


def _end_to_end():
    d = homogeneous(1.0, 1.0, 0.0, 100.0)
    m = ExteriorMap(1.0, np.array([0.0, 0.12 + 0.04j, 0.02], complex))
    targets = forward_moments(m, d, 4, verify=False)

    def moments():
        forward_moments(m, d, 16, M=2048, verify=True)

    def invert():
        solve_domain(InverseProblem(targets, d, cold_start_map(targets, d)))

    return {"forward_moments M=2048": moments, "solve_domain cold": invert}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeats", type=int, default=7)
    opts = ap.parse_args()

    try:
        numba_impl = backend._build_numba()
    except ImportError:
        numba_impl = None
    numpy_impl = backend._NUMPY_IMPL

    work = _workloads()
    if numba_impl is not None:
        for k in _KERNELS:  # compile before timing
            numba_impl[k](*work[k])

    print("active backend: %s" % backend.BACKEND)
    header = "%-28s %12s %12s %9s" % ("kernel", "numpy [ms]", "numba [ms]", "speedup")
    print(header)
    print("-" * len(header))
    for k in _KERNELS:
        t_np = _time(numpy_impl[k], work[k], opts.repeats)
        if numba_impl is None:
            print("%-28s %12.3f %12s %9s" % (k, 1e3 * t_np, "n/a", "n/a"))
            continue
        t_nb = _time(numba_impl[k], work[k], opts.repeats)
        print("%-28s %12.3f %12.3f %8.1fx" % (k, 1e3 * t_np, 1e3 * t_nb, t_np / t_nb))
    for name, fn in _end_to_end().items():
        with _patched(numpy_impl):
            fn()
            t_np = _time(fn, (), opts.repeats)
        if numba_impl is None:
            print("%-28s %12.3f %12s %9s" % (name, 1e3 * t_np, "n/a", "n/a"))
            continue
        with _patched(numba_impl):
            fn()
            t_nb = _time(fn, (), opts.repeats)
        print("%-28s %12.3f %12.3f %8.1fx" % (name, 1e3 * t_np, 1e3 * t_nb, t_np / t_nb))


if __name__ == "__main__":
    main()
