#!/usr/bin/env python3
"""Compare the compiled and numpy kernel backends.

Times the five per-step kernels on realistic degenerate-profile data and a
full 1D prediction-correction step, for every backend importable in this
environment, reporting best-of wall time per call and the speedup of the
compiled extension over the numpy reference.  Agreement between backends is
checked before timing so the numbers always describe implementations that
compute the same thing.

Usage:
    python3 benchmarks/kernel_benchmark.py [--sizes 400 2560] [--repeats 5]
"""

import argparse
import contextlib
import time

import numpy as np

from frontcap import kernels, oracles
from frontcap.grid import Grid1D
from frontcap.kernels import available_backends
from frontcap.stepper1d import ModelParams, State1D, correct_velocity, step


@contextlib.contextmanager
def use_backend(module):
    """Route the dispatching wrappers through ``module`` for the duration."""
    previous = kernels._impl
    kernels._impl = module
    try:
        yield
    finally:
        kernels._impl = previous


def best_time(fn, repeats, target=0.05):
    """Best per-call time over ``repeats`` batches of auto-sized loops."""
    fn()  # warm-up: first call may pay allocation/JIT-style costs
    inner = 1
    while True:
        t0 = time.perf_counter()
        for _ in range(inner):
            fn()
        elapsed = time.perf_counter() - t0
        if elapsed >= target or inner >= 1 << 20:
            break
        inner *= 2
    best = elapsed / inner
    for _ in range(repeats - 1):
        t0 = time.perf_counter()
        for _ in range(inner):
            fn()
        best = min(best, (time.perf_counter() - t0) / inner)
    return best


def make_cases(n):
    """Name -> argument tuple for each raw kernel, on an n-cell profile.

    The density is a Barenblatt profile (so the degenerate vacuum branches
    are exercised), the velocity the corrected one, and the tridiagonal
    system diagonally dominant like the prediction matrix.
    """
    grid = Grid1D(-5.0, 5.0, n)
    rho = oracles.barenblatt(grid.cell_centers(), 0.1, 3.0, 1.0)
    dx = grid.dx
    slopes = kernels.minmod_slopes(rho, dx)
    left, right = kernels.reconstruct(rho, slopes, dx)
    u = correct_velocity(rho, 3.0, dx)
    lam = 0.4 / max(2.0 * float(np.max(np.abs(u))), 1.0)
    rng = np.random.default_rng(7)
    lower = -rng.uniform(0.1, 1.0, n - 1)
    upper = -rng.uniform(0.1, 1.0, n - 1)
    diag = 2.0 + np.concatenate(([0.0], np.abs(lower))) \
        + np.concatenate((np.abs(upper), [0.0]))
    rhs = rng.standard_normal(n)
    return {
        "minmod_slopes": (rho, dx),
        "reconstruct": (rho, slopes, dx),
        "llf_flux": (left, right, u),
        "transport_update": (left, right, u, lam, None, None),
        "thomas_solve": (lower, diag, upper, rhs),
    }


def _flat(result):
    if isinstance(result, tuple):
        return np.concatenate([np.asarray(part).ravel() for part in result])
    return np.asarray(result).ravel()


def check_agreement(backends, cases):
    """Largest elementwise deviation between backends, per kernel."""
    worst = {}
    for name, args in cases.items():
        results = [_flat(getattr(module, name)(*args))
                   for module in backends.values()]
        worst[name] = max((float(np.max(np.abs(a - results[0])))
                           for a in results[1:]), default=0.0)
    return worst


def bench_step(module, n, repeats):
    grid = Grid1D(-5.0, 5.0, n)
    rho = oracles.barenblatt(grid.cell_centers(), 0.1, 3.0, 1.0)
    state = State1D.from_density(grid, rho, 3.0)
    params = ModelParams(m=3.0, cfl_factor=0.4)
    with use_backend(module):
        return best_time(lambda: step(state, params), repeats)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", type=int, nargs="+", default=[400, 2560],
                        help="grid sizes to benchmark (default: 400 2560)")
    parser.add_argument("--repeats", type=int, default=5,
                        help="timing batches per measurement (default: 5)")
    args = parser.parse_args(argv)

    backends = available_backends()
    names = list(backends)
    print(f"backends: {', '.join(names)} (active: {kernels.BACKEND})")
    if "compiled" not in backends:
        print("note: compiled extension not importable; showing numpy only")

    header = f"{'kernel':<18} {'n':>6} " + "".join(
        f"{name + ' [us]':>14}" for name in names)
    if len(names) > 1:
        header += f"{'speedup':>10}"

    for n in args.sizes:
        cases = make_cases(n)
        worst = check_agreement(backends, cases)
        bad = {k: v for k, v in worst.items() if v > 1e-12}
        if bad:
            raise SystemExit(f"backends disagree at n={n}: {bad}")
        print(f"\n{header}")
        rows = [(name, {bk: best_time(
            lambda m=module, a=cases[name]: getattr(m, name)(*a),
            args.repeats) for bk, module in backends.items()})
            for name in cases]
        rows.append(("full 1d step", {bk: bench_step(module, n, args.repeats)
                                      for bk, module in backends.items()}))
        for name, times in rows:
            line = f"{name:<18} {n:>6} " + "".join(
                f"{times[bk] * 1e6:>14.2f}" for bk in names)
            if len(names) > 1:
                line += f"{times['numpy'] / times['compiled']:>9.1f}x"
            print(line)


if __name__ == "__main__":
    main()
