"""Backend benchmark: compiled kernels vs the NumPy fallback.

Times each kernel and one full tuning-objective evaluation at several batch
sizes.  Run with ``python -m neurofuzz.bench``.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from ._blas import single_thread_blas
from .data import gen_synthetic
from .hybrid import LseWorkspace, solve_consequents_arrays
from .kernels import backend_name, pybackend
from .network import augment, build_grid_model, pack_model

try:
    from .kernels import _speedups
except ImportError:
    _speedups = None


def _time(fn, repeats: int) -> float:
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def _problem(n: int, seed: int = 0):
    dataset = gen_synthetic("hvac-like", max(n, 50), 0.01, seed)
    X = np.ascontiguousarray(
        (dataset.X - dataset.X.min(axis=0))
        / (dataset.X.max(axis=0) - dataset.X.min(axis=0)))[:n]
    y = np.ascontiguousarray(dataset.y[:n])
    y = (y - y.min()) / (y.max() - y.min()) if n > 1 else y
    model = build_grid_model(dataset.input_names, X.min(axis=0) - 0.01,
                             X.max(axis=0) + 0.01, 3)
    return pack_model(model), X, y


def _bench_backend(impl, packed, X, y, inner: int, repeats: int):
    n, d = X.shape
    total_mf = packed.centers.shape[0]
    n_rules = packed.prem_cols.shape[0]
    xaug = augment(X)
    M = np.empty((n, total_mf))
    W = np.empty((n, n_rules))
    Wtmp = np.empty((n, n_rules))
    A = np.empty((n, n_rules * (d + 1)))
    gz = np.empty(total_mf)
    gs = np.empty(total_mf)
    impl.memberships(X, packed.centers, packed.sigmas, packed.offsets, M)
    impl.firing_strengths(M, packed.prem_cols, W, Wtmp)
    S = W.sum(axis=1)
    wbar = W / S[:, None]
    F = xaug @ packed.coeffs.T
    Y = (wbar * F).sum(axis=1)
    weights = np.full(n, 2.0 / n)

    def loop(fn):
        def run():
            for _ in range(inner):
                fn()
        return run

    rows = {}
    rows["memberships"] = _time(loop(lambda: impl.memberships(
        X, packed.centers, packed.sigmas, packed.offsets, M)), repeats) / inner
    rows["firing_strengths"] = _time(loop(lambda: impl.firing_strengths(
        M, packed.prem_cols, W, Wtmp)), repeats) / inner
    rows["weighted_design"] = _time(loop(lambda: impl.weighted_design(
        wbar, xaug, A)), repeats) / inner
    rows["premise_gradient"] = _time(loop(lambda: impl.premise_gradient_accum(
        X, wbar, F, Y, weights, packed.centers, packed.sigmas,
        packed.offsets, packed.prem_cols, gz, gs)), repeats) / inner
    return rows


def _bench_fitness(packed, X, y, inner: int, repeats: int):
    """Full premise-LSE objective evaluation with the selected backend."""
    n, d = X.shape
    xaug = augment(X)
    ws = LseWorkspace(n, d, packed.centers.shape[0], packed.prem_cols.shape[0])
    xaxa = xaug @ xaug.T if ws.dual else None

    def one():
        solve_consequents_arrays(packed, X, xaug, y, 1e-8, ws=ws, xaxa=xaxa)

    def run():
        for _ in range(inner):
            one()

    return _time(run, repeats) / inner


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", type=int, nargs="+", default=[1, 64, 210, 2000])
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args(argv)

    backends = [("python", pybackend)]
    if _speedups is not None:
        backends.append(("compiled", _speedups))
    print(f"active backend: {backend_name()} "
          f"(compiled available: {_speedups is not None})")

    with single_thread_blas():
        for n in args.sizes:
            packed, X, y = _problem(n)
            inner = max(1, 2000 // max(n, 1))
            results = {name: _bench_backend(impl, packed, X, y, inner, args.repeats)
                       for name, impl in backends}
            print(f"\nbatch size {n} (4 inputs x 3 MFs, 81 rules); "
                  f"microseconds per call")
            kernels = list(next(iter(results.values())))
            header = f"{'kernel':20s}" + "".join(f"{name:>12s}" for name, _ in backends)
            if len(backends) == 2:
                header += f"{'speedup':>10s}"
            print(header)
            for kernel in kernels:
                line = f"{kernel:20s}"
                for name, _ in backends:
                    line += f"{results[name][kernel] * 1e6:12.1f}"
                if len(backends) == 2:
                    ratio = results["python"][kernel] / results["compiled"][kernel]
                    line += f"{ratio:9.2f}x"
                print(line)

        packed, X, y = _problem(210)
        per = _bench_fitness(packed, X, y, 50, args.repeats)
        print(f"\nfull premise-LSE objective, n=210 ({backend_name()} backend): "
              f"{per * 1e3:.3f} ms per evaluation")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
