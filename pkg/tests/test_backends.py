"""Compiled and NumPy kernel backends agree on random inputs."""

import itertools

import numpy as np
import pytest

from neurofuzz.kernels import pybackend

try:
    from neurofuzz.kernels import _speedups
except ImportError:
    _speedups = None

needs_compiled = pytest.mark.skipif(
    _speedups is None, reason="compiled kernels not built")


def _random_problem(rng, n=37, mf_counts=(3, 2, 3)):
    d = len(mf_counts)
    offsets = np.zeros(d + 1, dtype=np.int64)
    np.cumsum(mf_counts, out=offsets[1:])
    total = int(offsets[-1])
    X = rng.uniform(-0.2, 1.2, (n, d))
    centers = rng.uniform(0, 1, total)
    sigmas = rng.uniform(0.05, 0.5, total)
    prem = np.array(list(itertools.product(*(range(c) for c in mf_counts))),
                    dtype=np.int64)
    prem_cols = prem + offsets[:-1]
    return X, centers, sigmas, offsets, np.ascontiguousarray(prem_cols)


@needs_compiled
def test_memberships_agree():
    rng = np.random.default_rng(0)
    for _ in range(20):
        X, centers, sigmas, offsets, _ = _random_problem(rng)
        a = pybackend.memberships(X, centers, sigmas, offsets)
        b = _speedups.memberships(X, centers, sigmas, offsets)
        np.testing.assert_allclose(a, b, rtol=1e-13, atol=0)


@needs_compiled
def test_firing_strengths_agree():
    rng = np.random.default_rng(1)
    for _ in range(20):
        X, centers, sigmas, offsets, prem_cols = _random_problem(rng)
        M = pybackend.memberships(X, centers, sigmas, offsets)
        a = pybackend.firing_strengths(M, prem_cols)
        b = _speedups.firing_strengths(M, prem_cols)
        # identical inputs, identical multiplication order: bitwise equal
        assert a.tolist() == b.tolist()


@needs_compiled
def test_weighted_design_agrees():
    rng = np.random.default_rng(2)
    wbar = rng.random((25, 18))
    xaug = np.column_stack([rng.random((25, 3)), np.ones(25)])
    a = pybackend.weighted_design(wbar, xaug)
    b = _speedups.weighted_design(wbar, xaug)
    assert a.tolist() == b.tolist()


@needs_compiled
def test_premise_gradient_agrees():
    rng = np.random.default_rng(3)
    for _ in range(10):
        X, centers, sigmas, offsets, prem_cols = _random_problem(rng, n=19)
        n, n_rules = X.shape[0], prem_cols.shape[0]
        M = pybackend.memberships(X, centers, sigmas, offsets)
        W = pybackend.firing_strengths(M, prem_cols)
        S = W.sum(axis=1)
        wbar = W / S[:, None]
        F = rng.standard_normal((n, n_rules))
        Y = (wbar * F).sum(axis=1)
        weights = rng.standard_normal(n)
        az, asig = pybackend.premise_gradient_accum(
            X, wbar, F, Y, weights, centers, sigmas, offsets, prem_cols)
        bz, bsig = _speedups.premise_gradient_accum(
            X, wbar, F, Y, weights, centers, sigmas, offsets, prem_cols)
        np.testing.assert_allclose(az, bz, rtol=1e-10, atol=1e-12)
        np.testing.assert_allclose(asig, bsig, rtol=1e-10, atol=1e-12)


def test_backend_name_reports():
    import neurofuzz
    assert neurofuzz.backend_name() in ("python", "compiled")


def test_python_backend_env_override():
    import os
    import subprocess
    import sys
    code = "import neurofuzz; print(neurofuzz.backend_name())"
    out = subprocess.run(
        [sys.executable, "-c", code],
        capture_output=True, text=True,
        env={**os.environ, "NEUROFUZZ_BACKEND": "python"})
    assert out.stdout.strip() == "python"
