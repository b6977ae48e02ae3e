"""Pure NumPy implementations of the hot evaluation kernels.

Signatures here are the backend contract; the compiled twin in
``_speedups.pyx`` mirrors them exactly.  All kernels accept optional
preallocated output buffers so tight loops can run allocation-free.
Index arrays are int64, float arrays are C-contiguous float64.
"""

from __future__ import annotations

import numpy as np

# Smallest positive double: membership degrees are floored here so they stay
# strictly positive for any finite input.
MF_FLOOR = 5e-324


def memberships(X, centers, sigmas, offsets, out=None):
    """Gaussian membership degrees, shape (n_samples, total_mf_count).

    ``offsets[d]:offsets[d+1]`` delimits input d's membership functions
    inside ``centers``/``sigmas``, so per-input MF counts may differ.
    """
    n = X.shape[0]
    if out is None:
        out = np.empty((n, centers.shape[0]))
    for d in range(X.shape[1]):
        lo, hi = int(offsets[d]), int(offsets[d + 1])
        seg = out[:, lo:hi]
        np.subtract(X[:, d, None], centers[None, lo:hi], out=seg)
        np.divide(seg, sigmas[None, lo:hi], out=seg)
        np.multiply(seg, seg, out=seg)
        np.multiply(seg, -0.5, out=seg)
        np.exp(seg, out=seg)
    np.maximum(out, MF_FLOOR, out=out)
    return out


def firing_strengths(M, prem_cols, out=None, tmp=None):
    """Rule firing strengths: per-rule product of selected membership columns.

    ``prem_cols[i, d]`` is the global membership column used by rule i for
    input d.  The product runs left to right over inputs, matching the
    sequential product of the per-rule degrees exactly.
    """
    n = M.shape[0]
    n_rules, n_inputs = prem_cols.shape
    if out is None:
        out = np.empty((n, n_rules))
    np.take(M, np.ascontiguousarray(prem_cols[:, 0]), axis=1, out=out)
    if n_inputs > 1 and tmp is None:
        tmp = np.empty((n, n_rules))
    for d in range(1, n_inputs):
        np.take(M, np.ascontiguousarray(prem_cols[:, d]), axis=1, out=tmp)
        np.multiply(out, tmp, out=out)
    return out


def weighted_design(wbar, xaug, out=None):
    """LSE design matrix: per-rule blocks [w̄_i·x_1 ... w̄_i·x_d, w̄_i]."""
    n, n_rules = wbar.shape
    p = xaug.shape[1]
    if out is None:
        out = np.empty((n, n_rules * p))
    np.multiply(wbar[:, :, None], xaug[:, None, :], out=out.reshape(n, n_rules, p))
    return out


def premise_gradient_accum(X, wbar, F, Y, weights, centers, sigmas, offsets,
                           prem_cols, out_z=None, out_s=None):
    """Accumulate sum_k weights[k] * dY_k/d(center, sigma) per membership.

    Derivation: Y = sum_i w̄_i f_i with w̄_i = W_i / S, so
    dY/dtheta = sum_i (f_i - Y) * w̄_i * d(log m)/dtheta over the rules that
    use the membership, with d(log m)/dz = (x - z)/sigma^2 and
    d(log m)/dsigma = (x - z)^2 / sigma^3.
    """
    total = centers.shape[0]
    if out_z is None:
        out_z = np.zeros(total)
    else:
        out_z[:] = 0.0
    if out_s is None:
        out_s = np.zeros(total)
    else:
        out_s[:] = 0.0
    E = (F - Y[:, None]) * wbar * weights[:, None]
    for d in range(X.shape[1]):
        lo, hi = int(offsets[d]), int(offsets[d + 1])
        m = hi - lo
        local = prem_cols[:, d] - lo
        onehot = (local[:, None] == np.arange(m)[None, :]).astype(float)
        rule_sums = E @ onehot                                  # (n, m)
        dz = X[:, d, None] - centers[None, lo:hi]               # (n, m)
        u = dz / (sigmas[None, lo:hi] ** 2)
        out_z[lo:hi] += np.einsum("km,km->m", rule_sums, u)
        out_s[lo:hi] += np.einsum("km,km->m", rule_sums, u * dz / sigmas[None, lo:hi])
    return out_z, out_s
