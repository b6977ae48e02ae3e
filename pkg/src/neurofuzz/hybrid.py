"""Hybrid learning: least-squares consequents, gradient-descent premises.

Each epoch solves the ridge-regularized normal equations for all rule
coefficients with the premises frozen, then takes one full-batch descent
step on every (center, sigma): a step of fixed length ``learning_rate``
along the loss gradient direction, the classic backward-pass rule.  The
returned model carries the parameters of the best-observed training-RMSE
epoch.

The normal equations are solved through a Cholesky factorization with one
iterative-refinement step, in whichever of the primal (p x p) or dual
(n x n) form is smaller.  The dual form never materializes the design
matrix: for per-rule blocks [w̄_i x, w̄_i] the Gram matrix factors into
(W̄ W̄ᵀ) ∘ (X₊ X₊ᵀ), an elementwise product of two small Gram matrices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg as sla

from . import kernels as K
from . import metrics
from ._blas import single_thread_blas
from .errors import InvalidParameterError, NumericalError, SingularSystemError
from .network import (SIGMA_MIN, AnfisModel, PackedModel, augment,
                      forward_arrays, pack_model, predict_from_strengths,
                      _check_input_matrix, _write_back)

DEFAULT_RIDGE = 1e-8


@dataclass
class HybridConfig:
    """Settings for :func:`train_hybrid`."""

    epochs: int = 100
    learning_rate: float = 0.01
    ridge_lambda: float = DEFAULT_RIDGE
    early_stop_patience: int = 10  # 0 disables early stopping

    def __post_init__(self):
        if int(self.epochs) != self.epochs or self.epochs < 1:
            raise InvalidParameterError(f"epochs must be an integer >= 1, got {self.epochs!r}")
        self.epochs = int(self.epochs)
        if not (math.isfinite(self.learning_rate) and self.learning_rate >= 0):
            raise InvalidParameterError(
                f"learning_rate must be >= 0, got {self.learning_rate!r}")
        if not (math.isfinite(self.ridge_lambda) and self.ridge_lambda >= 0):
            raise InvalidParameterError(
                f"ridge_lambda must be >= 0, got {self.ridge_lambda!r}")
        if int(self.early_stop_patience) != self.early_stop_patience or self.early_stop_patience < 0:
            raise InvalidParameterError(
                f"early_stop_patience must be an integer >= 0, got {self.early_stop_patience!r}")
        self.early_stop_patience = int(self.early_stop_patience)


@dataclass
class EpochLog:
    """One training epoch: RMSE after the LSE solve, sigma clamps from the
    gradient step taken at the end of the epoch (0 when no step was taken)."""

    epoch: int
    train_rmse: float
    clamp_count: int


class LseWorkspace:
    """Preallocated buffers for repeated forward + solve calls at one shape."""

    def __init__(self, n: int, d: int, total_mf: int, n_rules: int):
        p = n_rules * (d + 1)
        self.n, self.p = n, p
        self.M = np.empty((n, total_mf))
        self.W = np.empty((n, n_rules))
        self.Wtmp = np.empty((n, n_rules)) if d > 1 else None
        self.S = np.empty(n)
        self.wbar = np.empty((n, n_rules))
        self.F = np.empty((n, n_rules))
        self.WF = np.empty((n, n_rules))
        self.y = np.empty(n)
        self.coeffs = np.empty((n_rules, d + 1))
        self.resid = np.empty(n)
        self.dual = n < p
        k = n if self.dual else p
        self.G = np.empty((k, k))
        self.Gf = np.empty((k, k))   # factorization scratch; G stays intact
        self.rhs = np.empty(k)
        self.rhs2 = np.empty(k)
        if self.dual:
            self.B = np.empty((n, n_rules))
        else:
            self.A = np.empty((n, p))


def _cho_solve_refined(G, Gf, rhs, lam, out, scratch):
    """Solve (G + lam I) out = rhs via Cholesky with one refinement step.

    The diagonal shift happens in place; callers rebuild G on every use.
    """
    k = G.shape[0]
    G.ravel()[:: k + 1] += lam
    np.copyto(Gf, G)
    try:
        factor = sla.cho_factor(Gf, lower=True, overwrite_a=True, check_finite=False)
    except np.linalg.LinAlgError:
        raise SingularSystemError(
            "normal equations are rank deficient; set ridge_lambda > 0")
    np.copyto(out, rhs)
    sla.cho_solve(factor, out, overwrite_b=True, check_finite=False)
    # one iterative-refinement step keeps the residual near machine level
    np.dot(G, out, out=scratch)
    np.subtract(rhs, scratch, out=scratch)
    sla.cho_solve(factor, scratch, overwrite_b=True, check_finite=False)
    out += scratch
    return out


def solve_consequents_arrays(packed: PackedModel, X, xaug, y, lam,
                             ws: LseWorkspace | None = None, xaxa=None):
    """Ridge LSE for all rule coefficients with the premises frozen.

    Returns (coeffs, predictions, sse); when a workspace is supplied the
    returned arrays are views into it, valid until its next use.
    """
    n, d = X.shape
    n_rules = packed.prem_cols.shape[0]
    if ws is None:
        ws = LseWorkspace(n, d, packed.centers.shape[0], n_rules)
    _, _, _, wbar, _, _ = forward_arrays(packed, X, xaug, ws)
    if ws.dual:
        if xaxa is None:
            xaxa = np.dot(xaug, xaug.T)
        G = np.dot(wbar, wbar.T, out=ws.G)
        np.multiply(G, xaxa, out=G)
        alpha = _cho_solve_refined(G, ws.Gf, y, lam, ws.rhs, ws.rhs2)
        np.multiply(wbar, alpha[:, None], out=ws.B)
        coeffs = np.dot(ws.B.T, xaug, out=ws.coeffs)
    else:
        A = K.weighted_design(wbar, xaug, out=ws.A)
        G = np.dot(A.T, A, out=ws.G)
        rhs = np.dot(A.T, y)
        c = _cho_solve_refined(G, ws.Gf, rhs, lam, ws.rhs, ws.rhs2)
        coeffs = ws.coeffs
        np.copyto(coeffs.ravel(), c)
    _, ypred = predict_from_strengths(wbar, xaug, coeffs,
                                      F_out=ws.F, WF_out=ws.WF, y_out=ws.y)
    np.subtract(ypred, y, out=ws.resid)
    sse = float(np.dot(ws.resid, ws.resid))
    return coeffs, ypred, sse


def solve_consequents(model: AnfisModel, X, y, *,
                      ridge_lambda: float = DEFAULT_RIDGE) -> float:
    """Set the model's consequents to the ridge LSE minimizer; returns the
    residual sum of squares.  Raises on empty data, degenerate-firing points,
    and rank-deficient systems with zero ridge."""
    X = _check_input_matrix(model, X)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if X.shape[0] == 0:
        raise InvalidParameterError("training set must be nonempty")
    if y.shape != (X.shape[0],):
        raise InvalidParameterError(
            f"targets must have shape ({X.shape[0]},), got {y.shape}")
    packed = pack_model(model)
    with single_thread_blas():
        coeffs, _, sse = solve_consequents_arrays(packed, X, augment(X), y,
                                                  float(ridge_lambda))
    for i, rule in enumerate(model.rules):
        rule.coefficients = np.array(coeffs[i])
    return sse


def consequent_gradient(model: AnfisModel, X, y, *,
                        ridge_lambda: float = DEFAULT_RIDGE) -> np.ndarray:
    """Gradient of SSE + ridge w.r.t. the flattened consequents:
    2 (AᵀA c - Aᵀ y + lam c).  Diagnostic/test helper."""
    X = _check_input_matrix(model, X)
    y = np.ascontiguousarray(y, dtype=np.float64)
    packed = pack_model(model)
    xaug = augment(X)
    _, _, _, wbar, _, _ = forward_arrays(packed, X, xaug)
    A = K.weighted_design(wbar, xaug)
    c = packed.coeffs.ravel()
    return 2.0 * (A.T @ (A @ c) - A.T @ y + float(ridge_lambda) * c)


def premise_loss_gradient(packed: PackedModel, X, wbar, F, ypred, y,
                          out_z=None, out_s=None):
    """Gradient of the mean squared error w.r.t. all (center, sigma)."""
    n = X.shape[0]
    weights = (2.0 / n) * (ypred - y)
    return K.premise_gradient_accum(X, wbar, F, ypred, weights,
                                    packed.centers, packed.sigmas,
                                    packed.offsets, packed.prem_cols,
                                    out_z=out_z, out_s=out_s)


def train_hybrid(model: AnfisModel, X, y, config: HybridConfig | None = None,
                 *, log_path=None) -> tuple[AnfisModel, list[EpochLog]]:
    """Train a copy of ``model``; returns (best model, per-epoch logs)."""
    config = config or HybridConfig()
    X = _check_input_matrix(model, X)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if X.shape[0] == 0:
        raise InvalidParameterError("training set must be nonempty")
    if y.shape != (X.shape[0],):
        raise InvalidParameterError(
            f"targets must have shape ({X.shape[0]},), got {y.shape}")

    work = model.copy()
    packed = pack_model(work)
    n, d = X.shape
    xaug = augment(X)
    ws = LseWorkspace(n, d, packed.centers.shape[0], packed.prem_cols.shape[0])
    xaxa = np.dot(xaug, xaug.T) if ws.dual else None
    lam = config.ridge_lambda
    gz = np.empty_like(packed.centers)
    gs = np.empty_like(packed.sigmas)

    logs: list[EpochLog] = []
    best_rmse = math.inf
    best = None
    since_best = 0
    with single_thread_blas():
        for epoch in range(1, config.epochs + 1):
            coeffs, ypred, _ = solve_consequents_arrays(packed, X, xaug, y, lam,
                                                        ws=ws, xaxa=xaxa)
            try:
                train_rmse = metrics.rmse(ypred, y)
            except InvalidParameterError:
                train_rmse = math.inf
            if not math.isfinite(train_rmse):
                raise NumericalError(f"non-finite training loss at epoch {epoch}")
            if train_rmse < best_rmse:
                best_rmse = train_rmse
                best = (packed.centers.copy(), packed.sigmas.copy(), coeffs.copy())
                since_best = 0
            else:
                since_best += 1
            stop = (epoch == config.epochs
                    or (config.early_stop_patience > 0
                        and since_best >= config.early_stop_patience))
            clamp_count = 0
            if not stop:
                premise_loss_gradient(packed, X, ws.wbar, ws.F, ypred, y,
                                      out_z=gz, out_s=gs)
                if not (np.isfinite(gz).all() and np.isfinite(gs).all()):
                    raise NumericalError(f"non-finite premise gradient at epoch {epoch}")
                gnorm = math.sqrt(np.dot(gz, gz) + np.dot(gs, gs))
                if gnorm > 0.0:
                    step = config.learning_rate / gnorm
                    packed.centers -= step * gz
                    packed.sigmas -= step * gs
                    clamp_count = int(np.count_nonzero(packed.sigmas < SIGMA_MIN))
                    np.maximum(packed.sigmas, SIGMA_MIN, out=packed.sigmas)
            logs.append(EpochLog(epoch, train_rmse, clamp_count))
            if stop:
                break

    centers, sigmas, coeffs = best
    _write_back(work, centers, sigmas, coeffs)
    if log_path is not None:
        write_epoch_log(logs, log_path)
    return work, logs


def write_epoch_log(logs, path) -> None:
    """CSV dump of the per-epoch records: epoch, train_rmse, clamp_count."""
    lines = ["epoch,train_rmse,clamp_count"]
    lines += [f"{e.epoch},{e.train_rmse!r},{e.clamp_count}" for e in logs]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
