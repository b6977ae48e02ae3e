"""Sugeno-type fuzzy network: membership functions, rule base, forward pass.

The network computes, for an input vector x of dimension d:

  layer 1   m_{d,t}(x_d) = exp(-(x_d - z)^2 / (2 sigma^2))      per MF
  layer 2   W_i = product of the premise degrees of rule i
  layer 3   w̄_i = W_i / sum_j W_j
  layer 4   f_i = c_{i,1} x_1 + ... + c_{i,d} x_d + c_{i,d+1}
  layer 5   Y   = sum_i w̄_i f_i

Parameter vector layout (used by :func:`flatten_params` and the tuners):
all premise (center, sigma) pairs in input-major, MF-minor order, then, when
consequents are included, rule coefficients in rule-major order with the
constant term last within each rule.
"""

from __future__ import annotations

import copy
import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels as K
from .data import NormalizationRecord
from .errors import DegenerateInputError, InvalidParameterError

# Floor for Gaussian spreads (normalized units); updates clamp here.
SIGMA_MIN = 1e-4
# Membership degrees are floored at the smallest positive double.
MF_FLOOR = K.MF_FLOOR
# A total firing strength below this makes the point degenerate.
FIRING_EPS = 1e-300

MODEL_FORMAT = "neurofuzz-model"
LAYOUT_VERSION = 1


@dataclass
class MembershipFunction:
    """Gaussian membership with unit peak at ``center`` and spread ``sigma``."""

    center: float
    sigma: float

    def __post_init__(self):
        self.center = float(self.center)
        self.sigma = float(self.sigma)
        if not math.isfinite(self.center):
            raise InvalidParameterError(f"MF center must be finite, got {self.center!r}")
        if not (math.isfinite(self.sigma) and self.sigma > 0.0):
            raise InvalidParameterError(f"MF sigma must be finite and > 0, got {self.sigma!r}")

    def evaluate(self, x: float) -> float:
        return mf_evaluate(self, x)


def mf_evaluate(mf: MembershipFunction, x: float) -> float:
    """Membership degree of ``x``; always in (0, 1], exactly 1 at the center."""
    x = float(x)
    if not math.isfinite(x):
        raise InvalidParameterError(f"membership input must be finite, got {x!r}")
    if not (math.isfinite(mf.sigma) and mf.sigma > 0.0):
        raise InvalidParameterError(f"MF sigma must be finite and > 0, got {mf.sigma!r}")
    z = (x - mf.center) / mf.sigma
    return max(math.exp(-0.5 * z * z), MF_FLOOR)


@dataclass
class InputVariable:
    """A named input dimension with its ordered membership functions."""

    name: str
    mfs: list[MembershipFunction]

    def __post_init__(self):
        if not self.mfs:
            raise InvalidParameterError(f"input '{self.name}' needs at least one MF")


@dataclass
class Rule:
    """One Sugeno rule: per-input MF indices plus linear output coefficients."""

    premise: tuple[int, ...]
    coefficients: np.ndarray  # one slope per input, constant term last

    def __post_init__(self):
        self.premise = tuple(int(i) for i in self.premise)
        self.coefficients = np.asarray(self.coefficients, dtype=np.float64)
        if self.coefficients.ndim != 1:
            raise InvalidParameterError("rule coefficients must be a flat vector")


class AnfisModel:
    """Full grid-partition rule base over a list of input variables."""

    def __init__(self, inputs: list[InputVariable], rules: list[Rule]):
        if not inputs:
            raise InvalidParameterError("model needs at least one input")
        d = len(inputs)
        counts = [len(v.mfs) for v in inputs]
        expected = set(itertools.product(*(range(c) for c in counts)))
        seen = set()
        for rule in rules:
            if len(rule.premise) != d:
                raise InvalidParameterError(
                    f"rule premise length {len(rule.premise)} != input count {d}")
            for dim, idx in enumerate(rule.premise):
                if not 0 <= idx < counts[dim]:
                    raise InvalidParameterError(
                        f"premise index {idx} out of range for input {dim}")
            if rule.coefficients.shape != (d + 1,):
                raise InvalidParameterError(
                    f"rule needs {d + 1} coefficients, got {rule.coefficients.shape}")
            if rule.premise in seen:
                raise InvalidParameterError(f"duplicate rule premise {rule.premise}")
            seen.add(rule.premise)
        if seen != expected:
            raise InvalidParameterError(
                f"rules must cover the full grid partition exactly once "
                f"({len(seen)} rules given, {len(expected)} expected)")
        self.inputs = inputs
        self.rules = rules

    @property
    def input_count(self) -> int:
        return len(self.inputs)

    @property
    def rule_count(self) -> int:
        return len(self.rules)

    @property
    def mf_counts(self) -> list[int]:
        return [len(v.mfs) for v in self.inputs]

    @property
    def total_mf_count(self) -> int:
        return sum(self.mf_counts)

    def copy(self) -> "AnfisModel":
        return copy.deepcopy(self)


@dataclass
class ForwardTrace:
    """Layer-by-layer record of one forward evaluation."""

    mf_values: list[np.ndarray]          # per input: degrees of its MFs
    firing_strengths: np.ndarray         # per rule W_i
    normalized_strengths: np.ndarray     # per rule w̄_i
    rule_outputs: np.ndarray             # per rule f_i
    output: float


def build_grid_model(input_names, x_min, x_max, mf_count=3) -> AnfisModel:
    """Grid-initialized model: centers evenly spaced over each input's
    observed [min, max], sigma = range / (2 (mf_count - 1)) so adjacent MFs
    cross near 0.5.  Consequent coefficients start at zero.
    """
    input_names = list(input_names)
    x_min = np.asarray(x_min, dtype=np.float64)
    x_max = np.asarray(x_max, dtype=np.float64)
    if x_min.shape != (len(input_names),) or x_max.shape != (len(input_names),):
        raise InvalidParameterError("x_min/x_max must have one entry per input")
    counts = ([int(mf_count)] * len(input_names)
              if np.isscalar(mf_count) else [int(c) for c in mf_count])
    inputs = []
    for name, lo, hi, m in zip(input_names, x_min, x_max, counts):
        if not hi > lo:
            raise InvalidParameterError(f"input '{name}' has empty range [{lo}, {hi}]")
        if m < 1:
            raise InvalidParameterError(f"input '{name}' needs at least one MF")
        span = hi - lo
        if m == 1:
            centers = [0.5 * (lo + hi)]
            sigma = span / 2.0
        else:
            centers = np.linspace(lo, hi, m)
            sigma = span / (2.0 * (m - 1))
        sigma = max(sigma, SIGMA_MIN)
        inputs.append(InputVariable(name, [MembershipFunction(float(c), sigma) for c in centers]))
    d = len(inputs)
    rules = [Rule(premise, np.zeros(d + 1))
             for premise in itertools.product(*(range(c) for c in counts))]
    return AnfisModel(inputs, rules)


# ---------------------------------------------------------------------------
# Packed array view used by the kernels
# ---------------------------------------------------------------------------

@dataclass
class PackedModel:
    """Flat array view of a model's parameters and topology."""

    centers: np.ndarray      # (total_mf,)
    sigmas: np.ndarray       # (total_mf,)
    offsets: np.ndarray      # (d+1,) int64; input d owns columns offsets[d]:offsets[d+1]
    prem_cols: np.ndarray    # (n_rules, d) int64 global membership columns
    coeffs: np.ndarray       # (n_rules, d+1)
    mf_counts: list[int] = field(default_factory=list)


def pack_model(model: AnfisModel) -> PackedModel:
    counts = model.mf_counts
    offsets = np.zeros(len(counts) + 1, dtype=np.int64)
    np.cumsum(counts, out=offsets[1:])
    centers = np.array([mf.center for v in model.inputs for mf in v.mfs])
    sigmas = np.array([mf.sigma for v in model.inputs for mf in v.mfs])
    prem_cols = np.empty((model.rule_count, model.input_count), dtype=np.int64)
    coeffs = np.empty((model.rule_count, model.input_count + 1))
    for i, rule in enumerate(model.rules):
        for d, idx in enumerate(rule.premise):
            prem_cols[i, d] = offsets[d] + idx
        coeffs[i] = rule.coefficients
    return PackedModel(centers, sigmas, offsets, prem_cols, coeffs, counts)


def _write_back(model: AnfisModel, centers, sigmas, coeffs=None) -> None:
    k = 0
    for variable in model.inputs:
        for mf in variable.mfs:
            mf.center = float(centers[k])
            mf.sigma = float(sigmas[k])
            k += 1
    if coeffs is not None:
        for i, rule in enumerate(model.rules):
            rule.coefficients = np.array(coeffs[i], dtype=np.float64)


def augment(X: np.ndarray) -> np.ndarray:
    """Append the constant-term column of ones."""
    return np.column_stack([X, np.ones(X.shape[0])])


def predict_from_strengths(wbar, xaug, coeffs, F_out=None, WF_out=None, y_out=None):
    """Layers 4-5 given normalized strengths: rule outputs and blended output.

    Shared by the forward pass, the LSE solver, and the tuning objective so
    the three produce bitwise-identical predictions for identical parameters.
    """
    F = np.dot(xaug, coeffs.T, out=F_out)
    WF = np.multiply(wbar, F, out=WF_out)
    y = np.sum(WF, axis=1, out=y_out)
    return F, y


def forward_arrays(packed: PackedModel, X, xaug=None, ws=None, on_degenerate="raise"):
    """Batched forward pass on packed parameters.

    Returns (M, W, S, wbar, F, y).  ``on_degenerate`` is ``"raise"`` or
    ``"flag"``; when flagging, the return is (..., y, degenerate_index) with
    index -1 when every point fired.
    """
    if xaug is None:
        xaug = augment(X)
    M = K.memberships(X, packed.centers, packed.sigmas, packed.offsets,
                      out=None if ws is None else ws.M)
    W = K.firing_strengths(M, packed.prem_cols,
                           out=None if ws is None else ws.W,
                           tmp=None if ws is None else ws.Wtmp)
    S = np.sum(W, axis=1, out=None if ws is None else ws.S)
    bad = -1
    if S.min() < FIRING_EPS:
        bad = int(np.argmax(S < FIRING_EPS))
        if on_degenerate == "raise":
            raise DegenerateInputError(
                f"all rule firing strengths underflowed to zero at sample index "
                f"{bad}, point {X[bad].tolist()}")
        return M, W, S, None, None, None, bad
    wbar = np.divide(W, S[:, None], out=None if ws is None else ws.wbar)
    F, y = predict_from_strengths(
        wbar, xaug, packed.coeffs,
        F_out=None if ws is None else ws.F,
        WF_out=None if ws is None else ws.WF,
        y_out=None if ws is None else ws.y)
    if on_degenerate == "raise":
        return M, W, S, wbar, F, y
    return M, W, S, wbar, F, y, bad


def _check_input_matrix(model: AnfisModel, X) -> np.ndarray:
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.input_count:
        raise InvalidParameterError(
            f"input matrix must have shape (n, {model.input_count}), got {X.shape}")
    if X.size and not np.isfinite(X).all():
        raise InvalidParameterError("input matrix contains non-finite values")
    return X


def forward(model: AnfisModel, x) -> ForwardTrace:
    """Evaluate one input vector through all five layers."""
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if x.shape != (model.input_count,):
        raise InvalidParameterError(
            f"input must have {model.input_count} entries, got shape {x.shape}")
    if not np.isfinite(x).all():
        raise InvalidParameterError(f"input contains non-finite values: {x.tolist()}")
    packed = pack_model(model)
    X = np.ascontiguousarray(x[None, :])
    M, W, S, wbar, F, y = forward_arrays(packed, X)
    off = packed.offsets
    mf_values = [M[0, off[d]:off[d + 1]].copy() for d in range(model.input_count)]
    return ForwardTrace(
        mf_values=mf_values,
        firing_strengths=W[0].copy(),
        normalized_strengths=wbar[0].copy(),
        rule_outputs=F[0].copy(),
        output=float(y[0]),
    )


def forward_batch(model: AnfisModel, X) -> np.ndarray:
    """Predicted outputs for every row of X."""
    X = _check_input_matrix(model, X)
    if X.shape[0] == 0:
        return np.empty(0)
    packed = pack_model(model)
    *_, y = forward_arrays(packed, X)
    return y


def premise_gradient(model: AnfisModel, x, trace: ForwardTrace) -> np.ndarray:
    """dY/d(center, sigma) for every MF, as a (2 * total_mf_count,) vector in
    the flatten layout (center then sigma per MF, input-major, MF-minor).

    ``trace`` must come from :func:`forward` on the same (model, x).
    """
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    packed = pack_model(model)
    W = np.asarray(trace.firing_strengths, dtype=np.float64)
    if W.sum() < FIRING_EPS:
        raise DegenerateInputError("trace has zero total firing strength")
    wbar = np.ascontiguousarray(trace.normalized_strengths[None, :])
    F = np.ascontiguousarray(trace.rule_outputs[None, :])
    Y = np.array([trace.output])
    gz, gs = K.premise_gradient_accum(
        np.ascontiguousarray(x[None, :]), wbar, F, Y, np.ones(1),
        packed.centers, packed.sigmas, packed.offsets, packed.prem_cols)
    out = np.empty(2 * packed.centers.shape[0])
    out[0::2] = gz
    out[1::2] = gs
    return out


# ---------------------------------------------------------------------------
# Parameter vector <-> model
# ---------------------------------------------------------------------------

def param_count(model: AnfisModel, include_consequents: bool = False) -> int:
    n = 2 * model.total_mf_count
    if include_consequents:
        n += model.rule_count * (model.input_count + 1)
    return n


def flatten_params(model: AnfisModel, include_consequents: bool = False) -> np.ndarray:
    packed = pack_model(model)
    out = np.empty(param_count(model, include_consequents))
    t = packed.centers.shape[0]
    out[0:2 * t:2] = packed.centers
    out[1:2 * t:2] = packed.sigmas
    if include_consequents:
        out[2 * t:] = packed.coeffs.ravel()
    return out


def restore_params(model: AnfisModel, vector, include_consequents: bool = False) -> int:
    """Write a flat parameter vector back into the model (in place).

    Sigma entries below :data:`SIGMA_MIN` are clamped; the clamp count is
    returned so trainers can report it.
    """
    vector = np.asarray(vector, dtype=np.float64)
    expected = param_count(model, include_consequents)
    if vector.shape != (expected,):
        raise InvalidParameterError(
            f"parameter vector must have length {expected}, got {vector.shape}")
    if not np.isfinite(vector).all():
        raise InvalidParameterError("parameter vector contains non-finite values")
    t = model.total_mf_count
    centers = vector[0:2 * t:2]
    sigmas = vector[1:2 * t:2].copy()
    clamped = int(np.count_nonzero(sigmas < SIGMA_MIN))
    np.maximum(sigmas, SIGMA_MIN, out=sigmas)
    coeffs = None
    if include_consequents:
        coeffs = vector[2 * t:].reshape(model.rule_count, model.input_count + 1)
    _write_back(model, centers, sigmas, coeffs)
    return clamped


# ---------------------------------------------------------------------------
# JSON serialization
# ---------------------------------------------------------------------------

@dataclass
class LoadedModel:
    model: AnfisModel
    normalization: NormalizationRecord | None
    target_name: str
    units: list[str]
    meta: dict


def save_model(model: AnfisModel, path, *, normalization=None,
               target_name: str = "target", units=None, meta=None) -> None:
    """Write the model, its topology, and the normalization record as JSON.

    Floats go through ``repr`` (up to 17 significant digits), so a reload
    reproduces every parameter bit-exactly.
    """
    doc = {
        "format": MODEL_FORMAT,
        "layout_version": LAYOUT_VERSION,
        "inputs": [
            {
                "name": v.name,
                "centers": [mf.center for mf in v.mfs],
                "sigmas": [mf.sigma for mf in v.mfs],
            }
            for v in model.inputs
        ],
        "rules": [
            {"premise": list(r.premise), "coefficients": r.coefficients.tolist()}
            for r in model.rules
        ],
        "target_name": target_name,
        "units": list(units) if units is not None else [],
        "normalization": normalization.to_dict() if normalization is not None else None,
        "meta": dict(meta) if meta else {},
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def load_model(path) -> LoadedModel:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise InvalidParameterError(f"model file not found: {path}")
    except json.JSONDecodeError as exc:
        raise InvalidParameterError(f"model file {path} is not valid JSON: {exc}")
    if doc.get("format") != MODEL_FORMAT:
        raise InvalidParameterError(f"{path} is not a {MODEL_FORMAT} document")
    if doc.get("layout_version") != LAYOUT_VERSION:
        raise InvalidParameterError(
            f"unsupported layout_version {doc.get('layout_version')!r}")
    inputs = [
        InputVariable(spec["name"],
                      [MembershipFunction(c, s)
                       for c, s in zip(spec["centers"], spec["sigmas"])])
        for spec in doc["inputs"]
    ]
    rules = [Rule(tuple(r["premise"]), np.array(r["coefficients"]))
             for r in doc["rules"]]
    record = doc.get("normalization")
    return LoadedModel(
        model=AnfisModel(inputs, rules),
        normalization=NormalizationRecord.from_dict(record) if record else None,
        target_name=doc.get("target_name", "target"),
        units=list(doc.get("units", [])),
        meta=doc.get("meta", {}),
    )
