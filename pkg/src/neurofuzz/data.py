"""CSV ingestion, min-max normalization, 70/30 splitting, synthetic data.

CSV dialect: comma separated, UTF-8, '.' decimal separator, one header row,
last column is the regression target.  Lines starting with '#' are comments
(the synthetic generator writes its version tag as one).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError, InvalidParameterError

SYNTH_VERSION = "neurofuzz-synth v1"

# Frozen v1 synthetic schema standing in for an instrumented HVAC unit:
# four physical inputs and an exergy-destruction target.
HVAC_INPUTS = [
    ("ambient_temperature_c", "C", 10.0, 40.0),
    ("air_flow_kg_s", "kg/s", 0.1, 2.0),
    ("water_flow_kg_s", "kg/s", 0.05, 1.0),
    ("relative_humidity_pct", "%", 30.0, 95.0),
]
HVAC_TARGET = ("exergy_destruction_kj_s", "KJ/s")


def hvac_target_v1(temp, air, water, humidity):
    """Frozen v1 target surface (KJ/s), noiseless:

        0.8 + 0.035 (T - 10) a + 2.0 a w + 0.01 (h - 30) w + 0.002 (T - 25)^2

    Reference point: (25, 1.0, 0.5, 60) -> 2.475 exactly.
    """
    return (0.8
            + 0.035 * (temp - 10.0) * air
            + 2.0 * air * water
            + 0.01 * (humidity - 30.0) * water
            + 0.002 * (temp - 25.0) ** 2)


@dataclass
class Dataset:
    """Numeric regression dataset: inputs X, target y, names, and units."""

    input_names: list[str]
    target_name: str
    X: np.ndarray
    y: np.ndarray
    units: list[str]  # one per input, target unit last (empty when unknown)

    def __post_init__(self):
        self.X = np.ascontiguousarray(self.X, dtype=np.float64)
        self.y = np.ascontiguousarray(self.y, dtype=np.float64)
        if self.X.ndim != 2:
            raise DataError(f"X must be 2-D, got shape {self.X.shape}")
        if self.X.shape[1] != len(self.input_names):
            raise DataError(
                f"{len(self.input_names)} input names but X has {self.X.shape[1]} columns")
        if self.y.shape != (self.X.shape[0],):
            raise DataError(
                f"X has {self.X.shape[0]} rows but y has shape {self.y.shape}")
        if len(self.units) != len(self.input_names) + 1:
            raise DataError("units must list one entry per input plus the target")
        if self.X.size and not np.isfinite(self.X).all():
            raise DataError("X contains non-finite values")
        if self.y.size and not np.isfinite(self.y).all():
            raise DataError("y contains non-finite values")

    @property
    def n_samples(self) -> int:
        return self.X.shape[0]

    @property
    def n_inputs(self) -> int:
        return self.X.shape[1]


@dataclass
class NormalizationRecord:
    """Per-column min/max observed on the training split only."""

    input_min: np.ndarray
    input_max: np.ndarray
    target_min: float
    target_max: float

    def __post_init__(self):
        self.input_min = np.asarray(self.input_min, dtype=np.float64)
        self.input_max = np.asarray(self.input_max, dtype=np.float64)
        self.target_min = float(self.target_min)
        self.target_max = float(self.target_max)
        if self.input_min.shape != self.input_max.shape:
            raise InvalidParameterError("input_min/input_max shape mismatch")
        if not (self.input_max > self.input_min).all():
            raise InvalidParameterError("normalization needs max > min per column")
        if not self.target_max > self.target_min:
            raise InvalidParameterError("normalization needs target max > min")

    def to_dict(self) -> dict:
        return {
            "input_min": self.input_min.tolist(),
            "input_max": self.input_max.tolist(),
            "target_min": self.target_min,
            "target_max": self.target_max,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "NormalizationRecord":
        return cls(np.array(doc["input_min"]), np.array(doc["input_max"]),
                   doc["target_min"], doc["target_max"])


@dataclass
class Split:
    """Disjoint train/test row indices covering the whole dataset."""

    train_indices: np.ndarray
    test_indices: np.ndarray
    seed: int


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------

def read_csv_columns(path):
    """Parse a CSV into (header, matrix, comment_lines) with strict validation.

    Errors carry the 1-based file line number and the offending column name.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"CSV file not found: {path}")
    header = None
    rows = []
    comments = []
    with path.open(encoding="utf-8", newline="") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\r\n")
            if not line.strip():
                continue
            if line.lstrip().startswith("#"):
                comments.append(line)
                continue
            fields = line.split(",")
            if header is None:
                header = [f.strip() for f in fields]
                if any(not name for name in header):
                    raise DataError(f"{path} line {lineno}: empty column name in header")
                if len(set(header)) != len(header):
                    raise DataError(f"{path} line {lineno}: duplicate column names")
                continue
            if len(fields) != len(header):
                raise DataError(
                    f"{path} line {lineno}: expected {len(header)} fields, "
                    f"got {len(fields)}")
            parsed = []
            for col, cell in zip(header, fields):
                try:
                    value = float(cell)
                except ValueError:
                    raise DataError(
                        f"{path} line {lineno}, column '{col}': "
                        f"invalid numeric value {cell.strip()!r}")
                if not math.isfinite(value):
                    raise DataError(
                        f"{path} line {lineno}, column '{col}': "
                        f"non-finite value {cell.strip()!r}")
                parsed.append(value)
            rows.append(parsed)
    if header is None:
        raise DataError(f"{path}: missing header row")
    matrix = np.array(rows, dtype=np.float64) if rows else np.empty((0, len(header)))
    return header, matrix, comments


def load_csv(path) -> Dataset:
    """Load a dataset CSV; the last column is the target."""
    header, matrix, _ = read_csv_columns(path)
    if len(header) < 2:
        raise DataError(f"{path}: need at least one input column plus the target")
    return Dataset(
        input_names=header[:-1],
        target_name=header[-1],
        X=matrix[:, :-1],
        y=matrix[:, -1],
        units=[""] * len(header),
    )


def save_csv(dataset: Dataset, path, comment: str | None = None) -> None:
    """Write the dataset as CSV with full-precision (repr) floats."""
    path = Path(path)
    lines = []
    if comment:
        for part in comment.splitlines():
            lines.append(f"# {part}")
    lines.append(",".join(dataset.input_names + [dataset.target_name]))
    for row, target in zip(dataset.X, dataset.y):
        lines.append(",".join(repr(float(v)) for v in row) + f",{float(target)!r}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# Split and normalization
# ---------------------------------------------------------------------------

def split_70_30(dataset: Dataset, seed: int) -> Split:
    """Seeded uniform shuffle, then a round(0.7 N) / rest prefix split.

    Index arrays are returned sorted; membership, not order, is random.
    """
    n = dataset.n_samples
    if n < 10:
        raise DataError(f"need at least 10 samples to split, got {n}")
    seed = int(seed)
    if seed < 0:
        raise InvalidParameterError(f"seed must be >= 0, got {seed}")
    perm = np.random.default_rng(seed).permutation(n)
    n_train = int(round(0.7 * n))
    return Split(
        train_indices=np.sort(perm[:n_train]),
        test_indices=np.sort(perm[n_train:]),
        seed=int(seed),
    )


def fit_normalization(dataset: Dataset, train_indices) -> NormalizationRecord:
    """Fit per-column min/max on the training rows only (leakage guard)."""
    idx = np.asarray(train_indices, dtype=np.int64)
    if idx.size == 0:
        raise DataError("cannot fit normalization on an empty training split")
    X = dataset.X[idx]
    y = dataset.y[idx]
    x_min = X.min(axis=0)
    x_max = X.max(axis=0)
    for d, name in enumerate(dataset.input_names):
        if not x_max[d] > x_min[d]:
            raise DataError(f"column '{name}' is constant on the training split")
    if not y.max() > y.min():
        raise DataError(f"target '{dataset.target_name}' is constant on the training split")
    return NormalizationRecord(x_min, x_max, float(y.min()), float(y.max()))


def fit_normalization_full_unsafe(dataset: Dataset) -> NormalizationRecord:
    """Fit on ALL rows.  Leaks test information into the record; only for
    single-split experiments with no held-out data."""
    return fit_normalization(dataset, np.arange(dataset.n_samples))


def normalize(dataset: Dataset, record: NormalizationRecord) -> Dataset:
    """Map every column to [0, 1] on the record's training ranges.

    Rows outside the training range map outside [0, 1]; that is expected for
    test data and allowed.
    """
    return Dataset(
        input_names=list(dataset.input_names),
        target_name=dataset.target_name,
        X=normalize_inputs(dataset.X, record),
        y=(dataset.y - record.target_min) / (record.target_max - record.target_min),
        units=list(dataset.units),
    )


def normalize_inputs(X, record: NormalizationRecord) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    return (X - record.input_min) / (record.input_max - record.input_min)


def denormalize_target(values, record: NormalizationRecord) -> np.ndarray:
    """Back to the target's original units (inverse of :func:`normalize`)."""
    values = np.asarray(values, dtype=np.float64)
    return values * (record.target_max - record.target_min) + record.target_min


# ---------------------------------------------------------------------------
# Synthetic data
# ---------------------------------------------------------------------------

def _sinc(x):
    return np.sinc(x / np.pi)  # sin(x)/x with the limit value 1 at x = 0


def gen_synthetic(kind: str, n: int, noise_sigma: float, seed: int) -> Dataset:
    """Deterministic synthetic datasets.

    ``hvac-like``: four inputs drawn uniformly over plausible physical ranges,
    target from :func:`hvac_target_v1` plus Gaussian noise (in KJ/s).

    ``sinc2d``: two inputs on [-10, 10], target sin(x1)/x1 * sin(x2)/x2.
    When n is a perfect square the points form an exact sqrt(n) x sqrt(n)
    grid (the 121-point desk benchmark); otherwise they are drawn uniformly.
    """
    if kind not in ("hvac-like", "sinc2d"):
        raise InvalidParameterError(f"unknown synthetic kind {kind!r}")
    n = int(n)
    if n < 50:
        raise InvalidParameterError(f"synthetic datasets need n >= 50, got {n}")
    noise_sigma = float(noise_sigma)
    if not (math.isfinite(noise_sigma) and noise_sigma >= 0):
        raise InvalidParameterError(f"noise_sigma must be >= 0, got {noise_sigma!r}")
    seed = int(seed)
    if seed < 0:
        raise InvalidParameterError(f"seed must be >= 0, got {seed}")
    rng = np.random.default_rng(seed)

    if kind == "hvac-like":
        cols = [rng.uniform(lo, hi, n) for _, _, lo, hi in HVAC_INPUTS]
        X = np.column_stack(cols)
        y = hvac_target_v1(*cols)
        if noise_sigma > 0:
            y = y + noise_sigma * rng.standard_normal(n)
        return Dataset(
            input_names=[name for name, *_ in HVAC_INPUTS],
            target_name=HVAC_TARGET[0],
            X=X,
            y=y,
            units=[unit for _, unit, *_ in HVAC_INPUTS] + [HVAC_TARGET[1]],
        )

    m = math.isqrt(n)
    if m * m == n:
        axis = np.linspace(-10.0, 10.0, m)
        x1, x2 = np.meshgrid(axis, axis, indexing="ij")
        X = np.column_stack([x1.ravel(), x2.ravel()])
    else:
        X = rng.uniform(-10.0, 10.0, (n, 2))
    y = _sinc(X[:, 0]) * _sinc(X[:, 1])
    if noise_sigma > 0:
        y = y + noise_sigma * rng.standard_normal(n)
    return Dataset(
        input_names=["x1", "x2"],
        target_name="sinc_product",
        X=X,
        y=y,
        units=["", "", ""],
    )


def synth_comment(kind: str, n: int, noise_sigma: float, seed: int) -> str:
    """Version tag written as a CSV comment by the generator CLI."""
    return f"{SYNTH_VERSION} kind={kind} n={n} noise={noise_sigma!r} seed={seed}"
