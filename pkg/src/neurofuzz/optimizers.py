"""Population-based tuning of the flattened network parameters.

Both optimizers minimize a fitness callable (training RMSE for the network
objective) over box bounds.  Randomness comes from per-individual substreams
seeded by (seed, iteration, index), so results are bit-identical regardless
of how many evaluation workers run the fitness.

PSO: standard gbest form — inertia-weighted velocity update with cognitive
and social pulls, velocity clamped to a fraction of each dimension's range,
position clamped to the bounds.

GA: real-coded — tournament selection, BLX-0.5 blend crossover, per-gene
Gaussian mutation scaled to 0.1 of the dimension range, elitism.
"""

from __future__ import annotations

import math
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import metrics
from ._blas import single_thread_blas
from .errors import DegenerateInputError, InvalidParameterError, SingularSystemError
from .hybrid import DEFAULT_RIDGE, LseWorkspace, solve_consequents_arrays
from .network import (SIGMA_MIN, AnfisModel, augment, forward_arrays,
                      pack_model, param_count)

MODES = ("premise-lse", "full-vector")


@dataclass
class Bounds:
    """Per-dimension (lower, upper) box for the parameter vector."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        self.lower = np.asarray(self.lower, dtype=np.float64)
        self.upper = np.asarray(self.upper, dtype=np.float64)
        if self.lower.ndim != 1 or self.lower.shape != self.upper.shape:
            raise InvalidParameterError("bounds need matching 1-D lower/upper arrays")
        if self.lower.size == 0:
            raise InvalidParameterError("bounds must cover at least one dimension")
        if not (np.isfinite(self.lower).all() and np.isfinite(self.upper).all()):
            raise InvalidParameterError("bounds must be finite")
        if not (self.lower < self.upper).all():
            bad = int(np.argmin(self.upper - self.lower))
            raise InvalidParameterError(
                f"bounds need lower < upper per dimension; dimension {bad} has "
                f"[{self.lower[bad]}, {self.upper[bad]}]")

    def __len__(self) -> int:
        return self.lower.size

    @property
    def span(self) -> np.ndarray:
        return self.upper - self.lower


@dataclass
class GaConfig:
    """Real-coded GA settings; population and generation defaults follow the
    reference experiment budget."""

    population_size: int = 200
    max_generations: int = 282
    crossover_rate: float = 0.9
    mutation_rate: float = 0.1
    tournament_size: int = 3
    elitism_count: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.population_size < 2:
            raise InvalidParameterError("population_size must be >= 2")
        if self.max_generations < 1:
            raise InvalidParameterError("max_generations must be >= 1")
        for name in ("crossover_rate", "mutation_rate"):
            v = getattr(self, name)
            if not (math.isfinite(v) and 0.0 <= v <= 1.0):
                raise InvalidParameterError(f"{name} must be in [0, 1], got {v!r}")
        if self.tournament_size < 1:
            raise InvalidParameterError("tournament_size must be >= 1")
        if self.elitism_count < 1:
            raise InvalidParameterError("elitism_count must be >= 1")
        if self.population_size < self.elitism_count + 2:
            raise InvalidParameterError(
                "population_size must be >= elitism_count + 2")
        if self.seed < 0:
            raise InvalidParameterError("seed must be >= 0")


@dataclass
class PsoConfig:
    """gbest PSO settings; swarm and iteration defaults follow the reference
    experiment budget, the coefficients are the constriction-derived defaults."""

    swarm_size: int = 250
    max_iterations: int = 204
    inertia: float = 0.729
    cognitive: float = 1.49445
    social: float = 1.49445
    v_max_fraction: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if self.swarm_size < 2:
            raise InvalidParameterError("swarm_size must be >= 2")
        if self.max_iterations < 1:
            raise InvalidParameterError("max_iterations must be >= 1")
        for name in ("inertia", "cognitive", "social", "v_max_fraction"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise InvalidParameterError(f"{name} must be >= 0, got {v!r}")
        if self.v_max_fraction == 0:
            raise InvalidParameterError("v_max_fraction must be > 0")
        if self.seed < 0:
            raise InvalidParameterError("seed must be >= 0")


@dataclass
class RunTrace:
    """Optimizer run record: best fitness after init and after every
    iteration, cumulative evaluation counts, and the best vector found."""

    best_fitness: list[float] = field(default_factory=list)
    evaluations: list[int] = field(default_factory=list)
    best_vector: np.ndarray | None = None

    @property
    def evaluation_count(self) -> int:
        return self.evaluations[-1] if self.evaluations else 0

    def write_csv(self, path) -> None:
        lines = ["iteration,best_fitness,evaluations"]
        lines += [f"{i},{f!r},{e}" for i, (f, e)
                  in enumerate(zip(self.best_fitness, self.evaluations))]
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def substream(seed: int, iteration: int, index: int) -> np.random.Generator:
    """Independent RNG substream for one individual at one iteration."""
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence((seed, iteration, index))))


# ---------------------------------------------------------------------------
# Fitness
# ---------------------------------------------------------------------------

class PackedCopy:
    """Mutable copy of a packed model sharing the immutable topology arrays."""

    def __init__(self, packed):
        self.centers = packed.centers.copy()
        self.sigmas = packed.sigmas.copy()
        self.offsets = packed.offsets
        self.prem_cols = packed.prem_cols
        self.coeffs = packed.coeffs.copy()
        self.mf_counts = packed.mf_counts


class AnfisFitness:
    """Training-RMSE objective over flattened parameter vectors.

    ``premise-lse`` mode takes premise-only vectors and solves the rule
    coefficients by ridge LSE inside each evaluation; ``full-vector`` mode
    takes the complete vector and evaluates it as-is.  Any failed candidate
    (degenerate firing, singular solve, non-finite prediction) scores +inf.

    Thread-safe: each worker thread gets its own preallocated workspace, so
    concurrent calls never share mutable state.
    """

    def __init__(self, model: AnfisModel, X, y, *, mode: str = "premise-lse",
                 ridge_lambda: float = DEFAULT_RIDGE):
        if mode not in MODES:
            raise InvalidParameterError(f"mode must be one of {MODES}, got {mode!r}")
        X = np.ascontiguousarray(X, dtype=np.float64)
        y = np.ascontiguousarray(y, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != model.input_count:
            raise InvalidParameterError(
                f"X must have shape (n, {model.input_count}), got {X.shape}")
        if X.shape[0] == 0:
            raise InvalidParameterError("fitness needs a nonempty training set")
        if y.shape != (X.shape[0],):
            raise InvalidParameterError(
                f"targets must have shape ({X.shape[0]},), got {y.shape}")
        self.mode = mode
        self.ridge_lambda = float(ridge_lambda)
        self.X = X
        self.y = y
        self.xaug = augment(X)
        self.packed_template = pack_model(model)
        self.total_mf = self.packed_template.centers.shape[0]
        self.n_rules = self.packed_template.prem_cols.shape[0]
        self.n_inputs = model.input_count
        self.dim = param_count(model, include_consequents=(mode == "full-vector"))
        p = self.n_rules * (self.n_inputs + 1)
        self.xaxa = (np.dot(self.xaug, self.xaug.T)
                     if mode == "premise-lse" and X.shape[0] < p else None)
        self._tls = threading.local()

    def _state(self):
        state = getattr(self._tls, "state", None)
        if state is None:
            packed = self.packed_template
            state = (
                PackedCopy(packed),
                LseWorkspace(self.X.shape[0], self.n_inputs, self.total_mf,
                             self.n_rules),
            )
            self._tls.state = state
        return state

    def __call__(self, vector) -> float:
        vector = np.asarray(vector, dtype=np.float64)
        if vector.shape != (self.dim,):
            raise InvalidParameterError(
                f"parameter vector must have length {self.dim}, got {vector.shape}")
        packed, ws = self._state()
        t = self.total_mf
        np.copyto(packed.centers, vector[0:2 * t:2])
        np.copyto(packed.sigmas, vector[1:2 * t:2])
        np.maximum(packed.sigmas, SIGMA_MIN, out=packed.sigmas)
        if self.mode == "full-vector":
            np.copyto(packed.coeffs.ravel(), vector[2 * t:])
        try:
            if self.mode == "premise-lse":
                _, ypred, _ = solve_consequents_arrays(
                    packed, self.X, self.xaug, self.y, self.ridge_lambda,
                    ws=ws, xaxa=self.xaxa)
            else:
                *_, ypred = forward_arrays(packed, self.X, self.xaug, ws)
            value = metrics.rmse(ypred, self.y)
        except (DegenerateInputError, SingularSystemError, InvalidParameterError):
            return math.inf
        return value if math.isfinite(value) else math.inf


def fitness_rmse(vector, model: AnfisModel, X, y, *, mode: str = "premise-lse",
                 ridge_lambda: float = DEFAULT_RIDGE) -> float:
    """One-shot form of :class:`AnfisFitness` for a single vector."""
    return AnfisFitness(model, X, y, mode=mode, ridge_lambda=ridge_lambda)(vector)


def build_bounds(model: AnfisModel, X, *, include_consequents: bool = False,
                 center_margin: float = 0.1,
                 consequent_limit: float = 10.0) -> Bounds:
    """Search-space box for a model's parameter vector, from the data:
    centers may roam 10% beyond each input's observed range, sigmas from
    SIGMA_MIN up to the full range, consequents (when included) +-10 on
    normalized data."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.input_count:
        raise InvalidParameterError(
            f"X must have shape (n, {model.input_count}), got {X.shape}")
    if X.shape[0] == 0:
        raise InvalidParameterError("cannot build bounds from an empty dataset")
    lower = np.empty(param_count(model, include_consequents))
    upper = np.empty_like(lower)
    k = 0
    for d, variable in enumerate(model.inputs):
        lo, hi = X[:, d].min(), X[:, d].max()
        span = hi - lo
        if span <= 0:
            raise InvalidParameterError(
                f"input '{variable.name}' is constant; cannot bound its centers")
        for _ in variable.mfs:
            lower[k], upper[k] = lo - center_margin * span, hi + center_margin * span
            lower[k + 1], upper[k + 1] = SIGMA_MIN, span
            k += 2
    if include_consequents:
        lower[k:] = -consequent_limit
        upper[k:] = consequent_limit
    return Bounds(lower, upper)


# ---------------------------------------------------------------------------
# Shared evaluation helpers
# ---------------------------------------------------------------------------

def _evaluate(fitness, vectors, executor, n_workers) -> np.ndarray:
    out = np.empty(len(vectors))
    if executor is None:
        for i, v in enumerate(vectors):
            out[i] = fitness(v)
        return out

    def run(indices):
        for i in indices:
            out[i] = fitness(vectors[i])

    chunks = np.array_split(np.arange(len(vectors)), n_workers)
    futures = [executor.submit(run, chunk) for chunk in chunks if len(chunk)]
    for future in futures:
        future.result()
    return out


def _apply_overrides(array, override, bounds, what):
    if override is None:
        return
    override = np.atleast_2d(np.asarray(override, dtype=np.float64))
    if override.shape[1] != len(bounds) or override.shape[0] > array.shape[0]:
        raise InvalidParameterError(
            f"{what} must be (k <= {array.shape[0]}, {len(bounds)}), "
            f"got {override.shape}")
    array[:override.shape[0]] = np.clip(override, bounds.lower, bounds.upper)


# ---------------------------------------------------------------------------
# PSO
# ---------------------------------------------------------------------------

def pso_optimize(config: PsoConfig, bounds: Bounds, fitness, *, n_workers: int = 1,
                 init_positions=None, init_velocities=None, warm_start=None,
                 callback=None) -> RunTrace:
    """Global-best particle swarm minimization of ``fitness`` over ``bounds``.

    ``warm_start`` (one vector or a stack) replaces the first particles'
    random initial positions.  ``init_positions``/``init_velocities`` replace
    the whole random initialization (tests use this for exact-motion checks).
    ``callback(iteration, positions, velocities, best_fitness)`` fires after
    every iteration with read-only views.
    """
    dim = len(bounds)
    n = config.swarm_size
    span = bounds.span
    v_max = config.v_max_fraction * span

    positions = np.empty((n, dim))
    velocities = np.empty((n, dim))
    for i in range(n):
        rng = substream(config.seed, 0, i)
        positions[i] = bounds.lower + rng.random(dim) * span
        velocities[i] = (2.0 * rng.random(dim) - 1.0) * v_max
    if init_positions is not None:
        _apply_overrides(positions, init_positions, bounds, "init_positions")
    if init_velocities is not None:
        init_velocities = np.atleast_2d(np.asarray(init_velocities, dtype=np.float64))
        if init_velocities.shape != (n, dim):
            raise InvalidParameterError(
                f"init_velocities must have shape ({n}, {dim})")
        velocities[:] = init_velocities
    _apply_overrides(positions, warm_start, bounds, "warm_start")

    executor = ThreadPoolExecutor(max_workers=n_workers) if n_workers > 1 else None
    trace = RunTrace()
    try:
        with single_thread_blas():
            f = _evaluate(fitness, positions, executor, n_workers)
            pbest = positions.copy()
            pbest_f = f.copy()
            g = int(np.argmin(pbest_f))
            gbest = pbest[g].copy()
            gbest_f = float(pbest_f[g])
            evals = n
            trace.best_fitness.append(gbest_f)
            trace.evaluations.append(evals)

            r1 = np.empty((n, dim))
            r2 = np.empty((n, dim))
            for it in range(1, config.max_iterations + 1):
                for i in range(n):
                    rng = substream(config.seed, it, i)
                    r1[i] = rng.random(dim)
                    r2[i] = rng.random(dim)
                velocities = (config.inertia * velocities
                              + config.cognitive * r1 * (pbest - positions)
                              + config.social * r2 * (gbest - positions))
                np.clip(velocities, -v_max, v_max, out=velocities)
                positions += velocities
                np.clip(positions, bounds.lower, bounds.upper, out=positions)
                f = _evaluate(fitness, positions, executor, n_workers)
                improved = f < pbest_f
                pbest_f[improved] = f[improved]
                pbest[improved] = positions[improved]
                g = int(np.argmin(pbest_f))
                if pbest_f[g] < gbest_f:
                    gbest_f = float(pbest_f[g])
                    gbest = pbest[g].copy()
                evals += n
                trace.best_fitness.append(gbest_f)
                trace.evaluations.append(evals)
                if callback is not None:
                    callback(it, positions, velocities, gbest_f)
    finally:
        if executor is not None:
            executor.shutdown()
    trace.best_vector = gbest
    return trace


# ---------------------------------------------------------------------------
# GA
# ---------------------------------------------------------------------------

def ga_optimize(config: GaConfig, bounds: Bounds, fitness, *, n_workers: int = 1,
                init_population=None, warm_start=None, callback=None) -> RunTrace:
    """Real-coded genetic minimization of ``fitness`` over ``bounds``.

    Per generation: the ``elitism_count`` best individuals carry over
    unchanged; every remaining slot is filled by tournament-selecting two
    parents, BLX-0.5 crossover with probability ``crossover_rate`` (otherwise
    a copy of the first parent), then per-gene Gaussian mutation with
    probability ``mutation_rate`` at scale 0.1 of the dimension range.
    ``callback(generation, population, fitnesses, best_fitness)`` fires after
    every generation.
    """
    dim = len(bounds)
    n = config.population_size
    span = bounds.span
    mut_scale = 0.1 * span

    population = np.empty((n, dim))
    for i in range(n):
        rng = substream(config.seed, 0, i)
        population[i] = bounds.lower + rng.random(dim) * span
    if init_population is not None:
        init_population = np.atleast_2d(np.asarray(init_population, dtype=np.float64))
        if init_population.shape != (n, dim):
            raise InvalidParameterError(
                f"init_population must have shape ({n}, {dim})")
        population[:] = np.clip(init_population, bounds.lower, bounds.upper)
    _apply_overrides(population, warm_start, bounds, "warm_start")

    executor = ThreadPoolExecutor(max_workers=n_workers) if n_workers > 1 else None
    trace = RunTrace()
    try:
        with single_thread_blas():
            f = _evaluate(fitness, population, executor, n_workers)
            best_i = int(np.argmin(f))
            best_vector = population[best_i].copy()
            best_f = float(f[best_i])
            evals = n
            trace.best_fitness.append(best_f)
            trace.evaluations.append(evals)

            n_children = n - config.elitism_count
            children = np.empty((n_children, dim))
            for gen in range(1, config.max_generations + 1):
                order = np.argsort(f, kind="stable")
                elites = population[order[:config.elitism_count]].copy()
                elite_f = f[order[:config.elitism_count]].copy()
                for j in range(n_children):
                    rng = substream(config.seed, gen, j)
                    t1 = rng.integers(0, n, config.tournament_size)
                    p1 = population[t1[int(np.argmin(f[t1]))]]
                    t2 = rng.integers(0, n, config.tournament_size)
                    p2 = population[t2[int(np.argmin(f[t2]))]]
                    if rng.random() < config.crossover_rate:
                        lo = np.minimum(p1, p2)
                        hi = np.maximum(p1, p2)
                        gap = hi - lo
                        child = (lo - 0.5 * gap) + rng.random(dim) * (2.0 * gap)
                    else:
                        child = p1.copy()
                    noise = rng.standard_normal(dim)
                    mutate = rng.random(dim) < config.mutation_rate
                    child = child + np.where(mutate, noise * mut_scale, 0.0)
                    children[j] = np.clip(child, bounds.lower, bounds.upper)
                child_f = _evaluate(fitness, children, executor, n_workers)
                population = np.vstack([elites, children])
                f = np.concatenate([elite_f, child_f])
                best_i = int(np.argmin(f))
                if f[best_i] < best_f:
                    best_f = float(f[best_i])
                    best_vector = population[best_i].copy()
                evals += n_children
                trace.best_fitness.append(best_f)
                trace.evaluations.append(evals)
                if callback is not None:
                    callback(gen, population, f, best_f)
    finally:
        if executor is not None:
            executor.shutdown()
    trace.best_vector = best_vector
    return trace
