"""Bounds, the tuning objective, PSO, and the real-coded GA."""

import math

import numpy as np
import pytest

import neurofuzz as nf
from neurofuzz.errors import InvalidParameterError
from neurofuzz.optimizers import substream

from helpers import random_model


def sphere(x):
    return float(np.dot(x, x))


def _sphere_bounds(dim=2, half_width=5.0):
    return nf.Bounds(np.full(dim, -half_width), np.full(dim, half_width))


# ---------------------------------------------------------------------------
# Bounds
# ---------------------------------------------------------------------------

def test_bounds_validation():
    with pytest.raises(InvalidParameterError):
        nf.Bounds(np.array([0.0, 1.0]), np.array([1.0, 1.0]))
    with pytest.raises(InvalidParameterError):
        nf.Bounds(np.array([0.0]), np.array([np.inf]))
    b = _sphere_bounds()
    assert len(b) == 2
    assert b.span.tolist() == [10.0, 10.0]


def test_build_bounds_values():
    model = nf.build_grid_model(["a", "b"], [0.0, 0.0], [1.0, 1.0], 3)
    X = np.array([[0.0, 0.2], [1.0, 0.8], [0.5, 0.5]])
    bounds = nf.build_bounds(model, X)
    # input a spans [0, 1]: centers may roam [-0.1, 1.1]
    assert bounds.lower[0] == pytest.approx(-0.1)
    assert bounds.upper[0] == pytest.approx(1.1)
    # sigma dimensions: [SIGMA_MIN, range]
    assert bounds.lower[1] == nf.SIGMA_MIN
    assert bounds.upper[1] == pytest.approx(1.0)
    full = nf.build_bounds(model, X, include_consequents=True)
    assert len(full) == nf.param_count(model, include_consequents=True)
    assert full.lower[-1] == -10.0
    assert full.upper[-1] == 10.0
    with pytest.raises(InvalidParameterError):
        nf.build_bounds(model, np.empty((0, 2)))


def test_bounds_samples_restore_into_valid_models():
    rng = np.random.default_rng(12)
    model = nf.build_grid_model(["a", "b"], [0.0, 0.0], [1.0, 1.0], 2)
    for include in (False, True):
        bounds = nf.build_bounds(
            model, rng.random((30, 2)), include_consequents=include)
        span = bounds.span
        for _ in range(500):
            vec = bounds.lower + rng.random(len(bounds)) * span
            probe = model.copy()
            clamps = nf.restore_params(probe, vec, include_consequents=include)
            assert clamps == 0  # sigma lower bound is already the floor
            for variable in probe.inputs:
                for mf in variable.mfs:
                    assert mf.sigma >= nf.SIGMA_MIN


# ---------------------------------------------------------------------------
# Fitness
# ---------------------------------------------------------------------------

def _generator_problem(rng, n=60):
    """Grid-premise generator: every rule fires, the LSE is identifiable."""
    model = nf.build_grid_model(["x0", "x1"], np.zeros(2), np.ones(2), 2)
    for rule in model.rules:
        rule.coefficients = rng.standard_normal(3)
    X = np.ascontiguousarray(rng.uniform(0, 1, (n, 2)))
    y = nf.forward_batch(model, X)
    return model, X, y


def test_fitness_zero_residual_generator():
    rng = np.random.default_rng(31)
    model, X, y = _generator_problem(rng)
    # zero ridge: the exact generator premises must reproduce the targets
    premise_fit = nf.AnfisFitness(model, X, y, mode="premise-lse",
                                  ridge_lambda=0.0)
    assert premise_fit(nf.flatten_params(model)) < 1e-10
    full_fit = nf.AnfisFitness(model, X, y, mode="full-vector")
    assert full_fit(nf.flatten_params(model, include_consequents=True)) < 1e-12


def test_fitness_nonnegative_and_agrees_with_rmse():
    rng = np.random.default_rng(32)
    model, X, y = _generator_problem(rng)
    fit = nf.AnfisFitness(model, X, y)
    bounds = nf.build_bounds(model, X)
    for _ in range(20):
        vec = bounds.lower + rng.random(len(bounds)) * bounds.span
        value = fit(vec)
        assert value >= 0.0
        if not math.isfinite(value):
            continue
        probe = model.copy()
        nf.restore_params(probe, vec)
        nf.solve_consequents(probe, X, y)
        want = nf.rmse(nf.forward_batch(probe, X), y)
        assert value == pytest.approx(want, abs=1e-12)


def test_fitness_full_vector_agrees_with_forward():
    rng = np.random.default_rng(33)
    model, X, y = _generator_problem(rng)
    fit = nf.AnfisFitness(model, X, y, mode="full-vector")
    vec = nf.flatten_params(model, include_consequents=True)
    vec[0] += 0.05
    probe = model.copy()
    nf.restore_params(probe, vec, include_consequents=True)
    assert fit(vec) == nf.rmse(nf.forward_batch(probe, X), y)


def test_fitness_degenerate_candidate_is_inf():
    rng = np.random.default_rng(34)
    model, X, y = _generator_problem(rng)
    fit = nf.AnfisFitness(model, X, y)
    vec = nf.flatten_params(model)
    vec[0::2] = 50.0   # all centers far away
    vec[1::2] = 1e-4   # needle sigmas: every point underflows
    assert fit(vec) == math.inf


def test_fitness_function_wrapper():
    rng = np.random.default_rng(35)
    model, X, y = _generator_problem(rng)
    vec = nf.flatten_params(model)
    assert nf.fitness_rmse(vec, model, X, y, ridge_lambda=0.0) < 1e-10


def test_fitness_validation():
    rng = np.random.default_rng(36)
    model, X, y = _generator_problem(rng)
    with pytest.raises(InvalidParameterError):
        nf.AnfisFitness(model, X, y, mode="other")
    fit = nf.AnfisFitness(model, X, y)
    with pytest.raises(InvalidParameterError):
        fit(np.zeros(3))


# ---------------------------------------------------------------------------
# PSO
# ---------------------------------------------------------------------------

def test_pso_position_update_is_plain_sum():
    """With inertia 1 and zero attraction, x(t) = x0 + t * v0 exactly."""
    dim = 3
    cfg = nf.PsoConfig(swarm_size=4, max_iterations=5, inertia=1.0,
                       cognitive=0.0, social=0.0, v_max_fraction=0.01, seed=0)
    bounds = nf.Bounds(np.full(dim, -1e6), np.full(dim, 1e6))
    x0 = np.arange(12.0).reshape(4, 3)
    v0 = np.array([[1.0, -2.0, 0.5]] * 4)
    seen = {}

    def callback(iteration, positions, velocities, best):
        seen[iteration] = (positions.copy(), velocities.copy())

    nf.pso_optimize(cfg, bounds, sphere, init_positions=x0,
                    init_velocities=v0, callback=callback)
    for t in range(1, 6):
        positions, velocities = seen[t]
        assert positions.tolist() == (x0 + t * v0).tolist()
        assert velocities.tolist() == v0.tolist()


def test_pso_sphere_five_seeds():
    for seed in range(5):
        cfg = nf.PsoConfig(swarm_size=30, max_iterations=100, seed=seed)
        trace = nf.pso_optimize(cfg, _sphere_bounds(), sphere)
        assert trace.best_fitness[-1] < 1e-6
        assert sphere(trace.best_vector) == trace.best_fitness[-1]


def test_pso_best_fitness_non_increasing():
    for seed in (0, 7, 123):
        cfg = nf.PsoConfig(swarm_size=10, max_iterations=40, seed=seed)
        trace = nf.pso_optimize(cfg, _sphere_bounds(4), sphere)
        diffs = np.diff(trace.best_fitness)
        assert (diffs <= 0).all()


def test_pso_respects_bounds_and_vmax():
    cfg = nf.PsoConfig(swarm_size=8, max_iterations=30, seed=3,
                       v_max_fraction=0.1)
    bounds = _sphere_bounds(3, 2.0)
    v_max = 0.1 * bounds.span

    def callback(iteration, positions, velocities, best):
        assert (positions >= bounds.lower - 1e-15).all()
        assert (positions <= bounds.upper + 1e-15).all()
        assert (np.abs(velocities) <= v_max + 1e-15).all()

    nf.pso_optimize(cfg, bounds, sphere, callback=callback)


def test_pso_deterministic_across_worker_counts():
    cfg = nf.PsoConfig(swarm_size=12, max_iterations=25, seed=5)
    bounds = _sphere_bounds(3)
    t1 = nf.pso_optimize(cfg, bounds, sphere, n_workers=1)
    t2 = nf.pso_optimize(cfg, bounds, sphere, n_workers=3)
    assert t1.best_fitness == t2.best_fitness
    assert t1.best_vector.tolist() == t2.best_vector.tolist()
    assert t1.evaluations == t2.evaluations


def test_pso_warm_start_is_used():
    cfg = nf.PsoConfig(swarm_size=10, max_iterations=1, seed=0)
    bounds = _sphere_bounds()
    trace = nf.pso_optimize(cfg, bounds, sphere, warm_start=np.zeros(2))
    assert trace.best_fitness[0] == 0.0


def test_pso_evaluation_count():
    cfg = nf.PsoConfig(swarm_size=10, max_iterations=7, seed=0)
    trace = nf.pso_optimize(cfg, _sphere_bounds(), sphere)
    assert trace.evaluations[0] == 10
    assert trace.evaluation_count == 10 * 8
    assert len(trace.best_fitness) == 8


# ---------------------------------------------------------------------------
# GA
# ---------------------------------------------------------------------------

def test_ga_sphere_five_seeds():
    for seed in range(5):
        cfg = nf.GaConfig(population_size=50, max_generations=100, seed=seed)
        trace = nf.ga_optimize(cfg, _sphere_bounds(), sphere)
        assert trace.best_fitness[-1] < 1e-4
        assert sphere(trace.best_vector) == trace.best_fitness[-1]


def test_ga_best_fitness_non_increasing():
    for seed in (0, 9, 55):
        cfg = nf.GaConfig(population_size=12, max_generations=30, seed=seed)
        trace = nf.ga_optimize(cfg, _sphere_bounds(3), sphere)
        assert (np.diff(trace.best_fitness) <= 0).all()


def test_ga_elitism_retains_seeded_optimum():
    cfg = nf.GaConfig(population_size=20, max_generations=15, seed=2)
    bounds = _sphere_bounds()
    optimum = np.array([0.25, -0.125])
    trace = nf.ga_optimize(cfg, bounds, sphere, warm_start=optimum)
    assert trace.best_fitness[-1] <= sphere(optimum)
    assert (np.array(trace.best_fitness) <= sphere(optimum)).all()


def test_ga_no_variation_keeps_initial_best():
    cfg = nf.GaConfig(population_size=16, max_generations=20,
                      crossover_rate=0.0, mutation_rate=0.0, seed=4)
    bounds = _sphere_bounds(3)
    trace = nf.ga_optimize(cfg, bounds, sphere)
    assert trace.best_fitness[-1] == trace.best_fitness[0]


def test_ga_deterministic_across_worker_counts():
    cfg = nf.GaConfig(population_size=14, max_generations=12, seed=6)
    bounds = _sphere_bounds(3)
    t1 = nf.ga_optimize(cfg, bounds, sphere, n_workers=1)
    t2 = nf.ga_optimize(cfg, bounds, sphere, n_workers=4)
    assert t1.best_fitness == t2.best_fitness
    assert t1.best_vector.tolist() == t2.best_vector.tolist()


def test_ga_children_respect_bounds():
    cfg = nf.GaConfig(population_size=10, max_generations=10, seed=1)
    bounds = nf.Bounds(np.array([-0.5, 0.0]), np.array([0.5, 2.0]))

    def callback(gen, population, fitnesses, best):
        assert (population >= bounds.lower - 1e-15).all()
        assert (population <= bounds.upper + 1e-15).all()

    nf.ga_optimize(cfg, bounds, sphere, callback=callback)


def test_ga_evaluation_count_excludes_elites():
    cfg = nf.GaConfig(population_size=10, max_generations=5,
                      elitism_count=2, seed=0)
    trace = nf.ga_optimize(cfg, _sphere_bounds(), sphere)
    assert trace.evaluations[0] == 10
    assert trace.evaluation_count == 10 + 5 * 8


def test_config_validation():
    with pytest.raises(InvalidParameterError):
        nf.GaConfig(population_size=3, elitism_count=2)
    with pytest.raises(InvalidParameterError):
        nf.GaConfig(crossover_rate=1.5)
    with pytest.raises(InvalidParameterError):
        nf.PsoConfig(swarm_size=1)
    with pytest.raises(InvalidParameterError):
        nf.PsoConfig(v_max_fraction=0.0)
    with pytest.raises(InvalidParameterError):
        nf.PsoConfig(seed=-1)


def test_substream_is_stable_and_independent():
    a = substream(1, 2, 3).random(4)
    b = substream(1, 2, 3).random(4)
    c = substream(1, 2, 4).random(4)
    assert a.tolist() == b.tolist()
    assert a.tolist() != c.tolist()


def test_trace_csv(tmp_path):
    cfg = nf.PsoConfig(swarm_size=5, max_iterations=3, seed=0)
    trace = nf.pso_optimize(cfg, _sphere_bounds(), sphere)
    path = tmp_path / "trace.csv"
    trace.write_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "iteration,best_fitness,evaluations"
    assert len(lines) == 5
    assert float(lines[1].split(",")[1]) == trace.best_fitness[0]


# ---------------------------------------------------------------------------
# End-to-end on the network objective (small budgets)
# ---------------------------------------------------------------------------

def test_optimizers_improve_anfis_fit():
    rng = np.random.default_rng(77)
    truth = random_model(rng, n_inputs=2, mf_counts=[2, 2])
    X = np.ascontiguousarray(rng.uniform(0, 1, (60, 2)))
    y = nf.forward_batch(truth, X)
    template = nf.build_grid_model(["x0", "x1"], X.min(axis=0), X.max(axis=0), 2)
    fit = nf.AnfisFitness(template, X, y)
    bounds = nf.build_bounds(template, X)
    warm = nf.flatten_params(template)
    start = fit(warm)
    trace = nf.pso_optimize(
        nf.PsoConfig(swarm_size=20, max_iterations=30, seed=0),
        bounds, fit, warm_start=warm)
    assert trace.best_fitness[-1] <= start
    model = template.copy()
    nf.restore_params(model, trace.best_vector)
    nf.solve_consequents(model, X, y)
    assert nf.rmse(nf.forward_batch(model, X), y) == pytest.approx(
        trace.best_fitness[-1], abs=1e-12)
