"""Sugeno-type neuro-fuzzy regression with three interchangeable trainers:
hybrid least-squares/gradient learning, a real-coded genetic algorithm, and
particle swarm optimization.

Hot evaluation kernels run on a compiled extension when it is built, with a
NumPy fallback selected automatically at import (see
:func:`neurofuzz.kernels.backend_name`).
"""

from .data import (Dataset, NormalizationRecord, Split, denormalize_target,
                   fit_normalization, fit_normalization_full_unsafe,
                   gen_synthetic, load_csv, normalize, normalize_inputs,
                   save_csv, split_70_30)
from .errors import (DataError, DegenerateInputError, InvalidParameterError,
                     NeurofuzzError, NumericalError, SingularSystemError)
from .hybrid import (EpochLog, HybridConfig, consequent_gradient,
                     solve_consequents, train_hybrid)
from .kernels import backend_name
from .metrics import (MetricReport, TrainReport, compute_report, deviation,
                      format_comparison_table, mae, pearson_r, r_error_ratio,
                      r_squared, rmse)
from .network import (SIGMA_MIN, AnfisModel, ForwardTrace, InputVariable,
                      MembershipFunction, Rule, build_grid_model,
                      flatten_params, forward, forward_batch, load_model,
                      mf_evaluate, param_count, premise_gradient,
                      restore_params, save_model)
from .optimizers import (AnfisFitness, Bounds, GaConfig, PsoConfig, RunTrace,
                         build_bounds, fitness_rmse, ga_optimize, pso_optimize)

__version__ = "0.1.0"
