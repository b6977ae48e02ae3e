"""Command-line front end: gen-synth, train, compare, predict.

Runs the experiment protocol end to end: 70/30 split, train-fitted min-max
normalization, one or more trainers, train/test evaluation, and CSV/JSON
artifacts.  Every output byte is a deterministic function of (config, seed).

Exit codes: 0 success, 2 configuration/usage error, 3 data error,
4 numerical failure.  NEUROFUZZ_THREADS caps fitness-evaluation workers.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .data import (Dataset, NormalizationRecord, denormalize_target,
                   fit_normalization, gen_synthetic, load_csv, normalize,
                   normalize_inputs, read_csv_columns, save_csv, split_70_30,
                   synth_comment)
from .errors import (DataError, DegenerateInputError, InvalidParameterError,
                     NumericalError, SingularSystemError)
from .hybrid import HybridConfig, solve_consequents, train_hybrid, write_epoch_log
from .metrics import (MetricReport, TrainReport, compute_report,
                      format_comparison_table)
from .network import (build_grid_model, flatten_params, forward_batch,
                      load_model, restore_params, save_model)
from .optimizers import (AnfisFitness, GaConfig, PsoConfig, build_bounds,
                         ga_optimize, pso_optimize)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4

TRAINERS = ("anfis", "anfis-ga", "anfis-pso")
MODES = ("premise-lse", "full-vector")
SYNTH_KINDS = ("hvac-like", "sinc2d")


@dataclass
class SynthSpec:
    kind: str
    n: int
    noise_sigma: float


@dataclass
class RunConfig:
    seed: int
    out_dir: Path
    data_path: str | None
    synth: SynthSpec | None
    mf_count: int
    trainers: tuple[str, ...]
    mode: str
    hybrid: HybridConfig
    ga: GaConfig
    pso: PsoConfig


def eval_workers() -> int:
    raw = os.environ.get("NEUROFUZZ_THREADS", "1")
    try:
        workers = int(raw)
    except ValueError:
        raise InvalidParameterError(f"NEUROFUZZ_THREADS must be an integer, got {raw!r}")
    if workers < 1:
        raise InvalidParameterError(f"NEUROFUZZ_THREADS must be >= 1, got {workers}")
    return workers


def _section(doc, name, config_cls, default_seed):
    """Build a trainer config dataclass from a JSON section with key checks."""
    section = dict(doc.get(name, {}))
    allowed = {f.name for f in fields(config_cls)}
    unknown = set(section) - allowed
    if unknown:
        raise InvalidParameterError(
            f"unknown keys in config section '{name}': {sorted(unknown)}")
    if "seed" in allowed and "seed" not in section:
        section["seed"] = default_seed
    return config_cls(**section)


def load_run_config(args, *, force_all_trainers: bool = False) -> RunConfig:
    doc = {}
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise InvalidParameterError(f"config file not found: {path}")
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise InvalidParameterError(f"config file {path} is not valid JSON: {exc}")
        if not isinstance(doc, dict):
            raise InvalidParameterError("config file must hold a JSON object")
        allowed = {"seed", "out", "data", "synth", "mf_count", "trainers",
                   "mode", "hybrid", "ga", "pso"}
        unknown = set(doc) - allowed
        if unknown:
            raise InvalidParameterError(f"unknown config keys: {sorted(unknown)}")

    seed = args.seed if args.seed is not None else doc.get("seed")
    if seed is None:
        raise InvalidParameterError(
            "a seed is required (--seed or the 'seed' config key)")
    seed = int(seed)
    if seed < 0:
        raise InvalidParameterError(f"seed must be >= 0, got {seed}")

    synth_doc = doc.get("synth")
    synth = None
    if args.synth_kind is not None:
        synth = SynthSpec(args.synth_kind,
                          args.synth_n if args.synth_n is not None else 300,
                          args.synth_noise if args.synth_noise is not None else 0.0)
    elif synth_doc:
        unknown = set(synth_doc) - {"kind", "n", "noise_sigma"}
        if unknown:
            raise InvalidParameterError(f"unknown synth keys: {sorted(unknown)}")
        synth = SynthSpec(synth_doc["kind"], int(synth_doc.get("n", 300)),
                          float(synth_doc.get("noise_sigma", 0.0)))
    data_path = args.data if args.data is not None else doc.get("data")
    if (data_path is None) == (synth is None):
        raise InvalidParameterError(
            "exactly one data source is required: --data/'data' or a synthetic spec")

    trainers = tuple(args.trainer) if args.trainer else tuple(doc.get("trainers", ("anfis",)))
    if force_all_trainers:
        trainers = TRAINERS
    if not trainers:
        raise InvalidParameterError("at least one trainer must be selected")
    for name in trainers:
        if name not in TRAINERS:
            raise InvalidParameterError(f"unknown trainer {name!r}; choose from {TRAINERS}")

    mode = args.mode if args.mode is not None else doc.get("mode", "premise-lse")
    if mode not in MODES:
        raise InvalidParameterError(f"mode must be one of {MODES}, got {mode!r}")

    mf_count = args.mf_count if args.mf_count is not None else int(doc.get("mf_count", 3))
    if mf_count < 2:
        raise InvalidParameterError(f"mf_count must be >= 2, got {mf_count}")

    out_dir = Path(args.out if args.out is not None else doc.get("out", "neurofuzz_out"))

    return RunConfig(
        seed=seed,
        out_dir=out_dir,
        data_path=data_path,
        synth=synth,
        mf_count=mf_count,
        trainers=trainers,
        mode=mode,
        hybrid=_section(doc, "hybrid", HybridConfig, seed),
        ga=_section(doc, "ga", GaConfig, seed),
        pso=_section(doc, "pso", PsoConfig, seed),
    )


def structure_string(name: str, cfg: RunConfig) -> str:
    if name == "anfis":
        return (f"MF type: Gaussian Number of MFs: {cfg.mf_count} "
                f"Output: linear Optimizer type: hybrid")
    if name == "anfis-ga":
        return (f"Max generation={cfg.ga.max_generations} "
                f"Population size={cfg.ga.population_size}")
    return (f"Max iteration={cfg.pso.max_iterations} "
            f"Swarm size={cfg.pso.swarm_size}")


# ---------------------------------------------------------------------------
# Pipeline
# ---------------------------------------------------------------------------

@dataclass
class Experiment:
    dataset: Dataset
    split: object
    record: NormalizationRecord
    norm: Dataset
    Xtr: np.ndarray
    ytr: np.ndarray


def prepare_experiment(cfg: RunConfig) -> Experiment:
    if cfg.synth is not None:
        dataset = gen_synthetic(cfg.synth.kind, cfg.synth.n,
                                cfg.synth.noise_sigma, cfg.seed)
    else:
        dataset = load_csv(cfg.data_path)
    split = split_70_30(dataset, cfg.seed)
    record = fit_normalization(dataset, split.train_indices)
    norm = normalize(dataset, record)
    Xtr = np.ascontiguousarray(norm.X[split.train_indices])
    ytr = np.ascontiguousarray(norm.y[split.train_indices])
    return Experiment(dataset, split, record, norm, Xtr, ytr)


def run_single_trainer(name: str, exp: Experiment, cfg: RunConfig,
                       n_workers: int, out_dir: Path):
    """Train one variant; returns (model, trained report rows written later)."""
    template = build_grid_model(exp.dataset.input_names,
                                exp.Xtr.min(axis=0), exp.Xtr.max(axis=0),
                                cfg.mf_count)
    if name == "anfis":
        model, logs = train_hybrid(template, exp.Xtr, exp.ytr, cfg.hybrid)
        write_epoch_log(logs, out_dir / f"{name}_epochs.csv")
        return model
    include = cfg.mode == "full-vector"
    bounds = build_bounds(template, exp.Xtr, include_consequents=include)
    objective = AnfisFitness(template, exp.Xtr, exp.ytr, mode=cfg.mode,
                             ridge_lambda=cfg.hybrid.ridge_lambda)
    warm = flatten_params(template, include_consequents=include)
    if name == "anfis-ga":
        trace = ga_optimize(cfg.ga, bounds, objective, n_workers=n_workers,
                            warm_start=warm)
    else:
        trace = pso_optimize(cfg.pso, bounds, objective, n_workers=n_workers,
                             warm_start=warm)
    trace.write_csv(out_dir / f"{name}_trace.csv")
    model = template.copy()
    restore_params(model, trace.best_vector, include_consequents=include)
    if cfg.mode == "premise-lse":
        solve_consequents(model, exp.Xtr, exp.ytr,
                          ridge_lambda=cfg.hybrid.ridge_lambda)
    return model


def evaluate_model(model, exp: Experiment):
    """Forward every row once; returns (train report, test report, rows)
    where rows are (index, split, actual_raw, predicted_raw, deviation)."""
    pred_n = forward_batch(model, np.ascontiguousarray(exp.norm.X))
    pred_raw = denormalize_target(pred_n, exp.record)
    reports = {}
    for label, idx in (("train", exp.split.train_indices),
                       ("test", exp.split.test_indices)):
        reports[label] = compute_report(exp.norm.y[idx], pred_n[idx],
                                        exp.dataset.y[idx], pred_raw[idx])
    in_train = np.zeros(exp.dataset.n_samples, dtype=bool)
    in_train[exp.split.train_indices] = True
    rows = [
        (i, "train" if in_train[i] else "test",
         float(exp.dataset.y[i]), float(pred_raw[i]),
         abs(float(exp.dataset.y[i]) - float(pred_raw[i])))
        for i in range(exp.dataset.n_samples)
    ]
    return reports["train"], reports["test"], rows


def write_predictions_csv(rows, path) -> None:
    lines = ["row,split,actual,predicted,abs_deviation"]
    lines += [f"{i},{s},{a!r},{p!r},{d!r}" for i, s, a, p, d in rows]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_metrics_csv(entries, path) -> None:
    header = "method,split,structure," + ",".join(MetricReport.CSV_FIELDS)
    lines = [header]
    lines += [f"{m},{s},{st},{rep.csv_row()}" for m, s, st, rep in entries]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _run_trainers(cfg: RunConfig):
    out_dir = cfg.out_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    exp = prepare_experiment(cfg)
    if cfg.synth is not None:
        save_csv(exp.dataset, out_dir / "dataset.csv",
                 comment=synth_comment(cfg.synth.kind, cfg.synth.n,
                                       cfg.synth.noise_sigma, cfg.seed))
    workers = eval_workers()
    results = []
    for name in cfg.trainers:
        model = run_single_trainer(name, exp, cfg, workers, out_dir)
        train_rep, test_rep, rows = evaluate_model(model, exp)
        structure = structure_string(name, cfg)
        save_model(model, out_dir / f"{name}_model.json",
                   normalization=exp.record,
                   target_name=exp.dataset.target_name,
                   units=exp.dataset.units,
                   meta={"trainer": name, "structure": structure,
                         "mode": cfg.mode, "seed": cfg.seed,
                         "mf_count": cfg.mf_count})
        write_predictions_csv(rows, out_dir / f"{name}_predictions.csv")
        results.append((TrainReport(name, structure, train_rep, test_rep), rows))
    entries = []
    for report, _ in results:
        entries.append((report.method, "train", report.structure, report.train))
        entries.append((report.method, "test", report.structure, report.test))
    write_metrics_csv(entries, out_dir / "metrics.csv")
    return exp, results


def cmd_train(args) -> int:
    cfg = load_run_config(args)
    started = time.perf_counter()
    _, results = _run_trainers(cfg)
    for report, _ in results:
        print(f"{report.method}: train RMSE {report.train.rmse:.6g}, "
              f"test RMSE {report.test.rmse:.6g}, "
              f"test deviation {report.test.deviation_max:.6g}")
    print(f"artifacts written to {cfg.out_dir} "
          f"({time.perf_counter() - started:.1f}s)")
    return EXIT_OK


def cmd_compare(args) -> int:
    cfg = load_run_config(args, force_all_trainers=True)
    started = time.perf_counter()
    exp, results = _run_trainers(cfg)
    unit = exp.dataset.units[-1]
    method_label = {"anfis": "ANFIS", "anfis-ga": "ANFIS-GA", "anfis-pso": "ANFIS-PSO"}
    train_table = format_comparison_table(
        "TRAINING RESULTS",
        [(method_label[r.method], r.structure, r.train) for r, _ in results],
        deviation_unit=unit)
    test_table = format_comparison_table(
        "TESTING RESULTS",
        [(method_label[r.method], r.structure, r.test) for r, _ in results],
        deviation_unit=unit)
    (cfg.out_dir / "compare_train.txt").write_text(train_table + "\n", encoding="utf-8")
    (cfg.out_dir / "compare_test.txt").write_text(test_table + "\n", encoding="utf-8")

    names = [report.method for report, _ in results]
    by_model = {report.method: {i: d for i, _, _, _, d in rows_}
                for report, rows_ in results}
    base_rows = results[0][1]
    header = "row,split,actual," + ",".join(
        "deviation_" + n.replace("-", "_") for n in names)
    lines = [header]
    for i, split_label, actual, _, _ in base_rows:
        devs = ",".join(repr(by_model[n][i]) for n in names)
        lines.append(f"{i},{split_label},{actual!r},{devs}")
    (cfg.out_dir / "deviations.csv").write_text("\n".join(lines) + "\n",
                                                encoding="utf-8")
    print(train_table)
    print()
    print(test_table)
    print(f"\nartifacts written to {cfg.out_dir} "
          f"({time.perf_counter() - started:.1f}s)")
    return EXIT_OK


def cmd_predict(args) -> int:
    loaded = load_model(args.model)
    if loaded.normalization is None:
        raise InvalidParameterError(
            f"model file {args.model} has no normalization record; cannot predict")
    header, matrix, _ = read_csv_columns(args.data)
    names = [v.name for v in loaded.model.inputs]
    if header == names:
        x_raw = matrix
    elif header == names + [loaded.target_name]:
        x_raw = matrix[:, :-1]
    else:
        raise DataError(
            f"{args.data}: columns {header} do not match the model's expected "
            f"inputs {names} (optionally followed by '{loaded.target_name}')")
    lines = ["row,predicted"]
    if matrix.shape[0]:
        x_norm = np.ascontiguousarray(normalize_inputs(x_raw, loaded.normalization))
        pred = denormalize_target(forward_batch(loaded.model, x_norm),
                                  loaded.normalization)
        lines += [f"{i},{float(v)!r}" for i, v in enumerate(pred)]
    Path(args.out).write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {max(len(lines) - 1, 0)} predictions to {args.out}")
    return EXIT_OK


def cmd_gen_synth(args) -> int:
    dataset = gen_synthetic(args.kind, args.n, args.noise, args.seed)
    save_csv(dataset, args.out,
             comment=synth_comment(args.kind, args.n, args.noise, args.seed))
    print(f"wrote {dataset.n_samples} rows to {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _add_run_flags(sub):
    sub.add_argument("--config", help="JSON config file; flags override it")
    sub.add_argument("--data", help="training CSV (last column is the target)")
    sub.add_argument("--synth-kind", choices=SYNTH_KINDS,
                     help="generate a synthetic dataset instead of --data")
    sub.add_argument("--synth-n", type=int, help="synthetic sample count")
    sub.add_argument("--synth-noise", type=float, help="synthetic noise sigma")
    sub.add_argument("--seed", type=int, help="experiment seed (required here or in the config)")
    sub.add_argument("--trainer", action="append", choices=TRAINERS,
                     help="trainer to run (repeatable)")
    sub.add_argument("--out", help="output directory")
    sub.add_argument("--mf-count", type=int, dest="mf_count",
                     help="membership functions per input (default 3)")
    sub.add_argument("--mode", choices=MODES,
                     help="metaheuristic search space (default premise-lse)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="neurofuzz",
        description="Neuro-fuzzy regression: hybrid, GA, and PSO trainers.")
    subs = parser.add_subparsers(dest="command", required=True)

    gen = subs.add_parser("gen-synth", help="write a synthetic dataset CSV")
    gen.add_argument("--kind", choices=SYNTH_KINDS, required=True)
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--noise", type=float, default=0.0)
    gen.add_argument("--seed", type=int, required=True)
    gen.add_argument("--out", required=True, help="output CSV path")
    gen.set_defaults(func=cmd_gen_synth)

    train = subs.add_parser("train", help="train selected model variants")
    _add_run_flags(train)
    train.set_defaults(func=cmd_train)

    compare = subs.add_parser(
        "compare", help="train all three variants and emit comparison tables")
    _add_run_flags(compare)
    compare.set_defaults(func=cmd_compare)

    predict = subs.add_parser("predict", help="apply a saved model to a CSV")
    predict.add_argument("--model", required=True, help="model JSON file")
    predict.add_argument("--data", required=True, help="input CSV")
    predict.add_argument("--out", required=True, help="output CSV path")
    predict.set_defaults(func=cmd_predict)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse handled usage errors itself
        return int(exc.code or 0)
    try:
        return int(args.func(args))
    except InvalidParameterError as exc:
        print(f"error (config): {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"error (data): {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericalError, DegenerateInputError, SingularSystemError) as exc:
        print(f"error (numerical): {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def run() -> None:
    """Console-script entry point."""
    raise SystemExit(main())


if __name__ == "__main__":
    run()
