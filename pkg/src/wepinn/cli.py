"""Config-driven experiment runner: train, evaluate, export, validate.

Commands
--------
run       train on one benchmark and write checkpoint/history/profile/error
          artifacts into the output directory
baseline  same artifacts for the strong-form collocation baseline
table     re-emit the error table from a saved checkpoint
validate  run the training-free property suite

Every run is reproducible from (config, seed); CSV columns are stable across
experiments. Set WEPINN_THREADS to pin the BLAS thread count.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from pathlib import Path


def _apply_thread_env():
    threads = os.environ.get("WEPINN_THREADS")
    if threads:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, threads)


_apply_thread_env()

import numpy as np  # noqa: E402

from . import metrics, network, optim  # noqa: E402
from .errors import ConfigError, TrainingError  # noqa: E402
from .experiments import (  # noqa: E402
    EXPERIMENTS,
    ExperimentConfig,
    build_setup,
    config_to_json,
    domain_of,
    get_benchmark,
    input_maps,
    load_config,
    make_config,
    train_config,
)

EVAL_GRID_POINTS = 1000


def _fmt(v):
    return format(v, ".17g") if isinstance(v, float) else v


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


def _eval_grid(cfg: ExperimentConfig) -> np.ndarray:
    dom = domain_of(cfg)
    return np.linspace(float(dom.x_lo[0]), float(dom.x_hi[0]), EVAL_GRID_POINTS)


def _model_table_fn(ansatz, bench):
    def fn(x, t):
        U = network.ansatz_eval_batch(ansatz, x[:, None], np.full(x.size, float(t)))
        return bench.model_to_table(U)

    return fn


def _baseline_table_fn(params, maps, bench):
    def fn(x, t):
        X = np.column_stack([x, np.full(x.size, float(t))])
        return bench.model_to_table(network.eval_batch(params, X, maps))

    return fn


def _error_rows(method, model_fn, bench, grid, times):
    """Per-time, per-variable relative errors; NaN where the reference norm is 0."""
    rows = []
    for t in times:
        for i, name in enumerate(bench.variables):
            approx = lambda g, tt: model_fn(g, tt)[:, i : i + 1]
            exact = lambda g, tt: bench.exact_table(g, tt)[:, i : i + 1]
            try:
                rep = metrics.relative_errors(approx, exact, grid, [t], [name])
                r = rep.rows[0]
                rows.append((method, float(t), name, r.l1, r.l2, r.linf))
            except ZeroDivisionError:
                rows.append((method, float(t), name, float("nan"), float("nan"),
                             float("nan")))
    return rows


def _write_profiles(out, bench, grid, times, model_fn):
    for t in times:
        model = model_fn(grid, t)
        exact = bench.exact_table(grid, t)
        header = ["x"] + [f"{v}_model" for v in bench.variables] + [
            f"{v}_exact" for v in bench.variables]
        rows = [
            [float(grid[i])] + [float(v) for v in model[i]] + [float(v) for v in exact[i]]
            for i in range(grid.size)
        ]
        _write_csv(out / f"profile_t{t:g}.csv", header, rows)


def _primary_l1(model_fn, bench, grid, t) -> float:
    i = bench.variables.index(bench.primary)
    model = model_fn(grid, t)[:, i]
    exact = bench.exact_table(grid, t)[:, i]
    return float(np.sum(np.abs(model - exact)) / np.sum(np.abs(exact)))


def run_experiment(cfg: ExperimentConfig) -> dict:
    """Train per the two-phase loop and write all artifacts; returns a summary."""
    bench = get_benchmark(cfg.experiment)
    setup = build_setup(cfg)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(config_to_json(cfg))
    grid = _eval_grid(cfg)
    t_final = setup.domain.t_end
    ckpt_rows = []

    def on_checkpoint(ansatz, rec):
        e_l1 = _primary_l1(_model_table_fn(ansatz, bench), bench, grid, t_final)
        ckpt_rows.append((rec.iteration, rec.phase, rec.cons, rec.ent, rec.tvd, e_l1))
        network.save_params(ansatz.params, out / f"checkpoint_{rec.iteration:06d}.bin")

    result = optim.train(train_config(cfg), setup, on_checkpoint)
    network.save_params(result.ansatz.params, out / "checkpoint_final.bin")

    _write_csv(out / "history.csv",
               ["iter", "cons", "ent", "tvd", "total", "grad_norm", "wall_ms"],
               [(r.iteration, r.cons, r.ent, r.tvd, r.total, r.grad_norm, r.wall_ms)
                for r in result.history])
    _write_csv(out / "checkpoints.csv",
               ["iter", "phase", "cons", "ent", "tvd", "e_l1"], ckpt_rows)

    model_fn = _model_table_fn(result.ansatz, bench)
    _write_profiles(out, bench, grid, bench.times, model_fn)
    rows = _error_rows("wepinn", model_fn, bench, grid, bench.times)
    _write_csv(out / "errors.csv",
               ["method", "time", "variable", "E_L1", "E_L2", "E_Linf"], rows)

    summary = {
        "experiment": cfg.experiment,
        "aborted": result.aborted,
        "final_e_l1": _primary_l1(model_fn, bench, grid, t_final),
        "out_dir": str(out),
        "iterations": len(result.history),
    }
    if result.history:
        last = result.history[-1]
        summary.update(cons=last.cons, ent=last.ent, tvd=last.tvd)
    return summary


def run_baseline(cfg: ExperimentConfig) -> dict:
    """Train the strong-form baseline and write the same artifact family."""
    bench = get_benchmark(cfg.experiment)
    domain = domain_of(cfg)
    setup = optim.BaselineSetup(
        law=bench.make_law(),
        domain=domain,
        network_config=network.NetworkConfig(2, bench.make_law().m,
                                             cfg.hidden_layers, cfg.hidden_width),
        initial_condition=bench.ic_conserved,
        left_state=bench.left_state,
        right_state=bench.right_state,
        maps=input_maps(domain, bench.out_scale),
        n_interior=cfg.baseline_interior,
        n_ic=cfg.baseline_ic,
        n_bc=cfg.baseline_bc,
    )
    result = optim.train_baseline(train_config(cfg), setup)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(config_to_json(cfg))
    network.save_params(result.params, out / "checkpoint_final.bin")
    _write_csv(out / "history.csv",
               ["iter", "residual", "ic", "bc", "total", "grad_norm", "wall_ms"],
               [(r.iteration, r.residual, r.ic, r.bc, r.total, r.grad_norm, r.wall_ms)
                for r in result.history])
    grid = _eval_grid(cfg)
    model_fn = _baseline_table_fn(result.params, result.maps, bench)
    _write_profiles(out, bench, grid, bench.times, model_fn)
    rows = _error_rows("baseline", model_fn, bench, grid, bench.times)
    _write_csv(out / "errors.csv",
               ["method", "time", "variable", "E_L1", "E_L2", "E_Linf"], rows)
    return {
        "experiment": cfg.experiment,
        "aborted": result.aborted,
        "final_e_l1": _primary_l1(model_fn, bench, grid, domain.t_end),
        "out_dir": str(out),
    }


def emit_table(cfg: ExperimentConfig, checkpoint_path, baseline: bool = False) -> dict:
    """Recompute the error table from a saved parameter checkpoint."""
    bench = get_benchmark(cfg.experiment)
    params = network.load_params(checkpoint_path)
    domain = domain_of(cfg)
    maps = input_maps(domain, bench.out_scale)
    if baseline:
        model_fn = _baseline_table_fn(params, maps, bench)
        method = "baseline"
    else:
        ansatz = network.Ansatz(params, bench.ic_conserved, domain.t_end, maps=maps)
        model_fn = _model_table_fn(ansatz, bench)
        method = "wepinn"
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    grid = _eval_grid(cfg)
    rows = _error_rows(method, model_fn, bench, grid, bench.times)
    _write_csv(out / "errors.csv",
               ["method", "time", "variable", "E_L1", "E_L2", "E_Linf"], rows)
    return {"experiment": cfg.experiment, "out_dir": str(out)}


def _add_common(p):
    p.add_argument("--experiment", choices=EXPERIMENTS)
    p.add_argument("--preset", default=None, choices=("desk", "paper"))
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--config", default=None, help="JSON config file")
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--adam-iters", type=int, default=None)
    p.add_argument("--lbfgs-iters", type=int, default=None)
    p.add_argument("--quad-q", type=int, default=None)
    p.add_argument("--boundary-mode", default=None,
                   choices=("dirichlet-state", "network-value"))


def _config_from_args(args) -> ExperimentConfig:
    overrides = {}
    for field, attr in (("adam_iters", "adam_iters"), ("lbfgs_iters", "lbfgs_iters"),
                        ("quad_q", "quad_q"), ("boundary_mode", "boundary_mode")):
        val = getattr(args, attr)
        if val is not None:
            overrides[field] = val
    if args.config:
        extra = {}
        if args.experiment:
            extra["experiment"] = args.experiment
        if args.preset:
            extra["preset"] = args.preset
        if args.seed is not None:
            extra["seed"] = args.seed
        if args.out:
            extra["out_dir"] = args.out
        return load_config(args.config, **extra, **overrides)
    if not args.experiment:
        raise ConfigError("--experiment (or --config) is required")
    return make_config(args.experiment, args.preset or "desk", args.seed or 0,
                       args.out or "out", **overrides)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="wepinn", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("run", "baseline"):
        _add_common(sub.add_parser(name))
    p_table = sub.add_parser("table")
    _add_common(p_table)
    p_table.add_argument("--checkpoint", required=True)
    p_table.add_argument("--baseline-checkpoint", action="store_true",
                         help="interpret the checkpoint as a baseline network")
    p_val = sub.add_parser("validate")
    p_val.add_argument("--inject-fault", default=None,
                       help="deliberately corrupt one ingredient (test hook)")
    args = parser.parse_args(argv)

    if args.command == "validate":
        from .validation import run_validation

        ok, results = run_validation(args.inject_fault)
        for r in results:
            status = "PASS" if r.passed else "FAIL"
            print(f"{status}  {r.name}: measured {r.measured:.3e} "
                  f"(threshold {r.threshold:.3e})")
        if not ok:
            print("validation FAILED:", ", ".join(r.name for r in results if not r.passed))
            return 1
        print("validation passed")
        return 0

    try:
        cfg = _config_from_args(args)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    try:
        if args.command == "run":
            summary = run_experiment(cfg)
        elif args.command == "baseline":
            summary = run_baseline(cfg)
        else:
            summary = emit_table(cfg, args.checkpoint, args.baseline_checkpoint)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except TrainingError as exc:
        print(f"training error: {exc}", file=sys.stderr)
        return 3

    for key, val in summary.items():
        print(f"{key}: {val}")
    if summary.get("aborted"):
        print("training aborted on non-finite loss; last checkpoint retained",
              file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
