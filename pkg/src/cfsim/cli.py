"""Command-line interface.

Subcommands: simulate, train, gcomp, evaluate, natural-course,
run-experiment, verify-manifest. Configuration files are JSON; flags
override file values. The CFSIM_OUT_ROOT environment variable supplies
the default root for relative output paths.

Exit codes: 0 success, 2 configuration error, 3 stage failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_STAGE = 3

log = logging.getLogger("cfsim")


def _out_path(raw: str) -> Path:
    path = Path(raw)
    root = os.environ.get("CFSIM_OUT_ROOT")
    if not path.is_absolute() and root:
        return Path(root) / path
    return path


def _load_sim_config(args) -> "SimConfig":
    from .simulator.config import SimConfig

    if args.config:
        payload = json.loads(Path(args.config).read_text(encoding="utf-8"))
        cfg = SimConfig.from_dict(payload)
    else:
        cfg = SimConfig()
    for flag, attr in [("n", "n_trajectories"), ("horizon", "horizon"),
                       ("m", "divergence_step"), ("seed", "master_seed")]:
        value = getattr(args, flag, None)
        if value is not None:
            setattr(cfg, attr, value)
    cfg.validate()
    return cfg


def cmd_simulate(args) -> int:
    from .dataio import write_dataset
    from .simulator.generate import generate_dataset

    cfg = _load_sim_config(args)
    dataset = generate_dataset(cfg, args.regime)
    path = write_dataset(dataset, _out_path(args.out))
    print(f"wrote {len(dataset)} {args.regime!r} trajectories to {path}")
    return EXIT_OK


def cmd_train(args) -> int:
    from .dataio import read_dataset
    from .model.checkpoint import save_model
    from .model.config import ModelConfig, preset
    from .model.network import CovariateModel
    from .model.residuals import collect_residuals
    from .model.training import train

    dataset = read_dataset(args.data)
    if args.model_config:
        cfg = ModelConfig.from_dict(json.loads(Path(args.model_config).read_text(encoding="utf-8")))
    else:
        cfg = preset(args.preset)
    if args.epochs is not None:
        cfg.epochs = args.epochs
    if args.seed is not None:
        cfg.seed = args.seed
    if args.dropout is not None:
        cfg.dropout = args.dropout
    if args.treatment_head:
        cfg.include_treatment_head = True
    cfg.validate()
    model = CovariateModel.build(cfg, dataset.schema)
    model, report = train(model, dataset, train_frac=args.train_frac)
    _, holdout = dataset.split(args.train_frac)
    bank = collect_residuals(model, holdout)
    path = save_model(model, _out_path(args.out), bank=bank, extra={"train_report": report.to_dict()})
    print(
        f"trained {cfg.representation}/{cfg.head} model: best val loss "
        f"{report.best_val:.5f} at epoch {report.best_epoch}; wrote {path}"
    )
    return EXIT_OK


def cmd_gcomp(args) -> int:
    from .dataio import read_dataset
    from .gcomp.engine import g_compute
    from .gcomp.history import history_from_trajectory
    from .gcomp.strategies import StrategySpec
    from .mcio import write_mc_results, write_summary_csv
    from .model.checkpoint import load_model
    from .simulator.config import SimConfig

    model, bank = load_model(args.model)
    if bank is None:
        raise ValueError(f"{args.model} carries no residual bank; retrain with holdout data")
    dataset = read_dataset(args.data)
    m = args.m if args.m is not None else dataset.m
    strategy = StrategySpec.parse(args.strategy).build()
    sim_config = SimConfig.from_dict(dataset.config) if dataset.config else SimConfig()
    results = []
    for traj in dataset.trajectories:
        history = history_from_trajectory(traj, m)
        results.append(
            g_compute(
                model, bank, history, strategy,
                K=dataset.K, M=args.draws, dropout=args.dropout,
                alphas=(args.alpha_low, args.alpha_high), seed=args.seed,
                sim_config=sim_config,
            )
        )
    out = _out_path(args.out)
    files = write_mc_results(
        results, out, meta={"strategy": args.strategy, "m": m, "data": str(args.data)},
        keep_draws=args.keep_draws,
    )
    files.append(write_summary_csv(results, out.with_name(out.stem + "_summary.csv")))
    excluded = sum(r.n_excluded for r in results)
    print(
        f"simulated {len(results)} patients x {args.draws} draws under {args.strategy!r} "
        f"({excluded} draws excluded); wrote {', '.join(str(p) for p in files)}"
    )
    return EXIT_OK


def cmd_evaluate(args) -> int:
    from .dataio import read_dataset
    from .evaluation import report as rpt
    from .evaluation.metrics import calibration, mse, population_average
    from .mcio import read_mc_results
    from .model.checkpoint import load_model

    results, meta = read_mc_results(args.mc)
    truth = read_dataset(args.truth)
    model, _ = load_model(args.model)
    m = int(meta.get("m", truth.m))
    out_dir = _out_path(args.out)
    label = args.label or meta.get("model", "model")
    table = mse(results, truth, m, model.norm)
    table.label = label
    files = [str(p) for p in rpt.write_mse(table, out_dir, label)]
    cov_t, cov = calibration(results, truth, m, alphas=tuple(results[0].alphas))
    files.append(str(rpt.write_calibration(table.times, cov_t, cov, results[0].alphas, out_dir, label, truth.regime)))
    files.append(str(rpt.plot_mse_curves({label: table}, out_dir, truth.regime)))
    nominal = results[0].alphas[1] - results[0].alphas[0]
    files.append(str(rpt.plot_calibration_curves({label: (table.times, cov_t)}, nominal, out_dir, truth.regime)))
    for channel in args.channels:
        est = population_average(results, channel)
        true_curve = population_average(truth, channel)[m:]
        times = np.arange(m, truth.K + 1)
        stem = f"pop_avg_{channel}_{label}_{truth.regime}"
        files.append(str(rpt.write_curve(times, est, true_curve, out_dir, stem)))
        files.append(str(rpt.plot_curve_pair(times, est, true_curve, out_dir, stem, channel,
                                             f"population average {channel} ({truth.regime})")))
    print(f"pooled MSE {table.overall_mse:.5f}, coverage {cov:.3f}; wrote {len(files)} files to {out_dir}")
    return EXIT_OK


def cmd_natural_course(args) -> int:
    from .dataio import read_dataset
    from .evaluation import report as rpt
    from .gcomp.natural import natural_course
    from .model.checkpoint import load_model
    from .simulator.config import SimConfig

    model, bank = load_model(args.model)
    dataset = read_dataset(args.data)
    sim_config = SimConfig.from_dict(dataset.config) if dataset.config else SimConfig()
    res = natural_course(
        model, bank, dataset, horizon=args.horizon, M=args.draws, seed=args.seed,
        sim_config=sim_config,
    )
    out_dir = _out_path(args.out)
    files = []
    for channel in args.channels:
        i = res.channels.index(channel)
        stem = f"natural_course_{channel}"
        files.append(str(rpt.write_curve(res.times, res.simulated_mean[:, i], res.observed_mean[:, i], out_dir, stem)))
        files.append(str(rpt.plot_curve_pair(res.times, res.simulated_mean[:, i], res.observed_mean[:, i],
                                             out_dir, stem, channel, f"natural course: {channel}")))
    gaps = res.mean_abs_gap()
    worst = max(gaps, key=gaps.get)
    print(f"natural-course check over {len(res.per_patient)} patients, horizon {args.horizon}: "
          f"largest mean abs gap {gaps[worst]:.3f} on {worst}; wrote {len(files)} files to {out_dir}")
    return EXIT_OK


def cmd_run_experiment(args) -> int:
    from .pipeline.experiment import ExperimentConfig, run_experiment

    config = ExperimentConfig.from_json(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        config.sim.master_seed = args.seed
    path = run_experiment(config, _out_path(args.out))
    print(f"experiment complete; manifest at {path}")
    return EXIT_OK


def cmd_verify_manifest(args) -> int:
    from .pipeline.manifest import audit_stage_io, load_manifest, verify_manifest

    problems = verify_manifest(args.dir)
    problems += audit_stage_io(load_manifest(args.dir))
    if problems:
        for p in problems:
            print(p)
        return EXIT_STAGE
    print("manifest verified: all hashes match, stage IO consistent")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cfsim",
        description="Counterfactual trajectory prediction: simulate cohorts, train "
        "sequential conditional models, run Monte-Carlo g-computation, evaluate.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a cohort under a treatment regime")
    p.add_argument("--config", help="SimConfig JSON file")
    p.add_argument("--regime", required=True, choices=["o", "c1", "c2"])
    p.add_argument("--out", required=True)
    p.add_argument("--n", type=int, help="number of trajectories (overrides config)")
    p.add_argument("--horizon", type=int, help="last time index K (overrides config)")
    p.add_argument("--m", type=int, help="divergence step (overrides config)")
    p.add_argument("--seed", type=int, help="master seed (overrides config)")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("train", help="fit a model on an observational dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--model-config", help="ModelConfig JSON file")
    p.add_argument("--preset", default="ident_lstm",
                   help="architecture preset when no config file is given")
    p.add_argument("--out", required=True)
    p.add_argument("--train-frac", type=float, default=0.8)
    p.add_argument("--epochs", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--dropout", type=float)
    p.add_argument("--treatment-head", action="store_true",
                   help="also fit the treatment process (needed for natural-course runs)")
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("gcomp", help="Monte-Carlo counterfactual simulation")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True, help="dataset providing observed histories and truth")
    p.add_argument("--strategy", required=True,
                   help="o | c1 | c2 | learned | rule like fluid:500@map<65")
    p.add_argument("--m", type=int, help="history length (defaults to the dataset's divergence step)")
    p.add_argument("--draws", type=int, default=100)
    p.add_argument("--dropout", action="store_true", help="fresh dropout masks per draw")
    p.add_argument("--alpha-low", type=float, default=0.25)
    p.add_argument("--alpha-high", type=float, default=0.75)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--keep-draws", action="store_true", help="persist full draw tensors (.npz)")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_gcomp)

    p = sub.add_parser("evaluate", help="MSE/calibration/population tables and figures")
    p.add_argument("--mc", required=True, help="Monte-Carlo output file")
    p.add_argument("--truth", required=True, help="ground-truth dataset")
    p.add_argument("--model", required=True, help="checkpoint (for normalization stats)")
    p.add_argument("--label")
    p.add_argument("--channels", nargs="*", default=["map", "cvp"])
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_evaluate)

    p = sub.add_parser("natural-course", help="predictive check under the learned treatment process")
    p.add_argument("--model", required=True, help="checkpoint trained with --treatment-head")
    p.add_argument("--data", required=True)
    p.add_argument("--horizon", type=int, required=True)
    p.add_argument("--draws", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--channels", nargs="*", default=["map", "cvp", "hr", "tbv"])
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_natural_course)

    p = sub.add_parser("run-experiment", help="full protocol: simulate, train, g-compute, evaluate")
    p.add_argument("--config", help="ExperimentConfig JSON file (defaults to the standard protocol)")
    p.add_argument("--seed", type=int, help="override the master seed")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_run_experiment)

    p = sub.add_parser("verify-manifest", help="re-hash artifacts against a run manifest")
    p.add_argument("--dir", required=True)
    p.set_defaults(fn=cmd_verify_manifest)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    from .pipeline.experiment import StageError
    from .simulator.config import ConfigError

    try:
        return args.fn(args)
    except ConfigError as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except StageError as e:
        print(f"{e}", file=sys.stderr)
        return EXIT_STAGE
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
