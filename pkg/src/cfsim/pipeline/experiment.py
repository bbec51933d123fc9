"""End-to-end experiment orchestration.

The standard protocol: generate the observational cohort and the two
counterfactual cohorts (seed-coupled, drawn from a disjoint stream
block), train each configured model on the observational data, build
residual banks from the validation split, run Monte-Carlo g-computation
for every counterfactual patient from its observed history, and emit
metric tables, report figures and a hashed manifest.

Stages run sequentially; a failure aborts with a stage-named error
while the artifacts produced so far stay on disk under a manifest
marked incomplete.
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..channels import default_schema
from ..dataio import read_dataset, write_dataset
from ..evaluation.metrics import calibration, mse, population_average, treatment_effect
from ..evaluation import report
from ..gcomp.engine import g_compute
from ..gcomp.history import history_from_trajectory
from ..gcomp.strategies import StrategySpec
from ..mcio import write_mc_results, write_summary_csv
from ..model.checkpoint import save_model
from ..model.config import ModelConfig, preset
from ..model.network import CovariateModel
from ..model.residuals import collect_residuals
from ..model.training import train
from ..simulator.config import ConfigError, SimConfig
from ..simulator.generate import generate_dataset
from .manifest import Manifest, StageRecord

log = logging.getLogger(__name__)

DEFAULT_MODELS = ("ident_linear", "lstm_linear", "ident_lstm", "lstm_lstm")


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class ExperimentConfig:
    """The full protocol knobs; defaults reproduce the standard setup
    (10,000 observational and 500 counterfactual trajectories of length
    64 diverging at step 34, 100 draws, 80/20 split, batch 64)."""

    sim: SimConfig = field(default_factory=SimConfig)
    n_counterfactual: int = 500
    models: dict[str, ModelConfig] = field(
        default_factory=lambda: {name: preset(name) for name in DEFAULT_MODELS}
    )
    train_frac: float = 0.8
    draws: int = 100
    alphas: tuple[float, float] = (0.25, 0.75)
    dropout: bool = False
    regimes: tuple[str, ...] = ("c1", "c2")
    report_channels: tuple[str, ...] = ("map", "cvp")
    keep_draws: bool = False

    def validate(self) -> None:
        self.sim.validate()
        if self.n_counterfactual <= 0:
            raise ConfigError("n_counterfactual must be positive")
        if not 0.0 < self.train_frac < 1.0:
            raise ConfigError("train_frac must lie in (0, 1)")
        if self.draws < 1:
            raise ConfigError("draws must be >= 1")
        for regime in self.regimes:
            if regime not in ("c1", "c2"):
                raise ConfigError(f"unknown counterfactual regime {regime!r}")
        schema = default_schema()
        for ch in self.report_channels:
            schema.index(ch)
        for label, mc in self.models.items():
            mc.validate()

    def to_dict(self) -> dict:
        return {
            "sim": self.sim.to_dict(),
            "n_counterfactual": self.n_counterfactual,
            "models": {k: v.to_dict() for k, v in self.models.items()},
            "train_frac": self.train_frac,
            "draws": self.draws,
            "alphas": list(self.alphas),
            "dropout": self.dropout,
            "regimes": list(self.regimes),
            "report_channels": list(self.report_channels),
            "keep_draws": self.keep_draws,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown ExperimentConfig fields: {sorted(unknown)}")
        if "sim" in d:
            d["sim"] = SimConfig.from_dict(d["sim"])
        if "models" in d:
            models = {}
            for label, entry in d["models"].items():
                if isinstance(entry, str):
                    models[label] = preset(entry)
                else:
                    models[label] = ModelConfig.from_dict(entry)
            d["models"] = models
        for key in ("alphas", "regimes", "report_channels"):
            if key in d:
                d[key] = tuple(d[key])
        cfg = cls(**d)
        cfg.validate()
        return cfg

    @classmethod
    def from_json(cls, path: str | Path) -> "ExperimentConfig":
        try:
            payload = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"{path}: unreadable experiment config: {e}") from e
        return cls.from_dict(payload)


def run_experiment(config: ExperimentConfig, out_dir: str | Path) -> Path:
    """Run the full pipeline; returns the manifest path."""
    config.validate()
    root = Path(out_dir)
    root.mkdir(parents=True, exist_ok=True)
    manifest = Manifest(root=root, config=config.to_dict())
    t_start = time.time()

    def run_stage(name: str, inputs: list[str], fn) -> list[str]:
        try:
            t0 = time.time()
            outputs = fn()
            log.info("stage %s done in %.1fs", name, time.time() - t0)
            manifest.record_stage(StageRecord(name=name, status="done", inputs=inputs, outputs=outputs))
            return outputs
        except Exception as e:
            manifest.record_stage(
                StageRecord(name=name, status="failed", inputs=inputs, outputs=[], error=str(e))
            )
            manifest.write()
            raise StageError(name, e) from e

    datasets: dict[str, Path] = {}

    def simulate_stage():
        outputs = []
        obs_cfg = config.sim
        d_o = generate_dataset(obs_cfg, "o")
        datasets["o"] = root / "d_o.ndjson"
        write_dataset(d_o, datasets["o"])
        outputs.append("d_o.ndjson")
        cf_cfg = SimConfig.from_dict(obs_cfg.to_dict())
        cf_cfg.n_trajectories = config.n_counterfactual
        # disjoint trajectory streams: counterfactual histories never
        # coincide with training trajectories, while c1/c2 stay paired
        cf_cfg.trajectory_seed_offset = obs_cfg.trajectory_seed_offset + obs_cfg.n_trajectories
        for regime in config.regimes:
            d = generate_dataset(cf_cfg, regime)
            datasets[regime] = root / f"d_{regime}.ndjson"
            write_dataset(d, datasets[regime])
            outputs.append(f"d_{regime}.ndjson")
        return outputs

    run_stage("simulate", [], simulate_stage)

    d_o = read_dataset(datasets["o"])
    truths = {regime: read_dataset(datasets[regime]) for regime in config.regimes}

    models: dict[str, CovariateModel] = {}
    banks = {}
    for mi, (label, model_cfg) in enumerate(sorted(config.models.items())):

        def train_stage(label=label, model_cfg=model_cfg, mi=mi):
            cfg = ModelConfig.from_dict(model_cfg.to_dict())
            cfg.seed = config.sim.master_seed * 1000 + mi
            model = CovariateModel.build(cfg, d_o.schema)
            model, train_report = train(model, d_o, train_frac=config.train_frac)
            _, holdout = d_o.split(config.train_frac)
            bank = collect_residuals(model, holdout)
            ckpt = root / f"model_{label}.ckpt"
            save_model(model, ckpt, bank=bank, extra={"train_report": train_report.to_dict()})
            models[label] = model
            banks[label] = bank
            curve = root / f"training_{label}.csv"
            report.write_curve(
                np.arange(len(train_report.val_losses)),
                np.asarray(train_report.train_losses),
                np.asarray(train_report.val_losses),
                root,
                f"training_{label}",
            )
            return [ckpt.name, curve.name]

        run_stage(f"train:{label}", ["d_o.ndjson"], train_stage)

    mc_results: dict[tuple[str, str], list] = {}
    for label in sorted(config.models):
        for regime in config.regimes:

            def gcomp_stage(label=label, regime=regime):
                model, bank = models[label], banks[label]
                truth = truths[regime]
                strategy = StrategySpec(kind=regime).build()
                results = []
                for traj in truth.trajectories:
                    history = history_from_trajectory(traj, config.sim.divergence_step)
                    results.append(
                        g_compute(
                            model,
                            bank,
                            history,
                            strategy,
                            K=config.sim.horizon,
                            M=config.draws,
                            dropout=config.dropout,
                            alphas=config.alphas,
                            seed=config.sim.master_seed,
                            sim_config=config.sim,
                        )
                    )
                mc_results[(label, regime)] = results
                out = root / f"mc_{label}_{regime}.ndjson"
                files = write_mc_results(
                    results,
                    out,
                    meta={"model": label, "regime": regime, "m": config.sim.divergence_step},
                    keep_draws=config.keep_draws,
                )
                files.append(write_summary_csv(results, root / f"mc_{label}_{regime}_summary.csv"))
                return [p.name for p in files]

            run_stage(
                f"gcomp:{label}:{regime}", [f"model_{label}.ckpt", f"d_{regime}.ndjson"], gcomp_stage
            )

    def evaluate_stage():
        outputs = []
        m = config.sim.divergence_step
        for regime in config.regimes:
            truth = truths[regime]
            tables = {}
            cal_curves = {}
            for label in sorted(config.models):
                results = mc_results[(label, regime)]
                table = mse(results, truth, m, models[label].norm)
                table.label = label
                tables[label] = table
                outputs += [p.name for p in report.write_mse(table, root, label)]
                cov_t, cov = calibration(results, truth, m, alphas=config.alphas)
                cal_curves[label] = (table.times, cov_t)
                outputs.append(
                    report.write_calibration(
                        table.times, cov_t, cov, config.alphas, root, label, regime
                    ).name
                )
            outputs.append(report.plot_mse_curves(tables, root, regime).name)
            nominal = config.alphas[1] - config.alphas[0]
            outputs.append(report.plot_calibration_curves(cal_curves, nominal, root, regime).name)

            for channel in config.report_channels:
                true_curve = population_average(truth, channel)[m:]
                for label in sorted(config.models):
                    est = population_average(mc_results[(label, regime)], channel)
                    stem = f"pop_avg_{channel}_{label}_{regime}"
                    outputs.append(report.write_curve(np.arange(m, config.sim.horizon + 1), est, true_curve, root, stem).name)
                    outputs.append(
                        report.plot_curve_pair(
                            np.arange(m, config.sim.horizon + 1), est, true_curve, root, stem,
                            channel, f"population average {channel} ({regime})",
                        ).name
                    )
        if set(config.regimes) == {"c1", "c2"}:
            for channel in config.report_channels:
                true_eff = treatment_effect(truths["c1"], truths["c2"], channel)[m:]
                for label in sorted(config.models):
                    est_eff = treatment_effect(
                        mc_results[(label, "c1")], mc_results[(label, "c2")], channel
                    )
                    stem = f"effect_{channel}_{label}"
                    times = np.arange(m, config.sim.horizon + 1)
                    outputs.append(report.write_curve(times, est_eff, true_eff, root, stem).name)
                    outputs.append(
                        report.plot_curve_pair(
                            times, est_eff, true_eff, root, stem, f"effect on {channel}",
                            f"treatment effect c1 - c2 on {channel}",
                        ).name
                    )
        # one spaghetti example: first model, first regime, first patient
        label = sorted(config.models)[0]
        regime = config.regimes[0]
        result = mc_results[(label, regime)][0]
        truth = truths[regime].trajectories[0]
        channel_idx = truth_idx = truths[regime].schema.index("map")
        outputs.append(
            report.plot_patient_draws(
                result, channel_idx, truth.L[m:, truth_idx], root, f"example_patient_{label}_{regime}"
            ).name
        )
        return outputs

    gcomp_inputs = [f"mc_{label}_{regime}.ndjson" for label in sorted(config.models) for regime in config.regimes]
    run_stage("evaluate", gcomp_inputs + [f"d_{r}.ndjson" for r in config.regimes], evaluate_stage)

    manifest.complete = True
    path = manifest.write()
    log.info("experiment complete in %.1fs: %s", time.time() - t_start, root)
    return path
