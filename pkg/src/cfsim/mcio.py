"""Monte-Carlo output persistence.

Per-patient results go to newline-delimited JSON (header line + one
patient per line) holding the point predictions, the quantile band and
diagnostics; the full draw tensors optionally go to a sibling ``.npz``
(keyed by patient id) since they dominate the size. A summary CSV with
per-step pooled means accompanies the output.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .gcomp.engine import McResult

FORMAT_VERSION = 1
HEADER_KIND = "cfsim-mcoutput"


class McFormatError(ValueError):
    pass


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def write_mc_results(
    results: list[McResult],
    path: str | Path,
    meta: dict | None = None,
    keep_draws: bool = False,
) -> list[Path]:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    written = [path]
    header = {
        "kind": HEADER_KIND,
        "version": FORMAT_VERSION,
        "n": len(results),
        "channels": results[0].channels if results else [],
        "alphas": list(results[0].alphas) if results else [],
        "meta": meta or {},
        "draws_file": path.with_suffix(".draws.npz").name if keep_draws else None,
    }
    with path.open("w", encoding="utf-8") as fh:
        fh.write(_dumps(header) + "\n")
        for r in results:
            fh.write(
                _dumps(
                    {
                        "patient": r.patient_id,
                        "m": r.m,
                        "seed": r.seed,
                        "times": r.times.tolist(),
                        "point": r.point.tolist(),
                        "q_low": r.q_low.tolist(),
                        "q_high": r.q_high.tolist(),
                        "n_draws": int(r.n_draws),
                        "n_excluded": r.n_excluded,
                        "actions_mean": r.actions_mean.tolist(),
                    }
                )
                + "\n"
            )
    if keep_draws:
        draws_path = path.with_suffix(".draws.npz")
        np.savez_compressed(
            draws_path, **{f"patient_{r.patient_id}": r.draws for r in results}
        )
        written.append(draws_path)
    return written


def read_mc_results(path: str | Path) -> tuple[list[McResult], dict]:
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        try:
            header = json.loads(fh.readline())
        except json.JSONDecodeError as e:
            raise McFormatError(f"{path}: malformed header: {e}") from e
        if header.get("kind") != HEADER_KIND:
            raise McFormatError(f"{path}: not a Monte-Carlo output file")
        if header.get("version") != FORMAT_VERSION:
            raise McFormatError(f"{path}: unsupported version {header.get('version')!r}")
        draws_by_patient = {}
        if header.get("draws_file"):
            draws_path = path.parent / header["draws_file"]
            if draws_path.exists():
                with np.load(draws_path) as z:
                    draws_by_patient = {k: z[k] for k in z.files}
        results = []
        alphas = tuple(header.get("alphas") or (0.25, 0.75))
        for lineno, raw in enumerate(fh, start=2):
            if not raw.strip():
                continue
            try:
                rec = json.loads(raw)
            except json.JSONDecodeError as e:
                raise McFormatError(f"{path}: malformed record at line {lineno}: {e}") from e
            point = np.asarray(rec["point"], dtype=float)
            draws = draws_by_patient.get(f"patient_{rec['patient']}")
            if draws is None:
                draws = np.empty((0,) + point.shape)
            results.append(
                McResult(
                    patient_id=int(rec["patient"]),
                    m=int(rec["m"]),
                    times=np.asarray(rec["times"], dtype=int),
                    channels=list(header["channels"]),
                    draws=draws,
                    point=point,
                    q_low=np.asarray(rec["q_low"], dtype=float),
                    q_high=np.asarray(rec["q_high"], dtype=float),
                    alphas=alphas,
                    n_excluded=int(rec["n_excluded"]),
                    actions_mean=np.asarray(rec["actions_mean"], dtype=float),
                    seed=int(rec.get("seed", 0)),
                )
            )
    return results, header.get("meta", {})


def write_summary_csv(results: list[McResult], path: str | Path) -> Path:
    """Per-(step, channel) pooled mean of the point predictions."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if not results:
        raise McFormatError("no results to summarize")
    channels = results[0].channels
    stacked = np.stack([r.point for r in results])  # (n, S+1, n_l)
    times = results[0].times
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t"] + channels)
        for k, t in enumerate(times):
            writer.writerow([int(t)] + [repr(float(v)) for v in stacked[:, k, :].mean(axis=0)])
    return path
