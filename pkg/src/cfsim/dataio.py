"""Dataset persistence: newline-delimited JSON, one trajectory per line.

Line 0 is a header carrying the schema, the generator configuration
echo and a format version; lines 1..n are trajectories:

    {"id": 3, "regime": "c1", "seed": 10003, "K": 64, "m": 34,
     "L": {"map": [...], ...}, "A": {"fluid": [...], "vaso": [...]}}

Serialization is canonical (sorted keys, no whitespace), so a dataset
regenerated from the same master seed is byte-identical on disk.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .channels import ChannelSchema
from .trajectories import Dataset, Trajectory

FORMAT_VERSION = 1
HEADER_KIND = "cfsim-dataset"


class DatasetFormatError(ValueError):
    """Unreadable or version-incompatible dataset file."""


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def write_dataset(dataset: Dataset, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = {
        "kind": HEADER_KIND,
        "version": FORMAT_VERSION,
        "schema": dataset.schema.to_dict(),
        "regime": dataset.regime,
        "n": len(dataset.trajectories),
        "K": dataset.K,
        "m": dataset.m,
        "master_seed": dataset.master_seed,
        "config": dataset.config,
    }
    with path.open("w", encoding="utf-8") as fh:
        fh.write(_dumps(header) + "\n")
        for traj in dataset.trajectories:
            line = {
                "id": traj.id,
                "regime": traj.regime,
                "seed": traj.seed,
                "K": traj.K,
                "m": traj.m,
                "L": {
                    name: traj.L[:, i].tolist()
                    for i, name in enumerate(dataset.schema.names)
                },
                "A": {
                    name: traj.A[:, i].tolist()
                    for i, name in enumerate(dataset.schema.actions)
                },
            }
            fh.write(_dumps(line) + "\n")
    return path


def read_dataset(path: str | Path) -> Dataset:
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        header_line = fh.readline()
        if not header_line.strip():
            raise DatasetFormatError(f"{path}: empty file, missing header")
        try:
            header = json.loads(header_line)
        except json.JSONDecodeError as e:
            raise DatasetFormatError(f"{path}: malformed header line: {e}") from e
        if header.get("kind") != HEADER_KIND:
            raise DatasetFormatError(f"{path}: not a dataset file (kind={header.get('kind')!r})")
        version = header.get("version")
        if version != FORMAT_VERSION:
            raise DatasetFormatError(
                f"{path}: unsupported dataset version {version!r}, reader supports {FORMAT_VERSION}"
            )
        schema = ChannelSchema.from_dict(header["schema"])
        trajectories: list[Trajectory] = []
        expected = int(header["n"])
        for lineno, raw in enumerate(fh, start=2):
            if not raw.strip():
                continue
            try:
                rec = json.loads(raw)
                L = np.column_stack([np.asarray(rec["L"][name], dtype=float) for name in schema.names])
                A = np.column_stack([np.asarray(rec["A"][name], dtype=float) for name in schema.actions])
                traj = Trajectory(
                    id=int(rec["id"]),
                    regime=str(rec["regime"]),
                    seed=int(rec["seed"]),
                    K=int(rec["K"]),
                    m=int(rec["m"]),
                    L=L,
                    A=A,
                )
            except (json.JSONDecodeError, KeyError, ValueError) as e:
                raise DatasetFormatError(f"{path}: malformed trajectory at line {lineno}: {e}") from e
            if traj.L.shape[0] != traj.K + 1 or traj.A.shape[0] != traj.K + 1:
                raise DatasetFormatError(
                    f"{path}: line {lineno}: expected {traj.K + 1} rows, got L {traj.L.shape[0]}, A {traj.A.shape[0]}"
                )
            trajectories.append(traj)
    if len(trajectories) != expected:
        raise DatasetFormatError(
            f"{path}: header promises {expected} trajectories, file has {len(trajectories)}"
        )
    return Dataset(
        schema=schema,
        trajectories=trajectories,
        regime=str(header["regime"]),
        K=int(header["K"]),
        m=int(header["m"]),
        master_seed=int(header["master_seed"]),
        config=dict(header.get("config", {})),
    )
