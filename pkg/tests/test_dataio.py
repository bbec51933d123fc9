import json

import numpy as np
import pytest

from cfsim.dataio import DatasetFormatError, read_dataset, write_dataset
from cfsim.simulator import SimConfig, generate_dataset


@pytest.fixture(scope="module")
def dataset():
    return generate_dataset(SimConfig(n_trajectories=8, horizon=12, divergence_step=6, master_seed=3), "c1")


def test_round_trip_identity(tmp_path, dataset):
    path = write_dataset(dataset, tmp_path / "d.ndjson")
    loaded = read_dataset(path)
    assert loaded.schema == dataset.schema
    assert loaded.regime == dataset.regime
    assert (loaded.K, loaded.m, loaded.master_seed) == (dataset.K, dataset.m, dataset.master_seed)
    assert loaded.config == dataset.config
    for a, b in zip(dataset.trajectories, loaded.trajectories):
        assert (a.id, a.regime, a.seed, a.K, a.m) == (b.id, b.regime, b.seed, b.K, b.m)
        assert np.array_equal(a.L, b.L)
        assert np.array_equal(a.A, b.A)


def test_serialization_is_byte_identical_across_runs(tmp_path):
    cfg = SimConfig(n_trajectories=5, horizon=8, divergence_step=4, master_seed=11)
    p1 = write_dataset(generate_dataset(cfg, "o"), tmp_path / "a.ndjson")
    p2 = write_dataset(generate_dataset(cfg, "o"), tmp_path / "b.ndjson")
    assert p1.read_bytes() == p2.read_bytes()


def test_truncated_line_reports_line_number(tmp_path, dataset):
    path = write_dataset(dataset, tmp_path / "d.ndjson")
    lines = path.read_text().splitlines()
    lines[-1] = lines[-1][: len(lines[-1]) // 2]
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(DatasetFormatError, match=rf"line {len(lines)}"):
        read_dataset(path)


def test_version_mismatch_rejected(tmp_path, dataset):
    path = write_dataset(dataset, tmp_path / "d.ndjson")
    lines = path.read_text().splitlines()
    header = json.loads(lines[0])
    header["version"] = 999
    lines[0] = json.dumps(header)
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(DatasetFormatError, match="version"):
        read_dataset(path)


def test_missing_trajectories_detected(tmp_path, dataset):
    path = write_dataset(dataset, tmp_path / "d.ndjson")
    lines = path.read_text().splitlines()
    path.write_text("\n".join(lines[:-2]) + "\n")
    with pytest.raises(DatasetFormatError, match="promises"):
        read_dataset(path)


def test_non_dataset_file_rejected(tmp_path):
    path = tmp_path / "junk.ndjson"
    path.write_text('{"kind": "something-else"}\n')
    with pytest.raises(DatasetFormatError, match="not a dataset"):
        read_dataset(path)
