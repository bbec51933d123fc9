"""Loud-failure paths: simulator overflow names the step, empty report
tables refuse to write files, schema validation rejects malformed
layouts."""

import numpy as np
import pytest

from cfsim.channels import Channel, ChannelSchema, SchemaError
from cfsim.evaluation.metrics import EvaluationError, MetricTable
from cfsim.evaluation.report import write_mse
from cfsim.simulator import DynamicsParams, SimConfig, SimulationDiverged, generate_trajectory


def test_simulation_overflow_names_the_step():
    # an anti-damped volume relaxation multiplies the state each step
    # until it overflows to inf, which must fail loudly with the step
    cfg = SimConfig(
        n_trajectories=1, horizon=45, divergence_step=20, master_seed=1,
        dynamics=DynamicsParams(blood_volume_relax=-1e9),
    )
    with pytest.raises(SimulationDiverged, match=r"step \d+"):
        generate_trajectory(0, "o", cfg)


def test_empty_metric_table_refuses_to_write(tmp_path):
    table = MetricTable(
        label="x", regime="c1", times=np.array([], dtype=int), channel_subset=[],
        per_time_mse=np.array([]), overall_mse=0.0, per_channel_mse_raw={},
    )
    with pytest.raises(EvaluationError):
        write_mse(table, tmp_path, "x")
    assert list(tmp_path.iterdir()) == []


def test_schema_validation():
    with pytest.raises(SchemaError, match="outcome"):
        ChannelSchema(channels=[Channel("a", "continuous", 0, 1.0)])
    with pytest.raises(SchemaError, match="group"):
        ChannelSchema(channels=[Channel("a", "continuous", 1, 1.0, outcome=True)])
    with pytest.raises(SchemaError, match="kind"):
        ChannelSchema(channels=[Channel("a", "fuzzy", 0, 1.0, outcome=True)])


def test_mixed_kind_group_rejected():
    from cfsim.model import CovariateModel, ModelConfig

    schema = ChannelSchema(
        channels=[
            Channel("flag", "binary", 0, 1.0),
            Channel("a", "continuous", 0, 1.0, outcome=True),
        ]
    )
    with pytest.raises(SchemaError, match="mixes"):
        CovariateModel.build(ModelConfig(head="linear"), schema)
