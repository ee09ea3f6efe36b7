#!/usr/bin/env python3

import sys
import os

# Adiciona o diretório do projeto ao path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import filecmp
import json
import math

import numpy as np
import pandas as pd
import pytest

from app.core.exceptions import CheckpointError
from app.models import EpisodeMetrics
from app.services.orchestrator import (
    EvaluationService,
    SwarmRunner,
    TraceRecorder,
    TrainingService,
    coverage_counts,
    emit_coverage_grid,
    read_metrics,
    read_trace,
    summarize,
)
from app.services.orchestrator.evaluation_service import EVALUATION_KEY_OFFSET
from app.services.orchestrator.metrics import metrics_columns, write_metrics
from app.services.ppo.policy import init_model


def train(config, tmp_path, name="run"):
    return TrainingService(config, output_dir=str(tmp_path / name)).train()


# ---------------------------------------------------------------- treinamento

def test_smoke_training_writes_outputs(make_config, tmp_path):
    config = make_config(M=1, N=1, T=2, episodes=1)
    result = train(config, tmp_path)

    metrics = read_metrics(result["metrics"])
    assert len(metrics) == 1
    assert list(metrics.columns) == metrics_columns(1)
    assert len(result["checkpoints"]) == 1
    assert os.path.exists(result["checkpoints"][0])
    assert os.path.exists(result["training_stats"])
    assert os.path.exists(result["psi_series"])

    with open(tmp_path / "run" / "config.json", encoding="utf-8") as f:
        saved = json.load(f)
    assert saved["environment"]["M"] == 1


def test_training_checkpoints_every_interval(make_config, tmp_path):
    config = make_config(episodes=2, checkpoint_interval=1)
    result = train(config, tmp_path)
    assert result["episodes"] == 2
    assert len(result["checkpoints"]) == 2 * config.environment.num_uavs
    stats = pd.read_csv(result["training_stats"])
    assert len(stats) == 2 * config.environment.num_uavs
    assert set(stats["uav"]) == {0, 1, 2}


def test_training_is_deterministic(make_config, tmp_path):
    config = make_config(episodes=2)
    first = train(config, tmp_path, "a")
    second = train(config, tmp_path, "b")
    assert filecmp.cmp(first["metrics"], second["metrics"], shallow=False)
    assert filecmp.cmp(first["training_stats"], second["training_stats"], shallow=False)
    for a, b in zip(first["checkpoints"], second["checkpoints"]):
        assert filecmp.cmp(a, b, shallow=False)


def test_intra_episode_cadence_runs_extra_rounds(make_config, tmp_path):
    config = make_config(episodes=1, update_every=2)
    result = train(config, tmp_path)
    stats = pd.read_csv(result["training_stats"])
    assert len(stats) > config.environment.num_uavs


def test_psi_series_has_one_row_per_slot(make_config, tmp_path):
    config = make_config(episodes=2)
    result = train(config, tmp_path)
    metrics = read_metrics(result["metrics"])
    psi = pd.read_csv(result["psi_series"])
    assert len(psi) == int(metrics["slots"].sum())
    assert list(psi.columns) == ["episode", "slot", "psi"]


# ---------------------------------------------------------------- avaliação

def test_checkpoint_evaluates_on_other_fleet_sizes(make_config, tmp_path):
    config = make_config(episodes=1)
    checkpoint = train(config, tmp_path)["checkpoints"][0]

    for size in (2, 5):
        service = EvaluationService(config.with_overrides({"M": size}))
        output = str(tmp_path / f"eval_{size}.csv")
        summary = service.evaluate(checkpoint, episodes=2, output=output)
        assert summary["episodes"] == 2
        assert 0.0 <= summary["task_pct_mean"] <= 100.0
        assert list(read_metrics(output).columns) == metrics_columns(size)


def test_mismatched_checkpoint_is_rejected(make_config, tmp_path):
    checkpoint = train(make_config(episodes=1), tmp_path)["checkpoints"][0]
    service = EvaluationService(make_config(gat_dim=8))
    with pytest.raises(CheckpointError) as error:
        service.load_store(checkpoint)
    assert "gat1.head0.W" in str(error.value)


def test_greedy_evaluation_is_repeatable(make_config):
    config = make_config()
    service = EvaluationService(config)
    store = service.load_store(None)

    def outcome(metrics):
        return [(m.discounted_rewards, m.total_energy, m.tasks_processed, m.collisions) for m in metrics]

    assert outcome(service.run(store, config, 2)) == outcome(service.run(store, config, 2))


def test_evaluation_worlds_are_disjoint_from_training_worlds(make_config):
    config = make_config()
    service = EvaluationService(config)
    store = service.load_store(None)
    runner = SwarmRunner(config)
    seed = config.training.seed

    evaluated = service.run(store, config, 2)
    for episode, metrics in enumerate(evaluated):
        assert metrics.episode == episode
        replay, _ = runner.run_episode(
            [store] * 3, episode, seed, greedy=True, key=(EVALUATION_KEY_OFFSET + episode,)
        )
        assert replay.discounted_rewards == metrics.discounted_rewards
        assert replay.total_energy == metrics.total_energy

        training_world = runner.env.reset(seed, key=(episode,))
        evaluation_world = runner.env.reset(seed, key=(EVALUATION_KEY_OFFSET + episode,))
        assert not np.array_equal(training_world.user_positions(), evaluation_world.user_positions())


def test_sweep_writes_one_file_per_value(make_config, tmp_path):
    service = EvaluationService(make_config())
    rows = service.sweep("R_cov", ["5", "15", "25"], None, 1, str(tmp_path))
    assert [row["value"] for row in rows] == [5, 15, 25]
    for value in (5, 15, 25):
        assert (tmp_path / f"sweep_R_cov_{value}.csv").exists()
    summary = pd.read_csv(tmp_path / "sweep_R_cov_summary.csv")
    assert len(summary) == 3


def test_compare_general_and_specialized(make_config, tmp_path):
    config = make_config(episodes=1)
    checkpoint = train(config, tmp_path)["checkpoints"][0]
    rows = EvaluationService(config).compare(checkpoint, {2: checkpoint}, [2, 3], 1, str(tmp_path / "compare"))
    assert [(row["model"], row["M"]) for row in rows] == [("general", 2), ("specialized", 2), ("general", 3)]
    assert len(pd.read_csv(tmp_path / "compare" / "compare.csv")) == 3


# ---------------------------------------------------------------- trace e cobertura

def test_trace_records_every_slot(make_config, tmp_path):
    config = make_config()
    recorder = EvaluationService(config).trace()
    records = recorder.records
    slots = len(records) - 1
    assert records[0]["slot"] == -1
    assert [r["slot"] for r in records[1:]] == list(range(slots))
    assert 1 <= slots <= config.environment.num_slots

    counts = coverage_counts(records, recorder.grid_size)
    assert counts.sum() == config.environment.num_uavs * slots
    support = {int(i) for i in np.flatnonzero(counts)}
    assert support == set(records[-1]["merged_visited_cells"])

    path = recorder.write(str(tmp_path / "trace.jsonl"))
    assert read_trace(path) == records


def test_trace_agrees_with_episode_metrics(make_config):
    config = make_config()
    runner = SwarmRunner(config)
    recorder = TraceRecorder(runner.env.grid_size, runner.env.cell_of)
    store = init_model(config, seed=1)
    metrics, _ = runner.run_episode([store] * 3, 0, config.training.seed, trace=recorder)

    slots = recorder.records[1:]
    assert sum(r["processed"] for r in slots) == metrics.tasks_processed
    assert sum(len(r["collisions"]) for r in slots) == metrics.collisions
    energy = sum(sum(e.values()) for r in slots for e in r["energy"])
    assert energy == pytest.approx(metrics.total_energy)
    assert [r["psi"] for r in slots] == pytest.approx(metrics.psi_series)
    assert 100.0 * metrics.tasks_processed / recorder.records[0]["tasks_total"] == pytest.approx(metrics.task_pct)


def test_trace_is_deterministic(make_config):
    service = EvaluationService(make_config())
    assert service.trace().records == service.trace().records


def test_static_trace_only_marks_occupied_cells(tmp_path):
    trace = [{"slot": -1, "visited": [0, 5]}] + [{"slot": t, "visited": [0, 5]} for t in range(4)]
    counts = emit_coverage_grid(trace, 3, str(tmp_path / "coverage.csv"))
    assert counts[0, 0] == 4 and counts[1, 2] == 4
    assert counts.sum() == 8

    grid = pd.read_csv(tmp_path / "coverage.csv")
    assert list(grid.columns) == ["row", "c0", "c1", "c2"]
    assert grid["c0"].tolist() == [4, 0, 0]


# ---------------------------------------------------------------- métricas

def test_summary_ignores_undefined_energy_per_task(tmp_path):
    metrics = [
        EpisodeMetrics(0, [-1.0, -3.0], 0, 4, 0, 0, 10.0, 5, [1.0] * 5),
        EpisodeMetrics(1, [-2.0, -2.0], 2, 4, 1, 0, 12.0, 5, [1.0] * 5),
    ]
    assert math.isnan(metrics[0].energy_per_task)
    summary = summarize(metrics)
    assert summary["energy_per_task_J_mean"] == pytest.approx(6.0)
    assert summary["task_pct_mean"] == pytest.approx(25.0)
    assert summary["mean_discounted_reward_mean"] == pytest.approx(-2.0)

    path = write_metrics(metrics, str(tmp_path / "metrics.csv"), 2)
    frame = read_metrics(path)
    assert frame["discounted_reward_uav1"].tolist() == [-3.0, -2.0]
    assert math.isnan(frame["energy_per_task_J"][0])


def test_no_tasks_counts_as_complete():
    metrics = EpisodeMetrics(0, [0.0], 0, 0, 0, 0, 1.0, 1, [0.5])
    assert metrics.task_pct == 100.0
