from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from errors import ConfigurationError
from experiment import (
    ExperimentConfig,
    ExperimentRunner,
    Manifest,
    evaluate_policy,
    run_experiment,
)
from experiment.metrics import segment_means
from experiment.runner import MANIFEST_FILE, run_seeds, training_schedule
from learning.models import AgentKind
from network.env import ChannelAccessEnv
from network.scenarios import get_scenario

pytestmark = pytest.mark.integration

SMALL_NETWORK = {
    "num_frames": 10,
    "learning": {
        "batch_size": 4,
        "replay_capacity": 64,
        "hidden_width": 8,
        "residual_blocks": 1,
    },
}


def _small_config(out_dir: Path, **kwargs) -> ExperimentConfig:
    values = {
        "scenario": "S1",
        "network": SMALL_NETWORK,
        "agents": ["tabular", "resdnn"],
        "seeds": [1],
        "out_dir": out_dir,
        "eval_frames": 4,
        "ma_window": 10,
    }
    values.update(kwargs)
    return ExperimentConfig(**values)


def test_run_seeds_are_independent_and_reproducible():
    env_a, agent_a, eval_a = run_seeds(7)
    env_b, _, _ = run_seeds(7)
    draw = np.random.default_rng
    assert draw(env_a).random() == draw(env_b).random()
    assert draw(env_a).random() != draw(agent_a).random()
    assert draw(agent_a).random() != draw(eval_a).random()


def test_training_schedule_is_the_first_drawn_schedule():
    network = get_scenario("S1", {"redraw_fud_per_frame": True})
    env_seed, _, _ = run_seeds(3)
    env = ChannelAccessEnv(network, np.random.default_rng(env_seed))
    env.reset()
    first = env.schedule.bits.copy()
    np.testing.assert_array_equal(training_schedule(network, env_seed).bits, first)


def test_tabular_learns_d1_optimal_policy(tmp_path):
    config = ExperimentConfig(
        scenario="D1",
        agents=["tabular"],
        seeds=[0],
        out_dir=tmp_path,
        eval_frames=100,
    )
    manifest = run_experiment(config)
    (record,) = manifest.runs
    assert record.evaluation.frames == 100
    assert record.evaluation.utilization == 1.0
    assert record.evaluation.collisions == 0
    assert record.evaluation.jammed_tx == 0
    assert record.baseline.utilization == 0.0
    assert record.evaluation.mean_sclar > record.baseline.mean_sclar


def test_grid_produces_one_run_per_combination(tmp_path):
    seen = []
    config = _small_config(tmp_path, seeds=[1, 2, 3])
    manifest = run_experiment(config, on_run=seen.append)

    assert len(manifest.runs) == 6
    assert len(seen) == 6
    assert {(r.agent, r.seed) for r in manifest.runs} == {
        (agent, seed)
        for agent in (AgentKind.TABULAR, AgentKind.RESDNN)
        for seed in (1, 2, 3)
    }
    assert len(manifest.fingerprints()) == 1
    assert manifest.ma_window == 10

    loaded = Manifest.load(tmp_path / MANIFEST_FILE)
    assert loaded.runs == manifest.runs
    assert loaded.experiment_config().seeds == [1, 2, 3]


def test_run_directory_contents(tmp_path):
    manifest = run_experiment(_small_config(tmp_path, agents=["resdnn"]))
    (record,) = manifest.runs
    run_dir = tmp_path / "S1" / "S5" / "resdnn" / "seed_1"
    for name in (
        "learning_curve.csv",
        "loss_curve.csv",
        "sclar.csv",
        "epoch_loss.csv",
        "eval_sclar.csv",
        "policy.npz",
    ):
        assert (run_dir / name).is_file(), name
    assert not (run_dir / "trace.csv").exists()
    assert record.paths["policy"] == str(Path("S1/S5/resdnn/seed_1/policy.npz"))

    curve = pd.read_csv(run_dir / "learning_curve.csv")
    assert len(curve) == 10 * 5
    assert len(pd.read_csv(run_dir / "sclar.csv")) == 10
    assert len(pd.read_csv(run_dir / "eval_sclar.csv")) == 4


def test_frame_size_sweep(tmp_path):
    config = _small_config(tmp_path, agents=["tabular"], frame_sizes=[5, 10, 10])
    manifest = run_experiment(config)
    assert [r.frame_size for r in manifest.runs] == [5, 10]
    assert (tmp_path / "S1" / "S10" / "tabular" / "seed_1" / "policy.json").exists()
    assert len(manifest.fingerprints()) == 2


def test_runs_are_byte_identical(tmp_path):
    first = tmp_path / "a"
    second = tmp_path / "b"
    run_experiment(_small_config(first, write_trace=True))
    run_experiment(_small_config(second, write_trace=True))

    files = sorted(p.relative_to(first) for p in first.rglob("*.csv"))
    assert files
    assert files == sorted(p.relative_to(second) for p in second.rglob("*.csv"))
    for path in files:
        assert (first / path).read_bytes() == (second / path).read_bytes(), path


def test_trace_written_on_request(tmp_path):
    run_experiment(_small_config(tmp_path, agents=["hold"], write_trace=True))
    trace = pd.read_csv(
        tmp_path / "S1" / "S5" / "hold" / "seed_1" / "trace.csv",
        dtype={"fud_bits": str},
    )
    assert len(trace) == 10 * 5
    assert set(trace["iud_action"]) == {"hold"}
    assert trace["fud_bits"].str.len().eq(3).all()


def test_unwritable_output_directory(tmp_path):
    blocker = tmp_path / "not_a_dir"
    blocker.write_text("")
    runner = ExperimentRunner(_small_config(blocker / "runs"))
    with pytest.raises(ConfigurationError):
        runner.validate()


def test_invalid_network_override_fails_before_running(tmp_path):
    config = _small_config(tmp_path, network={"num_uds": 0})
    with pytest.raises(ConfigurationError):
        run_experiment(config)
    assert not (tmp_path / MANIFEST_FILE).exists()


@pytest.mark.parametrize("redraw", [False, True])
def test_saved_policy_reproduces_evaluation(tmp_path, redraw):
    network = {**SMALL_NETWORK, "redraw_fud_per_frame": redraw}
    config = _small_config(
        tmp_path, network=network, agents=["resdnn"], seeds=[4]
    )
    (record,) = run_experiment(config).runs
    summary, series = evaluate_policy(
        config, AgentKind.RESDNN, tmp_path / record.paths["policy"], seed=4
    )
    assert summary == record.evaluation
    assert len(series.frames) == 4


def test_evaluate_policy_rejects_missing_or_foreign_files(tmp_path):
    config = _small_config(tmp_path, agents=["tabular"])
    (record,) = run_experiment(config).runs
    with pytest.raises(ConfigurationError):
        evaluate_policy(config, AgentKind.RESDNN, tmp_path / "missing.npz", seed=1)
    with pytest.raises(ConfigurationError):
        evaluate_policy(
            config, AgentKind.RESDNN, tmp_path / record.paths["policy"], seed=1
        )


def _s1_campaign(out_dir: Path, agents, frame_sizes=None) -> Manifest:
    config = ExperimentConfig(
        scenario="S1",
        agents=agents,
        seeds=[0, 1, 2, 3, 4],
        out_dir=out_dir,
        frame_sizes=frame_sizes or [],
    )
    return run_experiment(config)


@pytest.mark.slow
def test_learning_curve_ordering(tmp_path):
    manifest = _s1_campaign(tmp_path, ["resdnn", "fcdnn", "tabular"])
    finals = {
        kind: np.array([r.final_reward_ma for r in manifest.runs if r.agent == kind])
        for kind in (AgentKind.RESDNN, AgentKind.FCDNN, AgentKind.TABULAR)
    }
    res, fc, tab = (finals[k].mean() for k in finals)
    assert res > fc > tab
    pooled = np.sqrt(
        (finals[AgentKind.RESDNN].var() + finals[AgentKind.TABULAR].var()) / 2
    )
    assert res - tab > pooled


@pytest.mark.slow
def test_resdnn_loss_decreases_for_every_frame_size(tmp_path):
    manifest = _s1_campaign(tmp_path, ["resdnn"], frame_sizes=[5, 10, 20])
    for record in manifest.runs:
        losses = pd.read_csv(tmp_path / record.paths["loss_curve"])["batch_loss"]
        segments = segment_means(losses.to_numpy(), 10)
        violations = int(np.sum(np.diff(segments) > 0))
        assert violations <= 1, (record.frame_size, record.seed, segments)


@pytest.mark.slow
def test_sclar_improves_over_training(tmp_path):
    manifest = _s1_campaign(tmp_path, ["resdnn"])
    improved = sum(1 for r in manifest.runs if r.late_sclar >= 1.5 * r.early_sclar)
    assert improved >= 4
    for record in manifest.runs:
        assert record.evaluation.mean_sclar > record.baseline.mean_sclar
