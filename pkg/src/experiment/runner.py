"""
Seeded training/evaluation campaigns over the seed x agent x frame-size grid.

Every run owns its environment, agent and generators. Run directories are
laid out as <out>/<scenario>/S<frame size>/<agent>/seed_<seed>/ and the
manifest is written last, once every run has finished.
"""

import logging
import time
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import logfire
import numpy as np

from errors import ConfigurationError
from learning.agents import BaseAgent, HoldAgent, load_agent, make_agent
from learning.models import AgentKind
from learning.training import SlotLog, run_evaluation, run_training
from network.env import ChannelAccessEnv, StateLayout
from network.mac import gen_fud_schedule
from network.models import Action, FudSchedule, NetworkConfig, SlotClass, UdStatus

from .metrics import FrameAccumulator, TrainingSeries, segment_means, trace_frame
from .models import EvaluationSummary, ExperimentConfig, Manifest, RunRecord
from .writers import check_writable, write_csv, write_model_json

MANIFEST_FILE = "manifest.json"

RunCallback = Callable[[RunRecord], None]


def run_seeds(seed: int) -> Tuple[np.random.SeedSequence, ...]:
    """Independent streams for the environment, the agent and held-out evaluation."""
    return tuple(np.random.SeedSequence(seed).spawn(3))


def training_schedule(
    network: NetworkConfig, env_seed: np.random.SeedSequence
) -> FudSchedule:
    """
    The fUD schedule a training run on `env_seed` starts from.

    Held-out evaluation always replays this first-frame schedule, also when
    the run redraws schedules every frame.
    """
    return gen_fud_schedule(network, np.random.default_rng(env_seed))


def summarize_evaluation(
    logs: Sequence[SlotLog], series: TrainingSeries
) -> EvaluationSummary:
    """Aggregate a greedy run; utilization pools free slots over all frames."""
    iud = [log.outcome.statuses[-1] for log in logs]
    frame_sclar = [f.sclar for f in series.frames]
    free = [log for log in logs if log.slot_class == SlotClass.FREE]
    used = sum(1 for log in free if log.action == Action.DISPATCH)
    return EvaluationSummary(
        frames=len(series.frames),
        mean_reward=float(np.mean(series.rewards)) if logs else 0.0,
        mean_sclar=float(np.mean(frame_sclar)) if frame_sclar else 0.0,
        utilization=used / len(free) if free else 0.0,
        collisions=sum(1 for status in iud if status == UdStatus.COLLISION),
        jammed_tx=sum(1 for status in iud if status == UdStatus.JAMMED),
    )


def evaluate_agent(
    network: NetworkConfig,
    agent: BaseAgent,
    schedule: Optional[FudSchedule],
    eval_seed: np.random.SeedSequence,
    ma_window: int,
    frames: Optional[int] = None,
    warmup_frames: int = 0,
    logger: Optional[logging.Logger] = None,
) -> Tuple[EvaluationSummary, TrainingSeries]:
    """
    Greedy run of `agent` over held-out channel draws.

    Args:
        network: Scenario the agent was trained on
        agent: Agent to evaluate; its learning state is left untouched
        schedule: fUD schedule to reuse (None draws one from the evaluation stream)
        eval_seed: Seed of the held-out channel and power draws
        ma_window: Moving-average window of the returned series
        frames: Length of the held-out run, defaults to num_frames
        warmup_frames: Greedy frames played first and left out of the metrics
        logger: Optional logger instance

    Returns:
        Summary and per-frame series of the evaluation run
    """
    measured = frames or network.num_frames
    eval_network = network.model_copy(
        update={"num_frames": measured + warmup_frames, "episodes": 1}
    )
    env = ChannelAccessEnv(
        eval_network,
        np.random.default_rng(eval_seed),
        logger=logger,
        schedule=schedule,
    )
    accumulator = FrameAccumulator(eval_network.num_uds, eval_network.slots_per_frame)

    def on_slot(log: SlotLog) -> None:
        if log.frame >= warmup_frames:
            accumulator.update(log)

    logs = run_evaluation(env, agent, on_slot=on_slot, logger=logger)
    logs = [log for log in logs if log.frame >= warmup_frames]
    series = TrainingSeries(logs=logs, frames=accumulator.frames, ma_window=ma_window)
    return summarize_evaluation(logs, series), series


class ExperimentRunner:
    """
    Runs an ExperimentConfig and writes its CSV series, policies and manifest.

    All scenario configurations are built and the output directory is checked
    for writes before the first slot is simulated, so configuration mistakes
    fail fast.
    """

    def __init__(
        self,
        config: ExperimentConfig,
        logger: Optional[logging.Logger] = None,
        on_run: Optional[RunCallback] = None,
    ):
        self.config = config
        self.logger = logger or logging.getLogger("ExperimentRunner")
        self.on_run = on_run
        self.out_dir = Path(config.out_dir)
        self.networks: Dict[int, NetworkConfig] = {}

    def validate(self) -> Dict[int, NetworkConfig]:
        """Build every network configuration and check the output directory."""
        networks: Dict[int, NetworkConfig] = {}
        for frame_size in self.config.frame_size_grid():
            network = self.config.network_config(frame_size)
            networks[network.slots_per_frame] = network

        try:
            check_writable(self.out_dir)
        except OSError as e:
            raise ConfigurationError(
                f"output directory {self.out_dir} is not writable: {e}"
            ) from e

        self.networks = networks
        return networks

    def run(self) -> Manifest:
        """Train and evaluate every (frame size, agent, seed) combination."""
        networks = self.validate()
        total = len(networks) * len(self.config.agents) * len(self.config.seeds)
        with logfire.span(
            "experiment.run",
            scenario=self.config.scenario,
            runs=total,
        ):
            return self._run_impl(networks, total)

    def _run_impl(self, networks: Dict[int, NetworkConfig], total: int) -> Manifest:
        self.logger.info(
            f"Starting {total} run(s) of scenario {self.config.scenario} "
            f"into {self.out_dir}"
        )
        records: List[RunRecord] = []
        for frame_size, network in networks.items():
            for kind in self.config.agents:
                for seed in self.config.seeds:
                    record = self.run_one(network, AgentKind(kind), seed)
                    records.append(record)
                    self.logger.info(
                        f"[{len(records)}/{total}] {record.agent.value} S={frame_size} "
                        f"seed={seed}: final reward MA {record.final_reward_ma:.3f}, "
                        f"eval SCLAR {record.evaluation.mean_sclar:.3f} "
                        f"(hold baseline {record.baseline.mean_sclar:.3f})"
                    )
                    if self.on_run:
                        self.on_run(record)

        manifest = Manifest(
            config=self.config.model_dump(mode="json"),
            ma_window=self.config.ma_window,
            runs=records,
        )
        path = write_model_json(manifest, self.out_dir / MANIFEST_FILE)
        self.logger.info(f"Wrote manifest with {len(records)} run(s) to {path}")
        return manifest

    def run_dir(self, network: NetworkConfig, kind: AgentKind, seed: int) -> Path:
        return (
            self.out_dir
            / self.config.scenario
            / f"S{network.slots_per_frame}"
            / kind.value
            / f"seed_{seed}"
        )

    def run_one(self, network: NetworkConfig, kind: AgentKind, seed: int) -> RunRecord:
        """Train one agent, evaluate it and the hold baseline, and write its files."""
        env_seed, agent_seed, eval_seed = run_seeds(seed)
        run_dir = self.run_dir(network, kind, seed)

        env = ChannelAccessEnv(
            network,
            np.random.default_rng(env_seed),
            logger=self.logger.getChild("env"),
            record_trace=self.config.write_trace,
        )
        agent = make_agent(
            kind,
            network,
            env.layout,
            np.random.default_rng(agent_seed),
            self.logger.getChild(kind.value),
        )
        accumulator = FrameAccumulator(network.num_uds, network.slots_per_frame)

        start_time = time.time()
        result = run_training(
            network, env, agent, on_slot=accumulator.update, logger=self.logger
        )
        series = TrainingSeries(
            logs=result.slots,
            frames=accumulator.frames,
            ma_window=self.config.ma_window,
            losses=result.losses,
        )

        schedule = training_schedule(network, env_seed)
        with logfire.span("experiment.evaluate", agent=kind.value, seed=seed):
            evaluation, eval_series = evaluate_agent(
                network,
                agent,
                schedule,
                eval_seed,
                self.config.ma_window,
                frames=self.config.eval_frames,
                warmup_frames=self.config.eval_warmup_frames,
                logger=self.logger,
            )
            baseline_agent = HoldAgent(
                network, env.layout, np.random.default_rng(agent_seed), self.logger
            )
            baseline, _ = evaluate_agent(
                network,
                baseline_agent,
                schedule,
                eval_seed,
                self.config.ma_window,
                frames=self.config.eval_frames,
                warmup_frames=self.config.eval_warmup_frames,
                logger=self.logger,
            )
        elapsed = time.time() - start_time

        paths = self._write_outputs(run_dir, agent, series, eval_series, env)
        early, late = self._early_late_sclar(series)
        return RunRecord(
            scenario=self.config.scenario,
            agent=kind,
            seed=seed,
            frame_size=network.slots_per_frame,
            fingerprint=network.fingerprint(),
            network=network.model_dump(mode="json", by_alias=True),
            paths={
                name: str(path.relative_to(self.out_dir))
                for name, path in paths.items()
            },
            wall_clock_seconds=elapsed,
            final_reward_ma=series.final_reward_ma(),
            final_sclar=series.final_sclar(),
            early_sclar=early,
            late_sclar=late,
            evaluation=evaluation,
            baseline=baseline,
        )

    def _write_outputs(
        self,
        run_dir: Path,
        agent: BaseAgent,
        series: TrainingSeries,
        eval_series: TrainingSeries,
        env: ChannelAccessEnv,
    ) -> Dict[str, Path]:
        tables = {
            "learning_curve": (series.learning_curve(), "learning_curve.csv"),
            "loss_curve": (series.loss_curve(), "loss_curve.csv"),
            "sclar": (series.sclar_curve(), "sclar.csv"),
            "epoch_loss": (series.epoch_loss(), "epoch_loss.csv"),
            "eval_sclar": (eval_series.sclar_curve(), "eval_sclar.csv"),
        }
        written = {
            name: write_csv(table, run_dir / file)
            for name, (table, file) in tables.items()
        }
        if self.config.write_trace:
            written["trace"] = write_csv(trace_frame(env.trace), run_dir / "trace.csv")

        tabular = agent.kind in (AgentKind.TABULAR, AgentKind.HOLD)
        suffix = ".json" if tabular else ".npz"
        written["policy"] = agent.save_policy(run_dir / f"policy{suffix}")
        self.logger.debug(f"Wrote {len(written)} file(s) under {run_dir}")
        return written

    @staticmethod
    def _early_late_sclar(series: TrainingSeries) -> Tuple[float, float]:
        """Mean frame SCLAR over the first and last 10% of training."""
        values = [f.sclar for f in series.frames]
        if not values:
            return 0.0, 0.0
        if len(values) < 10:
            return float(values[0]), float(values[-1])
        segments = segment_means(values, segments=10)
        return float(segments[0]), float(segments[-1])


def run_experiment(
    config: ExperimentConfig,
    logger: Optional[logging.Logger] = None,
    on_run: Optional[RunCallback] = None,
) -> Manifest:
    """Run a campaign and return its manifest (also written to <out>/manifest.json)."""
    return ExperimentRunner(config, logger=logger, on_run=on_run).run()


def evaluate_policy(
    config: ExperimentConfig,
    kind: AgentKind,
    policy_path: Path,
    seed: int,
    frame_size: Optional[int] = None,
    logger: Optional[logging.Logger] = None,
) -> Tuple[EvaluationSummary, TrainingSeries]:
    """
    Replay a saved policy on the held-out stream of `seed`.

    The fUD schedule is the one the training run on `seed` started from,
    so a policy evaluates on the network it learned.
    """
    logger = logger or logging.getLogger("Evaluation")
    network = config.network_config(frame_size)
    env_seed, agent_seed, eval_seed = run_seeds(seed)

    layout = StateLayout(window=network.window, num_uds=network.num_uds)

    policy_path = Path(policy_path)
    if not policy_path.exists():
        raise ConfigurationError(f"policy file {policy_path} does not exist")
    try:
        agent = load_agent(
            kind,
            policy_path,
            network,
            layout,
            np.random.default_rng(agent_seed),
            logger,
        )
    except (KeyError, ValueError) as e:
        raise ConfigurationError(
            f"cannot load {kind.value} policy from {policy_path}: {e}"
        ) from e

    logger.info(
        f"Evaluating {kind.value} policy {policy_path} on scenario {config.scenario}"
    )
    with logfire.span("experiment.evaluate", agent=kind.value, seed=seed):
        return evaluate_agent(
            network,
            agent,
            training_schedule(network, env_seed),
            eval_seed,
            config.ma_window,
            frames=config.eval_frames,
            warmup_frames=config.eval_warmup_frames,
            logger=logger,
        )
