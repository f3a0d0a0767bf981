import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import logfire
from pydantic import ValidationError

from config import Settings, get_settings
from errors import ConfigurationError, SimulationError
from experiment import (
    ExperimentConfig,
    Manifest,
    compare_agents,
    evaluate_policy,
    run_experiment,
)
from experiment.writers import write_csv
from learning.models import AgentKind
from network.scenarios import scenario_names

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

LOGGER_NAME = "sclar"


def validate_paths(settings: Settings) -> None:
    settings.log_file.parent.mkdir(exist_ok=True, parents=True)

    # create an empty log file if missing
    if not settings.log_file.exists():
        settings.log_file.touch()


def setup_logging(settings: Settings) -> logging.Logger:
    # Initialize Logfire if enabled
    if settings.logfire_enabled:
        try:
            logfire.configure(
                token=settings.logfire_token,
                service_name=settings.logfire_service_name,
            )
            print(f"Logfire initialized for service: {settings.logfire_service_name}")
        except Exception as e:
            print(f"Failed to initialize Logfire: {e}", file=sys.stderr)

    log_level = logging.DEBUG if settings.debug else logging.INFO

    logging.basicConfig(
        filename=settings.log_file,
        level=log_level,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )
    logger = logging.getLogger(LOGGER_NAME)
    logger.setLevel(log_level)

    # console handler is attached once, even if setup runs twice in a process
    if not any(getattr(h, "_sclar_console", False) for h in logger.handlers):
        console_handler = logging.StreamHandler()
        console_handler.setLevel(log_level)
        formatter = logging.Formatter("%(name)s - %(levelname)s - %(message)s")
        console_handler.setFormatter(formatter)
        console_handler._sclar_console = True  # type: ignore[attr-defined]
        logger.addHandler(console_handler)

    return logger


def _split_list(value: str) -> List[str]:
    return [item.strip() for item in value.split(",") if item.strip()]


def _int_list(value: str) -> List[int]:
    try:
        return [int(item) for item in _split_list(value)]
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected comma-separated integers, got '{value}'"
        )


def _agent_list(value: str) -> List[AgentKind]:
    try:
        return [AgentKind(item.lower()) for item in _split_list(value)]
    except ValueError:
        choices = ", ".join(kind.value for kind in AgentKind)
        raise argparse.ArgumentTypeError(
            f"unknown agent in '{value}', expected {choices}"
        )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sclar-sim",
        description=(
            "DRL channel-access simulator for an intelligent UD "
            "in a jammed slotted uplink"
        ),
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    def add_common(sub: argparse.ArgumentParser) -> None:
        sub.add_argument("--config", type=Path, help="TOML experiment config")
        sub.add_argument(
            "--scenario", help=f"Scenario preset ({', '.join(scenario_names())})"
        )
        sub.add_argument(
            "--seeds", type=_int_list, help="Comma-separated seeds, e.g. 1,2,3"
        )
        sub.add_argument("--out", type=Path, help="Output directory")
        sub.add_argument("--frames", type=int, help="Frames per episode")

    train = subparsers.add_parser("train", help="Train and evaluate agents")
    add_common(train)
    train.add_argument("--agent", type=_agent_list, help="Comma-separated agent kinds")
    train.add_argument(
        "--frame-sizes", type=_int_list, help="Comma-separated frame-size sweep"
    )
    train.add_argument(
        "--trace", action="store_true", help="Write per-slot trace.csv"
    )
    train.add_argument(
        "--faithful-dqn",
        action="store_true",
        help="Plain SGD with the printed network assignment of the replay update",
    )

    evaluate = subparsers.add_parser(
        "eval", help="Evaluate a saved policy greedily"
    )
    add_common(evaluate)
    evaluate.add_argument("--agent", type=_agent_list, required=True)
    evaluate.add_argument(
        "--policy", type=Path, required=True, help="Saved policy file"
    )
    evaluate.add_argument(
        "--frame-size", type=int, help="Frame size the policy was trained on"
    )

    compare = subparsers.add_parser(
        "compare", help="Compare agents across manifests"
    )
    compare.add_argument(
        "manifests", type=Path, nargs="+", help="manifest.json files"
    )
    compare.add_argument(
        "--out",
        type=Path,
        help="comparison.csv path (default: next to the first manifest)",
    )

    return parser


def load_experiment_config(
    args: argparse.Namespace, settings: Settings
) -> ExperimentConfig:
    """Merge the TOML config file (if any), command-line flags and settings defaults."""
    values: Dict[str, Any] = {
        "out_dir": settings.output_dir,
        "write_trace": settings.write_trace,
    }
    if args.config:
        try:
            with open(args.config, "rb") as f:
                values.update(tomllib.load(f))
        except (OSError, tomllib.TOMLDecodeError) as e:
            raise ConfigurationError(f"cannot read config {args.config}: {e}") from e

    network: Dict[str, Any] = dict(values.get("network", {}))
    if args.scenario:
        values["scenario"] = args.scenario
    if args.seeds:
        values["seeds"] = args.seeds
    if args.out:
        values["out_dir"] = args.out
    if args.frames:
        network["num_frames"] = args.frames
    if getattr(args, "frame_sizes", None):
        values["frame_sizes"] = args.frame_sizes
    if getattr(args, "trace", False):
        values["write_trace"] = True
    if getattr(args, "faithful_dqn", False):
        values["faithful_dqn"] = True
    if args.command == "train" and args.agent:
        values["agents"] = args.agent
    values["network"] = network

    try:
        config = ExperimentConfig.model_validate(values)
        # build the scenario now so bad overrides fail before anything runs
        for frame_size in config.frame_size_grid():
            config.network_config(frame_size)
    except ValidationError as e:
        raise ConfigurationError(f"invalid experiment config: {e}") from e
    return config


def cmd_train(
    args: argparse.Namespace, settings: Settings, logger: logging.Logger
) -> None:
    config = load_experiment_config(args, settings)
    manifest = run_experiment(config, logger=logger)
    manifest_path = Path(config.out_dir) / "manifest.json"
    print(f"{len(manifest.runs)} run(s) written to {manifest_path}")


def cmd_eval(
    args: argparse.Namespace, settings: Settings, logger: logging.Logger
) -> None:
    config = load_experiment_config(args, settings)
    if len(args.agent) != 1:
        raise ConfigurationError("eval takes exactly one --agent")

    summary, series = evaluate_policy(
        config,
        args.agent[0],
        args.policy,
        seed=config.seeds[0],
        frame_size=args.frame_size,
        logger=logger,
    )
    out_dir = Path(config.out_dir)
    write_csv(series.sclar_curve(), out_dir / "eval_sclar.csv")
    print(json.dumps(summary.model_dump(), indent=2))


def cmd_compare(
    args: argparse.Namespace, settings: Settings, logger: logging.Logger
) -> None:
    manifests: List[Manifest] = []
    for path in args.manifests:
        try:
            manifests.append(Manifest.load(path))
        except ValidationError as e:
            raise ConfigurationError(f"{path} is not a valid manifest: {e}") from e
    out_path = args.out or Path(args.manifests[0]).parent / "comparison.csv"
    table = compare_agents(manifests, out_path=out_path, logger=logger)
    print(table.to_string(index=False))


COMMANDS = {"train": cmd_train, "eval": cmd_eval, "compare": cmd_compare}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    settings = get_settings()
    validate_paths(settings)
    logger = setup_logging(settings)

    try:
        COMMANDS[args.command](args, settings, logger)
    except (SimulationError, ValidationError, OSError) as e:
        logger.error(f"{args.command} failed: {e}")
        message = str(e).strip()
        first_line = message.splitlines()[0] if message else type(e).__name__
        print(f"sclar-sim {args.command}: {first_line}", file=sys.stderr)
        return 1
    return 0


def run() -> None:
    try:
        sys.exit(main())
    except KeyboardInterrupt:
        sys.exit(130)


if __name__ == "__main__":
    run()
