import json
from pathlib import Path

import pandas as pd
import pytest

from main import build_parser, main

pytestmark = pytest.mark.integration

REFERENCE_CONFIG = Path(__file__).resolve().parents[1] / "configs" / "reference.toml"


def _train_d1(out: Path) -> int:
    return main(
        [
            "train",
            "--scenario",
            "D1",
            "--agent",
            "tabular",
            "--frames",
            "20",
            "--seeds",
            "0",
            "--out",
            str(out),
        ]
    )


def test_train_writes_manifest(log_to_tmp, capsys):
    out = log_to_tmp / "runs"
    assert _train_d1(out) == 0
    assert (out / "manifest.json").is_file()
    assert (out / "D1" / "S5" / "tabular" / "seed_0" / "policy.json").is_file()
    assert "1 run(s) written to" in capsys.readouterr().out
    assert (log_to_tmp / "logs" / "sclar-sim.log").exists()


def test_unknown_scenario_exits_with_error(log_to_tmp, capsys):
    code = main(["train", "--scenario", "Z9", "--out", str(log_to_tmp / "runs")])
    assert code == 1
    last = capsys.readouterr().err.strip().splitlines()[-1]
    assert last.startswith("sclar-sim train:")


def test_unknown_agent_is_a_usage_error(log_to_tmp):
    with pytest.raises(SystemExit) as exc:
        build_parser().parse_args(["train", "--agent", "ppo"])
    assert exc.value.code == 2


def test_eval_replays_saved_policy(log_to_tmp, capsys):
    runs = log_to_tmp / "runs"
    assert _train_d1(runs) == 0
    capsys.readouterr()

    policy = runs / "D1" / "S5" / "tabular" / "seed_0" / "policy.json"
    out = log_to_tmp / "eval"
    code = main(
        [
            "eval",
            "--scenario",
            "D1",
            "--agent",
            "tabular",
            "--policy",
            str(policy),
            "--frames",
            "20",
            "--seeds",
            "0",
            "--out",
            str(out),
        ]
    )
    assert code == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["frames"] == 20
    assert len(pd.read_csv(out / "eval_sclar.csv")) == 20


def test_eval_with_missing_policy_fails(log_to_tmp, capsys):
    code = main(
        [
            "eval",
            "--agent",
            "resdnn",
            "--policy",
            str(log_to_tmp / "nope.npz"),
            "--out",
            str(log_to_tmp),
        ]
    )
    assert code == 1
    assert "sclar-sim eval:" in capsys.readouterr().err


def test_compare_manifests(log_to_tmp, capsys):
    runs = log_to_tmp / "runs"
    assert _train_d1(runs) == 0
    capsys.readouterr()

    assert main(["compare", str(runs / "manifest.json")]) == 0
    table = pd.read_csv(runs / "comparison.csv")
    assert set(table["agent"]) == {"tabular"}
    assert "delta_vs_best" in capsys.readouterr().out


def test_compare_rejects_invalid_manifest(log_to_tmp, capsys):
    bogus = log_to_tmp / "manifest.json"
    bogus.write_text("{}")
    assert main(["compare", str(bogus)]) == 1
    assert "sclar-sim compare:" in capsys.readouterr().err


def test_reference_config_loads(log_to_tmp):
    out = log_to_tmp / "runs"
    code = main(
        ["train", "--config", str(REFERENCE_CONFIG), "--frames", "2", "--out", str(out)]
    )
    assert code == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["scenario"] == "S1"
    assert [run["agent"] for run in manifest["runs"]] == ["resdnn"]
