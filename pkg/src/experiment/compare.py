"""
Cross-manifest agent comparison: mean and spread of the headline metrics
across seeds, ranked per scenario, frame size and metric.
"""

import logging
from collections import Counter, defaultdict
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Set

import logfire
import pandas as pd

from errors import ComparisonError

from .models import Manifest, RunRecord
from .writers import write_csv

COMPARISON_COLUMNS = [
    "scenario",
    "frame_size",
    "agent",
    "metric",
    "mean",
    "std",
    "n",
    "rank",
    "delta_vs_best",
]

# metric name -> value extracted from a run record
METRICS = {
    "final_reward_ma": lambda run: run.final_reward_ma,
    "final_sclar": lambda run: run.final_sclar,
    "eval_sclar": lambda run: run.evaluation.mean_sclar,
    "eval_utilization": lambda run: run.evaluation.utilization,
}


def _check_consistent(manifests: Sequence[Manifest]) -> None:
    """All manifests must cover the same network per frame size and the same seeds."""
    fingerprints: Dict[tuple, Set[str]] = defaultdict(set)
    for manifest in manifests:
        for run in manifest.runs:
            fingerprints[(run.scenario, run.frame_size)].add(run.fingerprint)
    for (scenario, frame_size), prints in sorted(fingerprints.items()):
        if len(prints) > 1:
            raise ComparisonError(
                f"scenario {scenario} S={frame_size} has mismatched fingerprints: "
                f"{', '.join(sorted(prints))}"
            )

    seed_sets = [manifest.seeds() for manifest in manifests]
    if any(seeds != seed_sets[0] for seeds in seed_sets[1:]):
        raise ComparisonError(
            "manifests were run over different seeds: "
            + "; ".join(str(sorted(seeds)) for seeds in seed_sets)
        )


def _labels(manifests: Sequence[Manifest]) -> List[Dict[str, str]]:
    """Agent label per manifest; agents found in several manifests get a #index."""
    appearances: Counter = Counter()
    for manifest in manifests:
        for agent in {run.agent.value for run in manifest.runs}:
            appearances[agent] += 1

    labels = []
    for i, manifest in enumerate(manifests):
        names = {run.agent.value for run in manifest.runs}
        labels.append(
            {name: f"{name}#{i}" if appearances[name] > 1 else name for name in names}
        )
    return labels


def _long_table(manifests: Sequence[Manifest]) -> pd.DataFrame:
    rows = []
    for manifest, labels in zip(manifests, _labels(manifests)):
        run: RunRecord
        for run in manifest.runs:
            for metric, extract in METRICS.items():
                rows.append(
                    {
                        "scenario": run.scenario,
                        "frame_size": run.frame_size,
                        "agent": labels[run.agent.value],
                        "seed": run.seed,
                        "metric": metric,
                        "value": float(extract(run)),
                    }
                )
    return pd.DataFrame(rows)


def compare_agents(
    manifests: Sequence[Manifest],
    out_path: Optional[Path] = None,
    logger: Optional[logging.Logger] = None,
) -> pd.DataFrame:
    """
    Summarise agents across seeds and rank them.

    Args:
        manifests: Manifests over identical scenarios and seeds
        out_path: Where to write the table as CSV, if given
        logger: Optional logger instance

    Returns:
        One row per (scenario, frame size, agent, metric) with mean, sample
        standard deviation, seed count, rank (1 = best) and the gap to the
        best mean
    """
    logger = logger or logging.getLogger("Comparison")
    if not manifests or not any(manifest.runs for manifest in manifests):
        raise ComparisonError("nothing to compare: no runs in the given manifests")

    with logfire.span("experiment.compare", manifests=len(manifests)):
        _check_consistent(manifests)
        table = _long_table(manifests)

        keys = ["scenario", "frame_size", "agent", "metric"]
        summary = (
            table.groupby(keys, sort=False)["value"]
            .agg(["mean", "std", "count"])
            .reset_index()
            .rename(columns={"count": "n"})
        )
        summary["std"] = summary["std"].fillna(0.0)

        ranked = ["scenario", "frame_size", "metric"]
        group = summary.groupby(ranked, sort=False)["mean"]
        summary["rank"] = group.rank(ascending=False, method="min").astype(int)
        summary["delta_vs_best"] = summary["mean"] - group.transform("max")

        summary = summary.sort_values(
            ["scenario", "frame_size", "metric", "rank", "agent"], kind="mergesort"
        ).reset_index(drop=True)[COMPARISON_COLUMNS]

    logger.info(
        f"Compared {summary['agent'].nunique()} agent label(s) over "
        f"{len(manifests)} manifest(s)"
    )
    if out_path is not None:
        written = write_csv(summary, Path(out_path))
        logger.info(f"Wrote comparison table to {written}")
    return summary
