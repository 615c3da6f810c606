"""Batched experiments over hyper-parameter configurations.

Timing covers candidate generation and induction only (what the
hyper-parameters influence), never parsing.  One failing configuration is
recorded as a failed row and does not abort the batch.
"""

from __future__ import annotations

import statistics
import time
from dataclasses import dataclass
from typing import Sequence

from .builder import BuildConfig, build_tree
from .errors import CtrlTreeError
from .model import Controller, tree_stats


@dataclass
class ExperimentResult:
    case: str
    states: int
    config_label: str
    config_fingerprint: str
    ok: bool
    total_nodes: int = 0
    inner_nodes: int = 0
    leaves: int = 0
    depth: int = 0
    time_ms_min: float = 0.0
    time_ms_median: float = 0.0
    exact: bool = True
    error: str | None = None


def run_experiments(controller: Controller, configs: Sequence[BuildConfig],
                    repeats: int = 1, case: str = "controller") -> list[ExperimentResult]:
    """Build `repeats` trees per config and report stats in input order."""
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    results: list[ExperimentResult] = []
    for config in configs:
        times = []
        tree = None
        try:
            for _ in range(repeats):
                t0 = time.perf_counter()
                tree = build_tree(controller, config)
                times.append((time.perf_counter() - t0) * 1000.0)
        except CtrlTreeError as e:
            results.append(ExperimentResult(
                case, len(controller), config.label(), config.fingerprint(),
                ok=False, error=f"{e.kind}: {e}"))
            continue
        stats = tree_stats(tree)
        results.append(ExperimentResult(
            case, len(controller), config.label(), config.fingerprint(), ok=True,
            total_nodes=stats.total_nodes, inner_nodes=stats.inner_nodes,
            leaves=stats.leaves, depth=stats.depth,
            time_ms_min=min(times), time_ms_median=statistics.median(times),
            exact=tree.is_exact))
    return results


_COLUMNS = ("case", "states", "config", "nodes", "inner", "depth", "time_ms")


def _row_values(r: ExperimentResult) -> list[str]:
    if not r.ok:
        return [r.case, str(r.states), r.config_label, "error", "error", "error",
                r.error or "error"]
    # repr keeps the time column re-parseable to the exact same float
    return [r.case, str(r.states), r.config_label, str(r.total_nodes),
            str(r.inner_nodes), str(r.depth), repr(r.time_ms_median)]


def format_results(results: Sequence[ExperimentResult], style: str = "csv") -> str:
    """Render a results table; markdown bolds each case's minimum node
    count (ties all bolded)."""
    if not results:
        raise ValueError("no results to format")
    if style not in ("csv", "markdown"):
        raise ValueError(f"unknown style {style!r}")
    rows = [_row_values(r) for r in results]

    if style == "csv":
        lines = [",".join(_COLUMNS)]
        lines += [",".join(row) for row in rows]
        return "\n".join(lines) + "\n"

    best: dict[str, int] = {}
    for r in results:
        if r.ok and (r.case not in best or r.total_nodes < best[r.case]):
            best[r.case] = r.total_nodes
    lines = ["| " + " | ".join(_COLUMNS) + " |",
             "|" + "|".join(" --- " for _ in _COLUMNS) + "|"]
    for r, row in zip(results, rows):
        if r.ok and r.total_nodes == best.get(r.case):
            row = row.copy()
            row[3] = f"**{row[3]}**"
        lines.append("| " + " | ".join(row) + " |")
    return "\n".join(lines) + "\n"
