"""Random rejection sampling and the search-vs-rejection cost comparison.

Cost is counted in oracle calls, not wall time: minutes conflate hardware
throughput with algorithmic efficiency, while calls transfer to any backend.
Wall time is still measured and reported as a secondary figure.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .model import GroupLabel, IdentityRecord, SearchConfig
from .oracle import OracleHandle, sample_prior
from .rng import stream
from .search import run_campaign

__all__ = [
    "RejectionResult",
    "rejection_sample",
    "EfficiencyReport",
    "compare_efficiency",
    "format_efficiency_table",
    "write_efficiency_report",
]


@dataclass
class RejectionResult:
    records: list[IdentityRecord]
    calls_used: int
    completed: bool


def rejection_sample(
    target: GroupLabel,
    count: int,
    budget: int,
    handle: OracleHandle,
    rng: np.random.Generator,
) -> RejectionResult:
    """Draw prior samples, keep target hits, stop at count or budget.

    Each kept sample becomes a depth-0 record that is its own seed. Budget
    exhaustion is not an error; the kept-so-far records are returned with
    completed=False.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    if budget < 1:
        raise ValueError("budget must be at least 1")
    if target not in handle.labels:
        raise ValueError(f"unknown group label {target!r}")

    records: list[IdentityRecord] = []
    calls = 0
    while len(records) < count and calls < budget:
        v = sample_prior(handle.space, rng).quantized()
        hit = handle.fitness(v, target)
        calls += 1
        if hit:
            rid = len(records)
            records.append(
                IdentityRecord(
                    identity_id=rid,
                    group=target,
                    latent=v,
                    seed_id=rid,
                    parent_id=None,
                    depth=0,
                    call_index=handle.calls,
                )
            )
    return RejectionResult(records, calls, completed=len(records) >= count)


@dataclass
class EfficiencyReport:
    group: GroupLabel
    count: int
    rejection_calls: int
    search_calls: int
    ratio: float
    rejection_wall_s: float
    search_wall_s: float
    comparable: bool


def compare_efficiency(
    target: GroupLabel,
    count: int,
    config: SearchConfig,
    handle: OracleHandle,
) -> EfficiencyReport:
    """Run both methods on fresh call counters and report the call ratio.

    Each method gets its own derived RNG stream and the full
    config.oracle_call_budget. A report is comparable only if both methods
    reached count identities within budget.
    """
    if count < 1:
        raise ValueError("count must be at least 1")

    rej_rng = stream(config.rng_seed, "baseline", "rejection", target)
    t0 = time.perf_counter()
    rejection = rejection_sample(
        target, count, config.oracle_call_budget, handle.fork(), rej_rng
    )
    rejection_wall = time.perf_counter() - t0

    search_config = replace(config, quota_per_group=count)
    t0 = time.perf_counter()
    manifest = run_campaign([target], search_config, handle.fork())
    search_wall = time.perf_counter() - t0
    stats = manifest.group_stats[target]

    return EfficiencyReport(
        group=target,
        count=count,
        rejection_calls=rejection.calls_used,
        search_calls=stats.calls_used,
        ratio=rejection.calls_used / stats.calls_used if stats.calls_used else float("inf"),
        rejection_wall_s=rejection_wall,
        search_wall_s=search_wall,
        comparable=rejection.completed and stats.completed,
    )


_COLUMNS = (
    ("group", 16),
    ("rejection_calls", 16),
    ("search_calls", 13),
    ("ratio", 8),
    ("rejection_wall_s", 17),
    ("search_wall_s", 14),
)


def format_efficiency_table(reports: Sequence[EfficiencyReport]) -> str:
    lines = ["".join(name.ljust(width) for name, width in _COLUMNS)]
    for r in reports:
        row = {
            "group": r.group,
            "rejection_calls": str(r.rejection_calls),
            "search_calls": str(r.search_calls),
            "ratio": f"{r.ratio:.2f}",
            "rejection_wall_s": f"{r.rejection_wall_s:.3f}",
            "search_wall_s": f"{r.search_wall_s:.3f}",
        }
        lines.append("".join(row[name].ljust(width) for name, width in _COLUMNS))
    return "\n".join(lines) + "\n"


def write_efficiency_report(report: EfficiencyReport, path) -> None:
    """Key=value form of one comparison, mirroring the table columns."""
    text = (
        f"group = {report.group}\n"
        f"count = {report.count}\n"
        f"rejection_calls = {report.rejection_calls}\n"
        f"search_calls = {report.search_calls}\n"
        f"ratio = {report.ratio:.6g}\n"
        f"rejection_wall_seconds = {report.rejection_wall_s:.6g}\n"
        f"search_wall_seconds = {report.search_wall_s:.6g}\n"
        f"comparable = {int(report.comparable)}\n"
    )
    Path(path).write_text(text, encoding="utf-8")
