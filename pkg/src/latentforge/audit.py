"""Post-hoc dataset audits: accuracy disparity, biometric uniqueness, balance.

The uniqueness audit matches every identity against every other one by cosine
similarity of their oracle embeddings and reports how many pairs land on the
"same person" side of the operating threshold. The stock threshold 0.593 is
the operating point of the face matcher this audit was modeled on; that
matcher scores distance-like (smaller means more similar), so by default a
pair is a duplicate when 1 - similarity <= threshold. Pass
threshold_is_distance=False to treat the threshold as a plain similarity
floor instead.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from .errors import UnsupportedAuditError
from .model import DatasetManifest, GroupLabel
from .oracle import OracleHandle

__all__ = [
    "accuracy_difference",
    "parse_accuracy_table",
    "UniquenessReport",
    "uniqueness_report",
    "BalanceReport",
    "balance_report",
    "format_uniqueness_report",
    "write_uniqueness_report",
    "format_balance_report",
    "write_balance_report",
]

HISTOGRAM_BINS = 100  # width 0.02 over [-1, 1]
DEFAULT_THRESHOLD = 0.593


def accuracy_difference(table: Mapping[GroupLabel, float]) -> float:
    """Maximum pairwise gap between per-group accuracies.

    Permutation-invariant and unchanged by adding a constant to every entry.
    """
    if len(table) < 2:
        raise ValueError("need at least 2 groups to compute a disparity")
    values = [float(v) for v in table.values()]
    return max(values) - min(values)


def parse_accuracy_table(path) -> dict[GroupLabel, float]:
    """Read a 'group = accuracy' file; accuracies are percentages in [0, 100]."""
    table: dict[GroupLabel, float] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{no}: expected 'group = accuracy'")
            key, _, value = line.partition("=")
            key = key.strip()
            try:
                acc = float(value.strip())
            except ValueError:
                raise ValueError(f"{path}:{no}: accuracy is not a number") from None
            if not (0.0 <= acc <= 100.0):
                raise ValueError(f"{path}:{no}: accuracy {acc} outside [0, 100]")
            if key in table:
                raise ValueError(f"{path}:{no}: duplicate group {key!r}")
            table[key] = acc
    return table


@dataclass
class UniquenessReport:
    n_identities: int
    pair_count: int
    histogram: list[int]  # HISTOGRAM_BINS fixed-width bins over [-1, 1]
    duplicate_rate: float
    threshold: float
    threshold_is_distance: bool


def is_duplicate(similarity: float, threshold: float, threshold_is_distance: bool) -> bool:
    if threshold_is_distance:
        return (1.0 - similarity) <= threshold
    return similarity >= threshold


def _bin_index(similarity: float) -> int:
    s = min(max(similarity, -1.0), 1.0)
    return min(int((s + 1.0) / 0.02), HISTOGRAM_BINS - 1)


def uniqueness_report(
    manifest: DatasetManifest,
    handle: OracleHandle,
    threshold: float = DEFAULT_THRESHOLD,
    *,
    threshold_is_distance: bool = True,
) -> UniquenessReport:
    """All-pairs cosine similarity over base identity latents.

    Variants are deliberately excluded: identities are compared in their
    canonical form so that pose or expression shifts cannot mask a duplicate.
    Similarities are computed pairwise (no blocked matrix product) so an
    external recount arrives at bit-identical values.
    """
    embeddings = []
    for rec in manifest.records:
        verdict = handle.evaluate(rec.latent)
        if verdict.embedding is None:
            raise UnsupportedAuditError(
                f"oracle produced no embedding for identity {rec.identity_id}; "
                "uniqueness needs an embedding-capable oracle"
            )
        embeddings.append(verdict.embedding)

    n = len(embeddings)
    histogram = [0] * HISTOGRAM_BINS
    pair_count = 0
    duplicates = 0
    for i in range(n):
        for j in range(i + 1, n):
            s = float(np.dot(embeddings[i], embeddings[j]))
            pair_count += 1
            histogram[_bin_index(s)] += 1
            if is_duplicate(s, threshold, threshold_is_distance):
                duplicates += 1

    return UniquenessReport(
        n_identities=n,
        pair_count=pair_count,
        histogram=histogram,
        duplicate_rate=duplicates / pair_count if pair_count else 0.0,
        threshold=threshold,
        threshold_is_distance=threshold_is_distance,
    )


@dataclass
class BalanceReport:
    entries: dict[GroupLabel, tuple[int, float]]  # group -> (count, share)
    flagged: list[GroupLabel] = field(default_factory=list)


def balance_report(manifest: DatasetManifest) -> BalanceReport:
    """Exact per-group counts and shares; flags departures from uniformity."""
    groups = list(manifest.group_stats) or sorted(manifest.per_group_counts)
    total = sum(manifest.per_group_counts.get(g, 0) for g in groups)
    entries = {}
    flagged = []
    for g in groups:
        count = manifest.per_group_counts.get(g, 0)
        share = count / total if total else 0.0
        entries[g] = (count, share)
        # exact integer comparison, not a float tolerance
        if count * len(groups) != total:
            flagged.append(g)
    return BalanceReport(entries=entries, flagged=flagged)


def format_uniqueness_report(report: UniquenessReport) -> str:
    mode = "distance" if report.threshold_is_distance else "similarity"
    lines = [
        f"identities = {report.n_identities}",
        f"pairs = {report.pair_count}",
        f"duplicate_rate = {report.duplicate_rate:.6g}",
        f"threshold = {report.threshold:.6g}",
        f"threshold_mode = {mode}",
    ]
    return "\n".join(lines) + "\n"


def write_uniqueness_report(report: UniquenessReport, path) -> None:
    """Key=value summary at path, histogram at path.hist (bin_left, count)."""
    path = Path(path)
    path.write_text(format_uniqueness_report(report), encoding="utf-8")
    hist_lines = []
    for i, count in enumerate(report.histogram):
        left = -1.0 + i * 0.02
        hist_lines.append(f"{left:.2f} {count}")
    path.with_name(path.name + ".hist").write_text(
        "\n".join(hist_lines) + "\n", encoding="utf-8"
    )


def format_balance_report(report: BalanceReport) -> str:
    lines = []
    for g, (count, share) in report.entries.items():
        flag = "  UNEVEN" if g in report.flagged else ""
        lines.append(f"{g} = {count} ({share:.4f}){flag}")
    return "\n".join(lines) + "\n"


def write_balance_report(report: BalanceReport, path) -> None:
    Path(path).write_text(format_balance_report(report), encoding="utf-8")
