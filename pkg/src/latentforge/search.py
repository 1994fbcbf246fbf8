"""Outward breadth-first mutation search and quota-driven campaigns.

One campaign runs an independent search per target group: find a seed latent
carrying the group's label by random sampling, then grow a tree of uniform
mutations outward from that seed, keeping every vector the oracle still
assigns to the group. Children are enqueued only if they are strictly farther
from the seed than their parent, which pushes the frontier away from the seed
and keeps the accepted identities from clustering. A chain ends when its
frontier dies or it has produced max_iter identities; the group then restarts
from a fresh seed until its quota is met or the call budget runs out.

Determinism: all randomness for chain number c of group g comes from the
stream (rng_seed, "group", g, "chain", c), so groups may run on parallel
workers, and interrupted campaigns may resume at any chain boundary, without
changing a single byte of the final manifest.
"""

from __future__ import annotations

from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import SeedNotFoundError, TransportError
from .manifest_io import CheckpointState, read_checkpoint, write_checkpoint
from .model import (
    DatasetManifest,
    GroupLabel,
    GroupStats,
    IdentityRecord,
    LatentVector,
    SearchConfig,
    VariationSpec,
    config_fingerprint,
    quantize_array,
    quantize_value,
)
from .oracle import OracleHandle, sample_prior
from .rng import stream

__all__ = [
    "find_seed",
    "mutate",
    "explore",
    "ExploreResult",
    "run_campaign",
    "expand_identity",
    "default_config",
]


def default_config(
    world_spread: float,
    quota_per_group: int,
    rng_seed: int,
    **overrides,
) -> SearchConfig:
    """SearchConfig with the standard knobs: n=4, delta=0.25*spread."""
    values = dict(
        n=4,
        delta=0.25 * world_spread,
        max_iter=500,
        quota_per_group=quota_per_group,
        oracle_call_budget=250_000,
        rng_seed=rng_seed,
    )
    values.update(overrides)
    return SearchConfig(**values)


def find_seed(
    handle: OracleHandle,
    target: GroupLabel,
    budget: int,
    rng: np.random.Generator,
) -> LatentVector:
    """First prior sample carrying the target label, or SeedNotFoundError.

    Samples are quantized to manifest precision before evaluation so the
    returned vector is exactly what the oracle judged.
    """
    if budget < 1:
        raise ValueError("seed budget must be at least 1")
    if target not in handle.labels:
        raise ValueError(f"unknown group label {target!r}")
    for _ in range(budget):
        v = sample_prior(handle.space, rng).quantized()
        if handle.fitness(v, target) == 1:
            return v
    raise SeedNotFoundError(target, budget)


def mutate(
    v_c: LatentVector,
    n: int,
    delta: float,
    rng: np.random.Generator,
) -> list[LatentVector]:
    """n children of v_c, each coordinate shifted uniformly on [-delta, delta].

    Children are quantized to manifest precision. Quantization can nudge a
    coordinate just past delta; such coordinates are redrawn so the step bound
    holds exactly on the stored values.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if not (delta > 0):
        raise ValueError("delta must be positive")
    base = v_c.values
    children = []
    for _ in range(n):
        child = quantize_array(base + rng.uniform(-delta, delta, size=base.shape[0]))
        for _attempt in range(100):
            over = np.abs(child - base) > delta
            if not over.any():
                break
            redrawn = rng.uniform(-delta, delta, size=int(over.sum()))
            child[over] = [quantize_value(b + u) for b, u in zip(base[over], redrawn)]
        else:
            child = np.where(np.abs(child - base) > delta, base, child)
        children.append(LatentVector(v_c.space, child))
    return children


@dataclass
class ExploreResult:
    records: list[IdentityRecord]
    reason: str  # queue-empty | max_iter | budget | dequeue-cap | transport-error
    calls_used: int
    dequeued: int
    error: Optional[Exception] = None


def explore(
    seed: LatentVector,
    target: GroupLabel,
    config: SearchConfig,
    handle: OracleHandle,
    rng: np.random.Generator,
    *,
    max_accept: Optional[int] = None,
    call_budget: Optional[int] = None,
    first_id: int = 0,
    on_accept: Optional[Callable[[int], None]] = None,
) -> ExploreResult:
    """Grow one seed chain; returns accepted records in acceptance order.

    The dequeued vector is always the one evaluated. max_accept (default
    config.max_iter) caps acceptances, not dequeues; a separate dequeue cap of
    100*max_iter guards against pathological frontier churn. Record ids are
    assigned densely starting at first_id, and every record's seed_id is the
    chain root's id. Oracle transport failures end the chain but keep the
    records accepted so far.
    """
    if max_accept is None:
        max_accept = config.max_iter
    else:
        max_accept = min(max_accept, config.max_iter)
    if call_budget is None:
        call_budget = config.oracle_call_budget
    dequeue_cap = 100 * config.max_iter

    seed_vals = seed.values
    queue: deque = deque()
    queue.append((seed, None, 0))
    records: list[IdentityRecord] = []
    calls = 0
    dequeued = 0
    reason = "queue-empty"

    while queue:
        if len(records) >= max_accept:
            reason = "max_iter"
            break
        if calls >= call_budget:
            reason = "budget"
            break
        if dequeued >= dequeue_cap:
            reason = "dequeue-cap"
            break

        v_c, parent_id, depth = queue.popleft()
        dequeued += 1
        try:
            verdict = handle.evaluate(v_c)
        except TransportError as exc:
            return ExploreResult(records, "transport-error", calls, dequeued, exc)
        calls += 1
        if not verdict.face_detected or verdict.label != target:
            continue

        rid = first_id + len(records)
        records.append(
            IdentityRecord(
                identity_id=rid,
                group=target,
                latent=v_c,
                seed_id=first_id,
                parent_id=parent_id,
                depth=depth,
                call_index=handle.calls,
            )
        )
        if on_accept is not None:
            on_accept(len(records))

        dist_c = float(np.linalg.norm(v_c.values - seed_vals))
        for child in mutate(v_c, config.n, config.delta, rng):
            if float(np.linalg.norm(child.values - seed_vals)) > dist_c:
                queue.append((child, rid, depth + 1))

    return ExploreResult(records, reason, calls, dequeued)


@dataclass
class _GroupOutcome:
    group: GroupLabel
    records: list[IdentityRecord]  # group-local ids
    seeds_used: int
    calls_used: int
    chains_done: int
    completed: bool


def _group_checkpoint_path(checkpoint_dir: Path, group: GroupLabel) -> Path:
    return checkpoint_dir / f"{group}.ckpt"


def _run_group(
    group: GroupLabel,
    config: SearchConfig,
    base_handle: OracleHandle,
    fingerprint: str,
    checkpoint_dir: Optional[Path],
    on_chain_complete: Optional[Callable],
    on_accept: Optional[Callable],
) -> _GroupOutcome:
    records: list[IdentityRecord] = []
    seeds_used = 0
    calls_used = 0
    chains_done = 0

    if checkpoint_dir is not None:
        ckpt_path = _group_checkpoint_path(checkpoint_dir, group)
        if ckpt_path.exists():
            state = read_checkpoint(ckpt_path)
            if state.config_fingerprint != fingerprint:
                raise ValueError(
                    f"checkpoint for {group} was written by a different configuration"
                )
            if state.oracle_id != base_handle.oracle_id:
                raise ValueError(
                    f"checkpoint for {group} was written against a different oracle"
                )
            records = list(state.records)
            seeds_used = state.seeds_used
            calls_used = state.calls_used
            chains_done = state.chains_done

    handle = base_handle.fork(calls=calls_used)
    quota = config.quota_per_group
    budget = config.oracle_call_budget

    while len(records) < quota and handle.calls < budget:
        chain_rng = stream(config.rng_seed, "group", group, "chain", chains_done)
        try:
            seed = find_seed(handle, group, budget - handle.calls, chain_rng)
        except (SeedNotFoundError, TransportError):
            break
        seeds_used += 1
        result = explore(
            seed,
            group,
            config,
            handle,
            chain_rng,
            max_accept=quota - len(records),
            call_budget=budget - handle.calls,
            first_id=len(records),
            on_accept=(lambda k: on_accept(group, len(records) + k, handle.calls))
            if on_accept
            else None,
        )
        records.extend(result.records)

        # A chain cut off by the call budget (or a transport failure) is not
        # checkpointed: its records are a deterministic prefix of what the
        # full chain would accept, so a resumed run under a raised budget
        # replays the chain from its seed and still matches the uninterrupted
        # run byte for byte.
        if result.reason in ("budget", "transport-error"):
            if result.reason == "transport-error":
                break
            continue

        chains_done += 1
        if checkpoint_dir is not None:
            write_checkpoint(
                CheckpointState(
                    config_fingerprint=fingerprint,
                    oracle_id=base_handle.oracle_id,
                    rng_seed=config.rng_seed,
                    space=handle.space,
                    group=group,
                    quota=quota,
                    chains_done=chains_done,
                    seeds_used=seeds_used,
                    calls_used=handle.calls,
                    records=records,
                ),
                _group_checkpoint_path(checkpoint_dir, group),
            )
        if on_chain_complete is not None:
            on_chain_complete(group, chains_done, len(records), handle.calls)

    return _GroupOutcome(
        group=group,
        records=records,
        seeds_used=seeds_used,
        calls_used=handle.calls,
        chains_done=chains_done,
        completed=len(records) >= quota,
    )


def run_campaign(
    targets: Sequence[GroupLabel],
    config: SearchConfig,
    handle: OracleHandle,
    *,
    workers: int = 1,
    checkpoint_dir=None,
    on_chain_complete: Optional[Callable] = None,
    on_accept: Optional[Callable] = None,
) -> DatasetManifest:
    """Fill every group's quota (or spend its budget) and merge the results.

    Groups are searched independently, each against its own forked oracle
    handle and its own derived RNG streams, so any worker count produces the
    identical manifest: records are merged in target order with group-local
    ids shifted to a dense global sequence. Groups that stop short of quota
    leave the manifest flagged partial; their records are kept.

    With checkpoint_dir set, per-group state is persisted after every chain
    and picked up automatically on the next run with the same configuration.
    """
    targets = list(targets)
    if not targets:
        raise ValueError("campaign needs at least one target group")
    if len(set(targets)) != len(targets):
        raise ValueError("duplicate target group")
    for t in targets:
        if t not in handle.labels:
            raise ValueError(f"unknown group label {t!r}")

    fingerprint = config_fingerprint(config, targets, handle.space)
    if checkpoint_dir is not None:
        checkpoint_dir = Path(checkpoint_dir)
        checkpoint_dir.mkdir(parents=True, exist_ok=True)

    def task(group: GroupLabel) -> _GroupOutcome:
        return _run_group(
            group, config, handle, fingerprint, checkpoint_dir,
            on_chain_complete, on_accept,
        )

    if workers <= 1 or len(targets) == 1:
        outcomes = [task(g) for g in targets]
    else:
        with ThreadPoolExecutor(max_workers=min(workers, len(targets))) as pool:
            outcomes = list(pool.map(task, targets))

    manifest = DatasetManifest(
        config_fingerprint=fingerprint,
        oracle_id=handle.oracle_id,
        rng_seed=config.rng_seed,
        space=handle.space,
    )
    offset = 0
    for outcome in outcomes:  # pool.map preserves target order
        for rec in outcome.records:
            manifest.records.append(
                replace(
                    rec,
                    identity_id=rec.identity_id + offset,
                    seed_id=rec.seed_id + offset,
                    parent_id=None if rec.parent_id is None else rec.parent_id + offset,
                )
            )
        offset += len(outcome.records)
        manifest.per_group_counts[outcome.group] = len(outcome.records)
        manifest.group_stats[outcome.group] = GroupStats(
            quota=config.quota_per_group,
            seeds_used=outcome.seeds_used,
            calls_used=outcome.calls_used,
            completed=outcome.completed,
        )
    return manifest


def expand_identity(
    v: LatentVector,
    spec: VariationSpec,
    target: GroupLabel,
    handle: OracleHandle,
) -> list[LatentVector]:
    """Apply variation directions to an accepted latent, keeping only variants
    the oracle still assigns to the target group. The base vector itself is
    never returned. Costs one oracle call per candidate plus one to confirm
    the base label."""
    spec.validate_for(v.space)
    if handle.fitness(v, target) != 1:
        raise ValueError("base latent does not carry the target label")
    kept = []
    for direction in spec.directions:
        for magnitude in direction.magnitudes:
            cand = LatentVector(
                v.space, quantize_array(v.values + magnitude * direction.vector)
            )
            if cand == v:  # magnitude small enough to vanish under quantization
                continue
            verdict = handle.evaluate(cand)
            if verdict.face_detected and verdict.label == target:
                kept.append(cand)
    return kept
