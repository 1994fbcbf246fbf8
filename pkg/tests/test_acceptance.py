"""End-to-end checks of every promised behavior at its contracted tolerance.

Each test prints one PASS/FAIL line; run with -s to see them:

    python3 -m pytest tests/test_acceptance.py -s
"""

import json
import shutil
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from latentforge.audit import (
    DEFAULT_THRESHOLD,
    HISTOGRAM_BINS,
    accuracy_difference,
    uniqueness_report,
)
from latentforge.baseline import compare_efficiency
from latentforge.external import ExternalOracle
from latentforge.manifest_io import manifest_text, write_manifest
from latentforge.model import (
    DatasetManifest,
    GroupStats,
    IdentityRecord,
    LatentVector,
    SearchConfig,
    quantize_array,
    validate_manifest,
)
from latentforge.oracle import (
    DEFAULT_MEASURED_MIX,
    SimulatedOracle,
    default_world,
    measure_prior_mix,
    sample_prior,
    save_world,
)
from latentforge.rng import stream
from latentforge.search import run_campaign

BRIDGE_DIR = Path(__file__).resolve().parent.parent / "bridge"


def report(name, ok, detail):
    print(f"\n[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, f"{name}: {detail}"


def test_accuracy_disparity_reproduction():
    rows = [  # (African, Asian, Caucasian, Indian) -> reported disparity
        ((79.17, 74.90, 82.48, 73.80), 8.68),
        ((77.97, 75.67, 82.52, 70.18), 12.33),
        ((74.97, 71.32, 77.78, 70.92), 6.87),
        ((94.23, 92.87, 95.03, 92.92), 2.12),
        ((93.28, 92.87, 95.02, 90.78), 4.23),
        ((94.23, 93.83, 95.30, 93.03), 2.27),
        ((94.85, 94.28, 96.23, 93.20), 3.03),
        ((94.22, 93.88, 96.63, 91.05), 5.58),
        ((95.32, 94.70, 97.07, 93.68), 3.38),
    ]
    t0 = time.perf_counter()
    worst = 0.0
    for accs, reported in rows:
        table = dict(zip(("African", "Asian", "Caucasian", "Indian"), accs))
        worst = max(worst, abs(accuracy_difference(table) - reported))
    exact = accuracy_difference({"A": 82.52, "B": 70.18}) == 82.52 - 70.18
    exact &= accuracy_difference({"A": 7.0, "B": 3.0, "C": 5.0}) == 4.0
    elapsed = time.perf_counter() - t0
    ok = worst <= 0.05 and exact and elapsed < 1.0
    report(
        "accuracy disparity reproduction",
        ok,
        f"9 published rows within {worst:.3f} of reported (tolerance 0.05), "
        f"synthetic exact={exact}, {elapsed:.2f}s of 1s",
    )


def test_bias_calibration():
    t0 = time.perf_counter()
    shares, _ = measure_prior_mix(
        default_world(), 100_000, stream(2026, "acceptance", "bias")
    )
    indian = abs(shares["Indian"] - 0.0026) / 0.0026
    african = abs(shares["African"] - 0.0171) / 0.0171
    caucasian = shares["Caucasian"]
    elapsed = time.perf_counter() - t0
    ok = indian <= 0.20 and african <= 0.20 and caucasian >= 0.65 and elapsed < 30
    report(
        "bias calibration",
        ok,
        f"100k fresh draws: Indian {shares['Indian']:.4%} (rel err {indian:.1%}), "
        f"African {shares['African']:.4%} (rel err {african:.1%}), "
        f"Caucasian {caucasian:.1%} (floor 65%), {elapsed:.1f}s of 30s",
    )


def test_efficiency_direction():
    t0 = time.perf_counter()
    config = SearchConfig(n=4, delta=0.25, max_iter=500, quota_per_group=100,
                          oracle_call_budget=250_000, rng_seed=424242)
    world = default_world()
    rare = compare_efficiency("Indian", 100, config, SimulatedOracle(world))
    common = compare_efficiency("Caucasian", 100, config, SimulatedOracle(world))
    elapsed = time.perf_counter() - t0
    ok = (rare.comparable and rare.ratio >= 5.0
          and common.comparable and common.ratio > 1.0 and elapsed < 120)
    report(
        "efficiency direction",
        ok,
        f"rare group {rare.rejection_calls}/{rare.search_calls} calls "
        f"= {rare.ratio:.1f}x (floor 5x), majority {common.ratio:.2f}x (floor 1x), "
        f"{elapsed:.1f}s of 120s",
    )


def test_search_property_suite():
    t0 = time.perf_counter()
    world = default_world()
    groups = ["Caucasian", "African", "Asian"]
    delta = 0.25
    max_iter = 6
    problems = []
    campaigns = 0

    for seed in range(20):
        config = SearchConfig(n=4, delta=delta, max_iter=max_iter,
                              quota_per_group=12, oracle_call_budget=50_000,
                              rng_seed=seed)
        manifest = run_campaign(groups, config, SimulatedOracle(world))
        campaigns += 1

        if validate_manifest(manifest):
            problems.append(f"seed {seed}: structural violations")
        checker = SimulatedOracle(world)
        by_id = {r.identity_id: r for r in manifest.records}
        per_seed = {}
        for rec in manifest.records:
            if checker.fitness(rec.latent, rec.group) != 1:
                problems.append(f"seed {seed}: impure label on {rec.identity_id}")
            per_seed[rec.seed_id] = per_seed.get(rec.seed_id, 0) + 1
            if rec.parent_id is not None:
                parent = by_id[rec.parent_id]
                root = by_id[rec.seed_id]
                d_rec = np.linalg.norm(rec.latent.values - root.latent.values)
                d_par = np.linalg.norm(parent.latent.values - root.latent.values)
                if not d_rec > d_par:
                    problems.append(f"seed {seed}: frontier not monotone")
                step = np.abs(rec.latent.values - parent.latent.values).max()
                if step > delta:
                    problems.append(f"seed {seed}: step {step} exceeds delta")
        if any(count > max_iter for count in per_seed.values()):
            problems.append(f"seed {seed}: chain exceeded max_iter")
        if manifest.completed and any(
            manifest.per_group_counts[g] != 12 for g in groups
        ):
            problems.append(f"seed {seed}: completed without exact quotas")

        if seed < 3:  # serial and parallel runs must agree byte for byte
            again = run_campaign(groups, config, SimulatedOracle(world))
            parallel = run_campaign(groups, config, SimulatedOracle(world), workers=3)
            if manifest_text(manifest) != manifest_text(again):
                problems.append(f"seed {seed}: rerun differs")
            if manifest_text(manifest) != manifest_text(parallel):
                problems.append(f"seed {seed}: parallel differs")

    elapsed = time.perf_counter() - t0
    ok = not problems and campaigns >= 20 and elapsed < 120
    report(
        "search property suite",
        ok,
        f"{campaigns} campaigns clean (purity, monotone frontier, step bound, "
        f"max_iter, quotas, determinism), {elapsed:.1f}s of 120s"
        + (f"; problems: {problems[:3]}" if problems else ""),
    )


def test_uniqueness_audit_equivalence(two_hundred_manifest):
    t0 = time.perf_counter()
    manifest, world = two_hundred_manifest
    handle = SimulatedOracle(world)
    rep = uniqueness_report(manifest, handle)

    embs = [SimulatedOracle(world).evaluate(r.latent).embedding
            for r in manifest.records]
    n = len(embs)
    hist = [0] * HISTOGRAM_BINS
    dups = 0
    for i in range(n):
        for j in range(i + 1, n):
            s = float(np.dot(embs[i], embs[j]))
            hist[min(int((s + 1.0) / 0.02), HISTOGRAM_BINS - 1)] += 1
            if 1.0 - s <= DEFAULT_THRESHOLD:
                dups += 1

    # two identical latents must read as an exact duplicate
    twin = DatasetManifest("0" * 16, handle.oracle_id, 0, world.space)
    v = LatentVector(world.space, quantize_array(world.anchors[0] + 0.3))
    twin.records = [IdentityRecord(0, "Caucasian", v, 0, None, 0, 1),
                    IdentityRecord(1, "Caucasian", v, 1, None, 0, 2)]
    twin.per_group_counts = {"Caucasian": 2}
    twin.group_stats = {"Caucasian": GroupStats(2, 2, 2, True)}
    twin_rep = uniqueness_report(twin, SimulatedOracle(world))

    elapsed = time.perf_counter() - t0
    ok = (rep.pair_count == 19_900 and rep.histogram == hist
          and rep.duplicate_rate == dups / 19_900
          and twin_rep.duplicate_rate == 1.0
          and twin_rep.histogram[HISTOGRAM_BINS - 1] == 1
          and elapsed < 30)
    report(
        "uniqueness audit equivalence",
        ok,
        f"200 identities, 19,900 pairs, histogram identical to brute force, "
        f"twin latents read as duplicate, {elapsed:.1f}s of 30s",
    )


def test_rejection_sampling_statistics():
    t0 = time.perf_counter()
    handle = SimulatedOracle(default_world())
    n = 10_000
    rng = stream(2026, "acceptance", "rates")
    counts = {g: 0 for g in handle.labels}
    for _ in range(n):
        verdict = handle.evaluate(sample_prior(handle.space, rng))
        if verdict.face_detected:
            counts[verdict.label] += 1
    offenders = []
    for g, p in DEFAULT_MEASURED_MIX.items():
        se = (p * (1 - p) / n) ** 0.5
        if abs(counts[g] / n - p) > 3 * se:
            offenders.append(f"{g} {counts[g] / n:.4f} vs {p:.4f}")
    elapsed = time.perf_counter() - t0
    ok = not offenders and elapsed < 30
    report(
        "rejection sampling statistics",
        ok,
        f"all 6 groups within 3 standard errors over 10k trials, "
        f"{elapsed:.1f}s of 30s" + (f"; off: {offenders}" if offenders else ""),
    )


def test_checkpoint_equivalence(tmp_path):
    t0 = time.perf_counter()
    world = default_world()
    groups = ["Caucasian", "African"]
    config = SearchConfig(n=4, delta=0.25, max_iter=4, quota_per_group=12,
                          oracle_call_budget=50_000, rng_seed=77)
    reference = run_campaign(groups, config, SimulatedOracle(world))
    total_chains = sum(s.seeds_used for s in reference.group_stats.values())
    assert total_chains >= 4  # several places to die

    class Bomb(Exception):
        pass

    mismatches = 0
    for explode_at in range(1, total_chains + 1):
        ckpt = tmp_path / f"ckpt-{explode_at}"
        seen = [0]

        def bomb(group, chains_done, accepted, calls):
            seen[0] += 1
            if seen[0] == explode_at:
                raise Bomb

        try:
            run_campaign(groups, config, SimulatedOracle(world),
                         checkpoint_dir=ckpt, on_chain_complete=bomb)
        except Bomb:
            pass
        resumed = run_campaign(groups, config, SimulatedOracle(world),
                               checkpoint_dir=ckpt)
        if manifest_text(resumed) != manifest_text(reference):
            mismatches += 1

    # file-level double check for one resume
    write_manifest(reference, tmp_path / "ref.manifest")
    write_manifest(resumed, tmp_path / "res.manifest")
    files_equal = (
        (tmp_path / "ref.manifest").read_bytes() == (tmp_path / "res.manifest").read_bytes()
        and (tmp_path / "ref.manifest.bin").read_bytes() == (tmp_path / "res.manifest.bin").read_bytes()
    )
    elapsed = time.perf_counter() - t0
    ok = mismatches == 0 and files_equal
    report(
        "checkpoint equivalence",
        ok,
        f"killed after each of {total_chains} chain boundaries, every resume "
        f"byte-identical to the uninterrupted run, {elapsed:.1f}s",
    )


@pytest.mark.skipif(
    shutil.which("node") is None or not (BRIDGE_DIR / "dist" / "serve.js").exists(),
    reason="bridge not built (needs node and bridge/dist/serve.js)",
)
def test_bridge_protocol_conformance(tmp_path):
    t0 = time.perf_counter()
    world = default_world()
    world_file = tmp_path / "world.json"
    save_world(world, world_file)
    command = ["node", str(BRIDGE_DIR / "dist" / "serve.js"), "--world", str(world_file)]

    local = SimulatedOracle(world)
    rng = stream(2026, "acceptance", "bridge")
    mismatches = 0
    with ExternalOracle(command) as remote:
        hello_ok = (remote.labels == world.groups
                    and remote.embedding_dim == world.embedding_dim
                    and remote.space == world.space)
        for _ in range(100):
            v = sample_prior(world.space, rng)
            a = local.evaluate(v)
            b = remote.evaluate(v)
            same = a.face_detected == b.face_detected and a.label == b.label
            if same and a.embedding is not None:
                same = float(np.abs(a.embedding - b.embedding).max()) <= 1e-6
            mismatches += 0 if same else 1

    # malformed input produces ok:false and the loop keeps serving
    proc = subprocess.Popen(command, stdin=subprocess.PIPE,
                            stdout=subprocess.PIPE, text=True)
    try:
        proc.stdin.write('{"id": 1, "op": "hello"}\n')
        proc.stdin.write("%%% not json %%%\n")
        proc.stdin.write('{"id": 2, "op": "hello"}\n')
        proc.stdin.flush()
        proc.stdin.close()
        lines = [json.loads(l) for l in proc.stdout.read().splitlines()]
    finally:
        proc.wait(timeout=10)
    fault_ok = (len(lines) == 3
                and lines[0]["id"] == 1 and lines[0]["version"] == "1"
                and lines[1]["ok"] is False
                and lines[2]["id"] == 2 and lines[2]["ok"] is True)

    elapsed = time.perf_counter() - t0
    ok = hello_ok and mismatches == 0 and fault_ok
    report(
        "bridge protocol conformance",
        ok,
        f"hello fields correct, 100/100 verdicts identical "
        f"(labels exact, embeddings within 1e-6), malformed line answered "
        f"ok:false and loop continued, {elapsed:.1f}s",
    )
