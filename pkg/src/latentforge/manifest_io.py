"""Text manifest format, binary latent sidecar, and chain checkpoints.

A manifest is one header line followed by self-describing key=value lines:

    lforge-manifest v1 fingerprint=<hex> oracle=<id> seed=<u64> space=Z \
        dim=32 groups=A,B status=complete
    stats group=A quota=5 count=5 seeds=1 calls=12 completed=1
    record id=0 group=A seed=0 parent=- depth=0 call=3 latent=0.1,-2.5,...
    variant id=0 latent=...

Latent values are written with 9 significant decimal digits; search code
quantizes to that precision before evaluating, so what is written is exactly
what the oracle judged and round-trips bit-for-bit. The sidecar (same path
plus ".bin") holds one float32 row per identity record for bulk consumers.
"""

from __future__ import annotations

import hashlib
import os
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import ManifestFormatError
from .model import (
    DatasetManifest,
    GroupStats,
    IdentityRecord,
    LatentSpaceSpec,
    LatentVector,
)

__all__ = [
    "write_manifest",
    "read_manifest",
    "manifest_text",
    "sidecar_path",
    "read_sidecar",
    "CheckpointState",
    "write_checkpoint",
    "read_checkpoint",
]

_MAGIC = b"LFORGE1"


def _fmt(x: float) -> str:
    return format(float(x), ".9g")


def _fmt_latent(latent: LatentVector) -> str:
    return ",".join(_fmt(x) for x in latent.values)


def _parse_latent(text: str, space: LatentSpaceSpec, where: str) -> LatentVector:
    try:
        values = np.array([float(t) for t in text.split(",")])
    except ValueError as exc:
        raise ManifestFormatError(f"{where}: bad latent value: {exc}") from None
    if values.shape[0] != space.dim:
        raise ManifestFormatError(
            f"{where}: latent has {values.shape[0]} values, header says dim {space.dim}"
        )
    return LatentVector(space, values)


def _fields(line: str, where: str, skip: int = 1) -> dict[str, str]:
    """key=value tokens of one line, past the leading `skip` bare words."""
    out = {}
    for token in line.split(" ")[skip:]:
        if "=" not in token:
            raise ManifestFormatError(f"{where}: malformed token {token!r}")
        key, _, value = token.partition("=")
        out[key] = value
    return out


def _need(fields: dict, key: str, where: str) -> str:
    if key not in fields:
        raise ManifestFormatError(f"{where}: missing field {key!r}")
    return fields[key]


def _record_line(rec: IdentityRecord) -> str:
    parent = "-" if rec.parent_id is None else str(rec.parent_id)
    return (
        f"record id={rec.identity_id} group={rec.group} seed={rec.seed_id} "
        f"parent={parent} depth={rec.depth} call={rec.call_index} "
        f"latent={_fmt_latent(rec.latent)}"
    )


def _parse_record(fields: dict[str, str], space: LatentSpaceSpec, where: str) -> IdentityRecord:
    try:
        parent_text = _need(fields, "parent", where)
        return IdentityRecord(
            identity_id=int(_need(fields, "id", where)),
            group=_need(fields, "group", where),
            latent=_parse_latent(_need(fields, "latent", where), space, where),
            seed_id=int(_need(fields, "seed", where)),
            parent_id=None if parent_text == "-" else int(parent_text),
            depth=int(_need(fields, "depth", where)),
            call_index=int(_need(fields, "call", where)),
        )
    except ValueError as exc:
        raise ManifestFormatError(f"{where}: {exc}") from None


def manifest_text(manifest: DatasetManifest) -> str:
    groups = list(manifest.group_stats)
    status = "complete" if manifest.completed else "partial"
    lines = [
        f"lforge-manifest v1 fingerprint={manifest.config_fingerprint} "
        f"oracle={manifest.oracle_id} seed={manifest.rng_seed} "
        f"space={manifest.space.space_tag} dim={manifest.space.dim} "
        f"groups={','.join(groups)} status={status}"
    ]
    for g in groups:
        s = manifest.group_stats[g]
        lines.append(
            f"stats group={g} quota={s.quota} count={manifest.per_group_counts.get(g, 0)} "
            f"seeds={s.seeds_used} calls={s.calls_used} completed={int(s.completed)}"
        )
    for rec in manifest.records:
        lines.append(_record_line(rec))
    for ident in sorted(manifest.variant_latents):
        for latent in manifest.variant_latents[ident]:
            lines.append(f"variant id={ident} latent={_fmt_latent(latent)}")
    return "\n".join(lines) + "\n"


def _atomic_write(path: Path, data: bytes) -> None:
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)


def sidecar_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".bin")


def write_manifest(manifest: DatasetManifest, path) -> None:
    """Write the text manifest and its float32 sidecar atomically."""
    path = Path(path)
    _atomic_write(path, manifest_text(manifest).encode("utf-8"))

    rows = np.zeros((len(manifest.records), manifest.space.dim), dtype="<f4")
    for i, rec in enumerate(manifest.records):
        rows[i] = rec.latent.values
    header = _MAGIC + struct.pack("<I", manifest.space.dim) + struct.pack(
        "<Q", len(manifest.records)
    )
    _atomic_write(sidecar_path(path), header + rows.tobytes())


def read_manifest(path) -> DatasetManifest:
    path = Path(path)
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ManifestFormatError(f"{path}: empty file")
    if not lines[0].startswith("lforge-manifest v1 "):
        raise ManifestFormatError(f"{path}: not a v1 manifest")
    head = _fields(lines[0], f"{path}:1", skip=2)
    space = LatentSpaceSpec(
        _need(head, "space", "header"), int(_need(head, "dim", "header"))
    )
    groups_text = _need(head, "groups", "header")
    groups = [g for g in groups_text.split(",") if g]

    manifest = DatasetManifest(
        config_fingerprint=_need(head, "fingerprint", "header"),
        oracle_id=_need(head, "oracle", "header"),
        rng_seed=int(_need(head, "seed", "header")),
        space=space,
    )
    for no, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        where = f"{path}:{no}"
        kind = line.split(" ", 1)[0]
        fields = _fields(line, where)
        if kind == "stats":
            g = _need(fields, "group", where)
            manifest.group_stats[g] = GroupStats(
                quota=int(_need(fields, "quota", where)),
                seeds_used=int(_need(fields, "seeds", where)),
                calls_used=int(_need(fields, "calls", where)),
                completed=bool(int(_need(fields, "completed", where))),
            )
            manifest.per_group_counts[g] = int(_need(fields, "count", where))
        elif kind == "record":
            manifest.records.append(_parse_record(fields, space, where))
        elif kind == "variant":
            ident = int(_need(fields, "id", where))
            manifest.variant_latents.setdefault(ident, []).append(
                _parse_latent(_need(fields, "latent", where), space, where)
            )
        else:
            raise ManifestFormatError(f"{where}: unknown line kind {kind!r}")

    if list(manifest.group_stats) != groups:
        raise ManifestFormatError(f"{path}: stats lines do not match header groups")
    status = _need(head, "status", "header")
    derived = "complete" if manifest.completed else "partial"
    if status != derived:
        raise ManifestFormatError(
            f"{path}: header says {status} but stats imply {derived}"
        )
    return manifest


def read_sidecar(path) -> np.ndarray:
    """Rows of the binary sidecar as float32, validated against its header."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < len(_MAGIC) + 12 or not blob.startswith(_MAGIC):
        raise ManifestFormatError(f"{path}: bad sidecar magic")
    dim = struct.unpack_from("<I", blob, len(_MAGIC))[0]
    count = struct.unpack_from("<Q", blob, len(_MAGIC) + 4)[0]
    body = blob[len(_MAGIC) + 12 :]
    expected = count * dim * 4
    if len(body) != expected:
        raise ManifestFormatError(
            f"{path}: sidecar holds {len(body)} payload bytes, header implies {expected}"
        )
    return np.frombuffer(body, dtype="<f4").reshape(count, dim)


@dataclass
class CheckpointState:
    """Per-group resumable state written after every completed seed chain."""

    config_fingerprint: str
    oracle_id: str
    rng_seed: int
    space: LatentSpaceSpec
    group: str
    quota: int
    chains_done: int
    seeds_used: int
    calls_used: int
    records: list[IdentityRecord]  # group-local dense ids


def _checkpoint_core(state: CheckpointState) -> str:
    lines = [
        f"lforge-checkpoint v1 fingerprint={state.config_fingerprint} "
        f"oracle={state.oracle_id} seed={state.rng_seed} "
        f"space={state.space.space_tag} dim={state.space.dim} "
        f"group={state.group} quota={state.quota} chains={state.chains_done} "
        f"seeds={state.seeds_used} calls={state.calls_used}"
    ]
    for rec in state.records:
        lines.append(_record_line(rec))
    return "\n".join(lines) + "\n"


def write_checkpoint(state: CheckpointState, path) -> None:
    core = _checkpoint_core(state)
    digest = hashlib.sha256(core.encode("utf-8")).hexdigest()
    first, _, rest = core.partition("\n")
    text = f"{first} digest={digest}\n{rest}"
    _atomic_write(Path(path), text.encode("utf-8"))


def read_checkpoint(path) -> CheckpointState:
    path = Path(path)
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or not lines[0].startswith("lforge-checkpoint v1 "):
        raise ManifestFormatError(f"{path}: not a v1 checkpoint")
    head = _fields(lines[0], f"{path}:1", skip=2)
    digest = _need(head, "digest", "header")
    space = LatentSpaceSpec(
        _need(head, "space", "header"), int(_need(head, "dim", "header"))
    )
    state = CheckpointState(
        config_fingerprint=_need(head, "fingerprint", "header"),
        oracle_id=_need(head, "oracle", "header"),
        rng_seed=int(_need(head, "seed", "header")),
        space=space,
        group=_need(head, "group", "header"),
        quota=int(_need(head, "quota", "header")),
        chains_done=int(_need(head, "chains", "header")),
        seeds_used=int(_need(head, "seeds", "header")),
        calls_used=int(_need(head, "calls", "header")),
        records=[],
    )
    for no, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        where = f"{path}:{no}"
        if not line.startswith("record "):
            raise ManifestFormatError(f"{where}: unexpected line in checkpoint")
        state.records.append(_parse_record(_fields(line, where), space, where))

    # the digest covers everything except itself; refuse torn or edited files
    if hashlib.sha256(_checkpoint_core(state).encode("utf-8")).hexdigest() != digest:
        raise ManifestFormatError(f"{path}: checkpoint digest mismatch")
    return state
