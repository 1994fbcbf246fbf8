import re

import numpy as np
import pytest

from latentforge.errors import ManifestFormatError
from latentforge.manifest_io import (
    CheckpointState,
    manifest_text,
    read_checkpoint,
    read_manifest,
    read_sidecar,
    sidecar_path,
    write_checkpoint,
    write_manifest,
)
from latentforge.model import (
    DatasetManifest,
    GroupStats,
    IdentityRecord,
    LatentSpaceSpec,
    LatentVector,
    quantize_array,
)


def _manifest(partial=False, with_variants=True):
    rng = np.random.default_rng(5)
    space = LatentSpaceSpec("Z", 6)

    def vec():
        return LatentVector(space, quantize_array(rng.standard_normal(6)))

    m = DatasetManifest("ab" * 8, "sim:roundtrip", 42, space)
    m.records = [
        IdentityRecord(0, "A", vec(), 0, None, 0, 3),
        IdentityRecord(1, "A", vec(), 0, 0, 1, 5),
        IdentityRecord(2, "A", vec(), 0, 1, 2, 9),
        IdentityRecord(3, "B", vec(), 3, None, 0, 12),
    ]
    m.per_group_counts = {"A": 3, "B": 1}
    m.group_stats = {
        "A": GroupStats(quota=3, seeds_used=1, calls_used=9, completed=True),
        "B": GroupStats(quota=1 if not partial else 4, seeds_used=1,
                        calls_used=3, completed=not partial),
    }
    if with_variants:
        m.variant_latents = {0: [vec(), vec()], 3: [vec()]}
    return m


def test_round_trip_preserves_every_field(tmp_path):
    m = _manifest()
    path = tmp_path / "d.manifest"
    write_manifest(m, path)
    got = read_manifest(path)

    assert got.config_fingerprint == m.config_fingerprint
    assert got.oracle_id == m.oracle_id
    assert got.rng_seed == m.rng_seed
    assert got.space == m.space
    assert got.per_group_counts == m.per_group_counts
    assert got.group_stats == m.group_stats
    assert got.completed is True
    assert len(got.records) == len(m.records)
    for a, b in zip(got.records, m.records):
        assert a == b  # latents exact because they were quantized going in
    assert set(got.variant_latents) == set(m.variant_latents)
    for ident in m.variant_latents:
        assert got.variant_latents[ident] == m.variant_latents[ident]


def test_round_trip_partial_status(tmp_path):
    m = _manifest(partial=True)
    path = tmp_path / "d.manifest"
    write_manifest(m, path)
    assert "status=partial" in path.read_text().splitlines()[0]
    got = read_manifest(path)
    assert got.completed is False


def test_latent_text_is_nine_significant_digits(tmp_path):
    path = tmp_path / "d.manifest"
    write_manifest(_manifest(), path)
    for line in path.read_text().splitlines():
        if not line.startswith("record "):
            continue
        latent = line.rsplit("latent=", 1)[1]
        for token in latent.split(","):
            assert re.fullmatch(r"-?\d+(\.\d+)?(e[+-]?\d+)?", token), token
            digits = re.sub(r"[-.e+]", "", token.split("e")[0]).lstrip("0")
            assert len(digits) <= 9


def test_no_temp_files_left_behind(tmp_path):
    path = tmp_path / "d.manifest"
    write_manifest(_manifest(), path)
    names = {p.name for p in tmp_path.iterdir()}
    assert names == {"d.manifest", "d.manifest.bin"}


def test_sidecar_layout(tmp_path):
    m = _manifest()
    path = tmp_path / "d.manifest"
    write_manifest(m, path)
    side = sidecar_path(path)
    blob = side.read_bytes()
    assert blob.startswith(b"LFORGE1")
    rows = read_sidecar(side)
    assert rows.shape == (4, 6)
    assert rows.dtype == np.dtype("<f4")
    for i, rec in enumerate(m.records):
        np.testing.assert_allclose(rows[i], rec.latent.values, rtol=1e-6)


def test_sidecar_rejects_damage(tmp_path):
    path = tmp_path / "d.manifest"
    write_manifest(_manifest(), path)
    side = sidecar_path(path)
    blob = side.read_bytes()
    side.write_bytes(b"XXXXXXX" + blob[7:])
    with pytest.raises(ManifestFormatError):
        read_sidecar(side)
    side.write_bytes(blob[:-4])  # truncated payload
    with pytest.raises(ManifestFormatError):
        read_sidecar(side)


def test_reader_rejects_malformed_files(tmp_path):
    path = tmp_path / "bad"
    path.write_text("")
    with pytest.raises(ManifestFormatError):
        read_manifest(path)
    path.write_text("something else entirely\n")
    with pytest.raises(ManifestFormatError):
        read_manifest(path)

    good = manifest_text(_manifest())
    # header claims complete but a stats line says otherwise
    tampered = good.replace("status=complete", "status=partial")
    path.write_text(tampered)
    with pytest.raises(ManifestFormatError):
        read_manifest(path)
    # drop one stats line: header group list no longer matches
    lines = [l for l in good.splitlines() if not l.startswith("stats group=B")]
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(ManifestFormatError):
        read_manifest(path)


def _checkpoint():
    m = _manifest(with_variants=False)
    return CheckpointState(
        config_fingerprint=m.config_fingerprint,
        oracle_id=m.oracle_id,
        rng_seed=m.rng_seed,
        space=m.space,
        group="A",
        quota=3,
        chains_done=1,
        seeds_used=1,
        calls_used=9,
        records=[r for r in m.records if r.group == "A"],
    )


def test_checkpoint_round_trip(tmp_path):
    state = _checkpoint()
    path = tmp_path / "A.ckpt"
    write_checkpoint(state, path)
    got = read_checkpoint(path)
    assert got == state


def test_checkpoint_digest_catches_edits(tmp_path):
    path = tmp_path / "A.ckpt"
    write_checkpoint(_checkpoint(), path)
    text = path.read_text()
    path.write_text(text.replace("calls=9", "calls=8"))
    with pytest.raises(ManifestFormatError, match="digest"):
        read_checkpoint(path)
    # truncation is caught too
    path.write_text("\n".join(text.splitlines()[:-1]) + "\n")
    with pytest.raises(ManifestFormatError, match="digest"):
        read_checkpoint(path)
