"""Core value types: latent vectors, search knobs, identity records, manifests.

Everything here is an immutable value object once constructed; instances are
safe to share between concurrent campaign workers.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

__all__ = [
    "Z_DIM_DEFAULT",
    "W_DIM_DEFAULT",
    "DEFAULT_GROUPS",
    "GroupLabel",
    "LatentSpaceSpec",
    "LatentVector",
    "SearchConfig",
    "OracleVerdict",
    "IdentityRecord",
    "VariationDirection",
    "VariationSpec",
    "GroupStats",
    "DatasetManifest",
    "validate_group_set",
    "validate_manifest",
    "quantize_value",
    "quantize_array",
    "config_fingerprint",
]

# Canonical latent dimensions of the generator this tool was designed around.
# The intermediate space is handled flattened (18 rows x 512 columns).
Z_DIM_DEFAULT = 512
W_DIM_DEFAULT = 9216

# The six demographic groups used throughout; campaigns may configure others.
DEFAULT_GROUPS = (
    "Caucasian",
    "African",
    "Indian",
    "Asian",
    "Middle_Eastern",
    "Latino_Hispanic",
)

# Group labels are plain identifier strings; the campaign's configured label
# set (see validate_group_set) is the authority on which ones are valid.
GroupLabel = str

_MANTISSA_DIGITS = 9


def quantize_value(x: float) -> float:
    """Round a float to 9 significant decimal digits (the manifest precision).

    The result is the double nearest to the printed decimal, so formatting it
    again with 9 significant digits reproduces the same text.
    """
    return float(format(float(x), f".{_MANTISSA_DIGITS}g"))


def quantize_array(values: np.ndarray) -> np.ndarray:
    return np.array([quantize_value(v) for v in np.asarray(values, dtype=np.float64)])


def validate_group_set(groups: Sequence[GroupLabel]) -> tuple[GroupLabel, ...]:
    """Check a campaign label set: nonempty, identifier-like, no duplicates."""
    groups = tuple(groups)
    if not groups:
        raise ValueError("group label set must be nonempty")
    seen = set()
    for g in groups:
        if not g or not g.replace("_", "a").isalnum():
            raise ValueError(f"group label {g!r} is not an identifier")
        if g in seen:
            raise ValueError(f"duplicate group label {g!r}")
        seen.add(g)
    return groups


@dataclass(frozen=True)
class LatentSpaceSpec:
    """Which latent space a campaign runs in, and its (flattened) dimension."""

    space_tag: str = "Z"
    dim: int = Z_DIM_DEFAULT

    def __post_init__(self):
        if self.space_tag not in ("Z", "W"):
            raise ValueError(f"space_tag must be 'Z' or 'W', got {self.space_tag!r}")
        if not isinstance(self.dim, int) or self.dim <= 0:
            raise ValueError(f"dim must be a positive integer, got {self.dim!r}")

    @classmethod
    def z(cls, dim: int = Z_DIM_DEFAULT) -> "LatentSpaceSpec":
        return cls("Z", dim)

    @classmethod
    def w(cls, dim: int = W_DIM_DEFAULT) -> "LatentSpaceSpec":
        return cls("W", dim)


@dataclass(frozen=True, eq=False)
class LatentVector:
    """A point in the generator's latent space."""

    space: LatentSpaceSpec
    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 1 or arr.shape[0] != self.space.dim:
            raise ValueError(
                f"latent has {arr.shape} values, space expects ({self.space.dim},)"
            )
        if not np.all(np.isfinite(arr)):
            raise ValueError("latent entries must all be finite")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    def __eq__(self, other) -> bool:
        if not isinstance(other, LatentVector):
            return NotImplemented
        return self.space == other.space and np.array_equal(self.values, other.values)

    def quantized(self) -> "LatentVector":
        return LatentVector(self.space, quantize_array(self.values))


@dataclass(frozen=True)
class SearchConfig:
    """All knobs of the outward latent search.

    n           mutations generated per accepted vector
    delta       half-range of the per-coordinate uniform mutation
    max_iter    accepted identities allowed per seed chain
    """

    n: int
    delta: float
    max_iter: int
    quota_per_group: int
    oracle_call_budget: int
    rng_seed: int
    distance: str = "euclidean"

    def __post_init__(self):
        for name in ("n", "max_iter", "quota_per_group", "oracle_call_budget"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 1:
                raise ValueError(f"{name} must be an integer >= 1, got {v!r}")
        if not (self.delta > 0):
            raise ValueError(f"delta must be > 0, got {self.delta!r}")
        if not isinstance(self.rng_seed, int) or not (0 <= self.rng_seed < 2**64):
            raise ValueError("rng_seed must fit in an unsigned 64-bit integer")
        if self.distance != "euclidean":
            raise ValueError(f"unsupported distance {self.distance!r}")


@dataclass(frozen=True, eq=False)
class OracleVerdict:
    """Oracle answer for one latent: detection flag, group label, embedding."""

    face_detected: bool
    label: Optional[GroupLabel] = None
    embedding: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.label is not None and not self.face_detected:
            raise ValueError("label present requires face_detected")
        if self.embedding is not None:
            emb = np.asarray(self.embedding, dtype=np.float64)
            norm = float(np.linalg.norm(emb))
            if abs(norm - 1.0) > 1e-6:
                raise ValueError(f"embedding norm {norm} is not 1 within 1e-6")
            emb = emb.copy()
            emb.setflags(write=False)
            object.__setattr__(self, "embedding", emb)


@dataclass(frozen=True)
class IdentityRecord:
    """One accepted identity with its lineage inside a seed chain.

    seed_id is the identity_id of the chain's root record; depth 0 records are
    roots and have no parent. call_index is the group's oracle-call counter at
    the moment this record was accepted.
    """

    identity_id: int
    group: GroupLabel
    latent: LatentVector
    seed_id: int
    parent_id: Optional[int]
    depth: int
    call_index: int

    def __post_init__(self):
        if self.depth < 0:
            raise ValueError("depth must be non-negative")
        if (self.depth == 0) != (self.parent_id is None):
            raise ValueError("depth 0 exactly when parent_id is absent")
        if self.depth == 0 and self.seed_id != self.identity_id:
            raise ValueError("a chain root must be its own seed")


@dataclass(frozen=True, eq=False)
class VariationDirection:
    """A latent direction with the magnitudes at which to apply it."""

    name: str
    vector: np.ndarray
    magnitudes: tuple[float, ...]

    KINDS = ("pose", "expression", "illumination", "custom")

    def __post_init__(self):
        if self.name not in self.KINDS:
            raise ValueError(f"direction name must be one of {self.KINDS}")
        vec = np.asarray(self.vector, dtype=np.float64)
        if vec.ndim != 1:
            raise ValueError("direction vector must be one-dimensional")
        vec = vec.copy()
        vec.setflags(write=False)
        object.__setattr__(self, "vector", vec)
        mags = tuple(float(m) for m in self.magnitudes)
        if not mags:
            raise ValueError("magnitude list must be nonempty")
        if any(m == 0.0 for m in mags):
            raise ValueError("zero magnitudes are not allowed")
        object.__setattr__(self, "magnitudes", mags)


@dataclass(frozen=True)
class VariationSpec:
    """Identity-preserving variation directions applied to accepted latents."""

    directions: tuple[VariationDirection, ...]

    def __post_init__(self):
        object.__setattr__(self, "directions", tuple(self.directions))

    def validate_for(self, space: LatentSpaceSpec) -> None:
        for d in self.directions:
            if d.vector.shape[0] != space.dim:
                raise ValueError(
                    f"direction {d.name!r} has dim {d.vector.shape[0]}, "
                    f"campaign latent dim is {space.dim}"
                )


@dataclass(frozen=True)
class GroupStats:
    """Per-group campaign bookkeeping stored alongside the records."""

    quota: int
    seeds_used: int
    calls_used: int
    completed: bool


@dataclass
class DatasetManifest:
    """Campaign output: records plus enough metadata to validate and resume."""

    config_fingerprint: str
    oracle_id: str
    rng_seed: int
    space: LatentSpaceSpec
    records: list[IdentityRecord] = field(default_factory=list)
    variant_latents: dict[int, list[LatentVector]] = field(default_factory=dict)
    per_group_counts: dict[GroupLabel, int] = field(default_factory=dict)
    group_stats: dict[GroupLabel, GroupStats] = field(default_factory=dict)

    @property
    def completed(self) -> bool:
        return bool(self.group_stats) and all(
            s.completed for s in self.group_stats.values()
        )

    def records_for(self, group: GroupLabel) -> list[IdentityRecord]:
        return [r for r in self.records if r.group == group]


def validate_manifest(manifest: DatasetManifest) -> list[str]:
    """Check every manifest invariant; violations are data, not failures.

    Returns an empty list iff the manifest is internally consistent: dense
    sequential ids, parent/seed lineage, per-group count bookkeeping, and
    quota satisfaction for groups marked completed.
    """
    violations: list[str] = []
    by_id: dict[int, IdentityRecord] = {}

    for pos, rec in enumerate(manifest.records):
        if rec.identity_id != pos:
            violations.append(
                f"identity_id {rec.identity_id} at position {pos}: ids must be dense and sequential"
            )
        if rec.identity_id in by_id:
            violations.append(f"identity_id {rec.identity_id} is duplicated")
        by_id[rec.identity_id] = rec
        if rec.latent.space != manifest.space:
            violations.append(f"identity_id {rec.identity_id}: latent space mismatch")

    for rec in manifest.records:
        if rec.parent_id is None:
            continue
        parent = by_id.get(rec.parent_id)
        if parent is None:
            violations.append(
                f"identity_id {rec.identity_id}: parent {rec.parent_id} not in manifest"
            )
            continue
        if rec.depth != parent.depth + 1:
            violations.append(
                f"identity_id {rec.identity_id}: depth {rec.depth} != parent depth "
                f"{parent.depth} + 1"
            )
        if rec.seed_id != parent.seed_id:
            violations.append(
                f"identity_id {rec.identity_id}: seed_id {rec.seed_id} != parent's "
                f"seed chain {parent.seed_id}"
            )
        if rec.group != parent.group:
            violations.append(
                f"identity_id {rec.identity_id}: group differs from parent's group"
            )

    counted: dict[GroupLabel, int] = {}
    for rec in manifest.records:
        counted[rec.group] = counted.get(rec.group, 0) + 1
    for group, n in manifest.per_group_counts.items():
        actual = counted.get(group, 0)
        if actual != n:
            violations.append(
                f"group {group}: per_group_counts says {n}, records contain {actual}"
            )
    for group, actual in counted.items():
        if group not in manifest.per_group_counts:
            violations.append(f"group {group}: records present but missing from counts")

    for group, stats in manifest.group_stats.items():
        if stats.completed and manifest.per_group_counts.get(group, 0) != stats.quota:
            violations.append(
                f"group {group}: marked completed but count "
                f"{manifest.per_group_counts.get(group, 0)} != quota {stats.quota}"
            )

    for ident, variants in manifest.variant_latents.items():
        if ident not in by_id:
            violations.append(f"variants recorded for unknown identity_id {ident}")
        for v in variants:
            if v.space != manifest.space:
                violations.append(f"variant of identity_id {ident}: latent space mismatch")

    return violations


def config_fingerprint(
    config: SearchConfig,
    groups: Sequence[GroupLabel],
    space: LatentSpaceSpec,
) -> str:
    """Stable 16-hex-digit digest of everything that shapes campaign output.

    The oracle call budget is deliberately excluded: it is a pure cap, so a
    budget-exhausted campaign may be resumed under a raised budget and still
    checkpoint-match, producing exactly what the larger uninterrupted run
    would have produced.
    """
    parts = [
        f"space={space.space_tag}:{space.dim}",
        "groups=" + ",".join(groups),
        f"n={config.n}",
        f"delta={format(config.delta, '.17g')}",
        f"max_iter={config.max_iter}",
        f"quota={config.quota_per_group}",
        f"seed={config.rng_seed}",
        f"distance={config.distance}",
    ]
    digest = hashlib.sha256("\n".join(parts).encode("utf-8")).hexdigest()
    return digest[:16]
