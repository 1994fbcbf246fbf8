"""The generator+classifier+detector abstraction and its simulated stand-in.

An oracle answers one question about a latent point: is there a face, and if
so which demographic group does it belong to (plus a matcher embedding). The
built-in simulated oracle replaces the heavyweight generator/classifier stack
with a Gaussian mixture over latent space whose weights are calibrated so that
prior sampling reproduces the demographic skew measured on a widely used
pretrained face generator: out of 10,000 random draws, roughly 26 were labeled
Indian, 171 African, and over 6,500 Caucasian.
"""

from __future__ import annotations

import hashlib
import json
import math
import threading
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

from .errors import CalibrationError, SpaceMismatchError
from .model import (
    DEFAULT_GROUPS,
    GroupLabel,
    LatentSpaceSpec,
    LatentVector,
    OracleVerdict,
    validate_group_set,
)
from .rng import stream

__all__ = [
    "MixtureWorld",
    "OracleHandle",
    "SimulatedOracle",
    "build_world",
    "default_world",
    "full_scale_world",
    "sample_prior",
    "evaluate",
    "fitness",
    "measure_prior_mix",
    "calibrate_weights",
    "CalibrationResult",
    "save_world",
    "load_world",
    "DEFAULT_TARGET_MIX",
    "DEFAULT_MEASURED_MIX",
    "DEFAULT_WORLD_SEED",
]

_LOG_2PI = math.log(2.0 * math.pi)

DEFAULT_WORLD_SEED = 0xFACE

# Detection cutoff: a latent counts as "face" while the mixture density stays
# above the value the least-weighted anchor alone would have at this
# Mahalanobis radius. A typical prior sample sits about 6.4 sigma from the
# nearest anchor (unit spreads, anchors at radius 3, dim 32), so the cutoff
# must sit well beyond that or nothing would ever be detected.
_DETECT_RADIUS = 9.0

# Measured minutes to rejection-sample 1000 identities per group on the
# reference generator. Groups without directly reported sample counts get
# prior mass inversely proportional to these times.
_REJECTION_MINUTES = {
    "Asian": 118.96,
    "Latino_Hispanic": 124.31,
    "Middle_Eastern": 170.63,
}


def _default_target_mix() -> dict[GroupLabel, float]:
    # Directly reported: 26/10,000 Indian, 171/10,000 African, "over 6,500"
    # Caucasian (0.66 keeps the measured share above 0.65 after the small
    # no-face mass is taken out). The rest is split by inverse rejection time.
    mix = {"Caucasian": 0.66, "African": 0.0171, "Indian": 0.0026}
    leftover = 1.0 - sum(mix.values())
    inv = {g: 1.0 / t for g, t in _REJECTION_MINUTES.items()}
    inv_total = sum(inv.values())
    for g, v in inv.items():
        mix[g] = leftover * v / inv_total
    return mix


DEFAULT_TARGET_MIX = _default_target_mix()


def _log_normal_const(dim: int, sigma: float) -> float:
    return -0.5 * dim * (_LOG_2PI + 2.0 * math.log(sigma))


@dataclass(frozen=True, eq=False)
class MixtureWorld:
    """A biased latent world: K Gaussian anchors, one per demographic group.

    Detection threshold log_tau is fixed at construction and deliberately kept
    unchanged by weight calibration, so the face region does not drift while
    weights are being fitted.
    """

    space: LatentSpaceSpec
    groups: tuple[GroupLabel, ...]
    anchors: np.ndarray
    spreads: np.ndarray
    weights: np.ndarray
    log_tau: float
    embedding_dim: int
    projection: np.ndarray
    world_seed: int

    def __post_init__(self):
        groups = validate_group_set(self.groups)
        object.__setattr__(self, "groups", groups)
        k = len(groups)
        if k < 2:
            raise ValueError("a mixture world needs at least 2 groups")

        anchors = np.asarray(self.anchors, dtype=np.float64)
        if anchors.shape != (k, self.space.dim):
            raise ValueError(f"anchors must have shape ({k}, {self.space.dim})")
        spreads = np.asarray(self.spreads, dtype=np.float64)
        if spreads.shape != (k,) or not np.all(spreads > 0):
            raise ValueError("spreads must be positive, one per group")
        weights = np.asarray(self.weights, dtype=np.float64)
        if weights.shape != (k,) or not np.all(weights > 0):
            raise ValueError("weights must be positive, one per group")
        weights = weights / weights.sum()

        if self.embedding_dim < 1 or self.embedding_dim > self.space.dim:
            raise ValueError("embedding_dim must be in [1, dim]")
        projection = np.asarray(self.projection, dtype=np.float64)
        if projection.shape != (self.embedding_dim, self.space.dim):
            raise ValueError("projection must be embedding_dim x dim")
        gram = projection @ projection.T
        if not np.allclose(gram, np.eye(self.embedding_dim), atol=1e-6):
            raise ValueError("projection rows must be orthonormal to 1e-6")

        for name, arr in (
            ("anchors", anchors),
            ("spreads", spreads),
            ("weights", weights),
            ("projection", projection),
        ):
            arr = arr.copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

        # Precomputed per-anchor terms used on every evaluate call.
        log_consts = np.array(
            [_log_normal_const(self.space.dim, s) for s in spreads]
        )
        object.__setattr__(self, "_log_weights", np.log(weights))
        object.__setattr__(self, "_log_consts", log_consts)
        object.__setattr__(self, "_inv_two_var", 1.0 / (2.0 * spreads**2))

    @property
    def dim(self) -> int:
        return self.space.dim

    @property
    def world_id(self) -> str:
        payload = {
            "space": [self.space.space_tag, self.space.dim],
            "groups": list(self.groups),
            "anchors": [[repr(float(x)) for x in row] for row in self.anchors],
            "spreads": [repr(float(x)) for x in self.spreads],
            "weights": [repr(float(x)) for x in self.weights],
            "log_tau": repr(float(self.log_tau)),
            "embedding_dim": self.embedding_dim,
            "projection": [[repr(float(x)) for x in row] for row in self.projection],
        }
        text = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode("utf-8")).hexdigest()[:12]

    def with_weights(self, weights: Sequence[float]) -> "MixtureWorld":
        """Same world, new mixture weights; log_tau intentionally kept."""
        return MixtureWorld(
            space=self.space,
            groups=self.groups,
            anchors=self.anchors,
            spreads=self.spreads,
            weights=np.asarray(weights, dtype=np.float64),
            log_tau=self.log_tau,
            embedding_dim=self.embedding_dim,
            projection=self.projection,
            world_seed=self.world_seed,
        )

    def log_densities(self, batch: np.ndarray) -> np.ndarray:
        """Per-anchor weighted log densities for a (m, dim) batch."""
        batch = np.asarray(batch, dtype=np.float64)
        out = np.empty((batch.shape[0], len(self.groups)))
        for k in range(len(self.groups)):
            diff = batch - self.anchors[k]
            sq = np.einsum("md,md->m", diff, diff)
            out[:, k] = self._log_weights[k] + self._log_consts[k] - sq * self._inv_two_var[k]
        return out

    def classify_batch(self, batch: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(detected mask, label index) for a (m, dim) batch of latents."""
        logdens = self.log_densities(batch)
        m = logdens.max(axis=1)
        total = m + np.log(np.exp(logdens - m[:, None]).sum(axis=1))
        return total >= self.log_tau, logdens.argmax(axis=1)


def _simplex_anchors(k: int, dim: int, radius: float, rng: np.random.Generator) -> np.ndarray:
    """K points on a radius sphere in maximally symmetric position.

    Vertices of a regular (k-1)-simplex (pairwise dot -1/(k-1)) rotated by a
    seeded random orthogonal map. This guarantees pairwise anchor distance
    radius*sqrt(2k/(k-1)), ~1.55*radius at k=6; random placement with mild
    rejection gives closer pairs, and close pairs let a heavily weighted
    anchor capture its neighbor's label region entirely.
    """
    if k > dim:
        raise ValueError(f"cannot place {k} anchors in dimension {dim}")
    base = np.eye(k) - 1.0 / k
    base /= np.linalg.norm(base, axis=1, keepdims=True)
    q, _ = np.linalg.qr(rng.standard_normal((dim, k)))
    return radius * (base @ q.T)


def build_world(
    groups: Sequence[GroupLabel] = DEFAULT_GROUPS,
    dim: int = 32,
    space_tag: str = "Z",
    *,
    world_seed: int = DEFAULT_WORLD_SEED,
    anchor_radius: Optional[float] = None,
    spread: Optional[float] = None,
    embedding_dim: Optional[int] = None,
    weights: Optional[Sequence[float]] = None,
    detect_radius: float = _DETECT_RADIUS,
) -> MixtureWorld:
    """Construct a mixture world with seeded anchors and projection.

    Anchors sit on a sphere of radius anchor_radius in simplex position (see
    _simplex_anchors). Defaults scale with sqrt(dim) so the geometry is the
    same at any dimension: radius 3 and unit spread at dim 32.
    """
    groups = validate_group_set(groups)
    space = LatentSpaceSpec(space_tag, dim)
    scale = math.sqrt(dim / 32.0)
    if anchor_radius is None:
        anchor_radius = 3.0 * scale
    if spread is None:
        spread = 1.0 * scale
    if embedding_dim is None:
        embedding_dim = min(16, dim)

    anchors = _simplex_anchors(
        len(groups), dim, anchor_radius, stream(world_seed, "anchors")
    )

    proj_rng = stream(world_seed, "projection")
    basis = proj_rng.standard_normal((dim, embedding_dim))
    q, _ = np.linalg.qr(basis)
    projection = q.T  # orthonormal rows

    k = len(groups)
    if weights is None:
        weights = np.full(k, 1.0 / k)
    weights = np.asarray(weights, dtype=np.float64)

    # Threshold from the least-weighted anchor at the detection radius.
    log_tau = (
        float(np.min(np.log(weights / weights.sum())))
        + _log_normal_const(dim, spread)
        - 0.5 * detect_radius**2
    )

    return MixtureWorld(
        space=space,
        groups=groups,
        anchors=np.stack(anchors),
        spreads=np.full(k, spread),
        weights=weights,
        log_tau=log_tau,
        embedding_dim=embedding_dim,
        projection=projection,
        world_seed=world_seed,
    )


# Calibrated weights for the default desk-scale world (dim 32, seed above),
# derived offline with tools/freeze_default_world.py so that prior sampling
# reproduces DEFAULT_TARGET_MIX. DEFAULT_MEASURED_MIX records the labeled
# share of prior samples actually measured for these weights (4M samples);
# statistical tests compare against these, not the raw targets.
_DEFAULT_WEIGHTS: Optional[tuple[float, ...]] = (
    0.966858908931168,
    0.0004038112176121953,
    2.9126858011054467e-05,
    0.01364903440703237,
    0.006572616011673575,
    0.012486502574502747,
)

DEFAULT_MEASURED_MIX: dict[GroupLabel, float] = {
    "Caucasian": 0.65606825,
    "African": 0.01720925,
    "Indian": 0.00260025,
    "Asian": 0.1219805,
    "Middle_Eastern": 0.0852795,
    "Latino_Hispanic": 0.11684875,
}

DEFAULT_NO_FACE_SHARE: float = 1.35e-05

_default_world_cache: Optional[MixtureWorld] = None


def default_world() -> MixtureWorld:
    """The pre-calibrated desk-scale world used throughout tests and demos."""
    global _default_world_cache
    if _default_world_cache is None:
        world = build_world()
        if _DEFAULT_WEIGHTS is not None:
            world = world.with_weights(_DEFAULT_WEIGHTS)
        _default_world_cache = world
    return _default_world_cache


def full_scale_world() -> MixtureWorld:
    """Same recipe at the full generator dimension; weights left uniform.

    Calibrating at dim 512 takes minutes rather than seconds, so this preset
    ships uncalibrated; run calibrate_weights (or the calibrate command) on it.
    """
    return build_world(dim=512)


class OracleHandle:
    """Base for oracle handles: a counter plus an evaluate implementation.

    The call counter is per-handle. Campaigns fork one handle per group (or
    worker) so that per-group call accounting never contends.
    """

    kind = "abstract"

    def __init__(
        self,
        oracle_id: str,
        space: LatentSpaceSpec,
        labels: Sequence[GroupLabel],
        embedding_dim: Optional[int],
        calls: int = 0,
    ):
        self.oracle_id = oracle_id
        self.space = space
        self.labels = tuple(labels)
        self.embedding_dim = embedding_dim
        self._calls = calls
        self._lock = threading.Lock()

    @property
    def calls(self) -> int:
        return self._calls

    def _verdict(self, v: LatentVector) -> OracleVerdict:
        raise NotImplementedError

    def evaluate(self, v: LatentVector) -> OracleVerdict:
        if v.space != self.space:
            # rejected before the counter moves
            raise SpaceMismatchError(
                f"latent is {v.space.space_tag}:{v.space.dim}, oracle expects "
                f"{self.space.space_tag}:{self.space.dim}"
            )
        verdict = self._verdict(v)
        with self._lock:
            self._calls += 1
        return verdict

    def fitness(self, v: LatentVector, target: GroupLabel) -> int:
        verdict = self.evaluate(v)
        return 1 if (verdict.face_detected and verdict.label == target) else 0

    def fork(self, calls: int = 0) -> "OracleHandle":
        raise NotImplementedError


class SimulatedOracle(OracleHandle):
    """In-process oracle over a MixtureWorld; pure function of (world, v)."""

    kind = "simulated"

    def __init__(self, world: MixtureWorld, calls: int = 0):
        self.world = world
        super().__init__(
            oracle_id=f"sim:{world.world_id}",
            space=world.space,
            labels=world.groups,
            embedding_dim=world.embedding_dim,
            calls=calls,
        )

    def _verdict(self, v: LatentVector) -> OracleVerdict:
        world = self.world
        logdens = world.log_densities(v.values[None, :])[0]
        label_idx = int(np.argmax(logdens))
        m = float(logdens.max())
        total = m + math.log(float(np.exp(logdens - m).sum()))
        if total < world.log_tau:
            return OracleVerdict(face_detected=False)

        diff = v.values - world.anchors[label_idx]
        emb = world.projection @ diff
        norm = float(np.linalg.norm(emb))
        if norm == 0.0:
            # exactly on the anchor: fall back to a fixed unit direction
            emb = np.zeros(world.embedding_dim)
            emb[0] = 1.0
        else:
            emb = emb / norm
        return OracleVerdict(
            face_detected=True,
            label=world.groups[label_idx],
            embedding=emb,
        )

    def fork(self, calls: int = 0) -> "SimulatedOracle":
        return SimulatedOracle(self.world, calls=calls)


def sample_prior(space: LatentSpaceSpec, rng: np.random.Generator) -> LatentVector:
    """One standard-normal draw per coordinate."""
    return LatentVector(space, rng.standard_normal(space.dim))


def evaluate(handle: OracleHandle, v: LatentVector) -> OracleVerdict:
    return handle.evaluate(v)


def fitness(handle: OracleHandle, v: LatentVector, target: GroupLabel) -> int:
    return handle.fitness(v, target)


def measure_prior_mix(
    world: MixtureWorld,
    n_samples: int,
    rng: np.random.Generator,
    chunk: int = 1 << 17,
) -> tuple[dict[GroupLabel, float], float]:
    """Labeled share of prior samples per group, plus the no-face share.

    Shares are fractions of all samples drawn, so they sum to 1 together with
    the no-face share. Vectorized; does not go through an OracleHandle and so
    does not advance any call counter.
    """
    counts = np.zeros(len(world.groups), dtype=np.int64)
    no_face = 0
    left = n_samples
    while left > 0:
        m = min(chunk, left)
        left -= m
        batch = rng.standard_normal((m, world.dim))
        detected, labels = world.classify_batch(batch)
        no_face += int((~detected).sum())
        counts += np.bincount(labels[detected], minlength=len(world.groups))
    shares = {g: counts[i] / n_samples for i, g in enumerate(world.groups)}
    return shares, no_face / n_samples


@dataclass(frozen=True)
class CalibrationResult:
    world: MixtureWorld
    weights: dict[GroupLabel, float]
    measured: dict[GroupLabel, float]
    per_group_error: dict[GroupLabel, float]
    max_rel_error: float
    rounds: int


def calibrate_weights(
    world: MixtureWorld,
    targets: Mapping[GroupLabel, float],
    sample_budget: int,
    tolerance: float,
    rng: np.random.Generator,
    max_rounds: int = 50,
) -> CalibrationResult:
    """Fit mixture weights so prior sampling reproduces the target shares.

    Iterative proportional fitting: estimate each group's labeled share by
    Monte Carlo, multiply its weight by target/estimate, renormalize, repeat
    until the worst relative error is within tolerance. Targets must cover
    every group, be positive, and sum to at most 1 (the remainder is no-face
    mass). The detection threshold stays fixed throughout.
    """
    if sample_budget < 10**5:
        raise ValueError("sample_budget must be at least 1e5")
    if not (tolerance > 0):
        raise ValueError("tolerance must be positive")
    if set(targets) != set(world.groups):
        raise ValueError("targets must cover exactly the world's groups")
    tvec = np.array([float(targets[g]) for g in world.groups])
    if not np.all(tvec > 0):
        raise ValueError("every target proportion must be positive")
    if tvec.sum() > 1.0 + 1e-9:
        raise ValueError(f"target proportions sum to {tvec.sum():.6g} > 1")

    floor = 0.25 / sample_budget  # an unobserved group still gets a finite push
    current = world
    errs: dict[GroupLabel, float] = {}
    for round_no in range(1, max_rounds + 1):
        shares, _ = measure_prior_mix(current, sample_budget, rng)
        est = np.array([shares[g] for g in current.groups])
        rel = np.abs(est - tvec) / tvec
        errs = {g: float(rel[i]) for i, g in enumerate(current.groups)}
        if float(rel.max()) <= tolerance:
            return CalibrationResult(
                world=current,
                weights={g: float(current.weights[i]) for i, g in enumerate(current.groups)},
                measured={g: float(est[i]) for i, g in enumerate(current.groups)},
                per_group_error=errs,
                max_rel_error=float(rel.max()),
                rounds=round_no,
            )
        factors = tvec / np.maximum(est, floor)
        current = current.with_weights(current.weights * factors)

    raise CalibrationError(
        f"calibration did not reach tolerance {tolerance} in {max_rounds} rounds",
        per_group_error=errs,
    )


def save_world(world: MixtureWorld, path, extras: Optional[Mapping] = None) -> None:
    """Write a world description as JSON (full float precision)."""
    payload = {
        "format": "lforge-world",
        "version": 1,
        "space_tag": world.space.space_tag,
        "dim": world.space.dim,
        "groups": list(world.groups),
        "anchors": [[float(x) for x in row] for row in world.anchors],
        "spreads": [float(x) for x in world.spreads],
        "weights": [float(x) for x in world.weights],
        "log_tau": float(world.log_tau),
        "embedding_dim": world.embedding_dim,
        "projection": [[float(x) for x in row] for row in world.projection],
        "world_seed": world.world_seed,
    }
    if extras:
        payload.update(dict(extras))
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")


def load_world(path) -> MixtureWorld:
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("format") != "lforge-world":
        raise ValueError(f"{path}: not a world file")
    return MixtureWorld(
        space=LatentSpaceSpec(payload["space_tag"], payload["dim"]),
        groups=tuple(payload["groups"]),
        anchors=np.array(payload["anchors"]),
        spreads=np.array(payload["spreads"]),
        weights=np.array(payload["weights"]),
        log_tau=float(payload["log_tau"]),
        embedding_dim=int(payload["embedding_dim"]),
        projection=np.array(payload["projection"]),
        world_seed=int(payload.get("world_seed", 0)),
    )
