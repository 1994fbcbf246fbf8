"""Flat key = value run configuration for the command line tool.

Example:

    groups = Caucasian,African,Indian
    quota_per_group = 25
    rng_seed = 42
    oracle = simulated          # or: external
    # oracle_command = python3 my_bridge.py --world world.json
    # world = world.json        # custom world for the simulated oracle
    # delta = 0.25              # default: 0.25 * world spread
    # n = 4
    # max_iter = 500
    # oracle_call_budget = 250000
    # workers = 3

The environment variable LFORGE_SEED, when set, overrides rng_seed.
"""

from __future__ import annotations

import os
import shlex
from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np

from .errors import ConfigError
from .external import ExternalOracle
from .model import SearchConfig, validate_group_set
from .oracle import MixtureWorld, OracleHandle, SimulatedOracle, default_world, load_world
from .search import default_config

__all__ = ["RunConfig", "parse_run_config", "parse_kv_file", "make_handle", "make_search_config"]

_KNOWN_KEYS = {
    "groups",
    "quota_per_group",
    "n",
    "delta",
    "max_iter",
    "oracle_call_budget",
    "rng_seed",
    "oracle",
    "oracle_command",
    "world",
    "workers",
}


@dataclass
class RunConfig:
    groups: tuple[str, ...]
    quota_per_group: int
    n: int = 4
    delta: Optional[float] = None  # None: derived from the world's spread
    max_iter: int = 500
    oracle_call_budget: int = 250_000
    rng_seed: int = 0
    oracle: str = "simulated"
    oracle_command: Optional[str] = None
    world_path: Optional[str] = None
    workers: Optional[int] = None


def parse_kv_file(path) -> dict[str, tuple[str, int]]:
    """Read 'key = value' lines; returns {key: (value, line_no)}.

    Blank lines are skipped and '#' starts a comment, full-line or trailing.
    """
    entries: dict[str, tuple[str, int]] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for no, raw in enumerate(fh, start=1):
            line = raw.partition("#")[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError("expected 'key = value'", line_no=no)
            key, _, value = line.partition("=")
            key = key.strip()
            value = value.strip()
            if not key:
                raise ConfigError("empty key", line_no=no)
            if key in entries:
                raise ConfigError(f"duplicate key {key!r}", line_no=no)
            entries[key] = (value, no)
    return entries


def _as_int(entries, key, default=None):
    if key not in entries:
        return default
    value, no = entries[key]
    try:
        return int(value)
    except ValueError:
        raise ConfigError(f"{key} must be an integer, got {value!r}", line_no=no) from None


def _as_float(entries, key, default=None):
    if key not in entries:
        return default
    value, no = entries[key]
    try:
        return float(value)
    except ValueError:
        raise ConfigError(f"{key} must be a number, got {value!r}", line_no=no) from None


def parse_run_config(path, env: Optional[Mapping[str, str]] = None) -> RunConfig:
    if env is None:
        env = os.environ
    entries = parse_kv_file(path)
    for key, (_, no) in entries.items():
        if key not in _KNOWN_KEYS:
            raise ConfigError(f"unknown key {key!r}", line_no=no)
    if "groups" not in entries:
        raise ConfigError("missing required key 'groups'")
    if "quota_per_group" not in entries:
        raise ConfigError("missing required key 'quota_per_group'")

    groups_value, groups_no = entries["groups"]
    groups = tuple(g.strip() for g in groups_value.split(",") if g.strip())
    try:
        validate_group_set(groups)
    except ValueError as exc:
        raise ConfigError(str(exc), line_no=groups_no) from None

    oracle_kind = entries.get("oracle", ("simulated", 0))[0]
    if oracle_kind not in ("simulated", "external"):
        raise ConfigError(
            f"oracle must be 'simulated' or 'external', got {oracle_kind!r}",
            line_no=entries["oracle"][1],
        )
    if oracle_kind == "external" and "oracle_command" not in entries:
        raise ConfigError("oracle = external needs oracle_command")

    rng_seed = _as_int(entries, "rng_seed", 0)
    if "LFORGE_SEED" in env:
        try:
            rng_seed = int(env["LFORGE_SEED"])
        except ValueError:
            raise ConfigError(
                f"LFORGE_SEED must be an integer, got {env['LFORGE_SEED']!r}"
            ) from None

    return RunConfig(
        groups=groups,
        quota_per_group=_as_int(entries, "quota_per_group"),
        n=_as_int(entries, "n", 4),
        delta=_as_float(entries, "delta"),
        max_iter=_as_int(entries, "max_iter", 500),
        oracle_call_budget=_as_int(entries, "oracle_call_budget", 250_000),
        rng_seed=rng_seed,
        oracle=oracle_kind,
        oracle_command=entries.get("oracle_command", (None, 0))[0],
        world_path=entries.get("world", (None, 0))[0],
        workers=_as_int(entries, "workers"),
    )


def make_handle(cfg: RunConfig) -> OracleHandle:
    if cfg.oracle == "external":
        return ExternalOracle(shlex.split(cfg.oracle_command))
    world = load_world(cfg.world_path) if cfg.world_path else default_world()
    return SimulatedOracle(world)


def make_search_config(cfg: RunConfig, handle: OracleHandle) -> SearchConfig:
    delta = cfg.delta
    if delta is None:
        if isinstance(handle, SimulatedOracle):
            delta = 0.25 * float(np.mean(handle.world.spreads))
        else:
            raise ConfigError("delta must be set explicitly for external oracles")
    return default_config(
        0.0,  # spread unused, delta given explicitly
        cfg.quota_per_group,
        cfg.rng_seed,
        n=cfg.n,
        delta=delta,
        max_iter=cfg.max_iter,
        oracle_call_budget=cfg.oracle_call_budget,
    )
