import sys
from pathlib import Path

import numpy as np
import pytest

from latentforge.errors import (
    OracleTimeoutError,
    ProtocolError,
    SpaceMismatchError,
    TransportError,
)
from latentforge.external import PROTOCOL_VERSION, ExternalOracle
from latentforge.model import LatentSpaceSpec, LatentVector
from latentforge.oracle import SimulatedOracle, default_world, sample_prior
from latentforge.rng import stream

BRIDGE = Path(__file__).parent / "bridge_helper.py"


def _command(*extra):
    return [sys.executable, str(BRIDGE), *extra]


def test_handshake_exposes_world_shape():
    assert PROTOCOL_VERSION == "1"
    world = default_world()
    with ExternalOracle(_command()) as oracle:
        assert oracle.space == world.space
        assert oracle.embedding_dim == world.embedding_dim
        assert oracle.labels == world.groups
        assert oracle.oracle_id.startswith("ext:")


def test_external_verdicts_match_in_process_oracle():
    world = default_world()
    local = SimulatedOracle(world)
    rng = stream(50, "ext-equiv")
    with ExternalOracle(_command()) as remote:
        for _ in range(100):
            v = sample_prior(world.space, rng)
            a = local.evaluate(v)
            b = remote.evaluate(v)
            assert a.face_detected == b.face_detected
            assert a.label == b.label
            if a.embedding is not None:
                assert np.abs(a.embedding - b.embedding).max() <= 1e-6
        assert remote.calls == 100


def test_garbage_response_is_a_protocol_error_and_not_retried():
    world = default_world()
    rng = stream(51, "garbage")
    # response to the second evaluate (request id 3, after hello=1) is garbage
    with ExternalOracle(_command("--corrupt-after", "2")) as oracle:
        oracle.evaluate(sample_prior(world.space, rng))
        v = sample_prior(world.space, rng)
        with pytest.raises(ProtocolError) as exc_info:
            oracle.evaluate(v)
        assert "not json" in exc_info.value.raw_line
        assert oracle.calls == 1  # the failed call never counted
        # the stream stays in sync: the next call works
        verdict = oracle.evaluate(sample_prior(world.space, rng))
        assert verdict is not None
        assert oracle.calls == 2


def test_refused_request_is_a_transport_error():
    world = default_world()
    rng = stream(52, "refuse")
    with ExternalOracle(_command("--fail-id", "3")) as oracle:
        oracle.evaluate(sample_prior(world.space, rng))  # id 2
        with pytest.raises(TransportError, match="injected failure"):
            oracle.evaluate(sample_prior(world.space, rng))  # id 3


def test_timeout_is_reported():
    world = default_world()
    with ExternalOracle(_command("--hang-after", "1"), timeout=0.5) as oracle:
        with pytest.raises(OracleTimeoutError):
            oracle.evaluate(sample_prior(world.space, stream(53, "hang")))


def test_dead_bridge_is_a_transport_error():
    world = default_world()
    with ExternalOracle(_command("--die-after", "1")) as oracle:
        with pytest.raises(TransportError):
            oracle.evaluate(sample_prior(world.space, stream(54, "dead")))


def test_unstartable_command_fails_fast():
    with pytest.raises(TransportError):
        ExternalOracle(["/definitely/not/a/real/binary"])


def test_fork_opens_an_independent_connection():
    world = default_world()
    rng = stream(55, "fork")
    with ExternalOracle(_command()) as first:
        second = first.fork(calls=5)
        try:
            assert second.calls == 5
            v = sample_prior(world.space, rng)
            a = first.evaluate(v)
            b = second.evaluate(v)
            assert a.label == b.label
            assert first.calls == 1 and second.calls == 6
        finally:
            second.close()


def test_space_guard_happens_before_any_request():
    with ExternalOracle(_command()) as oracle:
        wrong = LatentVector(LatentSpaceSpec("W", 4), np.zeros(4))
        with pytest.raises(SpaceMismatchError):
            oracle.evaluate(wrong)
        assert oracle.calls == 0


def test_close_is_idempotent():
    oracle = ExternalOracle(_command())
    oracle.close()
    oracle.close()
