"""Client for oracle processes speaking the line-delimited stdio protocol.

Each request and response is a single line of UTF-8 JSON on the child's
standard input/output:

    -> {"id": 1, "op": "hello"}
    <- {"id": 1, "ok": true, "version": "1", "dim": 32, "embedding_dim": 16,
        "labels": ["A", "B"]}
    -> {"id": 2, "op": "evaluate", "space": "Z", "latent": [0.1, ...]}
    <- {"id": 2, "ok": true, "face": true, "label": "A", "embedding": [...]}

Responses arrive strictly in request order and echo the request id. A
malformed or out-of-order response raises ProtocolError carrying the raw
line; the request is never retried. Failed requests do not advance the call
counter.
"""

from __future__ import annotations

import hashlib
import json
import queue
import subprocess
import threading
from typing import Sequence

import numpy as np

from .errors import OracleTimeoutError, ProtocolError, TransportError
from .model import LatentSpaceSpec, LatentVector, OracleVerdict
from .oracle import OracleHandle

__all__ = ["PROTOCOL_VERSION", "ExternalOracle", "external_evaluate"]

PROTOCOL_VERSION = "1"

_EOF = object()


class ExternalOracle(OracleHandle):
    """Spawns the oracle command and holds one protocol connection to it.

    Requests are serialized per connection; campaigns wanting parallel groups
    call fork(), which starts a fresh child process per worker.
    """

    kind = "external"

    def __init__(
        self,
        command: Sequence[str],
        *,
        space_tag: str = "Z",
        timeout: float = 30.0,
        calls: int = 0,
    ):
        self._command = list(command)
        self._timeout = timeout
        self._space_tag = space_tag
        self._io_lock = threading.Lock()
        self._next_id = 0
        self._lines: queue.Queue = queue.Queue()

        try:
            self._proc = subprocess.Popen(
                self._command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                encoding="utf-8",
                bufsize=1,
            )
        except OSError as exc:
            raise TransportError(f"could not start oracle command: {exc}") from None

        self._reader = threading.Thread(target=self._pump, daemon=True)
        self._reader.start()

        hello = self._request({"op": "hello"})
        if hello.get("version") != PROTOCOL_VERSION:
            raise ProtocolError(
                f"oracle speaks protocol {hello.get('version')!r}, "
                f"client needs {PROTOCOL_VERSION!r}",
                raw_line=json.dumps(hello),
            )
        try:
            dim = int(hello["dim"])
            embedding_dim = int(hello["embedding_dim"])
            labels = tuple(str(x) for x in hello["labels"])
        except (KeyError, TypeError, ValueError):
            raise ProtocolError(
                "hello response is missing dim/embedding_dim/labels",
                raw_line=json.dumps(hello),
            ) from None

        ident = json.dumps(
            [self._command, PROTOCOL_VERSION, dim, embedding_dim, list(labels)],
            separators=(",", ":"),
        )
        super().__init__(
            oracle_id="ext:" + hashlib.sha256(ident.encode()).hexdigest()[:12],
            space=LatentSpaceSpec(space_tag, dim),
            labels=labels,
            embedding_dim=embedding_dim,
            calls=calls,
        )

    def _pump(self):
        try:
            for line in self._proc.stdout:
                self._lines.put(line)
        finally:
            self._lines.put(_EOF)

    def _request(self, payload: dict) -> dict:
        with self._io_lock:
            self._next_id += 1
            req_id = self._next_id
            payload = dict(payload, id=req_id)
            line = json.dumps(payload, separators=(",", ":")) + "\n"
            try:
                self._proc.stdin.write(line)
                self._proc.stdin.flush()
            except (BrokenPipeError, OSError) as exc:
                raise TransportError(
                    f"oracle process rejected request: {exc}", request_id=req_id
                ) from None

            try:
                raw = self._lines.get(timeout=self._timeout)
            except queue.Empty:
                raise OracleTimeoutError(
                    f"no response within {self._timeout}s", request_id=req_id
                ) from None
            if raw is _EOF:
                raise TransportError(
                    "oracle process closed its output", request_id=req_id
                )

            try:
                resp = json.loads(raw)
            except json.JSONDecodeError:
                raise ProtocolError(
                    "response is not valid JSON", raw_line=raw, request_id=req_id
                ) from None
            if not isinstance(resp, dict) or resp.get("id") != req_id:
                raise ProtocolError(
                    f"response id {resp.get('id') if isinstance(resp, dict) else None!r} "
                    f"does not echo request id {req_id}",
                    raw_line=raw,
                    request_id=req_id,
                )
            if not resp.get("ok"):
                raise TransportError(
                    f"oracle reported an error: {resp.get('error')!r}",
                    request_id=req_id,
                )
            return resp

    def _verdict(self, v: LatentVector) -> OracleVerdict:
        resp = self._request(
            {
                "op": "evaluate",
                "space": self._space_tag,
                "latent": [float(x) for x in v.values],
            }
        )
        try:
            face = bool(resp["face"])
            label = resp["label"]
            embedding = resp["embedding"]
        except KeyError as exc:
            raise ProtocolError(
                f"evaluate response is missing {exc}", raw_line=json.dumps(resp)
            ) from None
        try:
            return OracleVerdict(
                face_detected=face,
                label=None if label is None else str(label),
                embedding=None if embedding is None else np.asarray(embedding, dtype=np.float64),
            )
        except ValueError as exc:
            raise ProtocolError(
                f"evaluate response violates verdict invariants: {exc}",
                raw_line=json.dumps(resp),
            ) from None

    def fork(self, calls: int = 0) -> "ExternalOracle":
        return ExternalOracle(
            self._command,
            space_tag=self._space_tag,
            timeout=self._timeout,
            calls=calls,
        )

    def close(self) -> None:
        """End the session; the bridge exits cleanly on stdin end-of-stream."""
        try:
            if self._proc.stdin and not self._proc.stdin.closed:
                self._proc.stdin.close()
        except OSError:
            pass
        try:
            self._proc.wait(timeout=2.0)
        except subprocess.TimeoutExpired:
            self._proc.kill()
            self._proc.wait()

    def __enter__(self) -> "ExternalOracle":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def external_evaluate(handle: ExternalOracle, v: LatentVector) -> OracleVerdict:
    """evaluate() restricted to external handles; one protocol round trip."""
    if not isinstance(handle, ExternalOracle):
        raise ValueError("external_evaluate needs an ExternalOracle handle")
    return handle.evaluate(v)
