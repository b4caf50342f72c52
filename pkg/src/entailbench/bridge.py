"""Scorer-bridge wire protocol: newline-delimited JSON over stdio or TCP.

Requests are ``{"id": ..., "kind": "score" | "wsd", "items": [...]}``;
responses are ``{"id": ..., "scores": [...]}`` with one entry per item
(``null`` marks an abstention). The auxiliary ``type`` kind, used for
entity typing, answers with ``{"id": ..., "labels": [...]}``. Responses
are matched to requests by id, so a server may answer out of order.

Timeouts and malformed responses are retried a bounded number of times
and then fail the batch hard; an explicit ``{"error": ...}`` response
fails immediately.
"""

from __future__ import annotations

import json
import socket
import subprocess
import threading
from typing import Callable, Optional, Sequence

from .harness import ScoreItem, Scorer, ScorerFatalError

KIND_SCORE = "score"
KIND_WSD = "wsd"
KIND_TYPE = "type"


class BridgeError(ScorerFatalError):
    """Protocol failure: aborts the evaluation (CLI exit code 3)."""


class _StdioTransport:
    def __init__(self, command: Sequence[str]):
        self.proc = subprocess.Popen(
            list(command),
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
            bufsize=1,
        )

    def write_line(self, line: str) -> None:
        if self.proc.poll() is not None:
            raise BridgeError("scorer process exited")
        self.proc.stdin.write(line + "\n")
        self.proc.stdin.flush()

    def read_line(self) -> Optional[str]:
        line = self.proc.stdout.readline()
        return line if line else None

    def close(self) -> None:
        try:
            if self.proc.poll() is None:
                self.proc.stdin.close()
                self.proc.wait(timeout=5)
        except Exception:
            self.proc.kill()


class _TcpTransport:
    def __init__(self, host: str, port: int):
        self.sock = socket.create_connection((host, port))
        self.reader = self.sock.makefile("r", encoding="utf8")
        self.writer = self.sock.makefile("w", encoding="utf8")

    def write_line(self, line: str) -> None:
        self.writer.write(line + "\n")
        self.writer.flush()

    def read_line(self) -> Optional[str]:
        line = self.reader.readline()
        return line if line else None

    def close(self) -> None:
        try:
            self.sock.close()
        except OSError:
            pass


class BridgeClient:
    """Thread-safe protocol client with id-matched response assembly."""

    def __init__(self, transport, timeout: float = 30.0, max_retries: int = 2):
        self._transport = transport
        self.timeout = timeout
        self.max_retries = max_retries
        self._next_id = 0
        self._lock = threading.Lock()
        self._cond = threading.Condition()
        self._responses: dict[int, dict] = {}
        self._closed = False
        self._reader = threading.Thread(target=self._read_loop, daemon=True)
        self._reader.start()

    @classmethod
    def stdio(cls, command: Sequence[str], **kwargs) -> "BridgeClient":
        return cls(_StdioTransport(command), **kwargs)

    @classmethod
    def tcp(cls, host: str, port: int, **kwargs) -> "BridgeClient":
        return cls(_TcpTransport(host, port), **kwargs)

    def _read_loop(self) -> None:
        while True:
            try:
                line = self._transport.read_line()
            except Exception:
                line = None
            if line is None:
                with self._cond:
                    self._closed = True
                    self._cond.notify_all()
                return
            line = line.strip()
            if not line:
                continue
            try:
                payload = json.loads(line)
                rid = int(payload["id"])
            except (json.JSONDecodeError, KeyError, TypeError, ValueError):
                continue  # not addressable; let the caller time out and retry
            with self._cond:
                self._responses[rid] = payload
                self._cond.notify_all()

    def _send(self, kind: str, items: Sequence[dict]) -> int:
        with self._lock:
            self._next_id += 1
            rid = self._next_id
            request = {"id": rid, "kind": kind, "items": list(items)}
        self._transport.write_line(json.dumps(request, ensure_ascii=False))
        return rid

    def _await(self, rid: int) -> Optional[dict]:
        with self._cond:
            self._cond.wait_for(
                lambda: rid in self._responses or self._closed,
                timeout=self.timeout,
            )
            if rid in self._responses:
                return self._responses.pop(rid)
            if self._closed:
                raise BridgeError("scorer connection closed")
            return None

    def call(self, kind: str, items: Sequence[dict]) -> list:
        """One request/response round trip with bounded retries.

        Returns the response's ``scores`` (or ``labels`` for the
        ``type`` kind), validated to match the item count.
        """
        field = "labels" if kind == KIND_TYPE else "scores"
        attempts = 1 + self.max_retries
        last = "timeout"
        for _ in range(attempts):
            rid = self._send(kind, items)
            payload = self._await(rid)
            if payload is None:
                last = "timeout"
                continue
            if "error" in payload:
                raise BridgeError(f"scorer error: {payload['error']}")
            values = payload.get(field)
            if not isinstance(values, list) or len(values) != len(items):
                last = f"malformed response ({field} missing or wrong length)"
                continue
            return values
        raise BridgeError(
            f"bridge call failed after {attempts} attempts: {last}"
        )

    def close(self) -> None:
        self._transport.close()


class BridgeScorer(Scorer):
    """Adapts a bridge endpoint to the harness scorer interface."""

    def __init__(self, client: BridgeClient, name: str = "bridge",
                 batch_size: int = 64, symmetric: bool = False):
        self.client = client
        self.name = name
        self.batch_size = batch_size
        self.symmetric = symmetric

    def score_batch(self, items: Sequence[ScoreItem]) -> list[Optional[float]]:
        payload = [
            {"premise": i.premise_text, "hypothesis": i.hypothesis_text}
            for i in items
        ]
        scores = self.client.call(KIND_SCORE, payload)
        return [None if s is None else float(s) for s in scores]

    def close(self) -> None:
        self.client.close()


class BridgeDisambiguator:
    """Synset chooser backed by a ``wsd`` endpoint; returns candidate
    indexes as the lexicon hook expects."""

    def __init__(self, client: BridgeClient):
        self.client = client

    def __call__(self, span: str, context: Optional[str], candidates) -> int:
        items = [
            {
                "span": span,
                "context": context or "",
                "candidates": [s.synset_id for s in candidates],
            }
        ]
        scores = self.client.call(KIND_WSD, items)
        return int(scores[0])


class BridgeTypeAssigner:
    """Entity-type assigner backed by a ``type`` endpoint."""

    def __init__(self, client: BridgeClient):
        self.client = client

    def __call__(self, argument: str) -> Optional[str]:
        labels = self.client.call(KIND_TYPE, [{"argument": argument}])
        label = labels[0]
        return None if label is None else str(label)


def serve_stdio(
    handler: Callable[[str, list], list],
    stdin=None,
    stdout=None,
) -> None:
    """Minimal protocol server loop for in-repo stub scorers.

    ``handler(kind, items)`` returns one value per item; exceptions
    become ``error`` responses.
    """
    import sys

    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    for line in stdin:
        line = line.strip()
        if not line:
            continue
        try:
            request = json.loads(line)
            rid = request["id"]
        except (json.JSONDecodeError, KeyError):
            continue
        try:
            values = handler(request.get("kind", ""), request.get("items", []))
            field = "labels" if request.get("kind") == KIND_TYPE else "scores"
            response = {"id": rid, field: list(values)}
        except Exception as exc:
            response = {"id": rid, "error": str(exc)}
        stdout.write(json.dumps(response, ensure_ascii=False) + "\n")
        stdout.flush()
