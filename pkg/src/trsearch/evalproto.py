"""Line-delimited JSON protocol for external black-box evaluators.

The parent writes one JSON object per line to the child's stdin and reads
one JSON object per line from its stdout::

    -> {"type": "hello", "version": "trs/1", "dim": M}
    <- {"type": "hello", "version": "trs/1"}
    -> {"type": "eval", "id": n, "batch": [[...], ...]}
    <- {"type": "result", "id": n, "rewards": [...]}

Exactly one request is in flight at a time. Floats travel in shortest
round-trip decimal form, so an in-process objective and the same objective
behind this protocol see bit-identical inputs and outputs.
"""

from __future__ import annotations

import json
import math
import queue
import shlex
import subprocess
import threading
from typing import Optional, Sequence, Union

import numpy as np

from trsearch import core

PROTOCOL_VERSION = "trs/1"
HANDSHAKE_TIMEOUT = 30.0
BATCH_TIMEOUT = 600.0


class EvaluatorError(core.ObjectiveError):
    """Base class of all external-evaluator failures."""


class SpawnError(EvaluatorError):
    pass


class HandshakeError(EvaluatorError):
    pass


class VersionMismatchError(HandshakeError):
    pass


class EvaluatorTimeoutError(EvaluatorError):
    pass


class EvaluatorCrashError(EvaluatorError):
    """The child exited or closed its output stream."""


class ProtocolError(EvaluatorError):
    """The child sent a malformed or unexpected message."""


class IdMismatchError(ProtocolError):
    pass


class LengthMismatchError(ProtocolError):
    pass


class NonFiniteRewardError(EvaluatorError, core.NonFiniteRewardError):
    pass


def encode(message: dict) -> bytes:
    return (json.dumps(message, allow_nan=False, separators=(",", ":")) + "\n").encode("utf-8")


class EvaluatorHandle:
    """Owns one evaluator child process. Calling the handle evaluates a batch."""

    def __init__(self, process: subprocess.Popen, dim: int, batch_timeout: float = BATCH_TIMEOUT):
        self.process = process
        self.dim = dim
        self.batch_timeout = batch_timeout
        self.protocol_version = PROTOCOL_VERSION
        self.request_counter = 0
        self._lines: queue.Queue = queue.Queue()
        self._reader = threading.Thread(target=self._pump, daemon=True)
        self._reader.start()

    @property
    def pid(self) -> int:
        return self.process.pid

    def _pump(self):
        for line in self.process.stdout:
            self._lines.put(line)
        self._lines.put(None)

    def _send(self, message: dict) -> None:
        try:
            self.process.stdin.write(encode(message))
            self.process.stdin.flush()
        except (BrokenPipeError, OSError, ValueError) as exc:
            raise EvaluatorCrashError(f"evaluator input stream closed: {exc}") from exc

    def _receive(self, timeout: float, what: str) -> dict:
        try:
            line = self._lines.get(timeout=timeout)
        except queue.Empty:
            raise EvaluatorTimeoutError(f"no {what} from evaluator within {timeout:g} s") from None
        if line is None:
            code = self.process.poll()
            raise EvaluatorCrashError(f"evaluator closed its output while awaiting {what} (exit code {code})")
        try:
            message = json.loads(line.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ProtocolError(f"malformed {what} line {line[:200]!r}: {exc}") from exc
        if not isinstance(message, dict):
            raise ProtocolError(f"{what} is not a JSON object: {message!r}")
        return message

    def handshake(self, timeout: float = HANDSHAKE_TIMEOUT) -> None:
        self._send({"type": "hello", "version": PROTOCOL_VERSION, "dim": self.dim})
        try:
            reply = self._receive(timeout, "hello")
        except EvaluatorTimeoutError as exc:
            raise HandshakeError(f"handshake timed out: {exc}") from exc
        except EvaluatorCrashError as exc:
            raise HandshakeError(f"handshake failed: {exc}") from exc
        if reply.get("type") != "hello":
            raise HandshakeError(f"expected hello, got {reply!r}")
        if reply.get("version") != PROTOCOL_VERSION:
            raise VersionMismatchError(
                f"evaluator speaks {reply.get('version')!r}, expected {PROTOCOL_VERSION!r}"
            )

    def evaluate(self, batch) -> list[float]:
        X = np.asarray(batch, dtype=np.float64)
        if X.ndim != 2 or X.shape[0] == 0 or X.shape[1] != self.dim:
            raise ValueError(f"batch must have shape (n>0, {self.dim}), got {X.shape}")
        rid = self.request_counter
        self.request_counter += 1
        self._send({"type": "eval", "id": rid, "batch": X.tolist()})
        reply = self._receive(self.batch_timeout, f"result {rid}")
        if reply.get("type") != "result":
            raise ProtocolError(f"expected result, got {reply!r}")
        if reply.get("id") != rid:
            raise IdMismatchError(f"response id {reply.get('id')!r} does not match request id {rid}")
        rewards = reply.get("rewards")
        if not isinstance(rewards, list) or not all(
            isinstance(r, (int, float)) and not isinstance(r, bool) for r in rewards
        ):
            raise ProtocolError(f"rewards must be a list of numbers, got {rewards!r}")
        if len(rewards) != X.shape[0]:
            raise LengthMismatchError(f"{len(rewards)} rewards for a batch of {X.shape[0]}")
        rewards = [float(r) for r in rewards]
        for i, r in enumerate(rewards):
            if not math.isfinite(r):
                raise NonFiniteRewardError(f"non-finite reward {r!r} at batch position {i} (request {rid})")
        return rewards

    __call__ = evaluate

    def close(self, timeout: float = 5.0) -> Optional[int]:
        if self.process.poll() is None:
            try:
                self.process.stdin.close()
            except OSError:
                pass
            try:
                self.process.wait(timeout=timeout)
            except subprocess.TimeoutExpired:
                self.process.kill()
                self.process.wait()
        return self.process.returncode

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def spawn_evaluator(
    command: Union[str, Sequence[str]],
    args: Sequence[str] = (),
    dim: int = 1,
    handshake_timeout: float = HANDSHAKE_TIMEOUT,
    batch_timeout: float = BATCH_TIMEOUT,
    stderr=None,
) -> EvaluatorHandle:
    """Launch an evaluator and complete the hello exchange.

    ``command`` may be a shell-style string, which is split with
    :func:`shlex.split`, or an argument list.
    """
    argv = shlex.split(command) if isinstance(command, str) else list(command)
    argv += list(args)
    if not argv:
        raise SpawnError("empty evaluator command")
    try:
        proc = subprocess.Popen(argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE, stderr=stderr)
    except OSError as exc:
        raise SpawnError(f"cannot launch {argv[0]!r}: {exc}") from exc
    handle = EvaluatorHandle(proc, dim, batch_timeout)
    try:
        handle.handshake(handshake_timeout)
    except EvaluatorError:
        handle.close(timeout=1.0)
        raise
    return handle


def evaluate_batch_external(handle: EvaluatorHandle, batch) -> list[float]:
    return handle.evaluate(batch)
