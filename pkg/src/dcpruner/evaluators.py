"""Error-objective providers behind one evaluator contract.

An evaluator is any callable ``(subnet_index, genes) -> error``.  Two
implementations live here: a pure, deterministic surrogate for offline
runs and testing, and a client that forwards codings to an external
trainer worker over a newline-delimited JSON protocol.  Either can be
wrapped with a memoizing cache that persists between CLI invocations.
"""

from __future__ import annotations

import json
import logging
import os
import queue
import socket
import struct
import subprocess
import threading
from dataclasses import dataclass, field
from typing import Callable, Sequence

log = logging.getLogger(__name__)

PROTOCOL_NAME = "emo-eval/1"

Evaluator = Callable[[int, tuple[int, ...]], float]


@dataclass(frozen=True)
class EvalRequest:
    request_id: int
    subnet_index: int
    genes: tuple[int, ...]


@dataclass(frozen=True)
class EvalResult:
    request_id: int
    error: float | None
    status: str = "ok"  # "ok" | "failed"
    reason: str | None = None


class ProtocolError(RuntimeError):
    """Malformed worker traffic; carries the offending raw line."""

    def __init__(self, message: str, raw_line: str | None = None):
        super().__init__(message if raw_line is None else f"{message}: {raw_line!r}")
        self.raw_line = raw_line


class WorkerError(RuntimeError):
    """The worker process or connection died mid-batch."""


# ---------------------------------------------------------------------------
# deterministic surrogate

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_U64 = (1 << 64) - 1


def fnv1a64(data: bytes) -> int:
    h = _FNV_OFFSET
    for byte in data:
        h = ((h ^ byte) * _FNV_PRIME) & _U64
    return h


@dataclass(frozen=True)
class SurrogateParams:
    base_errors: tuple[float, ...]
    amplitude: float = 0.5
    linear: float = 0.05
    jitter: float = 0.01
    seed: int = 0

    def __post_init__(self) -> None:
        if self.amplitude < 0 or self.linear < 0 or self.jitter < 0:
            raise ValueError("amplitude, linear and jitter must be >= 0")
        for e in self.base_errors:
            if not 0.0 < e < 1.0:
                raise ValueError(f"base error {e} outside (0, 1)")


def _coding_hash(seed: int, subnet_index: int, genes: Sequence[int]) -> int:
    payload = struct.pack("<Q", seed & _U64)
    payload += struct.pack("<I", subnet_index)
    payload += struct.pack(f"<{len(genes)}I", *genes)
    return fnv1a64(payload)


class SurrogateEvaluator:
    """Analytic error model: smooth penalty in the pruned-away parameter
    fraction plus reproducible hash-based jitter.

    error = base_i + A*(1-r)^2 + B*(1-r) + J*(h/2^64 - 1/2)

    where r is the coding's parameter count relative to the sub-network
    baseline and h is an FNV-1a hash of (seed, subnet, genes).  With
    J = 0 the error is strictly decreasing in retained parameters, so
    the true Pareto front is enumerable for oracle tests.
    """

    def __init__(self, params: SurrogateParams,
                 subnet_params: Callable[[int, tuple[int, ...]], float],
                 baseline_params: Sequence[float]):
        if len(params.base_errors) != len(baseline_params):
            raise ValueError("one base error per sub-network required")
        self.params = params
        self._subnet_params = subnet_params
        self._baseline_params = tuple(float(p) for p in baseline_params)

    def __call__(self, subnet_index: int, genes: tuple[int, ...]) -> float:
        p = self.params
        ratio = self._subnet_params(subnet_index, genes) / self._baseline_params[subnet_index]
        if not 0.0 < ratio <= 1.0 + 1e-12:
            raise ValueError(f"parameter ratio {ratio} outside (0, 1]")
        drop = 1.0 - min(ratio, 1.0)
        h = _coding_hash(p.seed, subnet_index, genes)
        jitter = p.jitter * (h / 2.0 ** 64 - 0.5)
        return p.base_errors[subnet_index] + p.amplitude * drop * drop + p.linear * drop + jitter


# ---------------------------------------------------------------------------
# memoizing cache

class CachedEvaluator:
    """Memoizes a deterministic evaluator by (subnet, genes).

    ``path`` enables on-disk persistence across CLI invocations; a
    corrupt cache file is discarded with a warning and rebuilt.
    """

    def __init__(self, inner: Evaluator, path: str | os.PathLike | None = None):
        self.inner = inner
        self.path = os.fspath(path) if path is not None else None
        self.inner_calls = 0
        self._lock = threading.Lock()
        self._cache: dict[tuple[int, tuple[int, ...]], float] = {}
        if self.path is not None:
            self._load()

    def __call__(self, subnet_index: int, genes: tuple[int, ...]) -> float:
        key = (subnet_index, tuple(genes))
        with self._lock:
            if key in self._cache:
                return self._cache[key]
        value = self.inner(subnet_index, key[1])
        with self._lock:
            if key not in self._cache:
                self._cache[key] = value
                self.inner_calls += 1
        return self._cache[key]

    def _load(self) -> None:
        if not os.path.exists(self.path):
            return
        try:
            with open(self.path, encoding="utf-8") as fh:
                raw = json.load(fh)
            for key, value in raw["entries"].items():
                subnet_s, genes_s = key.split(":", 1)
                genes = tuple(int(g) for g in genes_s.split(",")) if genes_s else ()
                self._cache[(int(subnet_s), genes)] = float(value)
        except (OSError, ValueError, KeyError) as exc:
            log.warning("discarding corrupt evaluation cache %s: %s", self.path, exc)
            self._cache.clear()

    def save(self) -> None:
        if self.path is None:
            return
        entries = {
            f"{subnet}:{','.join(str(g) for g in genes)}": value
            for (subnet, genes), value in self._cache.items()
        }
        tmp = self.path + ".tmp"
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump({"entries": entries}, fh, sort_keys=True)
        os.replace(tmp, self.path)


# ---------------------------------------------------------------------------
# external worker client

class _StdioTransport:
    def __init__(self, argv: Sequence[str]):
        self.proc = subprocess.Popen(
            list(argv), stdin=subprocess.PIPE, stdout=subprocess.PIPE,
            text=True, bufsize=1)

    def send_line(self, line: str) -> None:
        if self.proc.poll() is not None:
            raise WorkerError(f"worker exited with code {self.proc.returncode}")
        self.proc.stdin.write(line + "\n")
        self.proc.stdin.flush()

    def read_line(self) -> str | None:
        line = self.proc.stdout.readline()
        return line.rstrip("\n") if line else None

    def close(self) -> None:
        if self.proc.poll() is None:
            self.proc.terminate()
            try:
                self.proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self.proc.kill()


class _SocketTransport:
    def __init__(self, host: str, port: int):
        self.sock = socket.create_connection((host, port))
        self._reader = self.sock.makefile("r", encoding="utf-8")
        self._writer = self.sock.makefile("w", encoding="utf-8")

    def send_line(self, line: str) -> None:
        self._writer.write(line + "\n")
        self._writer.flush()

    def read_line(self) -> str | None:
        line = self._reader.readline()
        return line.rstrip("\n") if line else None

    def close(self) -> None:
        self.sock.close()


class WorkerClient:
    """Pipelined batch client for the evaluator wire protocol.

    request:  {"id": int, "subnet": int, "genes": [int]}
    response: {"id": int, "error": float}
              or {"id": int, "status": "failed", "reason": str}
    The worker greets with {"protocol": "emo-eval/1", "subnets": int}.
    Replies may arrive in any order; results are matched by id.
    """

    def __init__(self, worker_cmd: Sequence[str] | None = None,
                 address: tuple[str, int] | None = None,
                 timeout: float = 600.0, retries: int = 1):
        if (worker_cmd is None) == (address is None):
            raise ValueError("pass exactly one of worker_cmd or address")
        self.timeout = timeout
        self.retries = retries
        self._transport = (_StdioTransport(worker_cmd) if worker_cmd is not None
                           else _SocketTransport(*address))
        self._queue: queue.Queue[object] = queue.Queue()
        self._reader = threading.Thread(target=self._read_loop, daemon=True)
        self._reader.start()
        self.subnets = self._handshake()

    def _read_loop(self) -> None:
        try:
            while True:
                line = self._transport.read_line()
                if line is None:
                    self._queue.put(WorkerError("worker closed its output stream"))
                    return
                if not line.strip():
                    continue
                try:
                    self._queue.put(json.loads(line))
                except json.JSONDecodeError:
                    self._queue.put(ProtocolError("malformed worker line", line))
        except (OSError, ValueError) as exc:
            self._queue.put(WorkerError(str(exc)))

    def _next_message(self, timeout: float) -> dict:
        try:
            msg = self._queue.get(timeout=timeout)
        except queue.Empty:
            raise TimeoutError("timed out waiting for worker reply")
        if isinstance(msg, Exception):
            raise msg
        return msg

    def _handshake(self) -> int:
        msg = self._next_message(self.timeout)
        if msg.get("protocol") != PROTOCOL_NAME:
            raise ProtocolError(f"unexpected handshake {msg!r}")
        return int(msg["subnets"])

    def evaluate_batch(self, requests: Sequence[EvalRequest]) -> list[EvalResult]:
        """Send a batch and collect one result per request, matched by id."""
        pending = {r.request_id: r for r in requests}
        results: dict[int, EvalResult] = {}
        for req in requests:
            self._send(req)
        attempts_left = self.retries
        while pending:
            try:
                msg = self._next_message(self.timeout)
            except TimeoutError:
                if attempts_left > 0:
                    attempts_left -= 1
                    for req in pending.values():
                        self._send(req)
                    continue
                for rid in list(pending):
                    results[rid] = EvalResult(rid, None, "failed", "timeout")
                    del pending[rid]
                break
            rid = msg.get("id")
            if rid not in pending:
                continue  # duplicate or stale reply after a retry
            if msg.get("status") == "failed":
                results[rid] = EvalResult(rid, None, "failed",
                                          msg.get("reason", "unspecified"))
            elif "error" in msg:
                results[rid] = EvalResult(rid, float(msg["error"]))
            else:
                raise ProtocolError("reply carries neither error nor failure", json.dumps(msg))
            del pending[rid]
        return [results[r.request_id] for r in requests]

    def _send(self, req: EvalRequest) -> None:
        self._transport.send_line(json.dumps(
            {"id": req.request_id, "subnet": req.subnet_index,
             "genes": list(req.genes)}))

    def close(self) -> None:
        self._transport.close()

    def __enter__(self) -> "WorkerClient":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def as_evaluator(self) -> Evaluator:
        """Adapt the batch client to the single-coding evaluator contract."""
        counter = iter(range(1, 1 << 62))

        def evaluate(subnet_index: int, genes: tuple[int, ...]) -> float:
            req = EvalRequest(next(counter), subnet_index, tuple(genes))
            result = self.evaluate_batch([req])[0]
            if result.status != "ok":
                raise WorkerError(f"worker failed: {result.reason}")
            return result.error

        return evaluate
