"""Out-of-process objectives over a newline-delimited pipe protocol.

The optimizer side launches a worker process and speaks a four-verb text
protocol over its stdin/stdout, one UTF-8 line per message:

    client -> worker:  HELLO dacopt 1
    worker -> client:  READY <dimension>
    client -> worker:  EVAL <id> <v1> <v2> ... <vD>
    worker -> client:  RESULT <id> <value>
    client -> worker:  BYE            (worker exits 0)

Floats travel in round-trip decimal form, so values survive the pipe
exactly. Request ids are echoed back and checked; any malformed or
mismatched reply is a protocol error, a silent exit is a crash, and a
missing reply within the deadline is a timeout.

``serve`` implements the worker side for any in-process function, and
``python -m dacopt.worker --builtin sphere --dim 3`` serves one of the
built-in benchmark functions.
"""

from __future__ import annotations

import queue
import shlex
import subprocess
import sys
import threading
from dataclasses import dataclass

import numpy as np

from .core import Direction
from .errors import (
    DimensionMismatchError,
    ProtocolError,
    WorkerCrashedError,
    WorkerTimeoutError,
)

HELLO = "HELLO dacopt 1"
PROTOCOL_VERSION = 1


@dataclass(frozen=True)
class ExternalObjectiveConfig:
    """How to launch and talk to one worker process."""

    command: str
    dimension: int
    direction: Direction = Direction.MINIMIZE
    handshake_timeout: float = 10.0
    eval_timeout: float | None = None  # None: wait as long as it takes

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError(f"dimension must be >= 1, got {self.dimension}")
        if self.handshake_timeout <= 0:
            raise ValueError("handshake_timeout must be positive")
        if self.eval_timeout is not None and self.eval_timeout <= 0:
            raise ValueError("eval_timeout must be positive when set")


def format_vector(x) -> str:
    return " ".join(repr(float(v)) for v in np.asarray(x, dtype=np.float64))


class ExternalObjective:
    """A live worker session. Call it like any objective; close when done."""

    def __init__(self, config: ExternalObjectiveConfig):
        self.config = config
        self._next_id = 1
        self._proc = subprocess.Popen(
            shlex.split(config.command), stdin=subprocess.PIPE,
            stdout=subprocess.PIPE, text=True, bufsize=1)
        self._lines: queue.Queue = queue.Queue()
        self._reader = threading.Thread(target=self._pump, daemon=True)
        self._reader.start()
        try:
            self._send(HELLO)
            ready = self._recv(config.handshake_timeout)
            parts = ready.split()
            if len(parts) != 2 or parts[0] != "READY":
                raise ProtocolError(f"expected READY <dim>, got {ready!r}")
            try:
                announced = int(parts[1])
            except ValueError:
                raise ProtocolError(f"unreadable dimension in {ready!r}")
            if announced != config.dimension:
                raise DimensionMismatchError(
                    f"worker serves dimension {announced}, "
                    f"expected {config.dimension}")
        except Exception:
            self._kill()
            raise

    def _pump(self):
        assert self._proc.stdout is not None
        for line in self._proc.stdout:
            self._lines.put(line.rstrip("\n"))
        self._lines.put(None)  # EOF marker

    def _send(self, line: str) -> None:
        if self._proc.poll() is not None:
            raise WorkerCrashedError(
                f"worker exited with code {self._proc.returncode}")
        try:
            assert self._proc.stdin is not None
            self._proc.stdin.write(line + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise WorkerCrashedError(f"worker pipe closed: {exc}")

    def _recv(self, timeout: float | None) -> str:
        try:
            line = self._lines.get(timeout=timeout)
        except queue.Empty:
            raise WorkerTimeoutError(
                f"no reply from worker within {timeout} seconds")
        if line is None:
            code = self._proc.poll()
            raise WorkerCrashedError(
                f"worker closed its output (exit code {code})")
        return line

    def __call__(self, x) -> float:
        x = np.asarray(x, dtype=np.float64).reshape(-1)
        if x.shape[0] != self.config.dimension:
            raise DimensionMismatchError(
                f"expected {self.config.dimension} values, got {x.shape[0]}")
        req_id = self._next_id
        self._next_id += 1
        self._send(f"EVAL {req_id} {format_vector(x)}")
        reply = self._recv(self.config.eval_timeout)
        parts = reply.split()
        if len(parts) != 3 or parts[0] != "RESULT":
            raise ProtocolError(f"expected RESULT <id> <value>, got {reply!r}")
        try:
            got_id = int(parts[1])
            value = float(parts[2])
        except ValueError:
            raise ProtocolError(f"unreadable RESULT fields in {reply!r}")
        if got_id != req_id:
            raise ProtocolError(
                f"reply id {got_id} does not match request id {req_id}")
        return value

    def close(self) -> None:
        if self._proc.poll() is None:
            try:
                self._send("BYE")
            except WorkerCrashedError:
                pass
            try:
                self._proc.wait(timeout=5.0)
            except subprocess.TimeoutExpired:
                self._kill()
        if self._proc.stdin:
            self._proc.stdin.close()

    def _kill(self) -> None:
        if self._proc.poll() is None:
            self._proc.kill()
            self._proc.wait()

    def __enter__(self) -> "ExternalObjective":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def external_eval(session: ExternalObjective, x) -> float:
    """One metered-by-the-caller evaluation through a live worker session."""
    return session(x)


def serve(fn, dimension: int, stdin=None, stdout=None) -> None:
    """Worker-side loop: answer the protocol using an in-process function."""
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout

    def say(line: str) -> None:
        stdout.write(line + "\n")
        stdout.flush()

    first = stdin.readline()
    if first.strip() != HELLO:
        raise ProtocolError(f"bad handshake: {first!r}")
    say(f"READY {dimension}")
    for raw in stdin:
        line = raw.strip()
        if not line:
            continue
        if line == "BYE":
            return
        parts = line.split()
        if parts[0] != "EVAL" or len(parts) != 2 + dimension:
            raise ProtocolError(f"bad request: {line!r}")
        req_id = parts[1]
        x = np.array([float(tok) for tok in parts[2:]], dtype=np.float64)
        say(f"RESULT {req_id} {repr(float(fn(x)))}")


def main(argv=None) -> int:
    import argparse

    from . import objectives

    builtin = {
        "sphere": objectives.sphere,
        "schwefel12": objectives.schwefel12,
        "rosenbrock": objectives.rosenbrock,
    }
    parser = argparse.ArgumentParser(
        description="Serve a built-in objective over the worker protocol.")
    parser.add_argument("--builtin", choices=sorted(builtin), required=True)
    parser.add_argument("--dim", type=int, required=True)
    args = parser.parse_args(argv)
    serve(builtin[args.builtin], args.dim)
    return 0


if __name__ == "__main__":
    sys.exit(main())
