"""Run manifests: what a command read, wrote, and how it was configured.

A manifest records the effective config snapshot, the seed and thread
budget, SHA-256 digests of every input and output file, and per-phase
wall times.  It is written atomically at the end of a successful run; in
deterministic mode two runs differ only in their timing fields.
"""

from __future__ import annotations

import hashlib
import json
import time
from contextlib import contextmanager

from .errors import MissingInput
from .mind import write_text_atomic


def sha256_file(path: str) -> str:
    digest = hashlib.sha256()
    try:
        with open(path, "rb") as fh:
            for block in iter(lambda: fh.read(1 << 20), b""):
                digest.update(block)
    except FileNotFoundError as exc:
        raise MissingInput(f"cannot digest missing file: {path}") from exc
    return digest.hexdigest()


class RunManifest:
    """Accumulates run metadata, then serializes to one JSON file."""

    def __init__(self, command: str, config: dict, seed: int | None, threads: int):
        self.command = command
        self.config = config
        self.seed = seed
        self.threads = threads
        self.inputs: dict[str, str] = {}
        self.outputs: dict[str, str] = {}
        self.phase_seconds: dict[str, float] = {}

    def add_input(self, path: str) -> None:
        self.inputs[path] = sha256_file(path)

    def add_output(self, path: str) -> None:
        self.outputs[path] = sha256_file(path)

    @contextmanager
    def phase(self, name: str):
        start = time.perf_counter()
        try:
            yield
        finally:
            self.phase_seconds[name] = self.phase_seconds.get(name, 0.0) + (
                time.perf_counter() - start
            )

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "config": self.config,
            "seed": self.seed,
            "threads": self.threads,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "phase_seconds": self.phase_seconds,
        }

    def write(self, path: str) -> None:
        write_text_atomic(path, json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")
