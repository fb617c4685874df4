"""Run manifests: per-invocation provenance records.

Reports and other outputs are pure functions of their inputs; the
manifest is where the impure facts live (run id, wall-clock time, input
digests, output paths). Keeping those out of the result documents is
what lets identical runs compare byte-for-byte.
"""

from __future__ import annotations

import datetime as dt
import hashlib
import json
import os
import uuid
from dataclasses import dataclass, field
from typing import Iterable

MANIFEST_VERSION = 1


def file_digest(path: str | os.PathLike) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            digest.update(block)
    return digest.hexdigest()


@dataclass
class RunManifest:
    run_id: str
    command: str
    created_at: str
    config: dict = field(default_factory=dict)
    inputs: dict[str, str] = field(default_factory=dict)
    outputs: list[str] = field(default_factory=list)
    counts: dict[str, int] = field(default_factory=dict)

    def add_input(self, path: str | os.PathLike) -> None:
        self.inputs[str(path)] = file_digest(path)

    def add_output(self, path: str | os.PathLike) -> None:
        self.outputs.append(str(path))

    def verify_inputs(self) -> list[str]:
        """Paths whose current digest no longer matches the recorded one."""
        stale = []
        for path, recorded in self.inputs.items():
            if not os.path.exists(path) or file_digest(path) != recorded:
                stale.append(path)
        return stale

    def to_dict(self) -> dict:
        return {
            "manifest_version": MANIFEST_VERSION,
            "run_id": self.run_id,
            "command": self.command,
            "created_at": self.created_at,
            "config": self.config,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "counts": self.counts,
        }

    def write(self, path: str | os.PathLike) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def new_manifest(
    command: str,
    config: dict | None = None,
    inputs: Iterable[str | os.PathLike] = (),
) -> RunManifest:
    manifest = RunManifest(
        run_id=uuid.uuid4().hex,
        command=command,
        created_at=dt.datetime.now(dt.timezone.utc).isoformat(),
        config=dict(config or {}),
    )
    for path in inputs:
        manifest.add_input(path)
    return manifest


def load_manifest(path: str | os.PathLike) -> RunManifest:
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    version = raw.get("manifest_version")
    if version != MANIFEST_VERSION:
        raise ValueError(f"unsupported manifest_version {version!r}")
    return RunManifest(
        run_id=raw["run_id"],
        command=raw["command"],
        created_at=raw["created_at"],
        config=raw.get("config", {}),
        inputs=raw.get("inputs", {}),
        outputs=raw.get("outputs", []),
        counts=raw.get("counts", {}),
    )
