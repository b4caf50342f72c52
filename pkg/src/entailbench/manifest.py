"""Run manifests: a deterministic fingerprint embedded next to every
produced artifact. Reruns with equal manifests produce byte-identical
outputs; wall-clock timings therefore live in the run log, never in
the manifest."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

TOOL_VERSION = "0.1.0"


def file_digest(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def config_hash(config: dict) -> str:
    canonical = json.dumps(config, sort_keys=True, ensure_ascii=False)
    return hashlib.sha256(canonical.encode("utf8")).hexdigest()


@dataclass
class RunManifest:
    config_hash: str
    seed: int
    input_digests: dict[str, str] = field(default_factory=dict)
    tool_version: str = TOOL_VERSION

    @classmethod
    def build(
        cls, config: dict, seed: int, inputs: dict[str, str | Path]
    ) -> "RunManifest":
        return cls(
            config_hash=config_hash(config),
            seed=seed,
            input_digests={
                name: file_digest(path) for name, path in sorted(inputs.items())
            },
        )

    def to_dict(self) -> dict:
        return {
            "config_hash": self.config_hash,
            "seed": self.seed,
            "input_digests": dict(sorted(self.input_digests.items())),
            "tool_version": self.tool_version,
        }

    def write(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n",
            encoding="utf8",
        )
