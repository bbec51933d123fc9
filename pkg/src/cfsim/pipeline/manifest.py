"""Run manifests: a hashed inventory of every produced artifact.

Each pipeline stage records its declared inputs and outputs; every
output file is content-hashed. Verification re-hashes the directory
against the manifest, so a rerun with the same master seed can be
checked for bit-identical artifacts, and any undeclared read/write
shows up as a manifest audit failure.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

FORMAT_VERSION = 1
MANIFEST_NAME = "manifest.json"


class ManifestError(RuntimeError):
    pass


def sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with path.open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class StageRecord:
    name: str
    status: str  # "done" | "failed"
    inputs: list[str] = field(default_factory=list)
    outputs: list[str] = field(default_factory=list)
    error: str | None = None


@dataclass
class Manifest:
    root: Path
    config: dict
    stages: list[StageRecord] = field(default_factory=list)
    files: dict[str, dict] = field(default_factory=dict)
    complete: bool = False

    def record_stage(self, record: StageRecord) -> None:
        self.stages.append(record)
        for rel in record.outputs:
            path = self.root / rel
            self.files[rel] = {"sha256": sha256_file(path), "bytes": path.stat().st_size}

    def write(self) -> Path:
        payload = {
            "kind": "cfsim-manifest",
            "version": FORMAT_VERSION,
            "config": self.config,
            "complete": self.complete,
            "stages": [
                {
                    "name": s.name,
                    "status": s.status,
                    "inputs": s.inputs,
                    "outputs": s.outputs,
                    "error": s.error,
                }
                for s in self.stages
            ],
            "files": self.files,
        }
        path = self.root / MANIFEST_NAME
        path.write_text(json.dumps(payload, sort_keys=True, indent=1), encoding="utf-8")
        return path


def load_manifest(root: str | Path) -> dict:
    path = Path(root) / MANIFEST_NAME
    if not path.exists():
        raise ManifestError(f"no {MANIFEST_NAME} under {root}")
    payload = json.loads(path.read_text(encoding="utf-8"))
    if payload.get("kind") != "cfsim-manifest":
        raise ManifestError(f"{path}: not a manifest")
    return payload


def verify_manifest(root: str | Path) -> list[str]:
    """Re-hash every listed file; returns human-readable problems
    (empty means the directory matches its manifest)."""
    root = Path(root)
    payload = load_manifest(root)
    problems = []
    for rel, entry in sorted(payload["files"].items()):
        path = root / rel
        if not path.exists():
            problems.append(f"missing file: {rel}")
            continue
        digest = sha256_file(path)
        if digest != entry["sha256"]:
            problems.append(f"hash mismatch: {rel}")
    if not payload.get("complete", False):
        problems.append("manifest marks the run as incomplete")
    return problems


def audit_stage_io(payload: dict) -> list[str]:
    """Every declared stage input must be a prior stage's output or an
    external file named in the config; returns violations."""
    produced: set[str] = set()
    problems = []
    for stage in payload["stages"]:
        for rel in stage["inputs"]:
            if rel not in produced:
                problems.append(f"stage {stage['name']} reads undeclared input {rel}")
        produced.update(stage["outputs"])
    return problems
