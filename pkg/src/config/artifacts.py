"""
Artifact Store
Stage outputs and their provenance records.

Every pipeline stage writes its outputs plus a JSON stage record holding the
config hash and SHA-256 of inputs and outputs. A stage whose record still
matches is reported as up to date and skipped.
"""

import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

from src.errors import MissingArtifactError

logger = logging.getLogger(__name__)

STAGE_FILE = "stage.json"


def file_sha256(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def path_sha256(path: str | Path) -> str:
    """Hash a file, or every file of a directory tree (stage records excluded)."""
    path = Path(path)
    if path.is_file():
        return file_sha256(path)
    digest = hashlib.sha256()
    for child in sorted(p for p in path.rglob("*") if p.is_file()):
        if child.name == STAGE_FILE or child.name.endswith(".stage.json"):
            continue
        digest.update(child.relative_to(path).as_posix().encode("utf-8"))
        digest.update(file_sha256(child).encode("ascii"))
    return digest.hexdigest()


@dataclass
class StageRecord:
    """Provenance of one stage execution."""
    stage: str
    config_hash: str
    inputs: dict[str, str] = field(default_factory=dict)
    outputs: dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "stage": self.stage,
            "config_hash": self.config_hash,
            "inputs": dict(sorted(self.inputs.items())),
            "outputs": dict(sorted(self.outputs.items())),
        }


class ArtifactStore:
    """
    Output layout and stage bookkeeping.

    Records live next to their output: ``<dir>/stage.json`` for directory
    outputs, ``<file>.stage.json`` for single files.
    """

    def __init__(self, root: str | Path = "."):
        self.root = Path(root)

    @staticmethod
    def record_path(output: str | Path) -> Path:
        output = Path(output)
        if output.is_dir() or not output.suffix:
            return output / STAGE_FILE
        return output.with_name(output.name + ".stage.json")

    def write_stage(
        self,
        stage: str,
        config_hash: str,
        inputs: list[str | Path],
        outputs: list[str | Path],
        record_at: str | Path,
    ) -> StageRecord:
        record = StageRecord(
            stage=stage,
            config_hash=config_hash,
            inputs={str(p): path_sha256(p) for p in inputs if Path(p).exists()},
            outputs={str(p): path_sha256(p) for p in outputs},
        )
        target = self.record_path(record_at)
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(json.dumps(record.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        logger.info(f"Stage '{stage}' complete (config {config_hash}); record at {target}")
        return record

    def is_up_to_date(
        self,
        stage: str,
        config_hash: str,
        inputs: list[str | Path],
        record_at: str | Path,
    ) -> bool:
        target = self.record_path(record_at)
        if not target.exists():
            return False
        try:
            record = json.loads(target.read_text(encoding="utf-8"))
        except json.JSONDecodeError:
            return False
        if record.get("stage") != stage or record.get("config_hash") != config_hash:
            return False
        for p in inputs:
            if record.get("inputs", {}).get(str(p)) != (path_sha256(p) if Path(p).exists() else None):
                return False
        for p, digest in record.get("outputs", {}).items():
            if not Path(p).exists() or path_sha256(p) != digest:
                return False
        return True

    @staticmethod
    def require(path: str | Path, what: str, producer: str) -> Path:
        """Return ``path`` if it exists, else raise naming the producing subcommand."""
        path = Path(path)
        if not path.exists():
            raise MissingArtifactError(f"{what} at {path}", producer)
        return path

    def forecaster_path(self, kind: str, base_length: int, directory: str | Path | None = None) -> Path:
        return Path(directory or self.root) / f"{kind}_{base_length}.icnf"


_artifact_store: ArtifactStore | None = None


def get_artifact_store() -> ArtifactStore:
    """Get or create the store rooted at the working directory."""
    global _artifact_store
    if _artifact_store is None:
        _artifact_store = ArtifactStore()
    return _artifact_store
