"""Run manifests: config hash, seed, library versions, timestamps and output digests."""

from __future__ import annotations

import hashlib
import json
import logging
import os
import platform
import tempfile
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from importlib import metadata
from pathlib import Path
from typing import Any

from .version import __version__

logger = logging.getLogger(__name__)

_TRACKED_LIBRARIES = ("numpy", "scipy", "pyarrow", "pyyaml", "tqdm")


def sha256_file(path: str | os.PathLike[str]) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1024 * 1024), b""):
            digest.update(chunk)
    return digest.hexdigest()


def canonical_json(obj: Any) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False).encode("utf-8")


def sha256_json(obj: Any) -> str:
    return hashlib.sha256(canonical_json(obj)).hexdigest()


def write_text_atomic(path: str | os.PathLike[str], text: str) -> Path:
    """Write ``text`` to ``path`` through a temporary file and ``os.replace``."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    if target.exists() and not os.access(target, os.W_OK):
        raise PermissionError(f"Cannot write to {target}")
    tmp_fd, tmp_path = tempfile.mkstemp(dir=target.parent, suffix=".part")
    try:
        with os.fdopen(tmp_fd, "w", encoding="utf-8", newline="\n") as out:
            out.write(text)
        os.replace(tmp_path, target)
    except Exception:
        if os.path.exists(tmp_path):
            os.remove(tmp_path)
        raise
    return target


def write_json(path: str | os.PathLike[str], obj: Any) -> Path:
    return write_text_atomic(path, json.dumps(obj, sort_keys=True, indent=2) + "\n")


def library_versions() -> dict[str, str]:
    versions = {"pydbqubit": __version__, "python": platform.python_version()}
    for name in _TRACKED_LIBRARIES:
        try:
            versions[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            versions[name] = "unknown"
    return versions


def utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


@dataclass
class RunManifest:
    scenario: str
    config_hash: str
    seed: int
    versions: dict[str, str] = field(default_factory=library_versions)
    started_utc: str = field(default_factory=utc_now)
    finished_utc: str | None = None
    outputs: dict[str, str] = field(default_factory=dict)

    def record_output(self, path: str | os.PathLike[str]) -> None:
        target = Path(path)
        self.outputs[target.name] = sha256_file(target)

    def save(self, path: str | os.PathLike[str]) -> Path:
        if self.finished_utc is None:
            self.finished_utc = utc_now()
        target = write_json(path, asdict(self))
        logger.info("Saved manifest %s", target)
        return target

    @classmethod
    def load(cls, path: str | os.PathLike[str]) -> "RunManifest":
        with open(path, "r", encoding="utf-8") as fh:
            return cls(**json.load(fh))
