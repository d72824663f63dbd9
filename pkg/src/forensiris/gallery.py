"""Persistent local repository of enrolled templates with top-k search.

Layout on disk:

    <root>/index.json                enrollment metadata, rewritten atomically
    <root>/templates/<sample_id>.pmit   one binary template per entry

Identification is a brute-force scan: realistic gallery sizes (hundreds of
decedents) do not justify an index structure, and a linear pass keeps the
ranking trivially consistent with pairwise comparison scores.
"""

from __future__ import annotations

import json
import os
import re
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

from .errors import (
    DuplicateSampleId,
    IncompatibleTemplates,
    InsufficientOverlap,
    InvalidConfig,
    StorageFailure,
)
from .matching import DEFAULT_MAX_SHIFT, DEFAULT_OVERLAP_FLOOR, fractional_hamming
from .model import IrisTemplate, SampleMetadata
from .templates import load_template, save_template

PathLike = Union[str, Path]

_SAFE_ID = re.compile(r"^[A-Za-z0-9._-]+$")

INDEX_VERSION = 1


@dataclass(frozen=True)
class Candidate:
    sample_id: str
    subject_id: str
    eye: str
    score: float
    best_shift: int

    def to_dict(self) -> dict:
        return {
            "sample_id": self.sample_id,
            "subject_id": self.subject_id,
            "eye": self.eye,
            "score": self.score,
            "best_shift": self.best_shift,
        }


class TemplateGallery:
    """Many concurrent readers, single writer; writes go through an atomic
    temp-file-then-rename of the index."""

    def __init__(self, root: PathLike):
        self.root = Path(root)
        self.templates_dir = self.root / "templates"
        self.index_path = self.root / "index.json"
        try:
            self.templates_dir.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise StorageFailure(f"cannot create repository at {self.root}: {exc}") from None
        self._entries = self._load_index()

    # -- persistence --------------------------------------------------------

    def _load_index(self) -> dict:
        if not self.index_path.exists():
            return {}
        try:
            payload = json.loads(self.index_path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise StorageFailure(f"cannot read index: {exc}") from None
        if payload.get("version") != INDEX_VERSION:
            raise StorageFailure(f"unsupported index version {payload.get('version')}")
        return payload.get("entries", {})

    def _write_index(self) -> None:
        payload = {"version": INDEX_VERSION, "entries": self._entries}
        try:
            fd, tmp = tempfile.mkstemp(dir=self.root, prefix=".index-", suffix=".tmp")
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                json.dump(payload, fh, indent=2, sort_keys=True)
                fh.flush()
                os.fsync(fh.fileno())
            os.replace(tmp, self.index_path)
        except OSError as exc:
            raise StorageFailure(f"cannot write index: {exc}") from None

    def _template_path(self, sample_id: str) -> Path:
        return self.templates_dir / f"{sample_id}.pmit"

    # -- repository operations ----------------------------------------------

    def enroll(self, template: IrisTemplate, meta: SampleMetadata) -> str:
        sample_id = meta.sample_id
        if not _SAFE_ID.match(sample_id):
            raise InvalidConfig(
                f"sample_id '{sample_id}' contains characters unsafe for file names"
            )
        if sample_id in self._entries:
            raise DuplicateSampleId(f"sample '{sample_id}' is already enrolled")
        try:
            save_template(self._template_path(sample_id), template)
        except OSError as exc:
            raise StorageFailure(f"cannot persist template: {exc}") from None
        self._entries[sample_id] = {
            "sample_id": sample_id,
            "subject_id": meta.subject_id,
            "eye": meta.eye,
            "session": meta.session,
            "pmi_hours": meta.pmi_hours,
            "age_years": meta.age_years,
            "gender": meta.gender,
            "encoder_id": template.encoder_id,
            "params_digest": template.params_digest.hex(),
        }
        self._write_index()
        return sample_id

    def remove(self, sample_id: str) -> bool:
        """Idempotent removal; False means the entry was absent."""
        if sample_id not in self._entries:
            return False
        del self._entries[sample_id]
        self._write_index()
        try:
            self._template_path(sample_id).unlink(missing_ok=True)
        except OSError as exc:
            raise StorageFailure(f"cannot delete template: {exc}") from None
        return True

    def entries(self) -> list[dict]:
        return [dict(self._entries[k]) for k in sorted(self._entries)]

    def __len__(self) -> int:
        return len(self._entries)

    def load(self, sample_id: str) -> IrisTemplate:
        return load_template(self._template_path(sample_id))

    # -- identification ------------------------------------------------------

    def identify(
        self,
        probe: IrisTemplate,
        k: int = 5,
        max_shift: int = DEFAULT_MAX_SHIFT,
        overlap_floor: float = DEFAULT_OVERLAP_FLOOR,
    ) -> tuple[list[Candidate], int]:
        """Top-k candidates by ascending score (ties by sample_id), plus the
        count of gallery entries skipped as incompatible or unscorable.

        An empty gallery yields an empty candidate list.
        """
        if k < 1:
            raise InvalidConfig("k must be >= 1")
        scored: list[Candidate] = []
        skipped = 0
        for sample_id in sorted(self._entries):
            entry = self._entries[sample_id]
            if (entry["encoder_id"] != probe.encoder_id
                    or entry["params_digest"] != probe.params_digest.hex()):
                skipped += 1
                continue
            try:
                result = fractional_hamming(probe, self.load(sample_id),
                                            max_shift, overlap_floor)
            except (IncompatibleTemplates, InsufficientOverlap):
                skipped += 1
                continue
            scored.append(Candidate(
                sample_id=sample_id,
                subject_id=entry["subject_id"],
                eye=entry["eye"],
                score=result.score,
                best_shift=result.best_shift,
            ))
        scored.sort(key=lambda c: (c.score, c.sample_id))
        return scored[:k], skipped
