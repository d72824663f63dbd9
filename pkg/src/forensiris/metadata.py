"""Metadata CSV ingestion.

Schema (UTF-8, comma separated, header required):

    sample_id,subject_id,eye,session,pmi_hours,age_years,gender,image_path

Rows with an empty pmi_hours, age_years or gender are rejected with their
1-based data-row number rather than imputed; subjects with unknown forensic
metadata cannot participate in the analyses downstream.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable, Union

from .errors import MissingField, SchemaMismatch
from .model import SampleMetadata

PathLike = Union[str, Path]

METADATA_HEADER = [
    "sample_id", "subject_id", "eye", "session",
    "pmi_hours", "age_years", "gender", "image_path",
]

# Documented alias tables; comparisons are case-insensitive.
EYE_ALIASES = {
    "left": "left", "l": "left", "os": "left",
    "right": "right", "r": "right", "od": "right",
}
GENDER_ALIASES = {
    "male": "male", "m": "male",
    "female": "female", "f": "female",
    "unknown": "unknown", "u": "unknown", "": "unknown",
}

_REQUIRED = ("pmi_hours", "age_years", "gender")


def _parse_row(row: dict, row_no: int) -> SampleMetadata:
    for name in _REQUIRED:
        if not (row.get(name) or "").strip():
            raise MissingField(row_no, name)
    eye_raw = (row["eye"] or "").strip().lower()
    if eye_raw not in EYE_ALIASES:
        raise SchemaMismatch(f"row {row_no}: unknown eye value '{row['eye']}'")
    gender_raw = row["gender"].strip().lower()
    if gender_raw not in GENDER_ALIASES:
        raise SchemaMismatch(f"row {row_no}: unknown gender value '{row['gender']}'")
    try:
        return SampleMetadata(
            sample_id=row["sample_id"].strip(),
            subject_id=row["subject_id"].strip(),
            eye=EYE_ALIASES[eye_raw],
            session=int(row["session"]),
            pmi_hours=float(row["pmi_hours"]),
            age_years=int(row["age_years"]),
            gender=GENDER_ALIASES[gender_raw],
            image_path=(row.get("image_path") or "").strip(),
        )
    except ValueError as exc:
        raise SchemaMismatch(f"row {row_no}: {exc}") from None


def load_metadata_csv(path: PathLike) -> list[SampleMetadata]:
    """Load and validate the metadata sheet; one record per data row."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaMismatch(f"{path}: empty file") from None
        if [h.strip() for h in header] != METADATA_HEADER:
            raise SchemaMismatch(
                f"{path}: header must be exactly '{','.join(METADATA_HEADER)}'"
            )
        records = []
        for row_no, values in enumerate(reader, start=1):
            if not values or all(not v.strip() for v in values):
                continue
            if len(values) != len(METADATA_HEADER):
                raise SchemaMismatch(
                    f"row {row_no}: expected {len(METADATA_HEADER)} columns, got {len(values)}"
                )
            records.append(_parse_row(dict(zip(METADATA_HEADER, values)), row_no))
    return records


def save_metadata_csv(path: PathLike, records: Iterable[SampleMetadata]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(METADATA_HEADER)
        for r in records:
            writer.writerow([
                r.sample_id, r.subject_id, r.eye, r.session,
                repr(float(r.pmi_hours)), r.age_years, r.gender, r.image_path,
            ])
