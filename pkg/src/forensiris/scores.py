"""Comparison-score CSV: the exchange format between matching and evaluation.

Header:

    probe_id,gallery_id,label,score,best_shift,ftm,pmi_max_hours,gender,age_group

score and best_shift are empty on FTM rows. Floats are written with repr so
the file round-trips losslessly.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable, Union

from .errors import SchemaMismatch
from .model import ComparisonRecord

PathLike = Union[str, Path]

SCORE_HEADER = [
    "probe_id", "gallery_id", "label", "score", "best_shift",
    "ftm", "pmi_max_hours", "gender", "age_group",
]


def write_score_csv(path: PathLike, records: Iterable[ComparisonRecord]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(SCORE_HEADER)
        for r in records:
            writer.writerow([
                r.probe_id,
                r.gallery_id,
                r.label,
                "" if r.score is None else repr(float(r.score)),
                "" if r.best_shift is None else r.best_shift,
                "true" if r.ftm else "false",
                repr(float(r.pmi_max_hours)),
                r.gender,
                r.age_group,
            ])


def read_score_csv(path: PathLike) -> list[ComparisonRecord]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaMismatch(f"{path}: empty file") from None
        if [h.strip() for h in header] != SCORE_HEADER:
            raise SchemaMismatch(
                f"{path}: header must be exactly '{','.join(SCORE_HEADER)}'"
            )
        records = []
        for row_no, values in enumerate(reader, start=1):
            if not values or all(not v.strip() for v in values):
                continue
            if len(values) != len(SCORE_HEADER):
                raise SchemaMismatch(
                    f"row {row_no}: expected {len(SCORE_HEADER)} columns, got {len(values)}"
                )
            row = dict(zip(SCORE_HEADER, values))
            ftm = row["ftm"].strip().lower() == "true"
            try:
                records.append(ComparisonRecord(
                    probe_id=row["probe_id"],
                    gallery_id=row["gallery_id"],
                    label=row["label"],
                    score=None if ftm else float(row["score"]),
                    best_shift=None if ftm else int(row["best_shift"]),
                    ftm=ftm,
                    pmi_max_hours=float(row["pmi_max_hours"]),
                    gender=row["gender"],
                    age_group=row["age_group"],
                ))
            except ValueError as exc:
                raise SchemaMismatch(f"row {row_no}: {exc}") from None
    return records
