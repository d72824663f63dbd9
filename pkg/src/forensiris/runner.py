"""Batch pipeline: metadata sheet + image directory in, score CSV and
evaluation reports out.

Each image is segmented and unwrapped once and then encoded once per
requested encoder, so the expensive boundary search is shared. The pair
matching fan-out is embarrassingly parallel; workers receive index chunks
and results are merged back in pair order, so the output is byte-identical
for any --jobs value.

Occlusion masks: when `<image stem>.mask.png` exists next to an image it is
attached automatically (mask pixel >= 128 means usable iris texture).
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from .errors import ForensirisError
from .evaluation import PMI_SLICE_BOUNDS, generate_pairs, pmi_slice, summarize
from .imageio import load_image
from .matching import FTM_ERRORS, PipelineConfig, encode_polar, fractional_hamming
from .model import AGE_GROUP_LABELS, ComparisonRecord, IrisTemplate, SampleMetadata
from .normalization import rubber_sheet
from .scores import write_score_csv
from .segmentation import attach_mask, segment

SLICE_LABELS = {24.0: "0-24h", 72.0: "0-72h", 240.0: "0-240h", math.inf: "all"}


@dataclass
class BatchResult:
    records: dict                      # encoder -> list[ComparisonRecord]
    reports: dict                      # encoder -> report dict
    template_failures: dict            # sample_id -> reason
    outputs: list = field(default_factory=list)  # paths written


def _polar_for_sample(meta: SampleMetadata, images_dir: Path, cfg: PipelineConfig):
    img_path = images_dir / meta.image_path
    image = load_image(img_path, image_id=meta.sample_id)
    seg = segment(image, cfg.hough)
    mask_path = img_path.with_name(img_path.stem + ".mask.png")
    if mask_path.exists():
        seg = attach_mask(seg, load_image(mask_path, image_id=f"{meta.sample_id}-mask"))
    return rubber_sheet(image, seg, cfg.radial_res, cfg.angular_res)


def build_templates(
    meta: Sequence[SampleMetadata],
    images_dir,
    cfg: PipelineConfig,
    encoders: Sequence[str],
) -> tuple[dict, dict]:
    """(templates[encoder][sample_id], failures[sample_id] -> reason)."""
    images_dir = Path(images_dir)
    templates: dict = {enc: {} for enc in encoders}
    failures: dict = {}
    for m in meta:
        try:
            polar = _polar_for_sample(m, images_dir, cfg)
        except FTM_ERRORS as exc:
            failures[m.sample_id] = f"{type(exc).__name__}: {exc}"
            continue
        for enc in encoders:
            try:
                templates[enc][m.sample_id] = encode_polar(polar, cfg.with_encoder(enc))
            except FTM_ERRORS as exc:
                failures.setdefault(m.sample_id, f"{type(exc).__name__}: {exc}")
    return templates, failures


# Worker state is inherited through fork, so templates are not re-pickled per
# task; only index chunks and scores cross the process boundary.
_POOL_STATE: dict = {}


def _match_chunk(args):
    encoder, indices = args
    pairs = _POOL_STATE["pairs"]
    templates = _POOL_STATE["templates"][encoder]
    cfg: PipelineConfig = _POOL_STATE["cfg"]
    out = []
    for idx in indices:
        a, b = pairs[idx]
        ta, tb = templates.get(a.sample_id), templates.get(b.sample_id)
        if ta is None or tb is None:
            out.append((idx, None, None, True))
            continue
        try:
            r = fractional_hamming(ta, tb, cfg.max_shift, cfg.overlap_floor)
            out.append((idx, r.score, r.best_shift, False))
        except FTM_ERRORS:
            out.append((idx, None, None, True))
    return out


def match_pairs(
    pairs: Sequence[tuple[SampleMetadata, SampleMetadata]],
    templates_by_encoder: dict,
    cfg: PipelineConfig,
    jobs: int = 1,
) -> dict:
    """encoder -> ComparisonRecord list aligned with the pair order."""
    global _POOL_STATE
    results: dict = {}
    if jobs <= 1:
        _POOL_STATE = {"pairs": list(pairs), "templates": templates_by_encoder, "cfg": cfg}
        for enc in templates_by_encoder:
            rows = _match_chunk((enc, range(len(pairs))))
            results[enc] = _rows_to_records(rows, pairs)
        _POOL_STATE = {}
        return results

    _POOL_STATE = {"pairs": list(pairs), "templates": templates_by_encoder, "cfg": cfg}
    try:
        chunk = max(1, len(pairs) // (jobs * 8))
        tasks = []
        for enc in templates_by_encoder:
            for start in range(0, len(pairs), chunk):
                tasks.append((enc, range(start, min(start + chunk, len(pairs)))))
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_match_chunk, tasks))
        by_encoder: dict = {enc: [] for enc in templates_by_encoder}
        for (enc, _), rows in zip(tasks, chunks):
            by_encoder[enc].extend(rows)
        for enc, rows in by_encoder.items():
            rows.sort(key=lambda r: r[0])
            results[enc] = _rows_to_records(rows, pairs)
    finally:
        _POOL_STATE = {}
    return results


def _rows_to_records(rows, pairs) -> list[ComparisonRecord]:
    records = []
    for idx, score, shift, ftm in rows:
        a, b = pairs[idx]
        records.append(ComparisonRecord.from_samples(a, b, score, shift, ftm))
    return records


def evaluation_report(records: Sequence[ComparisonRecord]) -> dict:
    """Per-PMI-slice and per-demographic summaries for one encoder."""
    report: dict = {"slices": {}, "gender": {}, "age_group": {}}
    for bound in PMI_SLICE_BOUNDS:
        label = SLICE_LABELS[bound]
        sliced = pmi_slice(records, bound)
        report["slices"][label] = summarize(sliced).to_dict() if sliced else None
    for gender in ("male", "female"):
        subset = [r for r in records if r.gender == gender]
        report["gender"][gender] = summarize(subset).to_dict() if subset else None
    for group in AGE_GROUP_LABELS:
        subset = [r for r in records if r.age_group == group]
        report["age_group"][group] = summarize(subset).to_dict() if subset else None
    return report


def run_evaluation(
    meta: Sequence[SampleMetadata],
    images_dir,
    out_dir,
    cfg: PipelineConfig,
    encoders: Sequence[str] = ("gabor2d", "loggabor1d", "bif"),
    jobs: int = 1,
    figures: bool = True,
) -> BatchResult:
    """Full batch evaluation; writes per-encoder score CSVs, report JSONs
    and (optionally) score-distribution figures into out_dir."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    templates, failures = build_templates(meta, images_dir, cfg, encoders)
    genuine, impostor = generate_pairs(meta)
    pairs = genuine + impostor
    records_by_encoder = match_pairs(pairs, templates, cfg, jobs)

    result = BatchResult(records=records_by_encoder, reports={}, template_failures=failures)
    for enc, records in records_by_encoder.items():
        csv_path = out / f"scores-{enc}.csv"
        write_score_csv(csv_path, records)
        result.outputs.append(csv_path)
        report = evaluation_report(records)
        report["encoder"] = enc
        report["n_pairs"] = len(records)
        report["template_failures"] = failures
        json_path = out / f"report-{enc}.json"
        json_path.write_text(json.dumps(report, indent=2, sort_keys=True), encoding="utf-8")
        result.outputs.append(json_path)
        result.reports[enc] = report
        if figures:
            from .reporting import score_distribution_figure  # lazy: matplotlib cost
            from .model import EvaluationSummary

            for label, payload in report["slices"].items():
                if payload is None:
                    continue
                summary = EvaluationSummary(
                    d_prime=payload["d_prime"], eer=payload["eer"], auc=payload["auc"],
                    ftm_rate=payload["ftm_rate"], n_genuine=payload["n_genuine"],
                    n_impostor=payload["n_impostor"], histogram=payload["histogram"],
                )
                fig_path = out / f"scores-{enc}-{label}.png"
                score_distribution_figure(summary, fig_path, title=f"{enc}  PMI {label}")
                result.outputs.append(fig_path)
    return result
