"""Template comparison and the image-to-score pipeline.

The comparison score is a fractional Hamming distance: disagreeing code bits
over jointly unoccluded bits, minimized over angular shifts of the second
template. 0 is a perfect match, 0.5 the impostor baseline, 1 a perfect
anti-match. Shifts compensate in-plane eye rotation between captures.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import (
    DegenerateGeometry,
    DimensionMismatch,
    GridTooNarrow,
    IncompatibleTemplates,
    InsufficientOverlap,
    InvalidConfig,
    FilterLargerThanGrid,
    KernelLargerThanGrid,
    NoBoundaryFound,
    OutOfFrame,
)
from .encoding import (
    GaborBankConfig,
    KernelBank,
    LogGaborConfig,
    encode_bif,
    encode_gabor2d,
    encode_loggabor1d,
    make_fallback_bank,
)
from .model import (
    ComparisonRecord,
    IrisImage,
    IrisTemplate,
    MatchResult,
    PolarIris,
    SampleMetadata,
    Segmentation,
)
from .normalization import rubber_sheet
from .segmentation import HoughConfig, segment

DEFAULT_MAX_SHIFT = 16
DEFAULT_OVERLAP_FLOOR = 0.10

# Pipeline-stage failures that mean "this pair cannot be scored", not "bug".
FTM_ERRORS = (
    NoBoundaryFound,
    DegenerateGeometry,
    OutOfFrame,
    InsufficientOverlap,
    GridTooNarrow,
    FilterLargerThanGrid,
    KernelLargerThanGrid,
    DimensionMismatch,
)


def _check_compatible(a: IrisTemplate, b: IrisTemplate) -> None:
    if not a.compatible_with(b):
        raise IncompatibleTemplates(
            "templates differ in encoder, parameters or dimensions: "
            f"{a.encoder_id}/{a.bitplanes.shape} vs {b.encoder_id}/{b.bitplanes.shape}"
        )


def fractional_hamming(
    a: IrisTemplate,
    b: IrisTemplate,
    max_shift: int = DEFAULT_MAX_SHIFT,
    overlap_floor: float = DEFAULT_OVERLAP_FLOOR,
) -> MatchResult:
    """Minimum fractional Hamming distance over shifts of b in
    [-max_shift, +max_shift] columns.

    A shift only competes when the joint mask covers at least overlap_floor
    of the grid; if no shift qualifies the pair is unscorable
    (InsufficientOverlap, handled as FTM upstream). Ties break toward the
    smallest |shift|, then the negative one.
    """
    _check_compatible(a, b)
    if max_shift < 0:
        raise InvalidConfig("max_shift must be >= 0")
    planes = a.bitplane_count
    grid = a.mask.size
    min_overlap = overlap_floor * grid

    shifts = range(-max_shift, max_shift + 1)
    per_shift: list[Optional[float]] = []
    best: Optional[tuple] = None  # (score, |s|, s_order, s, overlap)
    for s in shifts:
        # Shift s undoes a rotation of b by +s columns relative to a, so the
        # reported best_shift reads as "b is rotated this many columns".
        mask_b = np.roll(b.mask, -s, axis=1)
        joint = a.mask & mask_b
        overlap = int(np.count_nonzero(joint))
        if overlap == 0 or overlap < min_overlap:
            per_shift.append(None)
            continue
        code_b = np.roll(b.bitplanes, -s, axis=2)
        disagree = int(np.count_nonzero((a.bitplanes ^ code_b) & joint[None, :, :]))
        score = disagree / (planes * overlap)
        per_shift.append(score)
        key = (score, abs(s), 0 if s < 0 else 1)
        if best is None or key < (best[0], best[1], best[2]):
            best = (score, abs(s), 0 if s < 0 else 1, s, overlap)
    if best is None:
        raise InsufficientOverlap(
            f"no shift reaches the overlap floor ({overlap_floor:.0%} of {grid} cells)"
        )
    return MatchResult(
        score=best[0],
        best_shift=best[3],
        overlap_bits=best[4],
        per_shift_scores=tuple(per_shift),
    )


HEATMAP_SMOOTHING_WINDOW = 5


def similarity_heatmap(a: IrisTemplate, b: IrisTemplate, shift: int = 0) -> np.ndarray:
    """Per-cell agreement map in [0, 1] at a fixed shift of b.

    Each joint-mask cell carries the fraction of bitplanes agreeing there,
    box-smoothed with a 5x5 window (circular in angle, clipped in radius,
    averaging only over joint-mask cells). Cells off the joint mask are NaN.
    """
    _check_compatible(a, b)
    joint = a.mask & np.roll(b.mask, -shift, axis=1)
    code_b = np.roll(b.bitplanes, -shift, axis=2)
    agree = np.mean(a.bitplanes == code_b, axis=0)

    w = HEATMAP_SMOOTHING_WINDOW
    half = w // 2
    jm = joint.astype(np.float64)
    num = agree * jm
    num_p = np.pad(np.concatenate([num[:, -half:], num, num[:, :half]], axis=1),
                   ((half, half), (0, 0)))
    den_p = np.pad(np.concatenate([jm[:, -half:], jm, jm[:, :half]], axis=1),
                   ((half, half), (0, 0)))
    kernel = np.ones((w, w))
    from scipy.signal import fftconvolve

    num_s = fftconvolve(num_p, kernel, mode="valid")
    den_s = fftconvolve(den_p, kernel, mode="valid")
    out = np.full(agree.shape, np.nan)
    ok = joint & (den_s > 0.5)
    out[ok] = np.clip(num_s[ok] / den_s[ok], 0.0, 1.0)
    return out


# ---------------------------------------------------------------------------
# Full pipeline


@dataclass(frozen=True)
class PipelineConfig:
    """Everything needed to go from two rasters to one comparison record."""

    encoder: str = "bif"
    hough: HoughConfig = field(default_factory=HoughConfig)
    radial_res: int = 64
    angular_res: int = 512
    gabor: GaborBankConfig = field(default_factory=GaborBankConfig)
    loggabor: LogGaborConfig = field(default_factory=LogGaborConfig)
    kernel_bank: Optional[KernelBank] = None
    max_shift: int = DEFAULT_MAX_SHIFT
    overlap_floor: float = DEFAULT_OVERLAP_FLOOR

    def with_encoder(self, encoder: str) -> "PipelineConfig":
        return replace(self, encoder=encoder)

    def bank(self) -> KernelBank:
        return self.kernel_bank if self.kernel_bank is not None else _default_bank()


_FALLBACK_BANK: Optional[KernelBank] = None


def _default_bank() -> KernelBank:
    global _FALLBACK_BANK
    if _FALLBACK_BANK is None:
        _FALLBACK_BANK = make_fallback_bank()
    return _FALLBACK_BANK


def encode_polar(polar: PolarIris, cfg: PipelineConfig) -> IrisTemplate:
    if cfg.encoder == "gabor2d":
        return encode_gabor2d(polar, cfg.gabor)
    if cfg.encoder == "loggabor1d":
        return encode_loggabor1d(polar, cfg.loggabor)
    if cfg.encoder == "bif":
        return encode_bif(polar, cfg.bank())
    raise InvalidConfig(f"unknown encoder '{cfg.encoder}'")


def template_from_image(
    img: IrisImage,
    cfg: PipelineConfig,
    seg: Optional[Segmentation] = None,
) -> IrisTemplate:
    """segment -> unwrap -> encode; raises FTM_ERRORS members on failure."""
    if seg is None:
        seg = segment(img, cfg.hough)
    polar = rubber_sheet(img, seg, cfg.radial_res, cfg.angular_res)
    return encode_polar(polar, cfg)


def match_images(
    img_a: IrisImage,
    img_b: IrisImage,
    cfg: PipelineConfig,
    meta_a: Optional[SampleMetadata] = None,
    meta_b: Optional[SampleMetadata] = None,
    seg_a: Optional[Segmentation] = None,
    seg_b: Optional[Segmentation] = None,
) -> ComparisonRecord:
    """Run the full pipeline on a pair. Stage failures become ftm=True
    records; only genuine I/O errors propagate."""
    score: Optional[float] = None
    shift: Optional[int] = None
    ftm = False
    try:
        ta = template_from_image(img_a, cfg, seg_a)
        tb = template_from_image(img_b, cfg, seg_b)
        result = fractional_hamming(ta, tb, cfg.max_shift, cfg.overlap_floor)
        score, shift = result.score, result.best_shift
    except FTM_ERRORS:
        ftm = True

    if meta_a is not None and meta_b is not None:
        return ComparisonRecord.from_samples(meta_a, meta_b, score, shift, ftm)
    # Without metadata the identity class is unknowable; fall back to id
    # equality so self-comparisons still read as genuine.
    return ComparisonRecord(
        probe_id=img_a.id,
        gallery_id=img_b.id,
        label="genuine" if img_a.id == img_b.id else "impostor",
        score=score,
        best_shift=shift,
        ftm=ftm,
        pmi_max_hours=0.0,
    )
