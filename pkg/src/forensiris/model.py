"""Shared domain types.

Everything here is immutable after construction (numpy arrays are flagged
read-only), so instances can be shared freely between worker processes and
threads.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field, fields
from typing import Optional, Sequence

import numpy as np

from .errors import DegenerateGeometry, DimensionTooSmall, InvalidConfig

MIN_IMAGE_SIDE = 64
CANONICAL_SIZE = (640, 480)  # (width, height); a convention, not a requirement

EYES = ("left", "right")
GENDERS = ("male", "female", "unknown")
SOURCE_CHANNELS = ("nir", "rgb_red")
ENCODER_IDS = ("gabor2d", "loggabor1d", "bif")


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Circle:
    cx: float
    cy: float
    r: float

    def contains(self, x: float, y: float) -> bool:
        return (x - self.cx) ** 2 + (y - self.cy) ** 2 <= self.r ** 2


@dataclass(frozen=True)
class IrisImage:
    """8-bit grayscale raster plus provenance of the channel it came from."""

    id: str
    pixels: np.ndarray  # (height, width) uint8
    source_channel: str = "nir"

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 2 or px.dtype != np.uint8:
            raise InvalidConfig("pixels must be a 2-D uint8 array")
        if px.shape[0] < MIN_IMAGE_SIDE or px.shape[1] < MIN_IMAGE_SIDE:
            raise DimensionTooSmall(
                f"image '{self.id}' is {px.shape[1]}x{px.shape[0]}, "
                f"minimum is {MIN_IMAGE_SIDE}x{MIN_IMAGE_SIDE}"
            )
        if self.source_channel not in SOURCE_CHANNELS:
            raise InvalidConfig(f"unknown source_channel '{self.source_channel}'")
        object.__setattr__(self, "pixels", _readonly(px))

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def is_canonical_size(self) -> bool:
        return (self.width, self.height) == CANONICAL_SIZE


@dataclass(frozen=True)
class SampleMetadata:
    """One row of the acquisition metadata sheet.

    (subject_id, eye) is the identity class: the two eyes of one subject are
    distinct classes, and comparisons across them count as impostor pairs.
    """

    sample_id: str
    subject_id: str
    eye: str
    session: int
    pmi_hours: float
    age_years: int
    gender: str
    image_path: str = ""

    def __post_init__(self):
        if self.eye not in EYES:
            raise InvalidConfig(f"eye must be one of {EYES}, got '{self.eye}'")
        if self.gender not in GENDERS:
            raise InvalidConfig(f"gender must be one of {GENDERS}, got '{self.gender}'")
        if self.pmi_hours < 0:
            raise InvalidConfig("pmi_hours must be non-negative")
        if not (0 <= self.age_years <= 130):
            raise InvalidConfig("age_years must be within [0, 130]")
        if self.session < 1:
            raise InvalidConfig("session must be >= 1")

    @property
    def identity_class(self) -> tuple[str, str]:
        return (self.subject_id, self.eye)


@dataclass(frozen=True)
class Segmentation:
    """Pupil/iris circles plus an optional per-pixel usability mask.

    occlusion_mask, when present, has the source image's shape and is True
    where iris texture is usable (not occluded). image_shape records the
    (height, width) of the image the circles were fit on, when known.
    """

    pupil: Circle
    iris: Circle
    occlusion_mask: Optional[np.ndarray] = None
    image_shape: Optional[tuple[int, int]] = None

    def __post_init__(self):
        from .errors import DimensionMismatch

        if not (0 < self.pupil.r < self.iris.r):
            raise DegenerateGeometry(
                f"need 0 < pupil.r < iris.r, got {self.pupil.r} / {self.iris.r}"
            )
        if not self.iris.contains(self.pupil.cx, self.pupil.cy):
            raise DegenerateGeometry("pupil center lies outside the iris circle")
        if self.occlusion_mask is not None:
            m = np.asarray(self.occlusion_mask, dtype=bool)
            if self.image_shape is not None and m.shape != tuple(self.image_shape):
                raise DimensionMismatch(
                    f"mask is {m.shape}, image is {tuple(self.image_shape)}"
                )
            object.__setattr__(self, "occlusion_mask", _readonly(m))
        if self.image_shape is not None:
            object.__setattr__(self, "image_shape", tuple(self.image_shape))

    def validate_against(self, image: IrisImage) -> None:
        from .errors import DimensionMismatch

        if self.occlusion_mask is not None and self.occlusion_mask.shape != image.pixels.shape:
            raise DimensionMismatch(
                f"mask is {self.occlusion_mask.shape}, image is {image.pixels.shape}"
            )

    def to_dict(self) -> dict:
        return {
            "pupil": {"cx": self.pupil.cx, "cy": self.pupil.cy, "r": self.pupil.r},
            "iris": {"cx": self.iris.cx, "cy": self.iris.cy, "r": self.iris.r},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Segmentation":
        return cls(
            pupil=Circle(**{k: float(v) for k, v in d["pupil"].items()}),
            iris=Circle(**{k: float(v) for k, v in d["iris"].items()}),
        )


@dataclass(frozen=True)
class PolarIris:
    """Rubber-sheet unwrapped iris: texture and usability mask on an R x A grid.

    Column a corresponds to angle 2*pi*a/A measured from the +x axis.
    """

    texture: np.ndarray  # (R, A) float32, gray values in [0, 255]
    mask: np.ndarray     # (R, A) bool

    def __post_init__(self):
        t = np.asarray(self.texture, dtype=np.float32)
        m = np.asarray(self.mask, dtype=bool)
        if t.shape != m.shape:
            raise InvalidConfig("texture and mask must share dimensions")
        object.__setattr__(self, "texture", _readonly(t))
        object.__setattr__(self, "mask", _readonly(m))

    @property
    def rows(self) -> int:
        return self.texture.shape[0]

    @property
    def cols(self) -> int:
        return self.texture.shape[1]


@dataclass(frozen=True)
class IrisTemplate:
    """Binary iris code: one or more bitplanes plus a shared usability mask.

    Templates are comparable only when encoder_id and params_digest agree;
    the digest pins the full encoder configuration.
    """

    encoder_id: str
    bitplanes: np.ndarray    # (P, R, A) bool
    mask: np.ndarray         # (R, A) bool
    params_digest: bytes     # 8 bytes

    def __post_init__(self):
        if self.encoder_id not in ENCODER_IDS:
            raise InvalidConfig(f"unknown encoder_id '{self.encoder_id}'")
        bp = np.asarray(self.bitplanes, dtype=bool)
        m = np.asarray(self.mask, dtype=bool)
        if bp.ndim != 3 or bp.shape[0] < 1:
            raise InvalidConfig("bitplanes must be a (P, R, A) array with P >= 1")
        if bp.shape[1:] != m.shape:
            raise InvalidConfig("every bitplane must share dimensions with the mask")
        if len(self.params_digest) != 8:
            raise InvalidConfig("params_digest must be exactly 8 bytes")
        object.__setattr__(self, "bitplanes", _readonly(bp))
        object.__setattr__(self, "mask", _readonly(m))

    @property
    def rows(self) -> int:
        return self.mask.shape[0]

    @property
    def cols(self) -> int:
        return self.mask.shape[1]

    @property
    def bitplane_count(self) -> int:
        return self.bitplanes.shape[0]

    def compatible_with(self, other: "IrisTemplate") -> bool:
        return (
            self.encoder_id == other.encoder_id
            and self.params_digest == other.params_digest
            and self.bitplanes.shape == other.bitplanes.shape
        )


def params_digest(encoder_id: str, params: dict) -> bytes:
    """8-byte checksum of an encoder configuration.

    Any change to any field yields a different digest with overwhelming
    probability (sha256 truncated).
    """
    parts = [encoder_id]
    for key in sorted(params):
        parts.append(f"{key}={params[key]!r}")
    return hashlib.sha256("|".join(parts).encode("utf-8")).digest()[:8]


AGE_GROUP_LABELS = ("1-33", "34-66", "67-99")


def age_group_label(age_years: int) -> str:
    """Map an age to its analysis group; ages outside [1, 99] map to 'na'."""
    if 1 <= age_years <= 33:
        return "1-33"
    if 34 <= age_years <= 66:
        return "34-66"
    if 67 <= age_years <= 99:
        return "67-99"
    return "na"


def _pair_trait(a: str, b: str) -> str:
    return a if a == b else "mixed"


@dataclass(frozen=True)
class ComparisonRecord:
    """One probe/gallery pairing outcome plus the metadata evaluation needs.

    gender and age_group are the pair-level traits: the shared value when
    both samples agree, else "mixed" (demographic slices require both sides
    of a pair to belong to the group).
    """

    probe_id: str
    gallery_id: str
    label: str                     # "genuine" | "impostor"
    score: Optional[float]        # dissimilarity in [0, 1]; None when ftm
    best_shift: Optional[int]
    ftm: bool
    pmi_max_hours: float
    gender: str = "unknown"
    age_group: str = "na"

    def __post_init__(self):
        if self.label not in ("genuine", "impostor"):
            raise InvalidConfig(f"bad label '{self.label}'")
        if self.ftm:
            if self.score is not None:
                raise InvalidConfig("an FTM record cannot carry a score")
        else:
            if self.score is None:
                raise InvalidConfig("a non-FTM record must carry a score")
            if not (0.0 <= self.score <= 1.0) and not math.isnan(self.score):
                raise InvalidConfig(f"score {self.score} outside [0, 1]")

    @classmethod
    def from_samples(
        cls,
        probe: SampleMetadata,
        gallery: SampleMetadata,
        score: Optional[float],
        best_shift: Optional[int],
        ftm: bool,
    ) -> "ComparisonRecord":
        label = "genuine" if probe.identity_class == gallery.identity_class else "impostor"
        return cls(
            probe_id=probe.sample_id,
            gallery_id=gallery.sample_id,
            label=label,
            score=None if ftm else score,
            best_shift=None if ftm else best_shift,
            ftm=ftm,
            pmi_max_hours=max(probe.pmi_hours, gallery.pmi_hours),
            gender=_pair_trait(probe.gender, gallery.gender),
            age_group=_pair_trait(age_group_label(probe.age_years), age_group_label(gallery.age_years)),
        )


QUALITY_METRIC_KEYS = (
    "USABLE_IRIS_AREA",
    "IRIS_SCLERA_CONTRAST",
    "GRAY_SCALE_UTILIZATION",
    "IRIS_RADIUS",
    "PUPIL_IRIS_RATIO",
    "IRIS_PUPIL_CONCENTRICITY",
    "SHARPNESS",
)


@dataclass(frozen=True)
class QualityRecord:
    """The seven image-quality metrics; a field is None when not computable."""

    usable_iris_area: Optional[float] = None        # percent [0, 100]
    iris_sclera_contrast: Optional[float] = None    # [0, 100]
    gray_scale_utilization: Optional[float] = None  # bits >= 0
    iris_radius: Optional[float] = None             # pixels
    pupil_iris_ratio: Optional[float] = None        # [0, 1)
    iris_pupil_concentricity: Optional[float] = None  # [0, 1]
    sharpness: Optional[float] = None               # [0, 100]

    _FIELD_BY_KEY = {
        "USABLE_IRIS_AREA": "usable_iris_area",
        "IRIS_SCLERA_CONTRAST": "iris_sclera_contrast",
        "GRAY_SCALE_UTILIZATION": "gray_scale_utilization",
        "IRIS_RADIUS": "iris_radius",
        "PUPIL_IRIS_RATIO": "pupil_iris_ratio",
        "IRIS_PUPIL_CONCENTRICITY": "iris_pupil_concentricity",
        "SHARPNESS": "sharpness",
    }

    def metric(self, key: str) -> Optional[float]:
        try:
            return getattr(self, self._FIELD_BY_KEY[key])
        except KeyError:
            raise InvalidConfig(f"unknown quality metric '{key}'") from None

    def to_dict(self) -> dict:
        return {key: self.metric(key) for key in QUALITY_METRIC_KEYS}


@dataclass(frozen=True)
class MatchResult:
    """Outcome of one rotation-compensated template comparison."""

    score: float
    best_shift: int
    overlap_bits: int
    per_shift_scores: tuple  # aligned with shifts -max_shift..+max_shift; None where unusable


@dataclass
class EvaluationSummary:
    """Score-set metrics for one evaluation slice."""

    d_prime: Optional[float]
    eer: float
    auc: float
    ftm_rate: float
    n_genuine: int
    n_impostor: int
    histogram: dict = field(default_factory=dict)
    flags: tuple = ()

    def to_dict(self) -> dict:
        return {
            "d_prime": self.d_prime,
            "eer": self.eer,
            "auc": self.auc,
            "ftm_rate": self.ftm_rate,
            "n_genuine": self.n_genuine,
            "n_impostor": self.n_impostor,
            "histogram": self.histogram,
            "flags": list(self.flags),
        }


@dataclass
class PadSummary:
    """PAD score-set metrics: AUC plus 1-BPCER at fixed APCER levels."""

    auc: float
    bpcer_at_apcer: dict        # level -> 1-BPCER
    thresholds: dict = field(default_factory=dict)  # level -> operating threshold
    flags: dict = field(default_factory=dict)       # level -> tuple of flag strings
    histogram: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "auc": self.auc,
            "bpcer_at_apcer": {f"{lvl:g}": v for lvl, v in self.bpcer_at_apcer.items()},
            "thresholds": {f"{lvl:g}": v for lvl, v in self.thresholds.items()},
            "flags": {f"{lvl:g}": list(v) for lvl, v in self.flags.items()},
            "histogram": self.histogram,
        }


@dataclass(frozen=True)
class TestResult:
    """A hypothesis-test outcome (one-way ANOVA F or Kruskal-Wallis H)."""

    statistic: float
    p_value: float
    df: tuple            # (between, within) for F; (groups - 1,) for H
    flags: tuple = ()

    def to_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "p_value": self.p_value,
            "df": list(self.df),
            "flags": list(self.flags),
        }
