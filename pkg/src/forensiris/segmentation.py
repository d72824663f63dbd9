"""Pupil and iris boundary localization.

The boundary finder is a contrast-adjusted circular Hough transform: the
image is gamma-adjusted on normalized intensities, a 3x3 Sobel gradient is
thresholded, and each edge pixel votes for circle centers along the negative
gradient direction (both the pupil/iris and iris/sclera transitions are
dark-inside-bright-outside, so votes travel toward the darker interior).
The radius sweep is coarse-to-fine: a first pass steps radii by
``accumulator_step``, a second pass refines at unit steps around the winner.

Occlusion masks are not estimated here; externally produced masks are
ingested via attach_mask, and default_annulus_mask provides the plain
geometric fallback.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import uniform_filter
from scipy.signal import convolve2d

from .errors import DegenerateGeometry, DimensionMismatch, InvalidConfig, NoBoundaryFound
from .model import Circle, IrisImage, Segmentation

# Pre-flipped so convolve2d (which convolves, i.e. flips) yields the usual
# correlation-convention Sobel derivative (positive toward increasing x/y).
_SOBEL_X = np.array([[1, 0, -1], [2, 0, -2], [1, 0, -1]], dtype=np.float64)
_SOBEL_Y = _SOBEL_X.T

# Fraction of the ideal perimeter vote count a peak must reach; below it the
# sample is declared unusable (feeds FTM accounting downstream).
DEFAULT_MIN_PEAK_FRACTION = 0.12


@dataclass(frozen=True)
class HoughConfig:
    pupil_r_range: tuple[int, int] = (20, 80)
    iris_r_range: tuple[int, int] = (60, 180)
    gradient_threshold: float = 20.0   # approximate edge step height, gray levels
    accumulator_step: int = 4
    contrast_gamma: float = 1.6
    min_peak_fraction: float = DEFAULT_MIN_PEAK_FRACTION

    def __post_init__(self):
        if not (0 < self.pupil_r_range[0] < self.pupil_r_range[1]):
            raise InvalidConfig(f"bad pupil_r_range {self.pupil_r_range}")
        if not (0 < self.iris_r_range[0] < self.iris_r_range[1]):
            raise InvalidConfig(f"bad iris_r_range {self.iris_r_range}")
        if self.pupil_r_range[1] >= self.iris_r_range[1]:
            raise InvalidConfig(
                "pupil radius range upper bound must stay below the iris range upper bound"
            )
        if self.contrast_gamma <= 0:
            raise InvalidConfig("contrast_gamma must be positive")
        if self.accumulator_step < 1:
            raise InvalidConfig("accumulator_step must be >= 1")


def _edge_field(img: IrisImage, cfg: HoughConfig):
    """Gamma-adjusted Sobel gradient field, thresholded to edge pixels."""
    norm = img.pixels.astype(np.float64) / 255.0
    adj = norm ** cfg.contrast_gamma
    gx = convolve2d(adj, _SOBEL_X, mode="same", boundary="symm")
    gy = convolve2d(adj, _SOBEL_Y, mode="same", boundary="symm")
    mag = np.hypot(gx, gy)
    # A step of h gray levels yields Sobel magnitude ~4h/255 on normalized data.
    step_gray = mag * 255.0 / 4.0
    ys, xs = np.nonzero(step_gray >= cfg.gradient_threshold)
    if ys.size == 0:
        return None
    m = mag[ys, xs]
    return xs.astype(np.float64), ys.astype(np.float64), gx[ys, xs] / m, gy[ys, xs] / m


def _vote(xs, ys, ux, uy, radius, shape, center_ok=None):
    """Accumulate one radius slice; returns the blurred accumulator."""
    h, w = shape
    cx = np.rint(xs - radius * ux).astype(np.int64)
    cy = np.rint(ys - radius * uy).astype(np.int64)
    keep = (cx >= 0) & (cx < w) & (cy >= 0) & (cy < h)
    acc = np.zeros(shape, dtype=np.float64)
    np.add.at(acc, (cy[keep], cx[keep]), 1.0)
    # 3x3 box blur absorbs rasterization jitter; scale back to vote counts.
    acc = uniform_filter(acc, size=3, mode="constant") * 9.0
    if center_ok is not None:
        acc[~center_ok] = 0.0
    return acc


def _best_circle(xs, ys, ux, uy, r_lo, r_hi, step, shape, center_ok=None):
    """Peak (votes, Circle) over the radius range, coarse-to-fine.

    Ties break toward the smallest radius, then smallest (cy, cx).
    """
    def scan(radii, best):
        for r in radii:
            acc = _vote(xs, ys, ux, uy, r, shape, center_ok)
            peak = acc.max()
            if peak <= 0:
                continue
            cyx = np.argwhere(acc == peak)
            cy, cx = min(map(tuple, cyx))
            cand = (peak, r, cy, cx)
            if best is None or (cand[0], -cand[1], -cand[2], -cand[3]) > \
                    (best[0], -best[1], -best[2], -best[3]):
                best = cand
        return best

    coarse_radii = list(range(r_lo, r_hi + 1, step))
    if coarse_radii[-1] != r_hi:
        coarse_radii.append(r_hi)
    best = scan(coarse_radii, None)
    if best is None:
        return None
    if step > 1:
        r0 = best[1]
        fine = [r for r in range(max(r_lo, r0 - step + 1), min(r_hi, r0 + step - 1) + 1)
                if r not in coarse_radii]
        best = scan(fine, best)
    votes, r, cy, cx = best
    return votes, Circle(cx=float(cx), cy=float(cy), r=float(r))


def segment(img: IrisImage, cfg: HoughConfig = HoughConfig()) -> Segmentation:
    """Locate the iris and pupil circles.

    Raises NoBoundaryFound when the best accumulator peak stays below
    ``min_peak_fraction`` of the ideal perimeter vote count (2*pi*r), and
    DegenerateGeometry if the fitted pupil is not strictly inside the iris.
    """
    h, w = img.pixels.shape
    if cfg.iris_r_range[1] * 2 > max(h, w):
        raise InvalidConfig("iris radius range does not fit inside the image")
    edges = _edge_field(img, cfg)
    if edges is None:
        raise NoBoundaryFound("no gradient magnitude above threshold")
    xs, ys, ux, uy = edges

    found = _best_circle(xs, ys, ux, uy, *cfg.iris_r_range, cfg.accumulator_step, (h, w))
    if found is None:
        raise NoBoundaryFound("empty iris accumulator")
    iris_votes, iris = found
    if iris_votes < cfg.min_peak_fraction * 2.0 * np.pi * iris.r:
        raise NoBoundaryFound(
            f"iris peak {iris_votes:.0f} below threshold at r={iris.r:.0f}"
        )

    # Pupil search constrained inside the iris candidate.
    yy, xx = np.mgrid[0:h, 0:w]
    center_ok = (xx - iris.cx) ** 2 + (yy - iris.cy) ** 2 <= (0.6 * iris.r) ** 2
    p_lo, p_hi = cfg.pupil_r_range
    p_hi = min(p_hi, int(iris.r) - 1)
    if p_hi < p_lo:
        raise DegenerateGeometry("pupil radius range collapses inside the fitted iris")
    found = _best_circle(xs, ys, ux, uy, p_lo, p_hi, cfg.accumulator_step, (h, w), center_ok)
    if found is None:
        raise NoBoundaryFound("empty pupil accumulator")
    pupil_votes, pupil = found
    if pupil_votes < cfg.min_peak_fraction * 2.0 * np.pi * pupil.r:
        raise NoBoundaryFound(
            f"pupil peak {pupil_votes:.0f} below threshold at r={pupil.r:.0f}"
        )
    if pupil.r >= iris.r:
        raise DegenerateGeometry("fitted pupil radius reached the iris radius")
    return Segmentation(pupil=pupil, iris=iris, image_shape=(h, w))


def attach_mask(seg: Segmentation, mask_image: IrisImage, threshold: int = 128) -> Segmentation:
    """Ingest an externally produced occlusion mask.

    Mask bit is 1 (usable) where the mask pixel is >= threshold. The mask
    must match the dimensions of the image the segmentation was fit on.
    """
    mask_pixels = mask_image.pixels
    if seg.image_shape is not None and mask_pixels.shape != seg.image_shape:
        raise DimensionMismatch(
            f"mask is {mask_pixels.shape}, image is {seg.image_shape}"
        )
    usable = mask_pixels >= threshold
    return Segmentation(pupil=seg.pupil, iris=seg.iris, occlusion_mask=usable,
                        image_shape=seg.image_shape or mask_pixels.shape)


def default_annulus_mask(seg: Segmentation, image_dims: tuple[int, int]) -> np.ndarray:
    """Boolean map set exactly on pixels strictly inside the iris circle and
    strictly outside the pupil circle. image_dims is (height, width)."""
    h, w = image_dims
    yy, xx = np.mgrid[0:h, 0:w]
    d2_iris = (xx - seg.iris.cx) ** 2 + (yy - seg.iris.cy) ** 2
    d2_pupil = (xx - seg.pupil.cx) ** 2 + (yy - seg.pupil.cy) ** 2
    return (d2_iris < seg.iris.r ** 2) & (d2_pupil > seg.pupil.r ** 2)
