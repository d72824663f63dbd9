"""Image-quality metrics and the pair features built from them.

Seven metrics in the style of ISO/IEC 29794-6 are computed from an image
plus its segmentation. The exact formulas are documented approximations,
chosen to be deterministic and testable:

* USABLE_IRIS_AREA         100 * usable annulus pixels / annulus pixels
* IRIS_SCLERA_CONTRAST     clamp(100 * (Ms - Mi) / (Ms + Mi), 0, 100), with
                           Mi / Ms the median grays of the outer iris band
                           [0.8 r, r) and the sclera band [1.05 r, 1.25 r]
* GRAY_SCALE_UTILIZATION   Shannon entropy (bits) of the 256-bin histogram
                           over usable iris pixels
* IRIS_RADIUS              fitted iris radius, pixels
* PUPIL_IRIS_RATIO         pupil radius / iris radius
* IRIS_PUPIL_CONCENTRICITY 1 - center distance / iris radius
* SHARPNESS                100 * s / (s + c): s the variance of the 3x3
                           Laplacian over usable iris pixels, c = 1800

Medians (not means) make the contrast robust to the specular highlights
common in this imagery.
"""

from __future__ import annotations

import numpy as np
from scipy.signal import convolve2d

from .errors import EmptyInput, MetricAbsent
from .model import IrisImage, QualityRecord, Segmentation
from .segmentation import default_annulus_mask

SHARPNESS_CONSTANT = 1800.0

_LAPLACIAN = np.array([[0, 1, 0], [1, -4, 1], [0, 1, 0]], dtype=np.float64)


def _entropy_bits(values: np.ndarray) -> float:
    counts = np.bincount(values.reshape(-1), minlength=256).astype(np.float64)
    total = counts.sum()
    p = counts[counts > 0] / total
    return float(-(p * np.log2(p)).sum())


def compute_quality(img: IrisImage, seg: Segmentation) -> QualityRecord:
    """Compute the seven metrics; pixel-dependent ones are None when the
    usable iris area is empty."""
    seg.validate_against(img)
    h, w = img.pixels.shape
    annulus = default_annulus_mask(seg, (h, w))
    usable = annulus if seg.occlusion_mask is None else (annulus & seg.occlusion_mask)

    r_i = float(seg.iris.r)
    geometry = {
        "iris_radius": r_i,
        "pupil_iris_ratio": float(seg.pupil.r) / r_i,
        "iris_pupil_concentricity": max(0.0, 1.0 - float(np.hypot(
            seg.pupil.cx - seg.iris.cx, seg.pupil.cy - seg.iris.cy)) / r_i),
    }

    n_annulus = int(np.count_nonzero(annulus))
    n_usable = int(np.count_nonzero(usable))
    if n_annulus == 0 or n_usable == 0:
        return QualityRecord(usable_iris_area=0.0 if n_annulus else None, **geometry)

    area = 100.0 * n_usable / n_annulus

    pixels = img.pixels.astype(np.float64)
    yy, xx = np.mgrid[0:h, 0:w]
    d_iris = np.hypot(xx - seg.iris.cx, yy - seg.iris.cy)
    iris_band = (d_iris >= 0.8 * r_i) & (d_iris < r_i) & usable
    sclera_band = (d_iris >= 1.05 * r_i) & (d_iris <= 1.25 * r_i)
    contrast = None
    if iris_band.any() and sclera_band.any():
        m_i = float(np.median(pixels[iris_band]))
        m_s = float(np.median(pixels[sclera_band]))
        contrast = 0.0 if m_i + m_s == 0 else float(
            np.clip(100.0 * (m_s - m_i) / (m_s + m_i), 0.0, 100.0))

    utilization = _entropy_bits(img.pixels[usable])

    lap = convolve2d(pixels, _LAPLACIAN, mode="same", boundary="symm")
    interior = usable.copy()
    interior[0, :] = interior[-1, :] = False
    interior[:, 0] = interior[:, -1] = False
    sharp = None
    if np.count_nonzero(interior) >= 2:
        s = float(np.var(lap[interior]))
        sharp = 100.0 * s / (s + SHARPNESS_CONSTANT)

    return QualityRecord(
        usable_iris_area=area,
        iris_sclera_contrast=contrast,
        gray_scale_utilization=utilization,
        sharpness=sharp,
        **geometry,
    )


def pair_features(f1: QualityRecord, f2: QualityRecord, metric: str) -> tuple[float, float]:
    """((f1 + f2) / 2, f1 - f2) for the chosen metric key."""
    v1, v2 = f1.metric(metric), f2.metric(metric)
    if v1 is None or v2 is None:
        raise MetricAbsent(f"metric '{metric}' absent from one of the records")
    return ((v1 + v2) / 2.0, v1 - v2)


def quality_heatmap_bins(
    pairs: list[tuple[float, float]],
    bins: tuple[int, int] = (20, 20),
) -> dict:
    """2-D density grid of (average, difference) pair features.

    Bin edges span each axis's data range uniformly; the grid sums to 1.
    """
    if not pairs:
        raise EmptyInput("no pair features to bin")
    avg = np.array([p[0] for p in pairs], dtype=np.float64)
    diff = np.array([p[1] for p in pairs], dtype=np.float64)
    nx, ny = bins

    def edges(values: np.ndarray, n: int) -> np.ndarray:
        lo, hi = float(values.min()), float(values.max())
        if lo == hi:  # degenerate spread still needs a nonzero bin width
            lo, hi = lo - 0.5, hi + 0.5
        return np.linspace(lo, hi, n + 1)

    x_edges = edges(avg, nx)
    y_edges = edges(diff, ny)
    grid, _, _ = np.histogram2d(avg, diff, bins=[x_edges, y_edges])
    grid /= grid.sum()
    return {
        "density": grid.tolist(),
        "avg_edges": x_edges.tolist(),
        "diff_edges": y_edges.tolist(),
    }
