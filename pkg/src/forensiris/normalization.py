"""Rubber-sheet unwrapping of the segmented annulus onto a fixed polar grid.

Sample point (r_idx, a_idx) lies on the straight line between the pupil
boundary point and the iris boundary point at angle 2*pi*a_idx/A, at
fraction (r_idx + 0.5)/R of the way out (the half-sample offset keeps the
exact boundary rows out of the grid). Non-concentric circles are handled by
interpolating the per-angle boundary points. Pixels are read with bilinear
interpolation; the transferred mask is conservative: a polar bit is set only
when all four interpolation neighbors are inside the frame and usable.
"""

from __future__ import annotations

import numpy as np

from .errors import DegenerateGeometry, InvalidConfig, OutOfFrame
from .imageio import write_pbm, write_pgm
from .model import IrisImage, PolarIris, Segmentation

DEFAULT_RADIAL_RES = 64
DEFAULT_ANGULAR_RES = 512

# Above this fraction of sample points outside the frame the unwrap is
# rejected outright instead of returning a mostly-empty grid.
OUT_OF_FRAME_LIMIT = 0.95


def rubber_sheet(
    img: IrisImage,
    seg: Segmentation,
    radial_res: int = DEFAULT_RADIAL_RES,
    angular_res: int = DEFAULT_ANGULAR_RES,
) -> PolarIris:
    if radial_res < 8 or angular_res < 64:
        raise InvalidConfig("polar grid must be at least 8 x 64")
    if seg.pupil.r >= seg.iris.r:
        raise DegenerateGeometry("pupil radius must stay below the iris radius")
    seg.validate_against(img)

    h, w = img.pixels.shape
    theta = 2.0 * np.pi * np.arange(angular_res) / angular_res
    frac = (np.arange(radial_res) + 0.5) / radial_res

    cos_t, sin_t = np.cos(theta), np.sin(theta)
    px = seg.pupil.cx + seg.pupil.r * cos_t
    py = seg.pupil.cy + seg.pupil.r * sin_t
    ix = seg.iris.cx + seg.iris.r * cos_t
    iy = seg.iris.cy + seg.iris.r * sin_t

    # (R, A) sample coordinates.
    sx = (1.0 - frac)[:, None] * px[None, :] + frac[:, None] * ix[None, :]
    sy = (1.0 - frac)[:, None] * py[None, :] + frac[:, None] * iy[None, :]

    inside = (sx >= 0) & (sx <= w - 1) & (sy >= 0) & (sy <= h - 1)
    out_fraction = 1.0 - inside.mean()
    if out_fraction > OUT_OF_FRAME_LIMIT:
        raise OutOfFrame(
            f"{out_fraction:.0%} of rubber-sheet sample points fall outside the frame"
        )

    x0 = np.clip(np.floor(sx), 0, w - 2).astype(np.int64)
    y0 = np.clip(np.floor(sy), 0, h - 2).astype(np.int64)
    fx = np.clip(sx, 0, w - 1) - x0
    fy = np.clip(sy, 0, h - 1) - y0

    p = img.pixels.astype(np.float64)
    texture = (
        p[y0, x0] * (1 - fx) * (1 - fy)
        + p[y0, x0 + 1] * fx * (1 - fy)
        + p[y0 + 1, x0] * (1 - fx) * fy
        + p[y0 + 1, x0 + 1] * fx * fy
    )

    if seg.occlusion_mask is not None:
        u = seg.occlusion_mask
        usable = u[y0, x0] & u[y0, x0 + 1] & u[y0 + 1, x0] & u[y0 + 1, x0 + 1]
    else:
        usable = np.ones_like(inside)
    mask = inside & usable
    return PolarIris(texture=texture.astype(np.float32), mask=mask)


def polar_mask_coverage(polar: PolarIris) -> float:
    """Fraction of grid cells carrying usable texture."""
    return float(np.count_nonzero(polar.mask)) / polar.mask.size


def dump_polar(polar: PolarIris, texture_path, mask_path) -> None:
    """Debug dump: texture as PGM, mask as PBM."""
    write_pgm(texture_path, polar.texture)
    write_pbm(mask_path, polar.mask)
