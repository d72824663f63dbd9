"""Synthetic eye rendering for tests, demos and fixtures.

An identity is a seeded band-limited texture field on the iris annulus,
2-pi-periodic in angle. Captures of the same identity can differ by
in-plane rotation, additive sensor noise, eyelid occlusion and defocus, so
genuine/impostor score distributions behave like the real thing without any
restricted data.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.ndimage import uniform_filter

from .imageio import write_png
from .model import Circle, IrisImage, SampleMetadata, Segmentation

PUPIL_GRAY = 20.0
SCLERA_GRAY = 235.0
EYELID_GRAY = 70.0
EDGE_SOFTNESS = 1.5  # px, anti-aliasing width of the circular boundaries

TEXTURE_COMPONENTS = 24
TEXTURE_AMPLITUDE = 48.0


@dataclass(frozen=True)
class TextureField:
    """Band-limited random iris texture, callable on polar coordinates."""

    angular_freqs: np.ndarray   # integers, so the field wraps in angle
    radial_freqs: np.ndarray
    phases_a: np.ndarray
    phases_r: np.ndarray
    amplitudes: np.ndarray

    @classmethod
    def from_seed(cls, seed: int) -> "TextureField":
        rng = np.random.default_rng(seed)
        n = TEXTURE_COMPONENTS
        return cls(
            angular_freqs=rng.integers(2, 24, size=n).astype(np.float64),
            radial_freqs=rng.uniform(2.0, 14.0, size=n),
            phases_a=rng.uniform(0, 2 * np.pi, size=n),
            phases_r=rng.uniform(0, 2 * np.pi, size=n),
            amplitudes=rng.uniform(0.4, 1.0, size=n),
        )

    def __call__(self, rho: np.ndarray, theta: np.ndarray) -> np.ndarray:
        """Gray values around 128 for normalized radius rho in [0, 1]."""
        acc = np.zeros(np.broadcast(rho, theta).shape)
        for m, w, pa, pr, amp in zip(self.angular_freqs, self.radial_freqs,
                                     self.phases_a, self.phases_r, self.amplitudes):
            acc += amp * np.cos(m * theta + pa) * np.cos(w * rho + pr)
        scale = TEXTURE_AMPLITUDE / math.sqrt(TEXTURE_COMPONENTS / 2.0)
        return 128.0 + scale * acc


def _smoothstep(x: np.ndarray) -> np.ndarray:
    t = np.clip(x, 0.0, 1.0)
    return t * t * (3.0 - 2.0 * t)


def render_eye(
    identity_seed: int,
    width: int = 640,
    height: int = 480,
    center: tuple[float, float] = (320.0, 240.0),
    pupil_r: float = 45.0,
    iris_r: float = 140.0,
    rotation_rad: float = 0.0,
    noise_sigma: float = 0.0,
    occlusion: float = 0.0,
    defocus: int = 0,
    noise_seed: Optional[int] = None,
    image_id: str = "synthetic",
) -> tuple[IrisImage, Segmentation]:
    """Render one capture and its ground-truth segmentation.

    rotation_rad rotates the iris texture in the direction of increasing
    polar angle, so a rotation of 2*pi*k/A shows up as a +k column shift of
    the unwrapped texture. occlusion is the approximate fraction of the
    iris disk covered by an upper eyelid.
    """
    cx, cy = center
    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
    dx, dy = xx - cx, yy - cy
    dist = np.hypot(dx, dy)
    theta = np.arctan2(dy, dx)

    field = TextureField.from_seed(identity_seed)
    rho = np.clip((dist - pupil_r) / (iris_r - pupil_r), 0.0, 1.0)
    iris_vals = field(rho, theta - rotation_rad)

    # Composite pupil -> iris -> sclera with soft edges.
    w_pupil = _smoothstep((dist - pupil_r) / EDGE_SOFTNESS + 0.5)
    w_iris = _smoothstep((dist - iris_r) / EDGE_SOFTNESS + 0.5)
    img = PUPIL_GRAY * (1 - w_pupil) + iris_vals * w_pupil
    img = img * (1 - w_iris) + SCLERA_GRAY * w_iris

    occl_mask = np.ones((height, width), dtype=bool)
    if occlusion > 0.0:
        # Upper eyelid: a horizontal lid edge placed so the covered chord
        # cuts roughly the requested fraction of the iris disk.
        drop = _chord_depth_for_fraction(occlusion)
        y_lid = cy - iris_r * (1.0 - drop)
        w_lid = _smoothstep((yy - y_lid) / EDGE_SOFTNESS + 0.5)
        img = EYELID_GRAY * (1 - w_lid) + img * w_lid
        occl_mask = yy >= (y_lid + EDGE_SOFTNESS)

    if noise_sigma > 0.0:
        rng = np.random.default_rng(identity_seed if noise_seed is None else noise_seed)
        img = img + rng.normal(0.0, noise_sigma, size=img.shape)
    if defocus > 0:
        # Post-capture box blur, so a defocused render is exactly the
        # blurred version of the corresponding sharp one.
        img = uniform_filter(img, size=defocus, mode="nearest")

    pixels = np.clip(np.rint(img), 0, 255).astype(np.uint8)
    image = IrisImage(id=image_id, pixels=pixels, source_channel="nir")
    truth = Segmentation(
        pupil=Circle(cx=cx, cy=cy, r=pupil_r),
        iris=Circle(cx=cx, cy=cy, r=iris_r),
        occlusion_mask=occl_mask if occlusion > 0.0 else None,
        image_shape=(height, width),
    )
    return image, truth


def _chord_depth_for_fraction(fraction: float) -> float:
    """Depth (as a fraction of r) an upper chord must reach to cover the
    given fraction of a disk's area; solved numerically once per call."""
    fraction = min(max(fraction, 0.0), 0.5)
    lo, hi = 0.0, 1.0
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        h = mid  # chord depth in radii
        # circular segment area fraction for depth h of a unit disk
        seg = (math.acos(1 - h) - (1 - h) * math.sqrt(max(2 * h - h * h, 0.0))) / math.pi
        if seg < fraction:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# Fixture generation


def write_fixture(
    out_dir,
    n_identities: int = 2,
    captures: int = 3,
    noise_sigma: float = 4.0,
    max_rotation_deg: float = 2.0,
    occlusion: float = 0.0,
    seed: int = 7,
) -> Path:
    """Write a small synthetic dataset (PNG images + metadata CSV) and
    return the metadata path. Identity class i becomes subject S<i>, left
    eye, with one sample per session."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    rows = []
    for ident in range(n_identities):
        age = int(rng.integers(20, 90))
        gender = "male" if ident % 2 == 0 else "female"
        for cap in range(captures):
            sample_id = f"S{ident:03d}-L-{cap + 1}"
            rot = math.radians(float(rng.uniform(-max_rotation_deg, max_rotation_deg)))
            img, truth = render_eye(
                identity_seed=seed * 1000 + ident,
                rotation_rad=rot,
                noise_sigma=noise_sigma,
                occlusion=occlusion,
                noise_seed=seed * 100000 + ident * 100 + cap,
                image_id=sample_id,
            )
            file_name = f"{sample_id}.png"
            write_png(out / file_name, img.pixels)
            if occlusion > 0.0 and truth.occlusion_mask is not None:
                write_png(out / f"{sample_id}.mask.png",
                          np.where(truth.occlusion_mask, 255, 0).astype(np.uint8))
            rows.append({
                "sample_id": sample_id,
                "subject_id": f"S{ident:03d}",
                "eye": "left",
                "session": cap + 1,
                "pmi_hours": round(float(rng.uniform(2.0, 200.0)), 1),
                "age_years": age,
                "gender": gender,
                "image_path": file_name,
            })
    meta_path = out / "metadata.csv"
    with open(meta_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)
    return meta_path
