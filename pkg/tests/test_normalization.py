import math

import numpy as np
import pytest

from forensiris.errors import DegenerateGeometry, OutOfFrame
from forensiris.model import Circle, IrisImage, PolarIris, Segmentation
from forensiris.normalization import polar_mask_coverage, rubber_sheet
from forensiris.synth import render_eye

SEG = Segmentation(pupil=Circle(320, 240, 45), iris=Circle(320, 240, 140))


class TestRubberSheet:
    def test_constant_image_gives_constant_texture(self):
        img = IrisImage(id="c", pixels=np.full((480, 640), 128, dtype=np.uint8))
        polar = rubber_sheet(img, SEG, 64, 512)
        assert polar.texture.shape == (64, 512)
        assert np.allclose(polar.texture, 128.0)
        assert polar.mask.all()

    def test_output_dims_fixed_regardless_of_input_size(self):
        img = IrisImage(id="c", pixels=np.full((300, 300), 10, dtype=np.uint8))
        seg = Segmentation(pupil=Circle(150, 150, 20), iris=Circle(150, 150, 100))
        polar = rubber_sheet(img, seg, 32, 256)
        assert polar.texture.shape == (32, 256)

    def test_rotation_becomes_column_shift(self):
        # Rendering the same identity rotated by whole grid columns must
        # circularly shift the unwrapped texture; re-rendering (instead of
        # resampling) keeps the comparison free of interpolation error.
        A = 512
        img0, truth = render_eye(identity_seed=3)
        polar0 = rubber_sheet(img0, truth, 64, A)
        for k in (1, 7, 128, 255):
            imgk, _ = render_eye(identity_seed=3, rotation_rad=2 * math.pi * k / A)
            polark = rubber_sheet(imgk, truth, 64, A)
            rolled = np.roll(polar0.texture, k, axis=1)
            # Exclude the softened pupil/iris boundary rows.
            diff = np.abs(polark.texture[4:-4] - rolled[4:-4])
            assert diff.max() <= 2.0

    def test_degenerate_geometry(self):
        img = IrisImage(id="c", pixels=np.full((480, 640), 128, dtype=np.uint8))
        with pytest.raises(DegenerateGeometry):
            Segmentation(pupil=Circle(320, 240, 140), iris=Circle(320, 240, 140))

    def test_out_of_frame(self):
        img = IrisImage(id="c", pixels=np.full((64, 64), 128, dtype=np.uint8))
        seg = Segmentation(pupil=Circle(500, 500, 45), iris=Circle(500, 500, 150))
        with pytest.raises(OutOfFrame):
            rubber_sheet(img, seg, 64, 512)

    def test_partially_out_of_frame_clears_mask_bits(self):
        img = IrisImage(id="c", pixels=np.full((480, 640), 128, dtype=np.uint8))
        seg = Segmentation(pupil=Circle(30, 240, 20), iris=Circle(30, 240, 100))
        polar = rubber_sheet(img, seg, 64, 512)
        assert not polar.mask.all()
        assert polar.mask.any()

    def test_mask_transfer_is_conservative(self):
        img, truth = render_eye(identity_seed=4, occlusion=0.15)
        polar = rubber_sheet(img, truth, 64, 512)
        # Any polar cell whose source pixel is occluded must be masked out.
        h, w = img.pixels.shape
        theta = 2 * math.pi * np.arange(512) / 512
        frac = (np.arange(64) + 0.5) / 64
        sx = (truth.pupil.cx + truth.pupil.r * np.cos(theta))[None, :] * (1 - frac)[:, None] \
            + (truth.iris.cx + truth.iris.r * np.cos(theta))[None, :] * frac[:, None]
        sy = (truth.pupil.cy + truth.pupil.r * np.sin(theta))[None, :] * (1 - frac)[:, None] \
            + (truth.iris.cy + truth.iris.r * np.sin(theta))[None, :] * frac[:, None]
        xi = np.clip(np.rint(sx), 0, w - 1).astype(int)
        yi = np.clip(np.rint(sy), 0, h - 1).astype(int)
        occluded_center = ~truth.occlusion_mask[yi, xi]
        # Nearest-pixel occlusion implies at least one of the four bilinear
        # neighbors is occluded, so the polar mask must be 0 there.
        assert not polar.mask[occluded_center].any()


class TestPolarMaskCoverage:
    def test_trivial_fractions(self):
        ones = PolarIris(texture=np.zeros((8, 64)), mask=np.ones((8, 64), dtype=bool))
        zeros = PolarIris(texture=np.zeros((8, 64)), mask=np.zeros((8, 64), dtype=bool))
        half = np.zeros((8, 64), dtype=bool)
        half[:4] = True
        assert polar_mask_coverage(ones) == 1.0
        assert polar_mask_coverage(zeros) == 0.0
        assert polar_mask_coverage(PolarIris(texture=np.zeros((8, 64)), mask=half)) == 0.5
