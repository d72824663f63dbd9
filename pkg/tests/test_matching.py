import math

import numpy as np
import pytest

from forensiris.errors import IncompatibleTemplates, InsufficientOverlap
from forensiris.matching import (
    PipelineConfig,
    fractional_hamming,
    match_images,
    similarity_heatmap,
    template_from_image,
)
from forensiris.model import IrisImage, IrisTemplate
from forensiris.synth import render_eye

from conftest import random_template
from oracles import hamming_oracle


def complement(t: IrisTemplate) -> IrisTemplate:
    return IrisTemplate(encoder_id=t.encoder_id, bitplanes=~t.bitplanes,
                        mask=t.mask, params_digest=t.params_digest)


class TestFractionalHamming:
    def test_identity_is_zero(self):
        rng = np.random.default_rng(0)
        t = random_template(rng, mask_density=1.0)
        r = fractional_hamming(t, t, max_shift=8)
        assert r.score == 0.0
        assert r.best_shift == 0
        assert r.overlap_bits == t.mask.size

    def test_complement_is_one(self):
        rng = np.random.default_rng(1)
        t = random_template(rng, mask_density=1.0)
        r = fractional_hamming(t, complement(t), max_shift=0)
        assert r.score == 1.0

    def test_oracle_equivalence_exact(self):
        rng = np.random.default_rng(2)
        for trial in range(50):
            rows = int(rng.integers(4, 10))
            cols = int(rng.integers(8, 24))
            planes = int(rng.integers(1, 5))
            max_shift = int(rng.integers(0, 5))
            a = random_template(rng, rows, cols, planes, mask_density=0.7)
            b = random_template(rng, rows, cols, planes, mask_density=0.7)
            expected = hamming_oracle(a.bitplanes, a.mask, b.bitplanes, b.mask,
                                      max_shift, overlap_floor=0.0)
            got = fractional_hamming(a, b, max_shift, overlap_floor=0.0)
            assert got.score == expected[0]
            assert got.best_shift == expected[1]
            assert got.overlap_bits == expected[2]

    def test_symmetry(self):
        rng = np.random.default_rng(3)
        for trial in range(20):
            a = random_template(rng, rows=16, cols=64, planes=3, mask_density=0.8)
            b = random_template(rng, rows=16, cols=64, planes=3, mask_density=0.8)
            ra = fractional_hamming(a, b, max_shift=6)
            rb = fractional_hamming(b, a, max_shift=6)
            assert ra.score == rb.score
            assert ra.best_shift == -rb.best_shift

    def test_monotone_in_max_shift(self):
        rng = np.random.default_rng(4)
        for trial in range(10):
            a = random_template(rng, rows=16, cols=64, planes=2, mask_density=0.9)
            b = random_template(rng, rows=16, cols=64, planes=2, mask_density=0.9)
            scores = [fractional_hamming(a, b, max_shift=s).score for s in range(0, 9)]
            assert all(s2 <= s1 for s1, s2 in zip(scores, scores[1:]))

    def test_incompatible_templates(self):
        rng = np.random.default_rng(5)
        a = random_template(rng, digest=b"\x01" * 8)
        b = random_template(rng, digest=b"\x02" * 8)
        with pytest.raises(IncompatibleTemplates):
            fractional_hamming(a, b)

    def test_insufficient_overlap(self):
        rng = np.random.default_rng(6)
        a = random_template(rng, mask_density=1.0)
        empty = IrisTemplate(encoder_id=a.encoder_id,
                             bitplanes=a.bitplanes,
                             mask=np.zeros_like(a.mask),
                             params_digest=a.params_digest)
        with pytest.raises(InsufficientOverlap):
            fractional_hamming(a, empty)

    def test_tie_break_prefers_small_then_negative_shift(self):
        bits = np.zeros((1, 4, 8), dtype=bool)
        mask = np.ones((4, 8), dtype=bool)
        t = IrisTemplate(encoder_id="bif", bitplanes=bits, mask=mask,
                         params_digest=b"\x00" * 8)
        r = fractional_hamming(t, t, max_shift=4)  # all shifts score 0
        assert r.best_shift == 0
        u = IrisTemplate(encoder_id="bif", bitplanes=~bits, mask=mask,
                         params_digest=b"\x00" * 8)
        r = fractional_hamming(t, u, max_shift=4)  # all shifts score 1
        assert r.best_shift == 0


class TestSimilarityHeatmap:
    def test_identical_templates_map_to_one(self):
        rng = np.random.default_rng(7)
        t = random_template(rng, rows=16, cols=64, mask_density=1.0)
        hm = similarity_heatmap(t, t, shift=0)
        assert np.nanmin(hm) == 1.0

    def test_complement_maps_to_zero(self):
        rng = np.random.default_rng(8)
        t = random_template(rng, rows=16, cols=64, mask_density=1.0)
        hm = similarity_heatmap(t, complement(t), shift=0)
        assert np.nanmax(hm) == 0.0

    def test_random_pair_mean_is_half(self):
        rng = np.random.default_rng(9)
        a = random_template(rng, rows=64, cols=512, planes=4, mask_density=1.0)
        b = random_template(rng, rows=64, cols=512, planes=4, mask_density=1.0)
        hm = similarity_heatmap(a, b, shift=0)
        assert abs(np.nanmean(hm) - 0.5) <= 0.02

    def test_off_mask_cells_are_absent(self):
        rng = np.random.default_rng(10)
        a = random_template(rng, rows=16, cols=64, mask_density=0.5)
        b = random_template(rng, rows=16, cols=64, mask_density=0.5)
        hm = similarity_heatmap(a, b, shift=0)
        joint = a.mask & b.mask
        assert np.isnan(hm[~joint]).all()
        assert not np.isnan(hm[joint]).any()


class TestMatchImages:
    def test_small_rotation_recovers_shift(self):
        cfg = PipelineConfig(encoder="bif")
        rot = math.radians(2.0)
        img_a, _ = render_eye(identity_seed=20, image_id="a")
        img_b, _ = render_eye(identity_seed=20, rotation_rad=rot, image_id="b")
        rec = match_images(img_a, img_b, cfg)
        assert not rec.ftm
        assert rec.score < 0.2
        expected_shift = round(rot / (2 * math.pi) * cfg.angular_res)
        assert abs(rec.best_shift - expected_shift) <= 1

    def test_blank_probe_is_ftm(self):
        cfg = PipelineConfig(encoder="bif")
        blank = IrisImage(id="blank", pixels=np.full((480, 640), 128, dtype=np.uint8))
        eye, _ = render_eye(identity_seed=21)
        rec = match_images(blank, eye, cfg)
        assert rec.ftm
        assert rec.score is None

    def test_impostor_score_near_half(self):
        cfg = PipelineConfig(encoder="bif")
        img_a, _ = render_eye(identity_seed=22)
        img_b, _ = render_eye(identity_seed=23)
        rec = match_images(img_a, img_b, cfg)
        assert not rec.ftm
        assert 0.4 <= rec.score <= 0.6
