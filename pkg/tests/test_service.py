"""HTTP service contract tests (in-process ASGI client)."""

import io

import numpy as np
import pytest
from fastapi.testclient import TestClient

from forensiris.gallery import TemplateGallery
from forensiris.matching import PipelineConfig, template_from_image
from forensiris.model import SampleMetadata
from forensiris.service import create_app
from forensiris.synth import render_eye


def png_bytes(img) -> bytes:
    from PIL import Image

    buf = io.BytesIO()
    Image.fromarray(img.pixels, mode="L").save(buf, format="PNG")
    return buf.getvalue()


@pytest.fixture(scope="module")
def service(tmp_path_factory):
    state_dir = tmp_path_factory.mktemp("state")
    cfg = PipelineConfig()
    # Pre-enroll one identity so identification has a mate to find.
    gallery = TemplateGallery(state_dir / "gallery")
    img, _ = render_eye(identity_seed=60, image_id="mate")
    template = template_from_image(img, cfg.with_encoder("bif"))
    gallery.enroll(template, SampleMetadata(
        sample_id="mate", subject_id="subjA", eye="left", session=1,
        pmi_hours=12.0, age_years=50, gender="male"))
    app = create_app(state_dir=state_dir, cfg=cfg)
    return TestClient(app)


@pytest.fixture(scope="module")
def uploaded(service):
    img, _ = render_eye(identity_seed=60, image_id="probe")
    r = service.post("/v1/images", files={"file": ("probe.png", png_bytes(img))})
    assert r.status_code == 200
    return r.json()["image_id"]


class TestHealthAndUpload:
    def test_health(self, service):
        r = service.get("/v1/health")
        assert r.status_code == 200
        assert r.json()["status"] == "ok"

    def test_upload_is_idempotent(self, service):
        img, _ = render_eye(identity_seed=61)
        data = png_bytes(img)
        a = service.post("/v1/images", files={"file": ("x.png", data)})
        b = service.post("/v1/images", files={"file": ("y.png", data)})
        assert a.json()["image_id"] == b.json()["image_id"]

    def test_oversized_upload_413(self, service):
        blob = b"\x89PNG\r\n\x1a\n" + b"\x00" * (16 * 1024 * 1024 + 1)
        r = service.post("/v1/images", files={"file": ("big.png", blob)})
        assert r.status_code == 413
        assert r.json()["error_code"] == "payload_too_large"

    def test_garbage_upload_400(self, service):
        r = service.post("/v1/images", files={"file": ("junk.bin", b"not an image")})
        assert r.status_code == 400
        assert "error_code" in r.json()


class TestCompare:
    def test_self_comparison_scores_zero(self, service, uploaded):
        r = service.post("/v1/compare", json={
            "image_id_a": uploaded, "image_id_b": uploaded,
            "encoders": ["gabor2d", "loggabor1d", "bif"],
        })
        assert r.status_code == 200
        body = r.json()
        for enc in ("gabor2d", "loggabor1d", "bif"):
            assert body["results"][enc]["score"] == 0.0
            assert body["results"][enc]["ftm"] is False
            assert body["results"][enc]["heatmap_url"]
        assert body["quality_a"]["IRIS_RADIUS"] > 0

    def test_unknown_image_404(self, service):
        r = service.post("/v1/compare", json={
            "image_id_a": "deadbeef", "image_id_b": "deadbeef"})
        assert r.status_code == 404
        assert r.json()["error_code"] == "not_found"

    def test_schema_violation_400(self, service):
        r = service.post("/v1/compare", json={"image_id_a": "x"})
        assert r.status_code == 400

    def test_ftm_is_200_not_5xx(self, service):
        blank, _ = render_eye(identity_seed=1)
        import numpy as np

        from forensiris.model import IrisImage

        flat = IrisImage(id="flat", pixels=np.full((480, 640), 90, dtype=np.uint8))
        up = service.post("/v1/images", files={"file": ("flat.png", png_bytes(flat))})
        image_id = up.json()["image_id"]
        r = service.post("/v1/compare", json={
            "image_id_a": image_id, "image_id_b": image_id})
        assert r.status_code == 200
        assert all(entry["ftm"] for entry in r.json()["results"].values())

    def test_heatmap_served_as_png(self, service, uploaded):
        r = service.post("/v1/compare", json={
            "image_id_a": uploaded, "image_id_b": uploaded, "encoders": ["bif"]})
        url = r.json()["results"]["bif"]["heatmap_url"]
        png = service.get(url)
        assert png.status_code == 200
        assert png.content[:4] == b"\x89PNG"

    def test_unknown_heatmap_404(self, service):
        r = service.get("/v1/heatmap/nothere/bif")
        assert r.status_code == 404

    def test_responses_are_byte_deterministic(self, service, uploaded):
        req = {"image_id_a": uploaded, "image_id_b": uploaded, "encoders": ["bif"]}
        a = service.post("/v1/compare", json=req)
        b = service.post("/v1/compare", json=req)
        assert a.content == b.content


class TestPolarEndpoint:
    def test_polar_view_is_png(self, service, uploaded):
        r = service.get(f"/v1/polar/{uploaded}")
        assert r.status_code == 200
        assert r.content[:4] == b"\x89PNG"

    def test_unknown_id_404(self, service):
        assert service.get("/v1/polar/none").status_code == 404


class TestQualityEndpoint:
    def test_quality_payload(self, service, uploaded):
        r = service.get(f"/v1/quality/{uploaded}")
        assert r.status_code == 200
        body = r.json()
        assert set(body) == {
            "USABLE_IRIS_AREA", "IRIS_SCLERA_CONTRAST", "GRAY_SCALE_UTILIZATION",
            "IRIS_RADIUS", "PUPIL_IRIS_RATIO", "IRIS_PUPIL_CONCENTRICITY", "SHARPNESS",
        }

    def test_unknown_id_404(self, service):
        assert service.get("/v1/quality/none").status_code == 404


class TestIdentify:
    def test_true_mate_ranks_first(self, service, uploaded):
        r = service.post("/v1/identify", json={
            "image_id": uploaded, "encoder": "bif", "k": 5})
        assert r.status_code == 200
        body = r.json()
        assert body["candidates"], "gallery has a mate enrolled"
        assert body["candidates"][0]["sample_id"] == "mate"
        assert body["candidates"][0]["score"] < 0.2

    def test_unknown_encoder_400(self, service, uploaded):
        r = service.post("/v1/identify", json={
            "image_id": uploaded, "encoder": "nope", "k": 1})
        assert r.status_code == 400

    def test_empty_gallery_returns_empty_list(self, tmp_path):
        app = create_app(state_dir=tmp_path / "fresh", cfg=PipelineConfig())
        client = TestClient(app)
        img, _ = render_eye(identity_seed=62)
        up = client.post("/v1/images", files={"file": ("e.png", png_bytes(img))})
        r = client.post("/v1/identify", json={
            "image_id": up.json()["image_id"], "encoder": "bif", "k": 3})
        assert r.status_code == 200
        assert r.json()["candidates"] == []
