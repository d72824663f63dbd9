"""HTTP/JSON back end for the examiner UI.

All state lives under one directory: uploaded images are content-addressed
(the id is a hash of the bytes, so re-uploads are idempotent), comparison
results and their heatmap PNGs are cached by a deterministic comparison id,
and the template gallery uses the standard repository layout.

Domain failures map to 4xx responses with {"error_code", "message"} bodies;
a pipeline FTM is a normal 200 with ftm=true. Pipeline work runs in the
thread pool (sync endpoints), so health checks stay responsive while long
comparisons run.
"""

from __future__ import annotations

import hashlib
import json
import threading
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Request, UploadFile
from fastapi.exceptions import RequestValidationError
from fastapi.responses import FileResponse, Response
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from . import __version__
from .errors import ForensirisError
from .gallery import TemplateGallery
from .imageio import load_image_bytes
from .matching import (
    FTM_ERRORS,
    PipelineConfig,
    fractional_hamming,
    similarity_heatmap,
    template_from_image,
)
from .model import ENCODER_IDS, IrisImage
from .quality import compute_quality
from .reporting import heatmap_to_png_bytes
from .segmentation import segment

MAX_UPLOAD_BYTES = 16 * 1024 * 1024


class CompareRequest(BaseModel):
    image_id_a: str
    image_id_b: str
    encoders: list[str] = list(ENCODER_IDS)


class IdentifyRequest(BaseModel):
    image_id: str
    encoder: str = "bif"
    k: int = 5


def _canonical_json(payload, status_code: int = 200) -> Response:
    # sort_keys keeps responses byte-deterministic for identical inputs
    body = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return Response(content=body, status_code=status_code,
                    media_type="application/json")


def _error(status: int, code: str, message: str) -> Response:
    return _canonical_json({"error_code": code, "message": message}, status)


class ServiceState:
    def __init__(self, state_dir, cfg: PipelineConfig):
        self.root = Path(state_dir)
        self.images_dir = self.root / "images"
        self.comparisons_dir = self.root / "comparisons"
        self.images_dir.mkdir(parents=True, exist_ok=True)
        self.comparisons_dir.mkdir(parents=True, exist_ok=True)
        self.cfg = cfg
        self.gallery = TemplateGallery(self.root / "gallery")
        # Templates are pure functions of (stored bytes, config); memoizing
        # them keeps concurrent per-encoder compare requests from re-running
        # segmentation for the same image.
        self._template_cache: dict = {}
        self._cache_lock = threading.Lock()

    def template_for(self, image: IrisImage, encoder: str) -> "object":
        key = (image.id, encoder)
        with self._cache_lock:
            if key in self._template_cache:
                return self._template_cache[key]
        template = template_from_image(image, self.cfg.with_encoder(encoder))
        with self._cache_lock:
            self._template_cache.setdefault(key, template)
        return template

    def image_path(self, image_id: str) -> Path:
        return self.images_dir / f"{image_id}.bin"

    def store_image(self, data: bytes) -> str:
        image_id = hashlib.sha256(data).hexdigest()[:16]
        path = self.image_path(image_id)
        if not path.exists():
            path.write_bytes(data)
        return image_id

    def load_stored(self, image_id: str) -> Optional[IrisImage]:
        path = self.image_path(image_id)
        if not path.exists():
            return None
        return load_image_bytes(path.read_bytes(), image_id=image_id)

    def comparison_id(self, image_id_a: str, image_id_b: str) -> str:
        digest = hashlib.sha256()
        for part in (image_id_a, image_id_b, repr(self.cfg.max_shift),
                     repr(self.cfg.overlap_floor), repr(self.cfg.radial_res),
                     repr(self.cfg.angular_res)):
            digest.update(part.encode())
        return digest.hexdigest()[:16]


def create_app(state_dir="forensiris-state", cfg: Optional[PipelineConfig] = None,
               static_dir: Optional[str] = None) -> FastAPI:
    state = ServiceState(state_dir, cfg or PipelineConfig())
    app = FastAPI(title="forensiris", version=__version__)

    @app.exception_handler(RequestValidationError)
    async def _validation_handler(request: Request, exc: RequestValidationError):
        return _error(400, "schema_violation", str(exc.errors()[:3]))

    @app.exception_handler(ForensirisError)
    async def _domain_handler(request: Request, exc: ForensirisError):
        return _error(400, exc.error_code, str(exc))

    @app.get("/v1/health")
    async def health():
        return _canonical_json({"status": "ok", "version": __version__})

    @app.post("/v1/images")
    def upload_image(file: UploadFile, channel: str = "nir"):
        data = file.file.read(MAX_UPLOAD_BYTES + 1)
        if len(data) > MAX_UPLOAD_BYTES:
            return _error(413, "payload_too_large",
                          f"uploads are capped at {MAX_UPLOAD_BYTES} bytes")
        try:
            image = load_image_bytes(data, channel=channel)
        except ForensirisError as exc:
            return _error(400, exc.error_code, str(exc))
        image_id = state.store_image(data)
        return _canonical_json({
            "image_id": image_id,
            "width": image.width,
            "height": image.height,
        })

    def _require_image(image_id: str) -> IrisImage:
        image = state.load_stored(image_id)
        if image is None:
            raise _NotFound(image_id)
        return image

    class _NotFound(Exception):
        def __init__(self, what: str):
            self.what = what

    @app.exception_handler(_NotFound)
    async def _not_found_handler(request: Request, exc: _NotFound):
        return _error(404, "not_found", f"unknown id '{exc.what}'")

    @app.post("/v1/compare")
    def compare(req: CompareRequest):
        for enc in req.encoders:
            if enc not in ENCODER_IDS:
                return _error(400, "schema_violation", f"unknown encoder '{enc}'")
        img_a = _require_image(req.image_id_a)
        img_b = _require_image(req.image_id_b)
        comparison_id = state.comparison_id(req.image_id_a, req.image_id_b)
        comp_dir = state.comparisons_dir / comparison_id
        comp_dir.mkdir(exist_ok=True)

        results = {}
        for enc in req.encoders:
            enc_cfg = state.cfg.with_encoder(enc)
            entry = {"score": None, "best_shift": None, "ftm": False, "heatmap_url": None}
            try:
                ta = state.template_for(img_a, enc)
                tb = state.template_for(img_b, enc)
                match = fractional_hamming(ta, tb, enc_cfg.max_shift, enc_cfg.overlap_floor)
                entry["score"] = match.score
                entry["best_shift"] = match.best_shift
                heatmap = similarity_heatmap(ta, tb, match.best_shift)
                png_path = comp_dir / f"{enc}.png"
                png_path.write_bytes(heatmap_to_png_bytes(heatmap))
                entry["heatmap_url"] = f"/v1/heatmap/{comparison_id}/{enc}"
            except FTM_ERRORS:
                entry["ftm"] = True
            results[enc] = entry

        def quality_payload(img: IrisImage):
            try:
                return compute_quality(img, segment(img, state.cfg.hough)).to_dict()
            except FTM_ERRORS:
                return None

        payload = {
            "comparison_id": comparison_id,
            "image_id_a": req.image_id_a,
            "image_id_b": req.image_id_b,
            "results": results,
            "quality_a": quality_payload(img_a),
            "quality_b": quality_payload(img_b),
        }
        (comp_dir / "result.json").write_text(
            json.dumps(payload, sort_keys=True), encoding="utf-8")
        return _canonical_json(payload)

    @app.post("/v1/identify")
    def identify(req: IdentifyRequest):
        if req.encoder not in ENCODER_IDS:
            return _error(400, "schema_violation", f"unknown encoder '{req.encoder}'")
        if req.k < 1:
            return _error(400, "schema_violation", "k must be >= 1")
        image = _require_image(req.image_id)
        enc_cfg = state.cfg.with_encoder(req.encoder)
        try:
            probe = state.template_for(image, req.encoder)
        except FTM_ERRORS as exc:
            return _canonical_json({
                "image_id": req.image_id,
                "encoder": req.encoder,
                "ftm": True,
                "reason": f"{type(exc).__name__}: {exc}",
                "candidates": [],
                "skipped": 0,
            })
        candidates, skipped = state.gallery.identify(
            probe, k=req.k, max_shift=enc_cfg.max_shift,
            overlap_floor=enc_cfg.overlap_floor)
        return _canonical_json({
            "image_id": req.image_id,
            "encoder": req.encoder,
            "ftm": False,
            "candidates": [c.to_dict() for c in candidates],
            "skipped": skipped,
        })

    @app.get("/v1/quality/{image_id}")
    def quality(image_id: str):
        image = _require_image(image_id)
        seg = segment(image, state.cfg.hough)
        record = compute_quality(image, seg)
        return _canonical_json(record.to_dict())

    @app.get("/v1/polar/{image_id}")
    def polar(image_id: str):
        """Rubber-sheet view of an image as a grayscale PNG; the UI lays the
        similarity heatmap over this, so it never touches pixel math."""
        import io as _io

        import numpy as _np
        from PIL import Image as _Image

        from .normalization import rubber_sheet

        image = _require_image(image_id)
        try:
            seg = segment(image, state.cfg.hough)
            unwrapped = rubber_sheet(image, seg, state.cfg.radial_res,
                                     state.cfg.angular_res)
        except FTM_ERRORS as exc:
            return _error(422, "unprocessable", f"{type(exc).__name__}: {exc}")
        gray = _np.clip(_np.rint(unwrapped.texture), 0, 255).astype("uint8")
        buf = _io.BytesIO()
        _Image.fromarray(gray, mode="L").save(buf, format="PNG")
        return Response(content=buf.getvalue(), media_type="image/png")

    @app.get("/v1/heatmap/{comparison_id}/{encoder}")
    def heatmap(comparison_id: str, encoder: str):
        path = state.comparisons_dir / comparison_id / f"{encoder}.png"
        if not path.exists():
            return _error(404, "not_found",
                          f"no heatmap for comparison '{comparison_id}' encoder '{encoder}'")
        return FileResponse(path, media_type="image/png")

    if static_dir and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    app.state.service = state
    return app
