"""Image ingestion and debug raster output.

Supported inputs are binary PGM (P5, 8-bit) and PNG (grayscale or RGB).
RGB sources are reduced by extracting the red plane only, and only when the
caller asks for the rgb_red channel; no luminance conversion exists.
"""

from __future__ import annotations

import io
import logging
from pathlib import Path
from typing import Union

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import CorruptFile, UnsupportedFormat
from .model import CANONICAL_SIZE, IrisImage

log = logging.getLogger(__name__)

PathLike = Union[str, Path]


def _parse_pgm(data: bytes, name: str) -> np.ndarray:
    if not data.startswith(b"P5"):
        raise UnsupportedFormat(f"{name}: not a P5 PGM file")
    # Header tokens: magic, width, height, maxval; '#' comments allowed.
    pos = 2
    tokens: list[int] = []
    while len(tokens) < 3:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos:pos + 1] == b"#":
            eol = data.find(b"\n", pos)
            if eol < 0:
                raise CorruptFile(f"{name}: unterminated comment in header")
            pos = eol + 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise CorruptFile(f"{name}: truncated PGM header")
        try:
            tokens.append(int(data[start:pos]))
        except ValueError:
            raise CorruptFile(f"{name}: non-numeric PGM header token") from None
    width, height, maxval = tokens
    if maxval > 255:
        raise UnsupportedFormat(f"{name}: 16-bit PGM is not supported")
    if maxval <= 0 or width <= 0 or height <= 0:
        raise CorruptFile(f"{name}: invalid PGM header values")
    pos += 1  # single whitespace byte after maxval
    raster = data[pos:pos + width * height]
    if len(raster) != width * height:
        raise CorruptFile(
            f"{name}: expected {width * height} raster bytes, got {len(raster)}"
        )
    return np.frombuffer(raster, dtype=np.uint8).reshape(height, width)


def _load_png(data: bytes, channel: str, name: str) -> np.ndarray:
    try:
        img = Image.open(io.BytesIO(data))
        img.load()
    except UnidentifiedImageError:
        raise UnsupportedFormat(f"{name}: not a recognized PNG file") from None
    except OSError as exc:
        raise CorruptFile(f"{name}: {exc}") from None
    if img.mode in ("L", "I;16", "I"):
        arr = np.asarray(img.convert("L"), dtype=np.uint8)
    elif img.mode in ("RGB", "RGBA"):
        if channel != "rgb_red":
            raise UnsupportedFormat(
                f"{name}: RGB input requires channel='rgb_red' (red-plane extraction "
                "is the only supported color reduction)"
            )
        arr = np.asarray(img.convert("RGB"), dtype=np.uint8)[:, :, 0]
    elif img.mode == "P":
        arr = np.asarray(img.convert("L"), dtype=np.uint8)
    else:
        raise UnsupportedFormat(f"{name}: unsupported PNG mode '{img.mode}'")
    return arr


def load_image(path: PathLike, channel: str = "nir", image_id: str | None = None) -> IrisImage:
    """Load a PGM (P5) or PNG file into an IrisImage.

    The loader is a pure function of the file bytes: identical bytes always
    yield identical pixel arrays. Images smaller than 64 px on either side
    are rejected (DimensionTooSmall via the IrisImage invariant).
    """
    path = Path(path)
    data = path.read_bytes()
    name = path.name
    if data[:2] == b"P5":
        arr = _parse_pgm(data, name)
    elif data[:8] == b"\x89PNG\r\n\x1a\n":
        arr = _load_png(data, channel, name)
    else:
        raise UnsupportedFormat(f"{name}: expected binary PGM (P5) or PNG")
    if (arr.shape[1], arr.shape[0]) != CANONICAL_SIZE:
        log.debug("%s: %dx%d differs from the canonical %dx%d capture size",
                  name, arr.shape[1], arr.shape[0], *CANONICAL_SIZE)
    return IrisImage(id=image_id or path.stem, pixels=arr, source_channel=channel)


def load_image_bytes(data: bytes, channel: str = "nir", image_id: str = "upload") -> IrisImage:
    """In-memory variant of load_image used by the HTTP service."""
    if data[:2] == b"P5":
        arr = _parse_pgm(data, image_id)
    elif data[:8] == b"\x89PNG\r\n\x1a\n":
        arr = _load_png(data, channel, image_id)
    else:
        raise UnsupportedFormat(f"{image_id}: expected binary PGM (P5) or PNG")
    return IrisImage(id=image_id, pixels=arr, source_channel=channel)


def write_pgm(path: PathLike, pixels: np.ndarray) -> None:
    """Write an 8-bit grayscale array as binary PGM (debug dumps)."""
    arr = np.asarray(pixels)
    if arr.dtype != np.uint8:
        arr = np.clip(np.rint(arr), 0, 255).astype(np.uint8)
    h, w = arr.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(arr.tobytes())


def write_pbm(path: PathLike, bits: np.ndarray) -> None:
    """Write a boolean mask as binary PBM (P4). 1 = set bit (black in PBM)."""
    m = np.asarray(bits, dtype=bool)
    h, w = m.shape
    packed = np.packbits(m, axis=1)
    with open(path, "wb") as fh:
        fh.write(f"P4\n{w} {h}\n".encode("ascii"))
        fh.write(packed.tobytes())


def write_png(path: PathLike, pixels: np.ndarray) -> None:
    """Write an 8-bit grayscale array as PNG."""
    arr = np.asarray(pixels)
    if arr.dtype != np.uint8:
        arr = np.clip(np.rint(arr), 0, 255).astype(np.uint8)
    Image.fromarray(arr, mode="L").save(path, format="PNG")
