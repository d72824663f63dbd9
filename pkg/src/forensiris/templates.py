"""Binary template format for the local repository and file exchange.

Layout (all integers big-endian):

    magic   4 bytes  'PMIT'
    version u8       currently 1
    encoder u8       1 = gabor2d, 2 = loggabor1d, 3 = bif
    rows    u16
    cols    u16
    planes  u8       bitplane count
    digest  8 bytes  encoder params checksum
    data             planes + 1 bit rasters (code planes, then mask),
                     each packed row-major MSB-first and padded to a byte
                     boundary independently

Round-trips are bit-identical.
"""

from __future__ import annotations

import struct
from pathlib import Path
from typing import Union

import numpy as np

from .errors import BadMagic, LengthMismatch, VersionUnsupported
from .model import IrisTemplate

PathLike = Union[str, Path]

MAGIC = b"PMIT"
VERSION = 1
_HEADER = struct.Struct(">4sBBHHB8s")

ENCODER_CODES = {"gabor2d": 1, "loggabor1d": 2, "bif": 3}
ENCODER_NAMES = {v: k for k, v in ENCODER_CODES.items()}


def _plane_bytes(rows: int, cols: int) -> int:
    return (rows * cols + 7) // 8


def serialize_template(t: IrisTemplate) -> bytes:
    header = _HEADER.pack(
        MAGIC, VERSION, ENCODER_CODES[t.encoder_id],
        t.rows, t.cols, t.bitplane_count, t.params_digest,
    )
    chunks = [header]
    for plane in t.bitplanes:
        chunks.append(np.packbits(plane.reshape(-1)).tobytes())
    chunks.append(np.packbits(t.mask.reshape(-1)).tobytes())
    return b"".join(chunks)


def deserialize_template(data: bytes) -> IrisTemplate:
    if len(data) < _HEADER.size:
        raise LengthMismatch(f"template stream too short ({len(data)} bytes)")
    magic, version, enc_code, rows, cols, planes, digest = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise BadMagic(f"expected magic {MAGIC!r}, got {magic!r}")
    if version != VERSION:
        raise VersionUnsupported(f"template version {version} is not supported")
    if enc_code not in ENCODER_NAMES:
        raise BadMagic(f"unknown encoder code {enc_code}")
    per_plane = _plane_bytes(rows, cols)
    expected = _HEADER.size + per_plane * (planes + 1)
    if len(data) != expected:
        raise LengthMismatch(f"expected {expected} bytes, got {len(data)}")

    def unpack(offset: int) -> np.ndarray:
        raw = np.frombuffer(data, dtype=np.uint8, count=per_plane, offset=offset)
        bits = np.unpackbits(raw)[: rows * cols]
        return bits.astype(bool).reshape(rows, cols)

    bitplanes = np.stack([
        unpack(_HEADER.size + i * per_plane) for i in range(planes)
    ])
    mask = unpack(_HEADER.size + planes * per_plane)
    return IrisTemplate(
        encoder_id=ENCODER_NAMES[enc_code],
        bitplanes=bitplanes,
        mask=mask,
        params_digest=digest,
    )


def save_template(path: PathLike, t: IrisTemplate) -> None:
    Path(path).write_bytes(serialize_template(t))


def load_template(path: PathLike) -> IrisTemplate:
    return deserialize_template(Path(path).read_bytes())
