"""Iris-code encoders: polar texture in, binary template out.

Three families are implemented:

* gabor2d    -- complex 2-D Gabor filters sampled on a coarse grid; the sign
                of the real and imaginary response parts gives 2 bits per
                filter per grid sample.
* loggabor1d -- each polar row is circularly filtered with a one-sided
                log-Gabor transfer function; the response phase quadrant
                gives 2 bits per cell.
* bif        -- a bank of zero-mean square kernels (loaded from file, or a
                deterministic orthonormal fallback); each kernel contributes
                one bitplane thresholded at zero.

All encoders share the zero-response rule: responses with magnitude below
EPS_RESPONSE are treated as zero (bit 0) and their cells are removed from
the template mask, so near-DC regions never contribute unstable bits.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from .errors import (
    BadKernelFile,
    FilterLargerThanGrid,
    GridTooNarrow,
    InvalidConfig,
    KernelLargerThanGrid,
    NonZeroMeanKernel,
)
from .model import IrisTemplate, PolarIris, params_digest

EPS_RESPONSE = 1e-9

# Gabor envelope shape: sigma across the carrier is this fraction of the
# sigma along it, and kernels truncate at 2 sigma.
GABOR_ASPECT = 1.0 / 3.0
GABOR_TRUNCATE = 2.0

FALLBACK_BANK_SEED = 662607015
FALLBACK_BANK_SIZE = 17
FALLBACK_BANK_COUNT = 8


# ---------------------------------------------------------------------------
# Configurations


@dataclass(frozen=True)
class GaborBankConfig:
    wavelengths: tuple[float, ...] = (18.0, 27.0, 36.0)  # pixels, angular direction
    sigma_ratio: float = 0.5                              # envelope sigma / wavelength
    orientations: tuple[float, ...] = (0.0,)              # radians
    grid_stride: tuple[int, int] = (4, 2)                 # (radial, angular)

    def __post_init__(self):
        if len(self.wavelengths) < 1:
            raise InvalidConfig("need at least one wavelength")
        if any(w <= 0 for w in self.wavelengths):
            raise InvalidConfig("wavelengths must be positive")
        if self.sigma_ratio <= 0:
            raise InvalidConfig("sigma_ratio must be positive")
        if self.grid_stride[0] < 1 or self.grid_stride[1] < 1:
            raise InvalidConfig("grid strides must be >= 1")

    def digest(self) -> bytes:
        return params_digest("gabor2d", {
            "wavelengths": tuple(self.wavelengths),
            "sigma_ratio": self.sigma_ratio,
            "orientations": tuple(self.orientations),
            "grid_stride": tuple(self.grid_stride),
            "aspect": GABOR_ASPECT,
            "truncate": GABOR_TRUNCATE,
        })


@dataclass(frozen=True)
class LogGaborConfig:
    center_wavelength: float = 24.0  # pixels
    sigma_on_f: float = 0.5

    def __post_init__(self):
        if self.center_wavelength < 4:
            raise InvalidConfig("center_wavelength must be >= 4 px")
        if not (0.0 < self.sigma_on_f < 1.0):
            raise InvalidConfig("sigma_on_f must lie in (0, 1)")

    def digest(self) -> bytes:
        return params_digest("loggabor1d", {
            "center_wavelength": self.center_wavelength,
            "sigma_on_f": self.sigma_on_f,
        })


@dataclass(frozen=True)
class KernelBank:
    kernels: np.ndarray  # (n, k, k) float64
    source: str = "file"  # "file" | "fallback"

    def __post_init__(self):
        k = np.asarray(self.kernels, dtype=np.float64)
        if k.ndim != 3 or k.shape[1] != k.shape[2]:
            raise InvalidConfig("kernels must be a (n, k, k) array")
        n, size, _ = k.shape
        if size % 2 == 0:
            raise InvalidConfig("kernel size must be odd")
        if not (1 <= n <= 32):
            raise InvalidConfig("bank must hold between 1 and 32 kernels")
        means = k.mean(axis=(1, 2))
        worst = float(np.abs(means).max())
        if worst > 1e-6:
            raise NonZeroMeanKernel(f"kernel mean magnitude {worst:g} exceeds 1e-6")
        k = np.ascontiguousarray(k)
        k.setflags(write=False)
        object.__setattr__(self, "kernels", k)

    @property
    def bit_count(self) -> int:
        return self.kernels.shape[0]

    @property
    def kernel_size(self) -> int:
        return self.kernels.shape[1]

    def digest(self) -> bytes:
        return params_digest("bif", {
            "kernels_sha": hashlib.sha256(self.kernels.tobytes()).hexdigest(),
            "size": self.kernel_size,
            "count": self.bit_count,
        })


# ---------------------------------------------------------------------------
# 2-D Gabor phase quantization


def _gabor_kernel(wavelength: float, sigma_ratio: float, orientation: float):
    """Complex zero-mean Gabor kernel and its (half_r, half_a) support."""
    sigma_c = sigma_ratio * wavelength          # along the carrier
    sigma_x = GABOR_ASPECT * sigma_c            # across it
    ct, st = math.cos(orientation), math.sin(orientation)
    half_a = int(math.ceil(GABOR_TRUNCATE * (sigma_c * abs(ct) + sigma_x * abs(st))))
    half_r = int(math.ceil(GABOR_TRUNCATE * (sigma_c * abs(st) + sigma_x * abs(ct))))
    half_a, half_r = max(half_a, 1), max(half_r, 1)
    dr = np.arange(-half_r, half_r + 1)[:, None]   # radial offset (rows)
    da = np.arange(-half_a, half_a + 1)[None, :]   # angular offset (cols)
    u = da * ct + dr * st                          # along-carrier coordinate
    v = -da * st + dr * ct
    envelope = np.exp(-(u ** 2 / (2 * sigma_c ** 2) + v ** 2 / (2 * sigma_x ** 2)))
    kernel = envelope * np.exp(2j * np.pi * u / wavelength)
    kernel = kernel - kernel.mean()  # zero DC in both parts
    return kernel, half_r, half_a


def _wrap_pad_cols(arr: np.ndarray, pad: int) -> np.ndarray:
    if pad == 0:
        return arr
    return np.concatenate([arr[:, -pad:], arr, arr[:, :pad]], axis=1)


def _correlate_valid_wrapcols(texture: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Sliding inner product, circular in angle, valid in radius."""
    pad = kernel.shape[1] // 2
    padded = _wrap_pad_cols(texture, pad)
    flipped = kernel[::-1, ::-1]
    return fftconvolve(padded, flipped, mode="valid")


def encode_gabor2d(polar: PolarIris, cfg: GaborBankConfig = GaborBankConfig()) -> IrisTemplate:
    """Quantize complex Gabor responses at grid samples into 2 bits each.

    Bitplanes are ordered (filter, part): [f0.re, f0.im, f1.re, f1.im, ...].
    The template mask is set only where every filter's support lies fully on
    usable polar mask.
    """
    rows, cols = polar.rows, polar.cols
    stride_r, stride_a = cfg.grid_stride
    if cols % stride_a != 0:
        raise InvalidConfig("angular resolution must be divisible by the angular stride")

    filters = []
    for wavelength in cfg.wavelengths:
        for orientation in cfg.orientations:
            filters.append(_gabor_kernel(wavelength, cfg.sigma_ratio, orientation))
    max_hr = max(f[1] for f in filters)
    max_ha = max(f[2] for f in filters)
    if 2 * max_hr + 1 > rows or 2 * max_ha + 1 > cols:
        raise FilterLargerThanGrid(
            f"largest filter support {2 * max_hr + 1}x{2 * max_ha + 1} exceeds "
            f"polar grid {rows}x{cols}"
        )
    grid_rows = np.arange(max_hr, rows - max_hr, stride_r)
    grid_cols = np.arange(0, cols, stride_a)
    if grid_rows.size == 0:
        raise FilterLargerThanGrid("no radial grid row fits the largest filter support")

    texture = polar.texture.astype(np.float64)
    planes = []
    magnitudes = []
    for kernel, half_r, half_a in filters:
        re = _correlate_valid_wrapcols(texture, kernel.real)
        im = _correlate_valid_wrapcols(texture, kernel.imag)
        r_idx = grid_rows - half_r  # valid-mode output starts at row half_r
        re_s = re[np.ix_(r_idx, grid_cols)]
        im_s = im[np.ix_(r_idx, grid_cols)]
        mag = np.hypot(re_s, im_s)
        re_s = np.where(np.abs(re_s) < EPS_RESPONSE, 0.0, re_s)
        im_s = np.where(np.abs(im_s) < EPS_RESPONSE, 0.0, im_s)
        planes.append(re_s > 0)
        planes.append(im_s > 0)
        magnitudes.append(mag)

    # Erode the polar mask by the largest support window (wrap in angle).
    window = np.ones((2 * max_hr + 1, 2 * max_ha + 1))
    counts = fftconvolve(_wrap_pad_cols(polar.mask.astype(np.float64), max_ha),
                         window, mode="valid")
    eroded = counts >= window.size - 0.5
    mask = eroded[np.ix_(grid_rows - max_hr, grid_cols)]
    for mag in magnitudes:
        mask = mask & (mag >= EPS_RESPONSE)

    return IrisTemplate(
        encoder_id="gabor2d",
        bitplanes=np.stack(planes),
        mask=mask,
        params_digest=cfg.digest(),
    )


# ---------------------------------------------------------------------------
# 1-D log-Gabor phase quantization


def _loggabor_transfer(angular_res: int, cfg: LogGaborConfig) -> np.ndarray:
    """One-sided log-Gabor magnitude response over FFT bins (H[0] = 0)."""
    h = np.zeros(angular_res)
    f0 = 1.0 / cfg.center_wavelength
    upper = angular_res // 2
    u = np.arange(1, upper + 1)
    f = u / angular_res
    log_sigma = math.log(cfg.sigma_on_f)
    h[1:upper + 1] = np.exp(-np.log(f / f0) ** 2 / (2.0 * log_sigma ** 2))
    return h


def encode_loggabor1d(polar: PolarIris, cfg: LogGaborConfig = LogGaborConfig()) -> IrisTemplate:
    """Row-wise circular log-Gabor filtering, phase quadrant to 2 bits.

    Plane 0 holds the sign of the real part, plane 1 the imaginary part.
    DC is removed by construction, so constant rows produce zero response:
    both bits 0 and the cell masked out.
    """
    if polar.cols < 4 * cfg.center_wavelength:
        raise GridTooNarrow(
            f"angular resolution {polar.cols} below 4x center wavelength "
            f"({cfg.center_wavelength} px)"
        )
    transfer = _loggabor_transfer(polar.cols, cfg)
    spectrum = np.fft.fft(polar.texture.astype(np.float64), axis=1)
    response = np.fft.ifft(spectrum * transfer[None, :], axis=1)

    magnitude = np.abs(response)
    re = np.where(np.abs(response.real) < EPS_RESPONSE, 0.0, response.real)
    im = np.where(np.abs(response.imag) < EPS_RESPONSE, 0.0, response.imag)
    mask = polar.mask & (magnitude >= EPS_RESPONSE)
    return IrisTemplate(
        encoder_id="loggabor1d",
        bitplanes=np.stack([re > 0, im > 0]),
        mask=mask,
        params_digest=cfg.digest(),
    )


# ---------------------------------------------------------------------------
# Binarized image features


def encode_bif(polar: PolarIris, bank: KernelBank) -> IrisTemplate:
    """One bitplane per bank kernel: bit set where the convolution of the
    kernel with the texture is positive.

    Angle wraps circularly; radius is padded by edge replication. The mask
    is the polar mask eroded by the kernel support under the same padding.
    """
    k = bank.kernel_size
    if k > min(polar.rows, polar.cols):
        raise KernelLargerThanGrid(
            f"kernel size {k} exceeds polar grid {polar.rows}x{polar.cols}"
        )
    half = k // 2
    texture = polar.texture.astype(np.float64)
    padded = np.pad(_wrap_pad_cols(texture, half), ((half, half), (0, 0)), mode="edge")

    planes = []
    mask = None
    for kernel in bank.kernels:
        resp = fftconvolve(padded, kernel, mode="valid")
        resp = np.where(np.abs(resp) < EPS_RESPONSE, 0.0, resp)
        planes.append(resp > 0)
        ok = np.abs(resp) >= EPS_RESPONSE
        mask = ok if mask is None else (mask & ok)

    padded_mask = np.pad(_wrap_pad_cols(polar.mask.astype(np.float64), half),
                         ((half, half), (0, 0)), mode="edge")
    counts = fftconvolve(padded_mask, np.ones((k, k)), mode="valid")
    mask = mask & (counts >= k * k - 0.5)

    return IrisTemplate(
        encoder_id="bif",
        bitplanes=np.stack(planes),
        mask=mask,
        params_digest=bank.digest(),
    )


# ---------------------------------------------------------------------------
# Kernel bank loading


def load_kernel_bank(path=None) -> KernelBank:
    """Load a kernel bank from the documented text format.

    Format: first line ``k n`` (kernel size, kernel count), then n blocks of
    k lines, each with k space-separated decimals; blank lines between
    blocks are ignored. Without a path, a deterministic fallback bank of
    orthonormalized zero-mean pseudo-random kernels is returned.
    """
    if path is None:
        return make_fallback_bank()
    try:
        text = open(path, "r", encoding="utf-8").read()
    except OSError as exc:
        raise BadKernelFile(f"{path}: {exc}") from None
    lines = [ln for ln in (raw.strip() for raw in text.splitlines()) if ln]
    if not lines:
        raise BadKernelFile(f"{path}: empty file")
    head = lines[0].split()
    if len(head) != 2:
        raise BadKernelFile(f"{path}: first line must be 'k n'")
    try:
        size, count = int(head[0]), int(head[1])
    except ValueError:
        raise BadKernelFile(f"{path}: non-numeric header") from None
    if size < 1 or size % 2 == 0:
        raise BadKernelFile(f"{path}: kernel size must be odd and positive")
    if not (1 <= count <= 32):
        raise BadKernelFile(f"{path}: kernel count must be in [1, 32]")
    body = lines[1:]
    if len(body) != size * count:
        raise BadKernelFile(
            f"{path}: expected {size * count} kernel rows, found {len(body)}"
        )
    try:
        values = np.array([[float(v) for v in ln.split()] for ln in body])
    except ValueError:
        raise BadKernelFile(f"{path}: non-numeric kernel value") from None
    if values.shape[1] != size:
        raise BadKernelFile(f"{path}: every kernel row needs exactly {size} values")
    kernels = values.reshape(count, size, size)
    return KernelBank(kernels=kernels, source="file")


def make_fallback_bank(size: int = FALLBACK_BANK_SIZE,
                       count: int = FALLBACK_BANK_COUNT,
                       seed: int = FALLBACK_BANK_SEED) -> KernelBank:
    """Deterministic stand-in bank: zero-mean orthonormal random kernels."""
    rng = np.random.default_rng(seed)
    vecs = rng.standard_normal((count, size * size))
    vecs -= vecs.mean(axis=1, keepdims=True)
    q, _ = np.linalg.qr(vecs.T)
    q = q[:, :count]
    for j in range(count):  # pin signs so the bank is reproducible everywhere
        lead = q[np.argmax(np.abs(q[:, j]) > 1e-12), j]
        if lead < 0:
            q[:, j] = -q[:, j]
    kernels = q.T.reshape(count, size, size)
    kernels -= kernels.mean(axis=(1, 2), keepdims=True)
    return KernelBank(kernels=kernels, source="fallback")


def save_kernel_bank(path, bank: KernelBank) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{bank.kernel_size} {bank.bit_count}\n")
        for kernel in bank.kernels:
            for row in kernel:
                fh.write(" ".join(repr(float(v)) for v in row) + "\n")
            fh.write("\n")
