"""MSE, PSNR and luminance MS-SSIM for 8-bit RGB images."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.ndimage import correlate1d

from .container import ContainerFile, bpp
from .errors import DimensionMismatch
from .segmap import RgbImage

MS_SSIM_WEIGHTS = (0.0448, 0.2856, 0.3001, 0.2363, 0.1333)
WIN_SIZE = 11
WIN_SIGMA = 1.5
K1, K2 = 0.01, 0.03
DATA_RANGE = 255.0


def _check(a: RgbImage, b: RgbImage):
    if (a.width, a.height) != (b.width, b.height):
        raise DimensionMismatch(f"{a.width}x{a.height} vs {b.width}x{b.height}")


def mse(a: RgbImage, b: RgbImage) -> float:
    _check(a, b)
    d = a.samples.astype(np.float64) - b.samples.astype(np.float64)
    return float(np.mean(d * d))


def psnr(a: RgbImage, b: RgbImage) -> float:
    e = mse(a, b)
    if e == 0:
        return math.inf
    return 10 * math.log10(DATA_RANGE**2 / e)


def luminance(img: RgbImage) -> np.ndarray:
    s = img.samples.astype(np.float64)
    return 0.299 * s[..., 0] + 0.587 * s[..., 1] + 0.114 * s[..., 2]


def gaussian_window(size: int = WIN_SIZE, sigma: float = WIN_SIGMA) -> np.ndarray:
    x = np.arange(size, dtype=np.float64) - size // 2
    g = np.exp(-(x**2) / (2 * sigma**2))
    return g / g.sum()


def _filter_valid(a, win):
    r = len(win) // 2
    out = correlate1d(correlate1d(a, win, axis=0, mode="constant"), win, axis=1, mode="constant")
    return out[r:-r, r:-r]


def _ssim_terms(x, y, win):
    c1 = (K1 * DATA_RANGE) ** 2
    c2 = (K2 * DATA_RANGE) ** 2
    mu_x = _filter_valid(x, win)
    mu_y = _filter_valid(y, win)
    sxx = _filter_valid(x * x, win) - mu_x * mu_x
    syy = _filter_valid(y * y, win) - mu_y * mu_y
    sxy = _filter_valid(x * y, win) - mu_x * mu_y
    cs = (2 * sxy + c2) / (sxx + syy + c2)
    lum = (2 * mu_x * mu_y + c1) / (mu_x * mu_x + mu_y * mu_y + c1)
    return float(np.mean(cs)), float(np.mean(lum * cs))


def num_scales(width: int, height: int) -> int:
    side = min(width, height)
    if side < WIN_SIZE:
        raise ValueError(f"MS-SSIM needs images at least {WIN_SIZE}px on a side")
    m = 1
    while m < len(MS_SSIM_WEIGHTS) and side >= WIN_SIZE * 2**m:
        m += 1
    return m


def _downsample(a):
    h, w = a.shape
    a = a[: h - h % 2, : w - w % 2]
    return 0.25 * (a[0::2, 0::2] + a[1::2, 0::2] + a[0::2, 1::2] + a[1::2, 1::2])


def ms_ssim(a: RgbImage, b: RgbImage) -> float:
    """Multi-scale SSIM on BT.601 luminance.

    Images under 176px on a side use fewer scales, with the leading weights
    renormalised to sum to one. Negative contrast-structure means are
    clamped to zero before exponentiation so the result stays in [0, 1].
    """
    _check(a, b)
    m = num_scales(a.width, a.height)
    weights = np.asarray(MS_SSIM_WEIGHTS[:m])
    weights = weights / weights.sum()
    win = gaussian_window()
    x, y = luminance(a), luminance(b)
    result = 1.0
    for j in range(m):
        cs, ssim = _ssim_terms(x, y, win)
        term = ssim if j == m - 1 else cs
        result *= max(term, 0.0) ** weights[j]
        if j < m - 1:
            x, y = _downsample(x), _downsample(y)
    return float(result)


@dataclass
class MetricReport:
    bpp_total: float | None
    bpp_semantics: float | None
    bpp_backbone: float | None
    psnr_db: float
    ms_ssim: float
    mse: float

    def to_json(self) -> str:
        # psnr of identical images is serialised as the JSON extension "Infinity"
        return json.dumps(asdict(self))


def evaluate(original: RgbImage, recon: RgbImage, container: ContainerFile | None = None) -> MetricReport:
    e = mse(original, recon)
    rates = bpp(container) if container is not None else None
    return MetricReport(
        bpp_total=rates.total if rates else None,
        bpp_semantics=rates.semantics if rates else None,
        bpp_backbone=rates.backbone if rates else None,
        psnr_db=math.inf if e == 0 else 10 * math.log10(DATA_RANGE**2 / e),
        ms_ssim=ms_ssim(original, recon),
        mse=e,
    )
