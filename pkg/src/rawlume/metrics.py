"""Image quality metrics: PSNR, windowed SSIM, histogram entropy.

All three operate on 3-plane images in [0, 1]; SSIM and entropy reduce to a
single gray plane by channel mean first.
"""

from __future__ import annotations

import numpy as np

from .raw import RgbImage

PSNR_CAP_DB = 100.0
SSIM_WINDOW = 8
SSIM_C1 = 0.01**2
SSIM_C2 = 0.03**2


def _planes(img) -> np.ndarray:
    p = img.planes if isinstance(img, RgbImage) else np.asarray(img, dtype=np.float64)
    if p.ndim != 3 or p.shape[0] != 3:
        raise ValueError("expected a 3-plane RGB image")
    return p


def psnr(a, b) -> float:
    """Peak signal-to-noise ratio in dB against peak 1.0, capped at 100."""
    pa, pb = _planes(a), _planes(b)
    if pa.shape != pb.shape:
        raise ValueError(f"geometry mismatch: {pa.shape} vs {pb.shape}")
    mse = float(np.mean((pa - pb) ** 2))
    if mse == 0.0:
        return PSNR_CAP_DB
    return float(min(PSNR_CAP_DB, 10.0 * np.log10(1.0 / mse)))


def _window_sums(x: np.ndarray, k: int) -> np.ndarray:
    """Sum of every k x k window (valid positions) via an integral image."""
    s = np.zeros((x.shape[0] + 1, x.shape[1] + 1))
    np.cumsum(np.cumsum(x, axis=0), axis=1, out=s[1:, 1:])
    return s[k:, k:] - s[:-k, k:] - s[k:, :-k] + s[:-k, :-k]


def ssim(a, b) -> float:
    """Mean structural similarity over all valid 8x8 uniform windows.

    Gray conversion by channel mean; population moments per window; the
    standard two stabilizing constants. Images must be at least 8x8.
    """
    pa, pb = _planes(a), _planes(b)
    if pa.shape != pb.shape:
        raise ValueError(f"geometry mismatch: {pa.shape} vs {pb.shape}")
    x = pa.mean(axis=0)
    y = pb.mean(axis=0)
    k = SSIM_WINDOW
    if x.shape[0] < k or x.shape[1] < k:
        raise ValueError(f"images must be at least {k}x{k}")
    area = float(k * k)
    mx = _window_sums(x, k) / area
    my = _window_sums(y, k) / area
    vx = _window_sums(x * x, k) / area - mx * mx
    vy = _window_sums(y * y, k) / area - my * my
    cxy = _window_sums(x * y, k) / area - mx * my
    num = (2.0 * mx * my + SSIM_C1) * (2.0 * cxy + SSIM_C2)
    den = (mx * mx + my * my + SSIM_C1) * (vx + vy + SSIM_C2)
    return float(np.mean(num / den))


def entropy(img) -> float:
    """Shannon entropy (bits) of the 256-bin gray-level histogram."""
    gray = _planes(img).mean(axis=0)
    bins = np.clip((gray * 256.0).astype(np.int64), 0, 255)
    counts = np.bincount(bins.ravel(), minlength=256)
    p = counts[counts > 0] / gray.size
    return float(-(p * np.log2(p)).sum())
