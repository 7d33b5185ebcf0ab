"""Vectorized numpy implementations of the hot kernels.

This is the fallback backend; rawlume._kernels._core is the compiled twin.
Both walk the same 8-corner / window-offset order so results agree to within
a few ulps (scatter accumulation order differs, hence not bit-identical).
"""

from __future__ import annotations

import numpy as np

GRID_SIZE = 16


def _axis_coords(n: int, cells: int = GRID_SIZE):
    """Cell-center coordinates for n samples spanning [0, cells-1]."""
    if n == 1:
        g = np.zeros(1)
    else:
        g = np.arange(n, dtype=np.float64) * (cells - 1) / (n - 1)
    i0 = np.clip(np.floor(g).astype(np.intp), 0, cells - 1)
    i1 = np.minimum(i0 + 1, cells - 1)
    return i0, i1, g - i0


def _z_coords(guidance: np.ndarray, cells: int = GRID_SIZE):
    gz = np.clip(guidance, 0.0, 1.0) * (cells - 1)
    k0 = np.clip(np.floor(gz).astype(np.intp), 0, cells - 1)
    k1 = np.minimum(k0 + 1, cells - 1)
    return k0, k1, gz - k0


def slice_grid(grid: np.ndarray, guidance: np.ndarray) -> np.ndarray:
    """Trilinear slicing of a (16,16,16) grid against a [0,1] guidance map.

    Grid axis order is (x-cell, y-cell, z-cell); pixel (row=y, col=x).
    """
    h, w = guidance.shape
    i0, i1, fx = _axis_coords(w)
    j0, j1, fy = _axis_coords(h)
    k0, k1, fz = _z_coords(guidance)

    wx = (1.0 - fx, fx)  # per-column
    wy = (1.0 - fy, fy)  # per-row
    wz = (1.0 - fz, fz)  # per-pixel
    ii = (i0, i1)
    jj = (j0, j1)
    kk = (k0, k1)

    theta = np.zeros((h, w), dtype=np.float64)
    for di in (0, 1):
        for dj in (0, 1):
            for dk in (0, 1):
                w3 = wx[di][None, :] * wy[dj][:, None] * wz[dk]
                theta += w3 * grid[ii[di][None, :], jj[dj][:, None], kk[dk]]
    return theta


def slice_adjoint(cotangent: np.ndarray, guidance: np.ndarray) -> np.ndarray:
    """Adjoint of slice_grid: scatter the cotangent through the same weights."""
    h, w = guidance.shape
    i0, i1, fx = _axis_coords(w)
    j0, j1, fy = _axis_coords(h)
    k0, k1, fz = _z_coords(guidance)

    wx = (1.0 - fx, fx)
    wy = (1.0 - fy, fy)
    wz = (1.0 - fz, fz)
    ii = (np.broadcast_to(i0[None, :], (h, w)), np.broadcast_to(i1[None, :], (h, w)))
    jj = (np.broadcast_to(j0[:, None], (h, w)), np.broadcast_to(j1[:, None], (h, w)))
    kk = (k0, k1)

    grad = np.zeros((GRID_SIZE, GRID_SIZE, GRID_SIZE), dtype=np.float64)
    for di in (0, 1):
        for dj in (0, 1):
            for dk in (0, 1):
                w3 = wx[di][None, :] * wy[dj][:, None] * wz[dk]
                np.add.at(grad, (ii[di], jj[dj], kk[dk]), w3 * cotangent)
    return grad


def jbf_denoise(
    planes: np.ndarray,
    var_planes: np.ndarray,
    gain: np.ndarray,
    radius: int,
    c0: float,
    bypass_below: float,
) -> np.ndarray:
    """Variance-guided joint-bilateral filter, one pass per plane.

    Range sigma per pixel is c0 * gain * sqrt(var); pixels whose noise scale
    gain*sqrt(var) falls below ``bypass_below`` pass through untouched.
    """
    c, h, w = planes.shape
    sigma_s = radius / 2.0
    dy, dx = np.mgrid[-radius : radius + 1, -radius : radius + 1]
    ws = np.exp(-(dy**2 + dx**2) / (2.0 * sigma_s**2))

    out = np.empty_like(planes)
    for ci in range(c):
        img = planes[ci]
        noise_scale = gain * np.sqrt(var_planes[ci])
        bypass = noise_scale < bypass_below
        if bypass.all():
            out[ci] = img
            continue
        sigma_r = c0 * noise_scale
        inv2s2 = np.zeros_like(sigma_r)
        active = ~bypass
        inv2s2[active] = 1.0 / (2.0 * sigma_r[active] ** 2)

        padded = np.pad(img, radius, mode="edge")
        num = np.zeros((h, w), dtype=np.float64)
        den = np.zeros((h, w), dtype=np.float64)
        for oy in range(-radius, radius + 1):
            for ox in range(-radius, radius + 1):
                shifted = padded[radius + oy : radius + oy + h, radius + ox : radius + ox + w]
                wgt = ws[oy + radius, ox + radius] * np.exp(-((shifted - img) ** 2) * inv2s2)
                num += wgt * shifted
                den += wgt
        filtered = num / den
        out[ci] = np.where(bypass, img, filtered)
    return out
