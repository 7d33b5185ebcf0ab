"""Shared fixtures and independent oracle helpers for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from rawlume.raw import CameraProfile, RawImage


@pytest.fixture
def unit_profile() -> CameraProfile:
    """Profile with unit DN scaling and an sRGB-native color matrix.

    cam_to_xyz is the XYZ-from-sRGB matrix, so the full color pipeline
    composes to the identity on linear sRGB data; luminance weights are the
    usual 0.2126/0.7152/0.0722 row.
    """
    return CameraProfile(black_level=0.0, white_level=1.0)


@pytest.fixture
def camera_profile() -> CameraProfile:
    """Realistic integer levels for container I/O tests."""
    return CameraProfile(black_level=512.0, white_level=16383.0)


def textured_raw(shape=(64, 64), lo=0.05, hi=0.95, cfa="RGGB") -> RawImage:
    """Deterministic smooth test mosaic covering [lo, hi]."""
    h, w = shape
    yy, xx = np.mgrid[0:h, 0:w]
    base = 0.5 + 0.5 * np.sin(2 * np.pi * (xx / w * 1.7 + yy / h * 0.6)) * np.cos(
        2 * np.pi * (yy / h * 1.1 - xx / w * 0.3)
    )
    return RawImage(data=lo + (hi - lo) * (base - base.min()) / (base.max() - base.min()), cfa=cfa)


def slice_bruteforce(grid: np.ndarray, guidance: np.ndarray) -> np.ndarray:
    """Triple-loop trilinear slicing oracle, written independently of the
    kernel implementations (explicit per-pixel corner walk)."""
    h, w = guidance.shape
    out = np.zeros((h, w))
    for y in range(h):
        for x in range(w):
            gx = x * 15.0 / (w - 1) if w > 1 else 0.0
            gy = y * 15.0 / (h - 1) if h > 1 else 0.0
            gz = min(max(guidance[y, x], 0.0), 1.0) * 15.0
            acc = 0.0
            for ci in range(16):
                wx = max(0.0, 1.0 - abs(gx - ci))
                if wx == 0.0:
                    continue
                for cj in range(16):
                    wy = max(0.0, 1.0 - abs(gy - cj))
                    if wy == 0.0:
                        continue
                    for ck in range(16):
                        wz = max(0.0, 1.0 - abs(gz - ck))
                        if wz:
                            acc += wx * wy * wz * grid[ci, cj, ck]
            out[y, x] = acc
    return out


def demosaic_bruteforce(raw: RawImage) -> np.ndarray:
    """Per-pixel bilinear demosaic oracle using clamped coordinates (the
    equivalent of edge replication), nearest same-color sites only."""
    tile = {"RGGB": "RGGB", "BGGR": "BGGR", "GRBG": "GRBG", "GBRG": "GBRG"}[raw.cfa]
    h, w = raw.data.shape
    d = raw.data

    def color_at(i, j):
        return tile[(i % 2) * 2 + (j % 2)]

    out = np.zeros((3, h, w))
    for ci, color in enumerate("RGB"):
        for i in range(h):
            for j in range(w):
                if color_at(i, j) == color:
                    out[ci, i, j] = d[i, j]
                    continue
                vals = []
                for di, dj in ((-1, 0), (1, 0), (0, -1), (0, 1)):
                    if color_at(i + di, j + dj) == color:
                        vals.append(d[min(max(i + di, 0), h - 1), min(max(j + dj, 0), w - 1)])
                if not vals:
                    for di, dj in ((-1, -1), (-1, 1), (1, -1), (1, 1)):
                        if color_at(i + di, j + dj) == color:
                            vals.append(d[min(max(i + di, 0), h - 1), min(max(j + dj, 0), w - 1)])
                out[ci, i, j] = sum(vals) / len(vals)
    return out
