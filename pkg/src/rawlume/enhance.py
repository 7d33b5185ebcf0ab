"""Progressive illumination adjustment and its residual decomposition.

Each iteration multiplies the image by (1 + theta*(1 - L)) per pixel, where
theta comes from slicing a per-iteration bilateral grid and L is the clamped
luminance of the current iterate. The final image is exactly the input plus
the sum of all residuals; nothing clips until clamp_output.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import BilateralGridSet, slice_grid
from .raw import CameraProfile

DEFAULT_ITERATIONS = 9


@dataclass
class IterationTrace:
    """Full history of a progressive run: images I_0..I_N, residuals R_1..R_N."""

    images: list = field(default_factory=list)
    residuals: list = field(default_factory=list)

    @property
    def n(self) -> int:
        return len(self.residuals)

    @property
    def final(self) -> np.ndarray:
        return self.images[-1]


def luminance_map(planes: np.ndarray, profile: CameraProfile, layout: str = "rggb") -> np.ndarray:
    """Clamped luminance of planar image data.

    layout 'rggb': 4 packed CFA planes (R, G1, G2, B); the two greens average.
    layout 'rgb': 3 full-color planes.
    """
    planes = np.asarray(planes, dtype=np.float64)
    w = profile.luminance_weights
    if layout == "rggb":
        if planes.ndim != 3 or planes.shape[0] != 4:
            raise ValueError("rggb layout expects 4 packed planes")
        lum = w[0] * planes[0] + w[1] * 0.5 * (planes[1] + planes[2]) + w[2] * planes[3]
    elif layout == "rgb":
        if planes.ndim != 3 or planes.shape[0] != 3:
            raise ValueError("rgb layout expects 3 planes")
        lum = w[0] * planes[0] + w[1] * planes[1] + w[2] * planes[2]
    else:
        raise ValueError(f"unknown layout {layout!r}")
    return np.clip(lum, 0.0, 1.0)


def enhance_step(i_prev: np.ndarray, theta: np.ndarray, l_prev: np.ndarray):
    """One brightening step: R = theta*(1 - L)*I, I_next = I + R.

    theta and l_prev are 2-D maps applied identically to every plane; l_prev
    is expected in [0, 1] (use luminance_map) so the step never darkens for
    nonnegative theta.
    """
    i_prev = np.asarray(i_prev, dtype=np.float64)
    theta = np.asarray(theta, dtype=np.float64)
    l_prev = np.asarray(l_prev, dtype=np.float64)
    if i_prev.ndim != 3:
        raise ValueError("expected planar image data (C, H, W)")
    if theta.shape != i_prev.shape[1:] or l_prev.shape != i_prev.shape[1:]:
        raise ValueError(
            f"theta {theta.shape} and luminance {l_prev.shape} must match image geometry {i_prev.shape[1:]}"
        )
    r = theta[None, :, :] * (1.0 - l_prev)[None, :, :] * i_prev
    return i_prev + r, r


def enhance_progressive(
    i0: np.ndarray,
    grids: BilateralGridSet,
    guidance: np.ndarray,
    profile: CameraProfile,
    layout: str = "rggb",
) -> IterationTrace:
    """Run N enhancement steps with a fixed guidance map.

    theta_n is sliced from grid n against `guidance` (constant across the
    run); the luminance inside the step is recomputed from each iterate.
    """
    i0 = np.asarray(i0, dtype=np.float64)
    if i0.ndim != 3:
        raise ValueError("expected planar image data (C, H, W)")
    trace = IterationTrace(images=[i0])
    cur = i0
    for n in range(grids.n):
        theta = slice_grid(grids.grids[n], guidance)
        lum = luminance_map(cur, profile, layout=layout)
        cur, r = enhance_step(cur, theta, lum)
        trace.images.append(cur)
        trace.residuals.append(r)
    return trace


def clamp_output(planes: np.ndarray) -> np.ndarray:
    """Final [0, 1] clamp; intermediate iterates are deliberately unclipped."""
    return np.clip(np.asarray(planes, dtype=np.float64), 0.0, 1.0)
