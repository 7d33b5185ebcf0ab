"""Bilateral grid containers and 3D slicing.

Each iteration owns one 16x16x16 scalar grid; slicing lifts it to a
full-resolution coefficient map by trilinear interpolation against a
per-pixel guidance value in [0, 1]. Spatial cells are aligned cell-center to
image corners (the n-1 convention); the intensity axis spans [0, 1].
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _kernels
from .raw import CameraProfile

GRID_SIZE = _kernels.GRID_SIZE
GRID_SHAPE = (GRID_SIZE, GRID_SIZE, GRID_SIZE)
GRID_CELLS = GRID_SIZE**3


@dataclass
class BilateralGridSet:
    """N per-iteration coefficient grids, axis order (x-cell, y-cell, z-cell)."""

    grids: np.ndarray  # shape (N, 16, 16, 16)

    def __post_init__(self):
        self.grids = np.ascontiguousarray(self.grids, dtype=np.float64)
        if self.grids.ndim != 4 or self.grids.shape[1:] != GRID_SHAPE:
            raise ValueError(f"grids must have shape (N, {GRID_SIZE}, {GRID_SIZE}, {GRID_SIZE})")
        if self.grids.shape[0] < 1:
            raise ValueError("need at least one grid")
        if not np.isfinite(self.grids).all():
            raise ValueError("grid entries must be finite")

    @property
    def n(self) -> int:
        return self.grids.shape[0]

    @classmethod
    def zeros(cls, n: int) -> "BilateralGridSet":
        if n < 1:
            raise ValueError("iteration count must be >= 1")
        return cls(grids=np.zeros((n,) + GRID_SHAPE))

    def to_json(self) -> str:
        return json.dumps({"N": self.n, "grids": [g.ravel().tolist() for g in self.grids]})

    @classmethod
    def from_json(cls, text: str) -> "BilateralGridSet":
        d = json.loads(text)
        n = int(d["N"])
        flat = d["grids"]
        if len(flat) != n:
            raise ValueError(f"grid set metadata says N={n} but holds {len(flat)} grids")
        grids = np.array([np.asarray(g, dtype=np.float64).reshape(GRID_SHAPE) for g in flat])
        return cls(grids=grids)

    def save(self, path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path) -> "BilateralGridSet":
        return cls.from_json(Path(path).read_text())


def _check_guidance(guidance: np.ndarray) -> np.ndarray:
    guidance = np.ascontiguousarray(guidance, dtype=np.float64)
    if guidance.ndim != 2:
        raise ValueError("guidance must be a 2-D map")
    return guidance


def slice_grid(grid: np.ndarray, guidance: np.ndarray) -> np.ndarray:
    """Read a coefficient grid back at full resolution via 3D slicing.

    Per pixel, at most 8 trilinear weights are nonzero and they sum to 1.
    """
    grid = np.ascontiguousarray(grid, dtype=np.float64)
    if grid.shape != GRID_SHAPE:
        raise ValueError(f"grid must have shape {GRID_SHAPE}")
    guidance = _check_guidance(guidance)
    return _kernels.slice_grid(grid, guidance)


def slice_adjoint(cotangent: np.ndarray, guidance: np.ndarray) -> np.ndarray:
    """Gradient of sum(cotangent * slice_grid(B)) with respect to B.

    Satisfies <slice(G), C> == <G, slice_adjoint(C)> for any grid G.
    """
    guidance = _check_guidance(guidance)
    cotangent = np.ascontiguousarray(cotangent, dtype=np.float64)
    if cotangent.shape != guidance.shape:
        raise ValueError(f"cotangent geometry {cotangent.shape} must match guidance {guidance.shape}")
    return _kernels.slice_adjoint(cotangent, guidance)


def make_guidance(base_planes: np.ndarray, profile: CameraProfile, layout: str = "rggb") -> np.ndarray:
    """Guidance map: clamped luminance of the (denoised) base image."""
    from .enhance import luminance_map

    return luminance_map(base_planes, profile, layout=layout)
