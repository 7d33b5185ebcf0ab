"""Per-image fitting of the bilateral grid set on a low-resolution proxy.

The objective is the exposure loss of the N-step enhanced image plus grid
smoothness and magnitude regularizers. Gradients are computed analytically by
reverse accumulation through the enhancement recursion (including the
luminance dependence, which is piecewise linear per pixel) and the slicing
adjoint. Plain gradient descent with momentum from zero grids; the returned
grids are the best iterate seen, so the procedure is deterministic and its
recorded objective non-increasing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .enhance import DEFAULT_ITERATIONS, luminance_map
from .grid import GRID_CELLS, GRID_SHAPE, BilateralGridSet, slice_adjoint, slice_grid
from .raw import CameraProfile, RgbImage

# 3 axes x 15 adjacent pairs x 16 x 16 cells
_TV_PAIRS = 3 * 15 * 16 * 16


@dataclass
class FitConfig:
    delta: float = 0.2  # exposure-loss width
    n_iter: int = DEFAULT_ITERATIONS
    w_tv: float = 0.1  # grid smoothness weight
    w_mag: float = 0.01  # grid magnitude weight
    steps: int = 200  # optimizer iterations
    # The objective is mean-normalized, so per-cell gradients are tiny
    # (roughly the fraction of pixels a cell supports); the step size has to
    # be large for the 200-step budget to converge from zero grids.
    step_size: float = 10.0
    momentum: float = 0.9

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError("delta must be > 0")
        if self.n_iter < 1:
            raise ValueError("iteration count must be >= 1")
        if self.w_tv < 0 or self.w_mag < 0:
            raise ValueError("regularizer weights must be >= 0")
        if self.steps < 1 or self.step_size <= 0:
            raise ValueError("steps must be >= 1 and step_size > 0")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError("momentum must lie in [0, 1)")


def _planes_of(img) -> np.ndarray:
    planes = img.planes if isinstance(img, RgbImage) else np.asarray(img, dtype=np.float64)
    if planes.ndim != 3 or planes.shape[0] != 3:
        raise ValueError("expected a 3-plane RGB image")
    if planes[0].size == 0:
        raise ValueError("empty image")
    return planes


def exposure_loss(img, delta: float = 0.2) -> float:
    """Mean well-exposedness penalty: 1 - exp(-(p - 0.5)^2 / (2 delta^2)).

    p is the per-pixel channel mean; the loss is 0 only for p == 0.5
    everywhere and saturates toward 1 for strongly under/overexposed pixels.
    """
    if not delta > 0:
        raise ValueError("delta must be > 0")
    planes = _planes_of(img)
    p = planes.mean(axis=0)
    return float(np.mean(1.0 - np.exp(-((p - 0.5) ** 2) / (2.0 * delta * delta))))


def grid_tv3(grid: np.ndarray) -> float:
    """Mean squared difference over all axis-adjacent cell pairs of one grid."""
    g = np.asarray(grid, dtype=np.float64)
    if g.shape != GRID_SHAPE:
        raise ValueError(f"grid must have shape {GRID_SHAPE}")
    total = 0.0
    for axis in range(3):
        total += float((np.diff(g, axis=axis) ** 2).sum())
    return total / _TV_PAIRS


def _grid_tv3_grad(g: np.ndarray) -> np.ndarray:
    grad = np.zeros_like(g)
    for axis in range(3):
        d = np.diff(g, axis=axis) * (2.0 / _TV_PAIRS)
        hi = [slice(None)] * 3
        lo = [slice(None)] * 3
        hi[axis] = slice(1, None)
        lo[axis] = slice(None, -1)
        grad[tuple(hi)] += d
        grad[tuple(lo)] -= d
    return grad


def _objective_core(planes0, b, guidance, cfg, lum_weights):
    """Loss and gradient for grid array b of shape (N, 16, 16, 16)."""
    n_iter = b.shape[0]
    m = planes0[0].size
    w = lum_weights

    thetas, lums, masks, fs = [], [], [], []
    images = [planes0]
    cur = planes0
    for n in range(n_iter):
        theta = slice_grid(b[n], guidance)
        raw_lum = w[0] * cur[0] + w[1] * cur[1] + w[2] * cur[2]
        lum = np.clip(raw_lum, 0.0, 1.0)
        mask = ((raw_lum > 0.0) & (raw_lum < 1.0)).astype(np.float64)
        f = theta * (1.0 - lum)
        cur = cur * (1.0 + f)[None, :, :]
        thetas.append(theta)
        lums.append(lum)
        masks.append(mask)
        fs.append(f)
        images.append(cur)

    p = images[-1].mean(axis=0)
    dev = p - 0.5
    e = np.exp(-(dev**2) / (2.0 * cfg.delta**2))
    loss = float(np.mean(1.0 - e))
    for n in range(n_iter):
        loss += cfg.w_tv * grid_tv3(b[n])
        loss += cfg.w_mag * float((b[n] ** 2).sum()) / GRID_CELLS

    # dLoss/dI_N is the same map on every channel: phi'(p) / (3M)
    g_p = e * dev / (cfg.delta**2 * m)
    u = np.broadcast_to(g_p / 3.0, planes0.shape).copy()

    grad = np.empty_like(b)
    for n in reversed(range(n_iter)):
        s = (u * images[n]).sum(axis=0)
        grad[n] = slice_adjoint((1.0 - lums[n]) * s, guidance)
        # pull the cotangent through I_n = I_{n-1} * (1 + theta*(1 - L)),
        # where L itself depends linearly on I_{n-1} wherever unclamped
        u = u * (1.0 + fs[n])[None, :, :] - (thetas[n] * s * masks[n])[None, :, :] * w[:, None, None]

    for n in range(n_iter):
        grad[n] += cfg.w_tv * _grid_tv3_grad(b[n])
        grad[n] += cfg.w_mag * (2.0 / GRID_CELLS) * b[n]
    return loss, grad


def objective_and_gradient(
    i0_lowres,
    grids: BilateralGridSet,
    guidance: np.ndarray,
    cfg: FitConfig,
    profile: CameraProfile | None = None,
):
    """Objective value and analytic gradient with respect to every grid cell.

    The guidance map is treated as fixed (no gradient flows through slicing
    positions); the luminance inside each enhancement step is live.
    """
    planes = _planes_of(i0_lowres)
    weights = (profile or CameraProfile()).luminance_weights
    guidance = np.asarray(guidance, dtype=np.float64)
    if guidance.shape != planes.shape[1:]:
        raise ValueError("guidance geometry must match the image")
    return _objective_core(planes, grids.grids, guidance, cfg, weights)


def fit_grids(
    i0_lowres,
    cfg: FitConfig | None = None,
    profile: CameraProfile | None = None,
    guidance: np.ndarray | None = None,
) -> BilateralGridSet:
    """Fit the grid set to one low-resolution linear image.

    Deterministic: zero initialization, fixed-step momentum descent, returns
    the iterate with the lowest objective encountered.
    """
    cfg = cfg if cfg is not None else FitConfig()
    profile = profile if profile is not None else CameraProfile()
    planes = _planes_of(i0_lowres)
    weights = profile.luminance_weights
    if guidance is None:
        guidance = luminance_map(planes, profile, layout="rgb")
    else:
        guidance = np.asarray(guidance, dtype=np.float64)
        if guidance.shape != planes.shape[1:]:
            raise ValueError("guidance geometry must match the image")

    b = np.zeros((cfg.n_iter,) + GRID_SHAPE)
    vel = np.zeros_like(b)
    best = b.copy()
    best_loss = np.inf
    for step in range(cfg.steps):
        loss, grad = _objective_core(planes, b, guidance, cfg, weights)
        if not np.isfinite(loss):
            raise RuntimeError(f"objective became non-finite at step {step}; try a smaller step_size")
        if loss < best_loss:
            best_loss = loss
            best = b.copy()
        vel = cfg.momentum * vel - cfg.step_size * grad
        b = b + vel
    loss, _ = _objective_core(planes, b, guidance, cfg, weights)
    if np.isfinite(loss) and loss < best_loss:
        best = b.copy()
    return BilateralGridSet(grids=best)
