"""Full-resolution joint enhancement + denoising loop.

The denoiser is a joint-bilateral filter whose per-pixel range sigma tracks
the predicted noise level: sqrt of the variance map, scaled by the cumulative
amplification the enhancement steps have applied so far. Where the predicted
noise is negligible the filter is bypassed exactly, which makes the whole
loop collapse to plain progressive enhancement for a zero noise model.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .enhance import clamp_output, enhance_step, luminance_map
from .grid import BilateralGridSet, make_guidance, slice_grid
from .noise import variance_map
from .raw import CameraProfile, RawImage, pack_cfa

DENOISE_RADIUS = 2
DENOISE_C0 = 2.0
DENOISE_BYPASS = 1e-6


@dataclass
class JointState:
    """Mutable-by-replacement state of the joint loop."""

    base: np.ndarray  # denoised starting image I0, packed planes
    current: np.ndarray  # current iterate, packed planes
    amplification: np.ndarray  # per-pixel cumulative gain, starts at 1
    n: int  # completed iterations
    guidance: np.ndarray  # frozen luminance of the base image
    profile: CameraProfile


def denoise_variance_guided(
    img: np.ndarray,
    v: np.ndarray,
    gain: np.ndarray,
    radius: int = DENOISE_RADIUS,
    c0: float = DENOISE_C0,
    bypass_below: float = DENOISE_BYPASS,
) -> np.ndarray:
    """Joint-bilateral filter with per-pixel range sigma = c0 * gain * sqrt(V).

    img:  planar data (C, h, w)
    v:    per-pixel noise variance, (C, h, w) or a single (h, w) plane
    gain: per-pixel amplification (h, w); scales the expected noise level

    Pixels where gain*sqrt(V) < bypass_below pass through untouched. The
    spatial window is (2*radius+1)^2 with sigma_s = radius/2; output always
    lies within the local window's [min, max].
    """
    img = np.ascontiguousarray(img, dtype=np.float64)
    if img.ndim != 3:
        raise ValueError("expected planar image data (C, h, w)")
    v = np.asarray(v, dtype=np.float64)
    if v.ndim == 2:
        v = np.broadcast_to(v, img.shape)
    if v.shape != img.shape:
        raise ValueError(f"variance geometry {v.shape} must match image {img.shape}")
    if v.min() < 0:
        raise ValueError("variance must be >= 0")
    v = np.ascontiguousarray(v)
    gain = np.ascontiguousarray(gain, dtype=np.float64)
    if gain.shape != img.shape[1:]:
        raise ValueError(f"gain geometry {gain.shape} must match image planes {img.shape[1:]}")
    if radius < 1:
        raise ValueError("radius must be >= 1")
    return _kernels.jbf_denoise(img, v, gain, int(radius), float(c0), float(bypass_below))


def _pack_plane(arr: np.ndarray, cfa: str) -> np.ndarray:
    # positional 2x2 split with the same plane order pack_cfa would produce
    return pack_cfa(RawImage(data=np.asarray(arr, dtype=np.float64), cfa=cfa))


def joint_init(i0_noisy: RawImage, v: np.ndarray, profile: CameraProfile) -> JointState:
    """Pack the raw input, denoise it at unit gain, freeze the guidance."""
    packed = pack_cfa(i0_noisy)
    v = np.asarray(v, dtype=np.float64)
    if v.ndim == 2 and v.shape == i0_noisy.data.shape:
        v = _pack_plane(v, i0_noisy.cfa)
    if v.shape != packed.shape:
        raise ValueError(f"variance geometry {v.shape} does not match raw {i0_noisy.data.shape}")
    ones = np.ones(packed.shape[1:], dtype=np.float64)
    base = denoise_variance_guided(packed, v, ones)
    guidance = make_guidance(base, profile)
    return JointState(
        base=base,
        current=base,
        amplification=ones,
        n=0,
        guidance=guidance,
        profile=profile,
    )


def joint_step(state: JointState, theta_n: np.ndarray, v: np.ndarray) -> JointState:
    """One joint iteration: enhance, update amplification, re-denoise."""
    theta_n = np.asarray(theta_n, dtype=np.float64)
    if theta_n.shape != state.current.shape[1:]:
        raise ValueError(
            f"theta geometry {theta_n.shape} must match planes {state.current.shape[1:]}"
        )
    lum = luminance_map(state.current, state.profile, layout="rggb")
    candidate, _ = enhance_step(state.current, theta_n, lum)
    amp = state.amplification * (1.0 + theta_n * (1.0 - lum))
    denoised = denoise_variance_guided(candidate, v, amp)
    return JointState(
        base=state.base,
        current=denoised,
        amplification=amp,
        n=state.n + 1,
        guidance=state.guidance,
        profile=state.profile,
    )


def joint_run(i0_noisy: RawImage, grids: BilateralGridSet, profile: CameraProfile) -> np.ndarray:
    """Full pipeline stage: init, N joint steps, clamp.

    The variance map comes from the profile's noise model evaluated at the
    (clipped) observed signal, the usual plug-in estimate when the clean
    image is unknown.
    """
    profile.validate()
    observed = RawImage(data=np.clip(i0_noisy.data, 0.0, 1.0), cfa=i0_noisy.cfa)
    v = _pack_plane(variance_map(observed, profile.noise), i0_noisy.cfa)
    state = joint_init(i0_noisy, v, profile)
    for n in range(grids.n):
        theta = slice_grid(grids.grids[n], state.guidance)
        state = joint_step(state, theta, v)
    return clamp_output(state.current)
