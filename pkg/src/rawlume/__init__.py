"""rawlume: raw-domain low-light enhancement with joint denoising.

Pipeline in one breath: normalize the mosaiced raw, fit per-iteration
bilateral grids on a 256x256 proxy by minimizing an exposure objective, slice
the grids at full resolution, and apply N multiplicative brightening steps
interleaved with variance-guided denoising; finish with demosaicing, color
conversion, and an optional polynomial color transform.
"""

from ._kernels import BACKEND
from .calibrate import estimate_banding, estimate_gain_photon_transfer, estimate_tukey_ppcc
from .color import ColorMatrix, PolySpec, apply_color, fit_color_lsq, identity_matrix, poly_expand
from .enhance import (
    DEFAULT_ITERATIONS,
    IterationTrace,
    clamp_output,
    enhance_progressive,
    enhance_step,
    luminance_map,
)
from .grid import GRID_SIZE, BilateralGridSet, make_guidance, slice_adjoint, slice_grid
from .joint import JointState, denoise_variance_guided, joint_init, joint_run, joint_step
from .metrics import entropy, psnr, ssim
from .noise import (
    darken,
    sample_noise,
    tukey_lambda_quantile,
    tukey_lambda_variance,
    variance_map,
)
from .optimize import FitConfig, exposure_loss, fit_grids, grid_tv3, objective_and_gradient
from .raw import (
    CameraProfile,
    NoiseParams,
    RawImage,
    RgbImage,
    camera_to_srgb,
    demosaic_bilinear,
    downsample_area,
    luminance_xyz,
    normalize_raw,
    pack_cfa,
    srgb_decode,
    srgb_encode,
    unpack_cfa,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BilateralGridSet",
    "CameraProfile",
    "ColorMatrix",
    "DEFAULT_ITERATIONS",
    "FitConfig",
    "GRID_SIZE",
    "IterationTrace",
    "JointState",
    "NoiseParams",
    "PolySpec",
    "RawImage",
    "RgbImage",
    "apply_color",
    "camera_to_srgb",
    "clamp_output",
    "darken",
    "demosaic_bilinear",
    "denoise_variance_guided",
    "downsample_area",
    "enhance_progressive",
    "enhance_step",
    "entropy",
    "estimate_banding",
    "estimate_gain_photon_transfer",
    "estimate_tukey_ppcc",
    "exposure_loss",
    "fit_color_lsq",
    "fit_grids",
    "grid_tv3",
    "identity_matrix",
    "joint_init",
    "joint_run",
    "joint_step",
    "luminance_map",
    "luminance_xyz",
    "make_guidance",
    "normalize_raw",
    "objective_and_gradient",
    "pack_cfa",
    "poly_expand",
    "psnr",
    "sample_noise",
    "slice_adjoint",
    "slice_grid",
    "srgb_decode",
    "srgb_encode",
    "ssim",
    "tukey_lambda_quantile",
    "tukey_lambda_variance",
    "unpack_cfa",
    "variance_map",
]
