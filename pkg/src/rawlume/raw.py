"""Raw container, camera profile, and the minimal ISP ops everything else builds on.

All image data is double-precision and planar; 16-bit integers only exist at
the I/O boundary (see :mod:`rawlume.io`). Values are normalized digital
numbers with nominal range [0, 1]; out-of-range values are legal after
synthetic noise injection, so nothing in here clips implicitly.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

CFA_LAYOUTS = ("RGGB", "BGGR", "GRBG", "GBRG")

COLOR_STATES = ("camera-linear", "xyz", "linear-srgb", "encoded-srgb")

# Linear sRGB (D65) from CIE XYZ, IEC 61966-2-1.
SRGB_FROM_XYZ = np.array(
    [
        [3.2404542, -1.5371385, -0.4985314],
        [-0.9692660, 1.8760108, 0.0415560],
        [0.0556434, -0.2040259, 1.0572252],
    ]
)

# Numerical inverse so that SRGB_FROM_XYZ @ XYZ_FROM_SRGB is the identity to
# machine precision; handy for building profiles of sRGB-native test cameras.
XYZ_FROM_SRGB = np.linalg.inv(SRGB_FROM_XYZ)


def _cfa_tile(cfa: str) -> list[list[str]]:
    """2x2 color layout of a CFA, e.g. RGGB -> [[R, G], [G, B]]."""
    if cfa not in CFA_LAYOUTS:
        raise ValueError(f"unknown CFA layout {cfa!r}, expected one of {CFA_LAYOUTS}")
    c = cfa
    return [[c[0], c[1]], [c[2], c[3]]]


@dataclass
class NoiseParams:
    """Physical noise model parameters, all in normalized digital numbers.

    kappa:    conversion gain (DN per photo-electron); 0 disables photon noise
    lambda_r: Tukey-lambda shape of the read noise (> -0.5 for finite variance)
    sigma_r:  read noise standard deviation
    sigma_b:  row-banding standard deviation
    s:        quantization step
    """

    kappa: float = 0.0
    lambda_r: float = 0.0
    sigma_r: float = 0.0
    sigma_b: float = 0.0
    s: float = 0.0

    def validate(self) -> None:
        if not np.isfinite([self.kappa, self.lambda_r, self.sigma_r, self.sigma_b, self.s]).all():
            raise ValueError("noise parameters must be finite")
        if self.kappa < 0:
            raise ValueError(f"kappa must be >= 0, got {self.kappa}")
        if self.sigma_r < 0 or self.sigma_b < 0 or self.s < 0:
            raise ValueError("sigma_r, sigma_b and s must be >= 0")
        if self.lambda_r <= -0.5:
            raise ValueError(f"lambda_r must be > -0.5 (finite variance), got {self.lambda_r}")

    def is_zero(self) -> bool:
        return self.kappa == 0 and self.sigma_r == 0 and self.sigma_b == 0 and self.s == 0

    def to_dict(self) -> dict:
        return {
            "kappa": self.kappa,
            "lambda_r": self.lambda_r,
            "sigma_r": self.sigma_r,
            "sigma_b": self.sigma_b,
            "s": self.s,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NoiseParams":
        p = cls(**{k: float(d.get(k, 0.0)) for k in ("kappa", "lambda_r", "sigma_r", "sigma_b", "s")})
        p.validate()
        return p


@dataclass
class CameraProfile:
    """Per-camera calibration record."""

    cfa: str = "RGGB"
    black_level: float = 512.0
    white_level: float = 16383.0
    wb_gains: tuple = (1.0, 1.0, 1.0)
    cam_to_xyz: np.ndarray = field(default_factory=lambda: XYZ_FROM_SRGB.copy())
    noise: NoiseParams = field(default_factory=NoiseParams)

    def __post_init__(self):
        self.cam_to_xyz = np.asarray(self.cam_to_xyz, dtype=np.float64)

    @property
    def s(self) -> float:
        """Quantization step in normalized units."""
        return 1.0 / (self.white_level - self.black_level)

    @property
    def luminance_weights(self) -> np.ndarray:
        """Row of the camera->XYZ transform producing Y, white balance applied."""
        return self.cam_to_xyz[1] * np.asarray(self.wb_gains, dtype=np.float64)

    def validate(self) -> None:
        if self.cfa not in CFA_LAYOUTS:
            raise ValueError(f"unknown CFA layout {self.cfa!r}")
        if not self.black_level < self.white_level:
            raise ValueError("black_level must be < white_level")
        if len(self.wb_gains) != 3 or any(g <= 0 for g in self.wb_gains):
            raise ValueError("wb_gains must be 3 positive multipliers")
        if self.cam_to_xyz.shape != (3, 3):
            raise ValueError("cam_to_xyz must be 3x3")
        if abs(np.linalg.det(self.cam_to_xyz)) < 1e-12:
            raise ValueError("cam_to_xyz must be invertible")
        self.noise.validate()

    def with_noise(self, noise: NoiseParams) -> "CameraProfile":
        return replace(self, noise=noise)

    def to_dict(self) -> dict:
        return {
            "cfa": self.cfa,
            "black_level": self.black_level,
            "white_level": self.white_level,
            "wb_gains": list(self.wb_gains),
            "cam_to_xyz": self.cam_to_xyz.tolist(),
            "s": self.s,
            "noise": self.noise.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CameraProfile":
        noise = NoiseParams.from_dict(d.get("noise", {}))
        prof = cls(
            cfa=d["cfa"],
            black_level=float(d["black_level"]),
            white_level=float(d["white_level"]),
            wb_gains=tuple(float(g) for g in d["wb_gains"]),
            cam_to_xyz=np.asarray(d["cam_to_xyz"], dtype=np.float64),
            noise=noise,
        )
        if noise.s == 0.0:
            prof.noise.s = prof.s
        prof.validate()
        return prof


@dataclass
class RawImage:
    """Single-plane CFA-mosaiced sensor data, normalized digital numbers."""

    data: np.ndarray
    cfa: str = "RGGB"

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 2:
            raise ValueError("raw data must be 2-D")
        h, w = self.data.shape
        if h % 2 or w % 2:
            raise ValueError(f"raw dimensions must be even, got {h}x{w}")
        if self.cfa not in CFA_LAYOUTS:
            raise ValueError(f"unknown CFA layout {self.cfa!r}")
        if not np.isfinite(self.data).all():
            raise ValueError("raw data must be finite")

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


@dataclass
class RgbImage:
    """3-channel planar image with an explicit color state."""

    planes: np.ndarray  # shape (3, H, W)
    color_state: str = "camera-linear"

    def __post_init__(self):
        self.planes = np.asarray(self.planes, dtype=np.float64)
        if self.planes.ndim != 3 or self.planes.shape[0] != 3:
            raise ValueError("planes must have shape (3, H, W)")
        if self.color_state not in COLOR_STATES:
            raise ValueError(f"unknown color state {self.color_state!r}")

    @property
    def height(self) -> int:
        return self.planes.shape[1]

    @property
    def width(self) -> int:
        return self.planes.shape[2]


def normalize_raw(raw_dn: np.ndarray, profile: CameraProfile) -> RawImage:
    """Map integer digital numbers to normalized [0, 1] using the profile levels.

    Values at or below the black level map to 0, saturated pixels to 1.
    """
    profile.validate()
    dn = np.asarray(raw_dn)
    if dn.ndim != 2:
        raise ValueError("raw_dn must be 2-D")
    if dn.shape[0] % 2 or dn.shape[1] % 2:
        raise ValueError(f"raw dimensions must match CFA parity (even), got {dn.shape}")
    if np.issubdtype(dn.dtype, np.integer):
        if dn.min() < 0 or dn.max() >= 2**16:
            raise ValueError("raw_dn values must lie in [0, 2^16)")
    scale = profile.white_level - profile.black_level
    data = np.clip((dn.astype(np.float64) - profile.black_level) / scale, 0.0, 1.0)
    return RawImage(data=data, cfa=profile.cfa)


def pack_cfa(raw: RawImage) -> np.ndarray:
    """Split the mosaic into 4 half-resolution planes ordered (R, G1, G2, B).

    G1 is the green sample in the top row of each 2x2 tile, G2 the bottom one.
    """
    tile = _cfa_tile(raw.cfa)
    d = raw.data
    quads = {
        (0, 0): d[0::2, 0::2],
        (0, 1): d[0::2, 1::2],
        (1, 0): d[1::2, 0::2],
        (1, 1): d[1::2, 1::2],
    }
    planes = {}
    for (i, j), q in quads.items():
        color = tile[i][j]
        if color == "G":
            color = "G1" if i == 0 else "G2"
        planes[color] = q
    return np.stack([planes["R"], planes["G1"], planes["G2"], planes["B"]])


def unpack_cfa(planes: np.ndarray, cfa: str) -> RawImage:
    """Inverse of :func:`pack_cfa` (exact round-trip)."""
    if planes.ndim != 3 or planes.shape[0] != 4:
        raise ValueError("expected 4 packed planes")
    tile = _cfa_tile(cfa)
    by_color = {"R": planes[0], "G1": planes[1], "G2": planes[2], "B": planes[3]}
    h, w = planes.shape[1] * 2, planes.shape[2] * 2
    out = np.empty((h, w), dtype=np.float64)
    for i in (0, 1):
        for j in (0, 1):
            color = tile[i][j]
            if color == "G":
                color = "G1" if i == 0 else "G2"
            out[i::2, j::2] = by_color[color]
    return RawImage(data=out, cfa=cfa)


# Neighbor stencils used by bilinear demosaicing, keyed by where the missing
# color sits relative to the current site.
_CROSS = ((-1, 0), (1, 0), (0, -1), (0, 1))
_DIAG = ((-1, -1), (-1, 1), (1, -1), (1, 1))
_HORIZ = ((0, -1), (0, 1))
_VERT = ((-1, 0), (1, 0))


def _stencil_for(tile, color: str, pi: int, pj: int):
    """Offsets of the nearest same-color CFA sites around parity (pi, pj).

    The cross is checked before the 2-site stencils so that green at an R/B
    site averages all four of its equidistant neighbors.
    """
    if tile[pi][pj] == color:
        return ((0, 0),)
    for candidate in (_CROSS, _HORIZ, _VERT, _DIAG):
        if all(tile[(pi + di) % 2][(pj + dj) % 2] == color for di, dj in candidate):
            return candidate
    raise AssertionError("CFA tile must contain every color within distance 1")


def demosaic_bilinear(raw: RawImage) -> RgbImage:
    """Bilinear demosaic: missing colors are averages of the nearest same-color
    neighbors, with edge-replicated borders. Known samples pass through."""
    tile = _cfa_tile(raw.cfa)
    padded = np.pad(raw.data, 1, mode="edge")
    h, w = raw.data.shape
    out = np.zeros((3, h, w), dtype=np.float64)
    for ci, color in enumerate("RGB"):
        for pi in (0, 1):
            for pj in (0, 1):
                offsets = _stencil_for(tile, color, pi, pj)
                acc = np.zeros(((h - pi + 1) // 2, (w - pj + 1) // 2))
                for di, dj in offsets:
                    ii = 1 + pi + di
                    jj = 1 + pj + dj
                    acc += padded[ii : ii + h - pi : 2, jj : jj + w - pj : 2]
                out[ci, pi::2, pj::2] = acc / len(offsets)
    return RgbImage(planes=out, color_state="camera-linear")


def camera_to_srgb(img: RgbImage, profile: CameraProfile, encode: bool = True) -> RgbImage:
    """White balance, camera->XYZ, XYZ->linear sRGB, clamp; optionally encode.

    The encode step applies the standard sRGB transfer curve.
    """
    if img.color_state != "camera-linear":
        raise ValueError(f"expected camera-linear input, got {img.color_state!r}")
    profile.validate()
    m = SRGB_FROM_XYZ @ profile.cam_to_xyz @ np.diag(profile.wb_gains)
    flat = img.planes.reshape(3, -1)
    lin = np.clip(m @ flat, 0.0, 1.0).reshape(img.planes.shape)
    if not encode:
        return RgbImage(planes=lin, color_state="linear-srgb")
    return RgbImage(planes=srgb_encode(lin), color_state="encoded-srgb")


def srgb_encode(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return np.where(x <= 0.0031308, 12.92 * x, 1.055 * np.power(np.maximum(x, 1e-300), 1 / 2.4) - 0.055)


def srgb_decode(y: np.ndarray) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64)
    return np.where(y <= 0.04045, y / 12.92, np.power((np.maximum(y, 0) + 0.055) / 1.055, 2.4))


def luminance_xyz(img: RgbImage, profile: CameraProfile) -> np.ndarray:
    """Per-pixel XYZ luminance of a camera-linear image, clamped to [0, 1]."""
    if img.color_state != "camera-linear":
        raise ValueError(f"expected camera-linear input, got {img.color_state!r}")
    w = profile.luminance_weights
    lum = w[0] * img.planes[0] + w[1] * img.planes[1] + w[2] * img.planes[2]
    return np.clip(lum, 0.0, 1.0)


def _area_weights(n_in: int, n_out: int) -> np.ndarray:
    """Sparse-ish (n_out, n_in) row-stochastic matrix of box-overlap weights."""
    scale = n_in / n_out
    w = np.zeros((n_out, n_in))
    for i in range(n_out):
        lo = i * scale
        hi = (i + 1) * scale
        j0 = int(np.floor(lo))
        j1 = min(int(np.ceil(hi)), n_in)
        for j in range(j0, j1):
            w[i, j] = min(hi, j + 1) - max(lo, j)
    return w / scale


def downsample_area(img: RgbImage, target: tuple = (256, 256)) -> RgbImage:
    """Area-average (box) resampling to ``target`` (height, width).

    Preserves the global mean exactly; upscaling requests are rejected.
    """
    th, tw = target
    if th > img.height or tw > img.width:
        raise ValueError(
            f"downsample target {target} exceeds source {(img.height, img.width)}; upscaling is not supported"
        )
    wr = _area_weights(img.height, th)
    wc = _area_weights(img.width, tw)
    out = np.einsum("ih,chw,jw->cij", wr, img.planes, wc, optimize=True)
    return RgbImage(planes=out, color_state=img.color_state)


def downsample_area_2d(arr: np.ndarray, target: tuple) -> np.ndarray:
    """Box resampling of a single 2-D plane (same kernel as downsample_area)."""
    th, tw = target
    if th > arr.shape[0] or tw > arr.shape[1]:
        raise ValueError("upscaling is not supported")
    wr = _area_weights(arr.shape[0], th)
    wc = _area_weights(arr.shape[1], tw)
    return wr @ arr @ wc.T
