"""File formats: the raw container, profile sidecars, and RGB image output.

Raw container layout: 8-byte magic ``RLRAW001``, little-endian u32 width,
u32 height, then ``width*height`` little-endian u16 samples, row-major.
Camera metadata lives in a JSON sidecar with the same basename and a
``.json`` extension.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .raw import CameraProfile, RawImage, normalize_raw

MAGIC = b"RLRAW001"


def sidecar_path(path) -> Path:
    return Path(path).with_suffix(".json")


def write_raw_container(path, dn: np.ndarray, profile: CameraProfile, extra: dict | None = None) -> None:
    """Write integer digital numbers plus the profile sidecar.

    ``extra`` entries are merged into the sidecar (e.g. synthesis seeds).
    """
    dn = np.asarray(dn)
    if dn.ndim != 2:
        raise ValueError("raw data must be 2-D")
    if np.issubdtype(dn.dtype, np.floating):
        dn = np.rint(dn)
    dn = np.clip(dn, 0, 65535).astype("<u2")
    h, w = dn.shape
    path = Path(path)
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<II", w, h))
        f.write(dn.tobytes())
    meta = profile.to_dict()
    if extra:
        meta.update(extra)
    sidecar_path(path).write_text(json.dumps(meta, indent=2))


def read_raw_container(path) -> tuple[np.ndarray, CameraProfile, dict]:
    """Read a raw container; returns (u16 array, profile, full sidecar dict)."""
    path = Path(path)
    blob = path.read_bytes()
    if blob[:8] != MAGIC:
        raise ValueError(f"{path}: bad magic, not a raw container")
    w, h = struct.unpack("<II", blob[8:16])
    expected = 16 + 2 * w * h
    if len(blob) != expected:
        raise ValueError(f"{path}: truncated container ({len(blob)} bytes, expected {expected})")
    dn = np.frombuffer(blob[16:], dtype="<u2").reshape(h, w)
    sc = sidecar_path(path)
    if not sc.exists():
        raise ValueError(f"{path}: missing profile sidecar {sc.name}")
    meta = json.loads(sc.read_text())
    profile = CameraProfile.from_dict(meta)
    return dn.copy(), profile, meta


def load_raw_image(path) -> tuple[RawImage, CameraProfile, dict]:
    dn, profile, meta = read_raw_container(path)
    return normalize_raw(dn, profile), profile, meta


def denormalize_to_dn(data: np.ndarray, profile: CameraProfile) -> np.ndarray:
    """Map normalized values back to integer digital numbers (rounded, clipped
    to the u16 range; values can sit below black or above white after noise)."""
    scale = profile.white_level - profile.black_level
    dn = np.rint(np.asarray(data, dtype=np.float64) * scale + profile.black_level)
    return np.clip(dn, 0, 65535).astype(np.uint16)


def write_raw_image(path, raw: RawImage, profile: CameraProfile, extra: dict | None = None) -> None:
    write_raw_container(path, denormalize_to_dn(raw.data, profile), profile, extra)


def write_ppm(path, planes: np.ndarray, bits: int = 8) -> None:
    """Write planar RGB in [0, 1] as binary PPM (P6).

    ``bits=16`` writes big-endian 16-bit samples (the byte order PNG uses),
    serving as the high-precision raw dump.
    """
    planes = np.asarray(planes, dtype=np.float64)
    if planes.ndim != 3 or planes.shape[0] != 3:
        raise ValueError("expected (3, H, W) planes")
    if bits not in (8, 16):
        raise ValueError("bits must be 8 or 16")
    maxval = (1 << bits) - 1
    q = np.rint(np.clip(planes, 0.0, 1.0) * maxval)
    interleaved = np.moveaxis(q, 0, -1)
    body = interleaved.astype(">u2" if bits == 16 else "u1").tobytes()
    h, w = planes.shape[1], planes.shape[2]
    with open(path, "wb") as f:
        f.write(f"P6\n{w} {h}\n{maxval}\n".encode("ascii"))
        f.write(body)


def read_ppm(path) -> np.ndarray:
    """Read binary PPM back into (3, H, W) float planes in [0, 1]."""
    blob = Path(path).read_bytes()
    if not blob.startswith(b"P6"):
        raise ValueError(f"{path}: not a binary PPM")
    fields = []
    pos = 2
    while len(fields) < 3:
        while pos < len(blob) and blob[pos : pos + 1].isspace():
            pos += 1
        if blob[pos : pos + 1] == b"#":
            while blob[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while not blob[pos : pos + 1].isspace():
            pos += 1
        fields.append(int(blob[start:pos]))
    pos += 1  # single whitespace after maxval
    w, h, maxval = fields
    dtype = ">u2" if maxval > 255 else "u1"
    data = np.frombuffer(blob, dtype=dtype, offset=pos, count=w * h * 3)
    planes = np.moveaxis(data.reshape(h, w, 3).astype(np.float64) / maxval, -1, 0)
    return planes


def write_profile(path, profile: CameraProfile) -> None:
    Path(path).write_text(json.dumps(profile.to_dict(), indent=2))


def read_profile(path) -> CameraProfile:
    return CameraProfile.from_dict(json.loads(Path(path).read_text()))
