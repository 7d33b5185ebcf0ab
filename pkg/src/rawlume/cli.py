"""Command-line surface: calibrate, synth, enhance, fit-color, metrics.

Every command is deterministic given its flags (and seed, where one exists).
Failures report the pipeline stage they happened in and exit nonzero.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from .calibrate import estimate_banding, estimate_gain_photon_transfer, estimate_tukey_ppcc
from .color import ColorMatrix, PolySpec, apply_color, fit_color_lsq, fit_residual, identity_matrix
from .enhance import clamp_output, enhance_progressive
from .grid import make_guidance
from .io import (
    read_ppm,
    read_raw_container,
    sidecar_path,
    write_ppm,
    write_profile,
    write_raw_image,
)
from .joint import joint_run
from .metrics import entropy, psnr, ssim
from .noise import darken, sample_noise
from .optimize import FitConfig, exposure_loss, fit_grids
from .raw import (
    CameraProfile,
    NoiseParams,
    RawImage,
    RgbImage,
    camera_to_srgb,
    demosaic_bilinear,
    downsample_area,
    normalize_raw,
    pack_cfa,
    srgb_decode,
    srgb_encode,
    unpack_cfa,
)

LOWRES_SIZE = 256


class _StageError(Exception):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"error in stage '{stage}': {cause}")
        self.stage = stage


@contextmanager
def _stage(name: str, timings: dict | None = None):
    t0 = time.perf_counter()
    try:
        yield
    except _StageError:
        raise
    except Exception as exc:
        raise _StageError(name, exc) from exc
    if timings is not None:
        timings[name] = time.perf_counter() - t0


def _worker_count() -> int:
    env = os.environ.get("RAWLUME_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _load_profile_dict(path) -> dict:
    return json.loads(Path(path).read_text())


def _unclipped(dn: np.ndarray, profile: CameraProfile) -> np.ndarray:
    """Normalized values without the [0,1] clip; calibration needs the
    negative tail of the read noise."""
    scale = profile.white_level - profile.black_level
    return (dn.astype(np.float64) - profile.black_level) / scale


def cmd_calibrate(args) -> None:
    with _stage("load-darks"):
        dark_files = sorted(Path(args.dark_dir).glob("*.raw"))
        if len(dark_files) < 2:
            raise ValueError(f"need >= 2 dark frames, found {len(dark_files)} in {args.dark_dir}")
        darks = []
        base_profile = None
        for p in dark_files:
            dn, prof, _ = read_raw_container(p)
            base_profile = base_profile or prof
            darks.append(_unclipped(dn, prof))
    with _stage("load-flats"):
        flat_files = sorted(Path(args.flat_dir).glob("*.raw"))
        if len(flat_files) % 2:
            raise ValueError(f"flat frames must come in same-exposure pairs, found {len(flat_files)}")
        if len(flat_files) < 10:
            raise ValueError(f"need >= 5 exposure-level pairs (10 files), found {len(flat_files)}")
        flats = []
        for p in flat_files:
            dn, prof, _ = read_raw_container(p)
            flats.append(_unclipped(dn, prof))
        pairs = list(zip(flats[0::2], flats[1::2]))
    if args.profile:
        with _stage("load-profile"):
            base_profile = CameraProfile.from_dict(_load_profile_dict(args.profile))
    with _stage("banding"):
        sigma_b = estimate_banding(darks)
    with _stage("read-noise"):
        lam, sigma_r, ppcc_diag = estimate_tukey_ppcc(darks, full_output=True)
    with _stage("gain"):
        kappa, gain_diag = estimate_gain_photon_transfer(pairs, full_output=True)
    with _stage("write"):
        noise = NoiseParams(
            kappa=kappa, lambda_r=lam, sigma_r=sigma_r, sigma_b=sigma_b, s=base_profile.s
        )
        noise.validate()
        write_profile(args.out, base_profile.with_noise(noise))
    print(f"kappa    = {kappa:.6g}   (photon transfer, R^2 = {gain_diag['r_squared']:.4f}, "
          f"{gain_diag['n_points']} points)")
    print(f"lambda_r = {lam:.2f}       (PPCC peak = {ppcc_diag['ppcc_peak']:.5f}, "
          f"{ppcc_diag['n_samples']} samples)")
    print(f"sigma_r  = {sigma_r:.6g}")
    print(f"sigma_b  = {sigma_b:.6g}")
    print(f"profile written to {args.out}")


def cmd_synth(args) -> None:
    with _stage("load"):
        dn, profile, meta = read_raw_container(args.clean)
        if args.profile:
            meta = _load_profile_dict(args.profile)
            profile = CameraProfile.from_dict(meta)
        if "noise" not in meta:
            raise ValueError("profile has no noise parameters; run calibrate first")
        clean = normalize_raw(dn, profile)
    with _stage("synth"):
        lo, hi = (float(v) for v in args.factor_range.split(":"))
        if lo < 1 or hi < lo:
            raise ValueError(f"factor range must satisfy 1 <= lo <= hi, got {args.factor_range}")
        rng = np.random.default_rng(args.seed)
        factor = float(rng.uniform(lo, hi))
        darkened = darken(clean, factor)
        noisy = sample_noise(darkened, profile.noise, rng)
    with _stage("write"):
        extra = {"seed": args.seed, "factor": factor, "source": str(args.clean)}
        clean_path = f"{args.out_pair}_clean.raw"
        noisy_path = f"{args.out_pair}_noisy.raw"
        write_raw_image(clean_path, darkened, profile, extra={**extra, "role": "clean"})
        write_raw_image(noisy_path, noisy, profile, extra={**extra, "role": "noisy"})
    print(f"factor = {factor:.4f}")
    print(f"wrote {clean_path} and {noisy_path}")


def cmd_enhance(args) -> None:
    timings: dict = {}
    with _stage("load", timings):
        dn, profile, _ = read_raw_container(args.input)
        if args.profile:
            profile = CameraProfile.from_dict(_load_profile_dict(args.profile))
        raw = normalize_raw(dn, profile)
    with _stage("lowres", timings):
        rgb_full = demosaic_bilinear(raw)
        target = (min(LOWRES_SIZE, rgb_full.height), min(LOWRES_SIZE, rgb_full.width))
        lowres = downsample_area(rgb_full, target)
    with _stage("fit", timings):
        cfg = FitConfig(
            delta=args.delta,
            n_iter=args.iterations,
            w_tv=args.w_tv,
            w_mag=args.w_mag,
            steps=args.steps,
            step_size=args.step_size,
            momentum=args.momentum,
        )
        grids = fit_grids(lowres, cfg, profile)
        if args.save_grids:
            grids.save(args.save_grids)
    with _stage("enhance", timings):
        if args.no_denoise:
            packed = pack_cfa(raw)
            guidance = make_guidance(packed, profile)
            planes = clamp_output(enhance_progressive(packed, grids, guidance, profile).final)
        else:
            planes = joint_run(raw, grids, profile)
    with _stage("convert", timings):
        rgb = demosaic_bilinear(unpack_cfa(planes, profile.cfa))
        linear = camera_to_srgb(rgb, profile, encode=False)
        out_loss = exposure_loss(linear, args.delta)
        encoded = RgbImage(planes=srgb_encode(linear.planes), color_state="encoded-srgb")
    with _stage("color", timings):
        if not args.no_color:
            if args.color_matrix:
                cm = ColorMatrix.load(args.color_matrix)
            else:
                cm = identity_matrix(PolySpec())
            encoded = apply_color(encoded, cm)
    with _stage("write", timings):
        write_ppm(args.out, encoded.planes, bits=args.bits)
    for name, dt in timings.items():
        print(f"  {name}: {dt:.3f} s")
    print(f"exposure loss: {out_loss:.5f}")
    print(f"wrote {args.out}")


def cmd_fit_color(args) -> None:
    with _stage("spec"):
        if args.degree not in (1, 2, 3, 4):
            raise ValueError(f"degree ∈ 1..4, got {args.degree}")
        spec = PolySpec(degree=args.degree, with_constant=args.constant)
    with _stage("load"):
        source = RgbImage(planes=read_ppm(args.source), color_state="encoded-srgb")
        target = RgbImage(planes=read_ppm(args.target), color_state="encoded-srgb")
    with _stage("fit"):
        cm = fit_color_lsq(source, target, spec)
        residual = fit_residual(source, target, cm)
    with _stage("write"):
        cm.save(args.out)
    print(f"terms = {spec.term_count}, mean squared residual = {residual:.6g}")
    print(f"matrix written to {args.out}")


def _one_metrics_line(path: str, ref_planes, delta: float) -> str:
    planes = read_ppm(path)
    record = {
        "file": str(path),
        "psnr": None,
        "ssim": None,
        "entropy": entropy(planes),
        "exposure_loss": exposure_loss(srgb_decode(planes), delta),
    }
    if ref_planes is not None:
        record["psnr"] = psnr(planes, ref_planes)
        record["ssim"] = ssim(planes, ref_planes)
    return json.dumps(record)


def cmd_metrics(args) -> None:
    with _stage("load-ref"):
        ref = read_ppm(args.b) if args.b else None
    with _stage("metrics"):
        with ThreadPoolExecutor(max_workers=_worker_count()) as pool:
            lines = list(pool.map(lambda p: _one_metrics_line(p, ref, args.delta), args.a))
    for line in lines:
        print(line)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rawlume",
        description="Raw-domain low-light enhancement: calibration, synthesis, "
        "progressive joint enhancement/denoising, color fitting, metrics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("calibrate", help="estimate noise parameters from dark/flat frames")
    p.add_argument("--dark-dir", required=True, help="directory of dark-frame containers (*.raw)")
    p.add_argument("--flat-dir", required=True, help="directory of paired flat-field containers")
    p.add_argument("--profile", help="base profile JSON (defaults to the first dark's sidecar)")
    p.add_argument("--out", required=True, help="output profile JSON path")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("synth", help="darken a clean raw and add synthetic sensor noise")
    p.add_argument("--clean", required=True, help="clean raw container")
    p.add_argument("--profile", help="profile JSON overriding the container sidecar")
    p.add_argument("--factor-range", default="1:16", help="darkening factor range lo:hi")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-pair", required=True, help="output prefix; writes <prefix>_{clean,noisy}.raw")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("enhance", help="fit grids on a low-res proxy, then enhance at full size")
    p.add_argument("--input", required=True, help="raw container to enhance")
    p.add_argument("--profile", help="profile JSON overriding the container sidecar")
    p.add_argument("--out", required=True, help="output PPM path")
    p.add_argument("--iterations", type=int, default=9, help="enhancement iterations (default 9)")
    p.add_argument("--delta", type=float, default=0.2, help="exposure-loss width (default 0.2)")
    p.add_argument("--steps", type=int, default=200, help="optimizer steps")
    p.add_argument("--step-size", type=float, default=10.0)
    p.add_argument("--momentum", type=float, default=0.9)
    p.add_argument("--w-tv", type=float, default=0.1, help="grid smoothness weight")
    p.add_argument("--w-mag", type=float, default=0.01, help="grid magnitude weight")
    p.add_argument("--no-denoise", action="store_true", help="plain enhancement, skip the joint loop")
    p.add_argument("--no-color", action="store_true", help="skip the polynomial color transform")
    p.add_argument("--color-matrix", help="color matrix JSON (default: identity)")
    p.add_argument("--save-grids", help="also write the fitted grid set JSON here")
    p.add_argument("--bits", type=int, choices=(8, 16), default=8, help="PPM sample depth")
    p.set_defaults(func=cmd_enhance)

    p = sub.add_parser("fit-color", help="least-squares polynomial color matrix from a PPM pair")
    p.add_argument("--source", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--degree", type=int, default=3, help="polynomial degree, 1..4")
    p.add_argument("--constant", action=argparse.BooleanOptionalAction, default=True,
                   help="include the constant term (default on)")
    p.add_argument("--out", required=True, help="output matrix JSON")
    p.set_defaults(func=cmd_fit_color)

    p = sub.add_parser("metrics", help="PSNR/SSIM/entropy/exposure-loss as JSON lines")
    p.add_argument("--a", nargs="+", required=True, help="image(s) to score")
    p.add_argument("--b", help="reference image for PSNR/SSIM")
    p.add_argument("--delta", type=float, default=0.2, help="exposure-loss width")
    p.set_defaults(func=cmd_metrics)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        args.func(args)
    except _StageError as err:
        print(str(err), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
