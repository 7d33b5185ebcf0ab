"""Noise parameter estimation from dark and flat-field frames.

Three estimators, one per parameter group:

- banding sigma from the spread of row means in dark frames, with the
  within-row sampling noise subtracted out;
- read-noise shape and scale by probability-plot correlation over a grid of
  Tukey lambda shapes (Filliben plotting positions), slope of the best
  probability plot giving the scale;
- conversion gain by photon transfer: variance of flat-pair differences
  against mean level, slope = gain.

All estimators accept in-memory images; none of them clip, so they work on
signed residual data.
"""

from __future__ import annotations

import numpy as np

from .noise import tukey_lambda_quantile, tukey_lambda_variance
from .raw import RawImage

PPCC_LAMBDA_MIN = -0.45
PPCC_LAMBDA_MAX = 1.00
PPCC_LAMBDA_STEP = 0.01


def _frame_data(frames) -> list:
    out = []
    for f in frames:
        out.append(f.data if isinstance(f, RawImage) else np.asarray(f, dtype=np.float64))
    return out


def estimate_banding(dark_frames) -> float:
    """Row-banding standard deviation from >= 2 dark frames.

    Row means of a dark frame scatter by sigma_b^2 + sigma_pixel^2/W; the
    second term is estimated from the within-row variance and removed.
    """
    frames = _frame_data(dark_frames)
    if len(frames) < 2:
        raise ValueError(f"need >= 2 dark frames, got {len(frames)}")
    row_means = []
    within = []
    for d in frames:
        if d.ndim != 2 or d.shape[0] < 64:
            raise ValueError("dark frames must be 2-D with >= 64 rows")
        centered = d - d.mean()
        row_means.append(centered.mean(axis=1))
        within.append(np.var(centered, axis=1, ddof=1).mean() / d.shape[1])
    pooled = np.concatenate(row_means)
    var_rows = float(np.var(pooled, ddof=1))
    return float(np.sqrt(max(var_rows - float(np.mean(within)), 0.0)))


def _filliben_positions(n: int) -> np.ndarray:
    m = (np.arange(1, n + 1) - 0.3175) / (n + 0.365)
    m[0] = 1.0 - 0.5 ** (1.0 / n)
    m[-1] = 0.5 ** (1.0 / n)
    return m


def _debanded_samples(frames) -> np.ndarray:
    pooled = []
    for d in frames:
        centered = d - d.mean()
        pooled.append((centered - centered.mean(axis=1, keepdims=True)).ravel())
    return np.concatenate(pooled)


def estimate_tukey_ppcc(dark_frames, full_output: bool = False):
    """Read-noise shape lambda and scale sigma from pooled dark pixels.

    Correlates sorted samples against theoretical quantiles for each lambda
    on a fixed grid; the winner (ties broken toward smaller |lambda|) gives
    the shape, and the probability-plot slope, rescaled by the distribution's
    own standard deviation, gives sigma_r.
    """
    frames = _frame_data(dark_frames)
    if not frames:
        raise ValueError("need at least one dark frame")
    samples = np.sort(_debanded_samples(frames))
    n = samples.size
    if n < 10**4:
        raise ValueError(f"need >= 10^4 pooled pixels after banding removal, got {n}")
    if samples[0] == samples[-1]:
        raise ValueError("degenerate (constant) samples")

    positions = _filliben_positions(n)
    n_lam = int(round((PPCC_LAMBDA_MAX - PPCC_LAMBDA_MIN) / PPCC_LAMBDA_STEP)) + 1
    lambdas = PPCC_LAMBDA_MIN + PPCC_LAMBDA_STEP * np.arange(n_lam)
    s_centered = samples - samples.mean()
    s_norm = float(np.sqrt((s_centered**2).sum()))
    corrs = np.empty(n_lam)
    slopes = np.empty(n_lam)
    for i, lam in enumerate(lambdas):
        q = tukey_lambda_quantile(positions, lam)
        qc = q - q.mean()
        qq = float((qc**2).sum())
        sq = float((qc * s_centered).sum())
        corrs[i] = sq / (np.sqrt(qq) * s_norm)
        slopes[i] = sq / qq

    best = np.flatnonzero(corrs == corrs.max())
    idx = best[np.argmin(np.abs(lambdas[best]))]
    lam = float(lambdas[idx])
    sigma = float(slopes[idx] * np.sqrt(tukey_lambda_variance(lam)))
    if not full_output:
        return lam, sigma
    return lam, sigma, {
        "lambdas": lambdas,
        "correlations": corrs,
        "ppcc_peak": float(corrs[idx]),
        "plot_slope": float(slopes[idx]),
        "n_samples": n,
    }


def estimate_gain_photon_transfer(flat_pairs, patch: int = 32, full_output: bool = False):
    """Conversion gain from same-exposure flat-field pairs.

    Splits each pair into patch x patch tiles; per tile the mean level and
    half the variance of the frame difference give one (mu, var) point, and
    the least-squares slope of var against mu is the gain.
    """
    mus = []
    variances = []
    for a, b in flat_pairs:
        da, db = _frame_data([a, b])
        if da.shape != db.shape:
            raise ValueError("flat pair geometry mismatch")
        h, w = da.shape
        for i in range(0, h - patch + 1, patch):
            for j in range(0, w - patch + 1, patch):
                ta = da[i : i + patch, j : j + patch]
                tb = db[i : i + patch, j : j + patch]
                mus.append(0.5 * (ta.mean() + tb.mean()))
                variances.append(0.5 * np.var(ta - tb, ddof=1))
    if len(mus) < 3:
        raise ValueError(f"need >= 3 (mean, variance) points, got {len(mus)}")
    mu = np.asarray(mus)
    var = np.asarray(variances)
    design = np.stack([mu, np.ones_like(mu)], axis=1)
    (slope, intercept), res, _, _ = np.linalg.lstsq(design, var, rcond=None)
    if not full_output:
        return float(slope)
    ss_tot = float(((var - var.mean()) ** 2).sum())
    ss_res = float(res[0]) if res.size else float(((design @ [slope, intercept] - var) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(slope), {
        "intercept": float(intercept),
        "r_squared": r2,
        "n_points": int(mu.size),
    }
