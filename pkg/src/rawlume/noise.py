"""Physics-based sensor noise: synthesis and per-pixel variance prediction.

The composite model adds, in normalized digital numbers:
  * photon shot noise  -- kappa * Poisson(clean / kappa)
  * long-tailed read noise -- Tukey lambda, standardized to unit variance and
    scaled by sigma_r (so sigma_r IS the read-noise standard deviation)
  * horizontal banding -- one N(0, sigma_b) draw shared by each row
  * quantization       -- U(-s/2, s/2)
Synthetic output is never clipped; clipping is an explicit downstream op.
"""

from __future__ import annotations

import numpy as np
from scipy.special import gammaln

from .raw import NoiseParams, RawImage

# Switch from Poisson inversion sampling to the rounded-normal approximation
# at this expectation value.
POISSON_INVERSION_MAX = 30.0

_ZETA3 = 1.2020569031595943  # Apery's constant, for the small-lambda series


def tukey_lambda_quantile(p, lam: float):
    """Quantile function of the unit-scale Tukey lambda distribution.

    Q(p; 0) is the logistic log-odds limit; the lambda != 0 branch uses expm1
    so the two agree smoothly across lambda = 0.
    """
    p = np.asarray(p, dtype=np.float64)
    if np.any(p <= 0.0) or np.any(p >= 1.0):
        raise ValueError("probabilities must lie strictly inside (0, 1)")
    if lam == 0.0:
        return np.log(p / (1.0 - p))
    return (np.expm1(lam * np.log(p)) - np.expm1(lam * np.log1p(-p))) / lam


def tukey_lambda_variance(lam: float) -> float:
    """Variance of the unit-scale Tukey lambda distribution (lambda > -0.5).

    Uses 2/(lam^2) * (1/(1+2 lam) - Gamma(1+lam)^2/Gamma(2+2 lam)); near zero
    that expression cancels catastrophically, so a series takes over.
    """
    if lam <= -0.5:
        raise ValueError(f"variance is infinite for lambda <= -0.5, got {lam}")
    if abs(lam) < 1e-3:
        # 2/(1+2L) * (pi^2/6 - 2 zeta(3) L + (3.5 zeta(4) - pi^4/72) L^2 + O(L^3))
        z4 = np.pi**4 / 90.0
        series = np.pi**2 / 6.0 - 2.0 * _ZETA3 * lam + (3.5 * z4 - np.pi**4 / 72.0) * lam**2
        return 2.0 / (1.0 + 2.0 * lam) * series
    bracket = 1.0 / (1.0 + 2.0 * lam) - np.exp(2.0 * gammaln(1.0 + lam) - gammaln(2.0 + 2.0 * lam))
    return 2.0 / lam**2 * bracket


def sample_tukey_lambda(shape, lam: float, rng: np.random.Generator) -> np.ndarray:
    """Inverse-CDF draws from the standardized (unit variance) Tukey lambda."""
    u = rng.random(shape)
    # rng.random can return exactly 0, and extreme tail draws are numerically
    # explosive for lambda < 0; clipping at 1e-15 perturbs nothing observable.
    u = np.clip(u, 1e-15, 1.0 - 1e-15)
    return tukey_lambda_quantile(u, lam) / np.sqrt(tukey_lambda_variance(lam))


def _sample_poisson(expectation: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Seed-deterministic Poisson sampler.

    Inversion by cumulative search below POISSON_INVERSION_MAX, a rounded
    normal approximation (clamped at 0) above. One uniform and one normal
    draw per pixel regardless of branch, so the stream layout is stable.
    """
    e = np.asarray(expectation, dtype=np.float64)
    u = rng.random(e.shape)
    z = rng.standard_normal(e.shape)
    out = np.zeros(e.shape, dtype=np.float64)

    small = e < POISSON_INVERSION_MAX
    if np.any(small):
        es = e[small]
        us = u[small]
        emax = float(es.max(initial=0.0))
        kmax = int(np.ceil(emax + 12.0 * np.sqrt(emax) + 1.0))
        pmf = np.exp(-es)
        cdf = pmf.copy()
        count = np.zeros(es.shape, dtype=np.float64)
        for k in range(kmax):
            count += us > cdf
            pmf *= es / (k + 1.0)
            cdf += pmf
        out[small] = count
    large = ~small
    if np.any(large):
        el = e[large]
        out[large] = np.maximum(np.rint(el + np.sqrt(el) * z[large]), 0.0)
    return out


def sample_noise(clean: RawImage, params: NoiseParams, rng) -> RawImage:
    """Draw one noisy realization of a clean raw image.

    Draw order (fixed, for reproducibility): photon, read, banding, quantization.
    """
    params.validate()
    if clean.data.min() < 0 or clean.data.max() > 1:
        raise ValueError("clean raw values must lie in [0, 1]")
    rng = np.random.default_rng(rng)
    data = clean.data

    if params.kappa > 0:
        signal = params.kappa * _sample_poisson(data / params.kappa, rng)
    else:
        signal = data.copy()

    if params.sigma_r > 0:
        signal = signal + params.sigma_r * sample_tukey_lambda(data.shape, params.lambda_r, rng)
    if params.sigma_b > 0:
        rows = rng.normal(0.0, params.sigma_b, size=data.shape[0])
        signal = signal + rows[:, None]
    if params.s > 0:
        signal = signal + rng.uniform(-0.5 * params.s, 0.5 * params.s, size=data.shape)
    return RawImage(data=signal, cfa=clean.cfa)


def variance_map(clean: RawImage, params: NoiseParams) -> np.ndarray:
    """Predicted per-pixel noise variance for :func:`sample_noise` output."""
    params.validate()
    if clean.data.min() < 0 or clean.data.max() > 1:
        raise ValueError("clean raw values must lie in [0, 1]")
    v = params.kappa * clean.data + params.sigma_r**2 + params.sigma_b**2 + params.s**2 / 12.0
    return np.ascontiguousarray(v, dtype=np.float64)


def darken(clean: RawImage, factor: float) -> RawImage:
    """Exposure reduction by a scale factor >= 1 (up to 4 stops at 16)."""
    if factor < 1.0:
        raise ValueError(f"darkening factor must be >= 1, got {factor}")
    return RawImage(data=clean.data / factor, cfa=clean.cfa)
