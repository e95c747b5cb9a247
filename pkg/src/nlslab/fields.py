"""Reproducible random field constructors used by the experiment families.

Every constructor takes an explicit Generator so trials are reproducible by
seed; coefficients are drawn as independent complex Gaussians and shaped by
an explicit spectral profile.
"""
from __future__ import annotations

import numpy as np

from .spectra import SpectralBasis, SpectralCoeffs, sobolev_norm


def _complex_gaussians(rng: np.random.Generator, n: int) -> np.ndarray:
    return rng.standard_normal(n) + 1j * rng.standard_normal(n)


def random_band_coeffs(
    basis: SpectralBasis,
    interval: tuple[float, float],
    rng: np.random.Generator,
    max_modes: int | None = None,
    unit_l2: bool = True,
) -> SpectralCoeffs:
    """Gaussian coefficients on the frequency band [a, b), optionally thinned.

    ``max_modes`` keeps a deterministic random subset of the band, which is
    what the dense closed-form oracles can afford.
    """
    a, b = interval
    n = basis.frequencies
    idx = np.nonzero((n >= a) & (n < b))[0]
    if idx.size == 0:
        raise ValueError(f"no modes in frequency band [{a}, {b})")
    if max_modes is not None and idx.size > max_modes:
        idx = np.sort(rng.choice(idx, size=max_modes, replace=False))
    values = np.zeros(basis.n_modes, dtype=np.complex128)
    values[idx] = _complex_gaussians(rng, idx.size)
    if unit_l2:
        values /= np.linalg.norm(values)
    return SpectralCoeffs(basis, values)


def gaussian_profile_coeffs(
    basis: SpectralBasis,
    rng: np.random.Generator,
    bandwidth: float,
    width_fraction: float = 3.0,
    unit_mass: bool = True,
) -> SpectralCoeffs:
    """Smooth random data: Gaussian spectral envelope, hard-cut at ``bandwidth``.

    The envelope width bandwidth/width_fraction keeps the tail at the cut
    far below rounding, so cubic products of the field stay representable.
    """
    n = basis.frequencies
    sigma = bandwidth / width_fraction
    envelope = np.exp(-(n**2) / (2.0 * sigma**2))
    envelope[n > bandwidth] = 0.0
    values = envelope * _complex_gaussians(rng, basis.n_modes)
    if unit_mass:
        values /= np.linalg.norm(values)
    return SpectralCoeffs(basis, values)


def sobolev_profile_coeffs(
    basis: SpectralBasis,
    rng: np.random.Generator,
    s: float,
    bandwidth: float,
    unit_norm: bool = True,
) -> SpectralCoeffs:
    """Rough-edged data mimicking an H^s function: |c_k| ~ <n>^-(s+1), cut at bandwidth.

    The decay makes the H^s norm marginally convergent over the kept band,
    the generic worst case for smoothing-multiplier experiments.
    """
    n = basis.frequencies
    envelope = (1.0 + n**2) ** (-(s + 1.0) / 2.0)
    envelope[n > bandwidth] = 0.0
    values = envelope * _complex_gaussians(rng, basis.n_modes)
    c = SpectralCoeffs(basis, values)
    if unit_norm:
        c.values /= sobolev_norm(c, s)
    return c
