"""Spectral laboratory for the defocusing cubic NLS on compact surfaces."""

__version__ = "0.1.0"

from .spectra import (  # noqa: F401
    ManifoldKind,
    Mode,
    SpectralBasis,
    SpectralCoeffs,
    build_basis,
    rescale_basis,
)
