"""Smoothing multiplier of order 1-s, conserved functionals, scaling bookkeeping.

The multiplier is the identity up to frequency N and decays like (N/k)^(1-s)
from 2N on; the transition between branches is a fixed C^2 blend so that
monotonicity, endpoint matching, and symbol-type derivative bounds can be
tested rather than assumed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import transform
from .errors import RefusalError
from .spectra import (
    SpectralBasis,
    SpectralCoeffs,
    rescale_basis,
    sobolev_norm,
)


@dataclass(frozen=True)
class IMultiplier:
    """Diagonal spectral multiplier m(k) = m0(k/N)."""

    N: float
    s: float

    def __post_init__(self):
        if self.N < 1:
            raise ValueError(f"cutoff N must be >= 1, got {self.N}")
        if not (0.5 < self.s <= 1.0):
            raise ValueError(f"regularity s must lie in (1/2, 1], got {self.s}")


def _smoothstep(u: np.ndarray) -> np.ndarray:
    # quintic: two vanishing derivatives at both ends, so m0 is C^2 at t=1, 2
    return u * u * u * (10.0 + u * (-15.0 + 6.0 * u))


def multiplier_value(mult: IMultiplier, k) -> np.ndarray | float:
    """m0(k/N): 1 below N, (N/k)^(1-s) above 2N, blended exponent in between."""
    scalar = np.ndim(k) == 0
    t = np.atleast_1d(np.asarray(k, dtype=np.float64)) / mult.N
    out = np.ones_like(t)
    hi = t >= 2.0
    out[hi] = t[hi] ** (-(1.0 - mult.s))
    mid = (t > 1.0) & (t < 2.0)
    if mid.any():
        tm = t[mid]
        sigma = _smoothstep(np.log2(tm))
        out[mid] = np.exp(-(1.0 - mult.s) * sigma * np.log(tm))
    return float(out[0]) if scalar else out


def multiplier_profile(mult: IMultiplier, basis: SpectralBasis) -> np.ndarray:
    return np.asarray(multiplier_value(mult, basis.frequencies))


def apply_I(c: SpectralCoeffs, mult: IMultiplier) -> SpectralCoeffs:
    """Coefficient-wise multiplication by m(n_k); diagonal hence self-adjoint."""
    return SpectralCoeffs(c.basis, c.values * multiplier_profile(mult, c.basis))


@dataclass(frozen=True)
class EnergyReport:
    """Mass plus the Hamiltonian of the smoothed field, split into its parts."""

    mass: float
    kinetic: float
    potential: float
    modified_energy: float
    h_s_norm: float

    CSV_COLUMNS = ("t", "mass", "kinetic", "potential", "modified_energy", "h_s_norm")


def functionals(c: SpectralCoeffs, mult: IMultiplier | None = None) -> EnergyReport:
    """Mass, (1/2) int |grad Iu|^2, (1/4) int |Iu|^4 by exact quadrature.

    With ``mult=None`` the multiplier is the identity and the report carries
    the true conserved Hamiltonian of the field itself.
    """
    basis = c.basis
    mass = float(np.sum(np.abs(c.values) ** 2))
    if mult is None:
        smoothed = c
        weights = np.ones(basis.n_modes)
        h_s = sobolev_norm(c, 1.0)
    else:
        weights = multiplier_profile(mult, basis)
        smoothed = SpectralCoeffs(basis, c.values * weights)
        h_s = sobolev_norm(c, mult.s)
    kinetic = 0.5 * float(np.sum(basis.eigenvalues * np.abs(smoothed.values) ** 2))

    bw = transform.support_bandwidth(smoothed)
    grid = transform.grid_for_degree(basis.manifold, basis.lam, max(4 * bw, 1))
    vals = transform.synthesize(smoothed, grid).values
    potential = 0.25 * float(np.real(np.sum(np.abs(vals) ** 4 * grid.weight_array)))
    return EnergyReport(
        mass=mass,
        kinetic=kinetic,
        potential=potential,
        modified_energy=kinetic + potential,
        h_s_norm=h_s,
    )


def rescale_data(c: SpectralCoeffs, lam: float) -> SpectralCoeffs:
    """Transport u0(x) = (1/lam) U0(x/lam) to the dilated manifold.

    With orthonormal eigenfunctions on both scales the coefficient vector is
    carried over unchanged, so the L2 norm is preserved exactly and the
    homogeneous H^s norm picks up the factor lam^(-s).
    """
    return SpectralCoeffs(rescale_basis(c.basis, lam), c.values.copy())


@dataclass(frozen=True)
class ScalingPlan:
    lam: float
    iteration_count: int
    T: float
    growth_exponent: float


def scaling_plan(N: float, s: float, delta: float = 0.5) -> ScalingPlan:
    """Scale, iteration budget, covered time, and the polynomial growth exponent.

    Refuses s <= 2/3, where the iteration stops paying for itself and the
    growth exponent blows up.
    """
    if s <= 2.0 / 3.0:
        raise RefusalError(f"plan needs s > 2/3 (exponent diverges); got s={s}")
    if not (s <= 1.0):
        raise ValueError(f"s must be <= 1, got {s}")
    if N < 2:
        raise ValueError(f"N must be >= 2, got {N}")
    lam = N ** ((1.0 - s) / s)
    iteration_count = int(math.floor(lam * math.sqrt(N)))
    T = delta * lam * math.sqrt(N) / lam**2
    growth = 2.0 * s * (1.0 - s) / (3.0 * s - 2.0)
    return ScalingPlan(lam=lam, iteration_count=iteration_count, T=T, growth_exponent=growth)


def sandwich_check(
    c: SpectralCoeffs,
    mult: IMultiplier,
    s0: float,
) -> tuple[float, float, float]:
    """The two-sided comparison of u and Iu in the dyadic Sobolev scale.

    Returns (lower, middle, upper) = (||u||_{s0}, ||Iu||_{s0+1-s},
    N^(1-s) ||u||_{s0});  lower <= middle <= upper holds with these exact
    constants because the dyadic block weight is constant across the
    multiplier's transition band (the 1+nu bracket trades sharp constants
    for an O(1/N^2) fudge, so it is not used here).
    """
    from .spectra import sobolev_norm_dyadic

    lower = sobolev_norm_dyadic(c, s0)
    middle = sobolev_norm_dyadic(apply_I(c, mult), s0 + 1.0 - mult.s)
    upper = mult.N ** (1.0 - mult.s) * lower
    return lower, middle, upper


def kinetic_term(c: SpectralCoeffs, mult: IMultiplier | None = None) -> float:
    """int |grad Iu|^2 from the spectral side (no quadrature)."""
    w = np.ones(c.basis.n_modes) if mult is None else multiplier_profile(mult, c.basis)
    return float(np.sum(c.basis.eigenvalues * (w * np.abs(c.values)) ** 2))


def energy_rows_csv(times, reports: list[EnergyReport]) -> str:
    """CSV body for a sequence of reports (17 significant digits)."""
    lines = [",".join(EnergyReport.CSV_COLUMNS)]
    for t, r in zip(times, reports):
        lines.append(
            ",".join(
                f"{v:.17g}"
                for v in (t, r.mass, r.kinetic, r.potential, r.modified_energy, r.h_s_norm)
            )
        )
    return "\n".join(lines) + "\n"
