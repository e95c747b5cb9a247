"""Grid transforms: spectral synthesis/analysis, alias-free products, integrals.

Quadrature is exact by construction.  On the torus a uniform G x G grid
integrates every lattice character with per-axis frequency below G exactly;
on the sphere a Gauss-Legendre colatitude times equispaced longitude grid
integrates products of harmonics up to a known total degree.  Product and
correlation routines size their grids from the actual spectral supports, so
dealiasing is zero-padding to the exact product bandwidth rather than a
truncation rule.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np
from scipy.fft import next_fast_len
from scipy.special import roots_legendre

from .errors import GridBudgetError
from .legendre import normalized_legendre_table
from .spectra import ManifoldKind, SpectralBasis, SpectralCoeffs

TORUS_SIZE_CAP = 4096
SPHERE_THETA_CAP = 2048
SPHERE_PHI_CAP = 8192


@dataclass(frozen=True, eq=False)
class QuadratureGrid:
    """Sampling nodes plus weights; hashable cache key is (manifold, lam, shape)."""

    manifold: ManifoldKind
    lam: float
    size: int = 0          # torus: points per axis
    n_theta: int = 0       # sphere: Gauss-Legendre colatitude nodes
    n_phi: int = 0         # sphere: equispaced longitude nodes

    @property
    def shape(self) -> tuple[int, int]:
        if self.manifold is ManifoldKind.TORUS:
            return (self.size, self.size)
        return (self.n_theta, self.n_phi)

    @property
    def node_count(self) -> int:
        a, b = self.shape
        return a * b

    @property
    def exactness_degree(self) -> int:
        """Max total bandwidth integrated exactly (per axis on the torus)."""
        if self.manifold is ManifoldKind.TORUS:
            return self.size - 1
        return min(2 * self.n_theta - 1, self.n_phi - 1)

    @cached_property
    def gl_nodes_weights(self) -> tuple[np.ndarray, np.ndarray]:
        if self.manifold is not ManifoldKind.SPHERE:
            raise ValueError("Gauss-Legendre nodes are sphere-specific")
        x, w = roots_legendre(self.n_theta)
        x.setflags(write=False)
        w.setflags(write=False)
        return x, w

    @cached_property
    def weight_array(self) -> np.ndarray:
        """Node weights broadcastable against a field's (shape) value array."""
        if self.manifold is ManifoldKind.TORUS:
            w0 = (2.0 * math.pi * self.lam / self.size) ** 2
            return np.full((1, 1), w0)
        _, w = self.gl_nodes_weights
        dphi = 2.0 * math.pi / self.n_phi
        return (self.lam**2 * dphi) * w[:, None]

    @property
    def total_weight(self) -> float:
        if self.manifold is ManifoldKind.TORUS:
            return float(self.weight_array[0, 0]) * self.node_count
        return float(self.weight_array.sum()) * self.n_phi


@lru_cache(maxsize=64)
def torus_grid(lam: float, size: int) -> QuadratureGrid:
    if size > TORUS_SIZE_CAP:
        raise GridBudgetError(
            f"torus grid needs {size} points per axis, cap is {TORUS_SIZE_CAP}",
            required=size,
            available=TORUS_SIZE_CAP,
        )
    return QuadratureGrid(ManifoldKind.TORUS, float(lam), size=size)


@lru_cache(maxsize=64)
def sphere_grid(lam: float, n_theta: int, n_phi: int) -> QuadratureGrid:
    if n_theta > SPHERE_THETA_CAP or n_phi > SPHERE_PHI_CAP:
        raise GridBudgetError(
            f"sphere grid needs ({n_theta}, {n_phi}) nodes, "
            f"caps are ({SPHERE_THETA_CAP}, {SPHERE_PHI_CAP})",
            required=(n_theta, n_phi),
            available=(SPHERE_THETA_CAP, SPHERE_PHI_CAP),
        )
    return QuadratureGrid(ManifoldKind.SPHERE, float(lam), n_theta=n_theta, n_phi=n_phi)


def grid_for_degree(manifold: ManifoldKind, lam: float, degree: int) -> QuadratureGrid:
    """Smallest cached grid whose exactness covers integrands of total ``degree``."""
    degree = max(int(degree), 1)
    if manifold is ManifoldKind.TORUS:
        return torus_grid(lam, next_fast_len(degree + 1))
    n_theta = (degree + 2) // 2  # 2*n_theta - 1 >= degree
    return sphere_grid(lam, n_theta, next_fast_len(degree + 1))


@lru_cache(maxsize=32)
def _legendre_cache(lmax: int, n_theta: int) -> list[np.ndarray]:
    x, _ = roots_legendre(n_theta)
    return normalized_legendre_table(lmax, x)


@dataclass
class GridField:
    """Complex samples on a quadrature grid (shape matches the grid)."""

    grid: QuadratureGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.complex128)
        if values.shape != self.grid.shape:
            raise ValueError(f"values shape {values.shape} != grid shape {self.grid.shape}")
        self.values = values


def support_bandwidth(c: SpectralCoeffs) -> int:
    """Per-axis lattice bandwidth (torus) or max degree (sphere) of the support."""
    nz = c.values != 0
    if not nz.any():
        return 0
    if c.basis.manifold is ManifoldKind.TORUS:
        return int(np.abs(c.basis.labels[nz]).max())
    return int(c.basis.labels[nz, 0].max())


def basis_bandwidth(basis: SpectralBasis) -> int:
    if basis.manifold is ManifoldKind.TORUS:
        return basis.lattice_bandwidth
    return basis.degree_max


def _check_compatible(grid: QuadratureGrid, basis: SpectralBasis):
    if grid.manifold is not basis.manifold or grid.lam != basis.lam:
        raise ValueError(
            f"grid ({grid.manifold.value}, lam={grid.lam}) does not match "
            f"basis ({basis.manifold.value}, lam={basis.lam})"
        )


def synthesize(c: SpectralCoeffs, grid: QuadratureGrid) -> GridField:
    """Pointwise evaluation of sum c_k e_k on the grid nodes."""
    _check_compatible(grid, c.basis)
    basis = c.basis
    if basis.manifold is ManifoldKind.TORUS:
        g = grid.size
        amp = c.values / (2.0 * math.pi * basis.lam)
        slab = np.zeros((g, g), dtype=np.complex128)
        i1 = basis.labels[:, 0] % g
        i2 = basis.labels[:, 1] % g
        if 2 * basis.lattice_bandwidth < g:
            slab[i1, i2] = amp
        else:
            np.add.at(slab, (i1, i2), amp)
        values = np.fft.ifft2(slab) * (g * g)
        return GridField(grid, values)

    lmax = basis.degree_max
    tables = _legendre_cache(lmax, grid.n_theta)
    slab = np.zeros((grid.n_theta, grid.n_phi), dtype=np.complex128)
    for m, (ls, idx) in basis.sphere_order_groups.items():
        am = np.abs(m)
        col = tables[am][ls - am].T @ c.values[idx]
        if m < 0 and am % 2:
            col = -col
        slab[:, m % grid.n_phi] += col
    values = np.fft.ifft(slab, axis=1) * (grid.n_phi / basis.lam)
    return GridField(grid, values)


def analyze(
    f: GridField,
    basis: SpectralBasis,
    input_bandwidth: int | None = None,
) -> SpectralCoeffs:
    """Quadrature inner products c_k = sum_j w_j conj(e_k(x_j)) f(x_j).

    Exact when the grid integrates e_k times the (bandlimited) input; the
    caller may pass the input's actual bandwidth, otherwise the basis' own
    bandwidth is assumed.
    """
    _check_compatible(f.grid, basis)
    bw = basis_bandwidth(basis)
    in_bw = bw if input_bandwidth is None else int(input_bandwidth)
    required = bw + in_bw
    if f.grid.exactness_degree < required:
        raise GridBudgetError(
            f"analysis needs exactness degree {required}, "
            f"grid provides {f.grid.exactness_degree}",
            required=required,
            available=f.grid.exactness_degree,
        )

    if basis.manifold is ManifoldKind.TORUS:
        g = f.grid.size
        spec = np.fft.fft2(f.values)
        i1 = basis.labels[:, 0] % g
        i2 = basis.labels[:, 1] % g
        vals = (2.0 * math.pi * basis.lam / (g * g)) * spec[i1, i2]
        return SpectralCoeffs(basis, vals)

    lmax = basis.degree_max
    tables = _legendre_cache(lmax, f.grid.n_theta)
    _, w = f.grid.gl_nodes_weights
    spec = np.fft.fft(f.values, axis=1)
    scale = basis.lam * 2.0 * math.pi / f.grid.n_phi
    out = np.empty(basis.n_modes, dtype=np.complex128)
    for m, (ls, idx) in basis.sphere_order_groups.items():
        am = np.abs(m)
        col = spec[:, m % f.grid.n_phi] * w
        vals = scale * (tables[am][ls - am] @ col)
        if m < 0 and am % 2:
            vals = -vals
        out[idx] = vals
    return SpectralCoeffs(basis, out)


def _common_basis_check(cs: list[SpectralCoeffs]):
    if not cs:
        raise ValueError("need at least one field")
    first = cs[0].basis
    for c in cs[1:]:
        if c.basis.manifold is not first.manifold or c.basis.lam != first.lam:
            raise ValueError("fields live on different manifolds or scales")


def pointwise_product(cs: list[SpectralCoeffs], target_basis: SpectralBasis) -> SpectralCoeffs:
    """Exact (alias-free) spectral coefficients of prod_i f_i, truncated to the target.

    The grid is sized from the factors' actual supports plus the target's
    bandwidth, which keeps every retained coefficient free of aliasing.
    """
    if len(cs) > 4:
        raise ValueError("at most 4 factors supported")
    _common_basis_check(cs)
    if cs[0].basis.manifold is not target_basis.manifold or cs[0].basis.lam != target_basis.lam:
        raise ValueError("target basis does not match the factors")
    total_bw = sum(support_bandwidth(c) for c in cs)
    grid = grid_for_degree(target_basis.manifold, target_basis.lam,
                           total_bw + basis_bandwidth(target_basis))
    prod = synthesize(cs[0], grid).values.copy()
    for c in cs[1:]:
        prod *= synthesize(c, grid).values
    return analyze(GridField(grid, prod), target_basis, input_bandwidth=total_bw)


def correlation_integral(cs: list[SpectralCoeffs]) -> complex:
    """Integral over the manifold of the plain product of up to 4 fields."""
    if len(cs) > 4:
        raise ValueError("at most 4 factors supported")
    _common_basis_check(cs)
    total_bw = sum(support_bandwidth(c) for c in cs)
    grid = grid_for_degree(cs[0].basis.manifold, cs[0].basis.lam, max(total_bw, 1))
    prod = synthesize(cs[0], grid).values.copy()
    for c in cs[1:]:
        prod *= synthesize(c, grid).values
    return complex(np.sum(prod * grid.weight_array))


def integrate(f: GridField) -> complex:
    return complex(np.sum(f.values * f.grid.weight_array))


def grid_inner(f: GridField, g: GridField) -> complex:
    if f.grid is not g.grid and f.grid != g.grid:
        raise ValueError("fields sampled on different grids")
    return complex(np.sum(np.conj(f.values) * g.values * f.grid.weight_array))


def lp_norm(c: SpectralCoeffs, p: int) -> float:
    """Exact L^p norm of the synthesized field for even p (|f|^p is polynomial)."""
    if p % 2:
        raise ValueError(f"exact L^p needs even p, got {p}")
    bw = support_bandwidth(c)
    grid = grid_for_degree(c.basis.manifold, c.basis.lam, max(p * bw, 1))
    vals = synthesize(c, grid).values
    return float(np.sum(np.abs(vals) ** p * grid.weight_array) ** (1.0 / p))


def lp_norm_measured(c: SpectralCoeffs, p: float, oversample: int = 4) -> float:
    """L^p norm by plain quadrature for non-polynomial exponents (a measurement)."""
    bw = max(support_bandwidth(c), 1)
    grid = grid_for_degree(c.basis.manifold, c.basis.lam, oversample * 2 * bw)
    vals = synthesize(c, grid).values
    return float(np.sum(np.abs(vals) ** p * grid.weight_array) ** (1.0 / p))
