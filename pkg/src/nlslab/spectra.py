"""Exact Laplace-Beltrami eigenbases for the flat 2-torus and the round 2-sphere.

The torus is the square one, side ``2*pi`` at scale 1; the sphere has radius 1
at scale 1.  Dilating either manifold by ``lam`` divides every eigenvalue of
``-Delta`` by ``lam**2`` and multiplies the volume by ``lam**2``.  Coefficient
vectors are always taken with respect to the L2-orthonormal eigenfunctions of
the dilated manifold: torus characters carry the factor ``1/(2*pi*lam)``,
sphere harmonics the factor ``1/lam``.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from enum import Enum
from functools import cached_property

import numpy as np

from .errors import ModeBudgetError, UnsupportedExponentError

DEFAULT_MODE_CAP = 1_000_000

# tolerance used to make the inclusive frequency cutoff robust to rounding
_CUTOFF_SLACK = 1e-12


class ManifoldKind(Enum):
    TORUS = "torus"
    SPHERE = "sphere"

    @property
    def base_volume(self) -> float:
        if self is ManifoldKind.TORUS:
            return (2.0 * math.pi) ** 2
        return 4.0 * math.pi


@dataclass(frozen=True)
class Mode:
    """One Laplace-Beltrami mode: eigenvalue of -Delta and its square root."""

    index: int
    eigenvalue: float
    frequency: float
    label: tuple[int, int]


@dataclass(frozen=True, eq=False)
class SpectralBasis:
    """Ordered eigenbasis of the dilated manifold, immutable after construction.

    ``labels`` holds lattice points (torus) or ``(l, m)`` pairs (sphere),
    sorted by (eigenvalue, label).  ``base_eigenvalues`` are the eigenvalues
    at scale 1; at scale ``lam`` every eigenvalue is divided by ``lam**2``.
    """

    manifold: ManifoldKind
    lam: float
    cutoff: float
    labels: np.ndarray
    base_eigenvalues: np.ndarray

    def __post_init__(self):
        self.labels.setflags(write=False)
        self.base_eigenvalues.setflags(write=False)

    @property
    def n_modes(self) -> int:
        return self.labels.shape[0]

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        eigs = self.base_eigenvalues / self.lam**2
        eigs.setflags(write=False)
        return eigs

    @cached_property
    def frequencies(self) -> np.ndarray:
        freqs = np.sqrt(self.eigenvalues)
        freqs.setflags(write=False)
        return freqs

    @property
    def volume(self) -> float:
        return self.lam**2 * self.manifold.base_volume

    def mode(self, index: int) -> Mode:
        return Mode(
            index=index,
            eigenvalue=float(self.eigenvalues[index]),
            frequency=float(self.frequencies[index]),
            label=(int(self.labels[index, 0]), int(self.labels[index, 1])),
        )

    @property
    def modes(self) -> list[Mode]:
        return [self.mode(i) for i in range(self.n_modes)]

    @cached_property
    def label_index(self) -> dict[tuple[int, int], int]:
        return {(int(a), int(b)): i for i, (a, b) in enumerate(self.labels)}

    @cached_property
    def lattice_bandwidth(self) -> int:
        """Torus only: max per-axis |xi| over the basis lattice."""
        if self.manifold is not ManifoldKind.TORUS:
            raise ValueError("lattice_bandwidth is torus-specific")
        if self.n_modes == 0:
            return 0
        return int(np.abs(self.labels).max())

    @cached_property
    def degree_max(self) -> int:
        """Sphere only: maximal harmonic degree in the basis."""
        if self.manifold is not ManifoldKind.SPHERE:
            raise ValueError("degree_max is sphere-specific")
        if self.n_modes == 0:
            return 0
        return int(self.labels[:, 0].max())

    @cached_property
    def sphere_order_groups(self) -> dict[int, tuple[np.ndarray, np.ndarray]]:
        """Sphere only: per order m, (degrees l, basis indices), degree-sorted."""
        if self.manifold is not ManifoldKind.SPHERE:
            raise ValueError("sphere_order_groups is sphere-specific")
        groups: dict[int, tuple[np.ndarray, np.ndarray]] = {}
        ms = self.labels[:, 1]
        for m in np.unique(ms):
            idx = np.nonzero(ms == m)[0]
            order = np.argsort(self.labels[idx, 0], kind="stable")
            idx = idx[order]
            groups[int(m)] = (self.labels[idx, 0].copy(), idx)
        return groups

    @cached_property
    def conjugation(self) -> tuple[np.ndarray, np.ndarray]:
        """Permutation p and phases so conj(sum c_k e_k) = sum (phase*conj c)_k e_p(k).

        Torus: xi -> -xi with phase 1.  Sphere: (l, m) -> (l, -m) with
        phase (-1)**m (Condon-Shortley convention).
        """
        perm = np.empty(self.n_modes, dtype=np.int64)
        phase = np.ones(self.n_modes, dtype=np.complex128)
        if self.manifold is ManifoldKind.TORUS:
            for i, (a, b) in enumerate(self.labels):
                perm[i] = self.label_index[(-int(a), -int(b))]
        else:
            for i, (l, m) in enumerate(self.labels):
                perm[i] = self.label_index[(int(l), -int(m))]
                phase[i] = -1.0 if (m % 2) else 1.0
        perm.setflags(write=False)
        phase.setflags(write=False)
        return perm, phase

    @cached_property
    def content_hash(self) -> str:
        h = hashlib.sha256()
        h.update(self.manifold.value.encode())
        h.update(repr(float(self.lam)).encode())
        h.update(repr(float(self.cutoff)).encode())
        h.update(np.ascontiguousarray(self.labels).tobytes())
        return h.hexdigest()[:16]

    def descriptor(self) -> dict:
        return {
            "manifold": self.manifold.value,
            "lam": float(self.lam),
            "cutoff": float(self.cutoff),
            "n_modes": int(self.n_modes),
            "hash": self.content_hash,
        }

    def descriptor_json(self) -> str:
        return json.dumps(self.descriptor(), sort_keys=True)


def build_basis(
    manifold: ManifoldKind,
    cutoff: float,
    lam: float = 1.0,
    mode_cap: int = DEFAULT_MODE_CAP,
) -> SpectralBasis:
    """Enumerate every mode with rescaled frequency sqrt(nu) <= cutoff.

    Ordering is (eigenvalue, label lexicographic), which makes two
    constructions of the same basis bit-identical.
    """
    if cutoff < 1:
        raise ValueError(f"cutoff must be >= 1, got {cutoff}")
    if lam <= 0:
        raise ValueError(f"scale lam must be positive, got {lam}")
    radius_sq = (cutoff * lam) ** 2 * (1.0 + _CUTOFF_SLACK)

    if manifold is ManifoldKind.TORUS:
        bound = int(math.floor(math.sqrt(radius_sq)))
        est = (2 * bound + 1) ** 2
        if est > 4 * mode_cap:
            raise ModeBudgetError(est, mode_cap)
        axis = np.arange(-bound, bound + 1, dtype=np.int64)
        x1, x2 = np.meshgrid(axis, axis, indexing="ij")
        labels = np.stack([x1.ravel(), x2.ravel()], axis=1)
        base_eigs = (labels[:, 0] ** 2 + labels[:, 1] ** 2).astype(np.float64)
        keep = base_eigs <= radius_sq
        labels, base_eigs = labels[keep], base_eigs[keep]
    else:
        lmax = int(math.floor((-1.0 + math.sqrt(1.0 + 4.0 * radius_sq)) / 2.0))
        ls = np.concatenate([np.full(2 * l + 1, l, dtype=np.int64) for l in range(lmax + 1)])
        ms = np.concatenate([np.arange(-l, l + 1, dtype=np.int64) for l in range(lmax + 1)])
        labels = np.stack([ls, ms], axis=1)
        base_eigs = (labels[:, 0] * (labels[:, 0] + 1)).astype(np.float64)

    if labels.shape[0] > mode_cap:
        raise ModeBudgetError(int(labels.shape[0]), mode_cap)

    order = np.lexsort((labels[:, 1], labels[:, 0], base_eigs))
    return SpectralBasis(
        manifold=manifold,
        lam=float(lam),
        cutoff=float(cutoff),
        labels=np.ascontiguousarray(labels[order]),
        base_eigenvalues=np.ascontiguousarray(base_eigs[order]),
    )


def rescale_basis(basis: SpectralBasis, lam: float) -> SpectralBasis:
    """Same mode set transported to scale ``lam`` (ordering unchanged)."""
    if lam <= 0:
        raise ValueError(f"scale lam must be positive, got {lam}")
    return SpectralBasis(
        manifold=basis.manifold,
        lam=float(lam),
        cutoff=float(basis.cutoff * basis.lam / lam),
        labels=basis.labels,
        base_eigenvalues=basis.base_eigenvalues,
    )


@dataclass
class SpectralCoeffs:
    """Complex coefficient vector aligned to a basis; the canonical field state."""

    basis: SpectralBasis
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.complex128)
        if values.shape != (self.basis.n_modes,):
            raise ValueError(
                f"coefficient vector has shape {values.shape}, "
                f"basis holds {self.basis.n_modes} modes"
            )
        self.values = values

    def copy(self) -> "SpectralCoeffs":
        return SpectralCoeffs(self.basis, self.values.copy())

    def l2_norm(self) -> float:
        return float(np.linalg.norm(self.values))


def zero_coeffs(basis: SpectralBasis) -> SpectralCoeffs:
    return SpectralCoeffs(basis, np.zeros(basis.n_modes, dtype=np.complex128))


def single_mode(basis: SpectralBasis, label: tuple[int, int], amplitude: complex = 1.0) -> SpectralCoeffs:
    c = zero_coeffs(basis)
    c.values[basis.label_index[label]] = amplitude
    return c


def conjugate_coeffs(c: SpectralCoeffs) -> SpectralCoeffs:
    perm, phase = c.basis.conjugation
    out = np.empty_like(c.values)
    out[perm] = phase * np.conj(c.values)
    return SpectralCoeffs(c.basis, out)


def project_interval(c: SpectralCoeffs, a: float, b: float) -> SpectralCoeffs:
    """Zero every coefficient whose frequency lies outside [a, b). Idempotent."""
    if not (0 <= a < b):
        raise ValueError(f"need 0 <= a < b, got [{a}, {b})")
    n = c.basis.frequencies
    keep = (n >= a) & (n < b)
    return SpectralCoeffs(c.basis, np.where(keep, c.values, 0.0))


def dyadic_blocks(basis: SpectralBasis) -> list[tuple[float, float]]:
    """Half-open intervals [0,2), [2,4), [4,8), ... covering the basis."""
    blocks = [(0.0, 2.0)]
    top = 2.0
    nmax = float(basis.frequencies.max()) if basis.n_modes else 0.0
    while top <= nmax:
        blocks.append((top, 2.0 * top))
        top *= 2.0
    return blocks


def sobolev_norm(c: SpectralCoeffs, s: float) -> float:
    """Weighted l2 norm with Japanese bracket <nu> = 1 + nu on the eigenvalue."""
    w = (1.0 + c.basis.eigenvalues) ** s
    return float(np.sqrt(np.sum(w * np.abs(c.values) ** 2)))


def sobolev_norm_dyadic(c: SpectralCoeffs, s: float) -> float:
    """Equivalent dyadic form: sqrt(sum_N N^(2s) ||P_N c||^2), P_1 = P_[0,2).

    Sharp-constant statements about the smoothing multiplier hold exactly in
    this form (the block weight is constant across each transition band).
    """
    n = c.basis.frequencies
    block = np.ones_like(n)
    pos = n >= 2.0
    block[pos] = 2.0 ** np.floor(np.log2(n[pos]))
    return float(np.sqrt(np.sum(block ** (2.0 * s) * np.abs(c.values) ** 2)))


def homogeneous_sobolev_norm(c: SpectralCoeffs, s: float) -> float:
    """Homogeneous norm with weight nu^s; the zero mode contributes nothing."""
    w = np.where(c.basis.eigenvalues > 0, c.basis.eigenvalues, 0.0) ** s
    return float(np.sqrt(np.sum(w * np.abs(c.values) ** 2)))


def lp_scaling_check(c: SpectralCoeffs, p: int) -> tuple[float, float]:
    """Both sides of ||f||_{L^p(M_lam)} = lam^(2/p) ||pullback f||_{L^p(M)}.

    The two sides are computed by independent quadratures (one per scale).
    Only p in {2, 4} keeps |f|^p polynomial in (f, conj f), hence exactly
    integrable; other exponents are refused.
    """
    if p not in (2, 4):
        raise UnsupportedExponentError(f"p={p} not exactly integrable; supported: 2, 4")
    from . import transform

    lam = c.basis.lam
    lhs = transform.lp_norm(c, p)
    # pull-back f~(y) = f(lam*y) has coefficients c/lam on the base basis
    pulled = SpectralCoeffs(rescale_basis(c.basis, 1.0), c.values / lam)
    rhs = lam ** (2.0 / p) * transform.lp_norm(pulled, p)
    return lhs, rhs
