"""Space-time norms of free evolutions versus predicted scaling laws.

All comparisons are ratio-based: implicit constants in the estimates are
unknowable, so sweeps assert uniform boundedness of measured/reference
across a dyadic range rather than specific values.  Space integrals are
exact quadrature; time integrals are composite Simpson with the node count
derived from the largest phase present.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

from . import transform
from .errors import TimeResolutionError, UnsupportedExponentError
from .fields import random_band_coeffs
from .solver import linear_propagate
from .spectra import ManifoldKind, SpectralCoeffs, build_basis

# refusal threshold: node spacing must not exceed pi / (8 * omega_max)
_NYQUIST_FACTOR = math.pi / 8.0


@dataclass(frozen=True)
class StrichartzSample:
    manifold: str
    lam: float
    N1: float
    N2: float
    T: float
    trial: int
    measured_norm: float
    reference: float
    ratio: float
    seed: int

    CSV_COLUMNS = (
        "manifold", "lambda", "N1", "N2", "T", "trial",
        "measured", "reference", "ratio", "seed",
    )


def lambda_reference(T: float, N1: float, N2: float) -> float:
    """Predicted bilinear constant: (N2/N1)^(1/2) short-range, (T N2)^(1/2) after.

    Continuous across T = 1/N1, where both branches agree.
    """
    if N2 > N1:
        raise ValueError(f"need N2 <= N1, got N1={N1}, N2={N2}")
    if T <= 0:
        raise ValueError(f"need T > 0, got {T}")
    if T <= 1.0 / N1:
        return math.sqrt(N2 / N1)
    return math.sqrt(T * N2)


def _max_phase(*cs: SpectralCoeffs) -> float:
    total = 0.0
    for c in cs:
        nz = c.values != 0
        if nz.any():
            total += float(c.basis.eigenvalues[nz].max())
    return total


def _plan_time_nodes(T: float, omega: float, time_nodes: int | None, rtol: float) -> int:
    """Odd Simpson node count; refuse explicit counts coarser than pi/(8 omega)."""
    if omega <= 0:
        return 3
    required_h = _NYQUIST_FACTOR / omega
    min_nodes = max(3, int(math.ceil(T / required_h)) + 1)
    if min_nodes % 2 == 0:
        min_nodes += 1
    if time_nodes is not None:
        if time_nodes < 3 or T / (time_nodes - 1) > required_h * (1 + 1e-12):
            raise TimeResolutionError(
                f"{time_nodes} nodes give spacing {T / max(time_nodes - 1, 1):.3e}, "
                f"need <= {required_h:.3e} (at least {min_nodes} nodes)",
                required_nodes=min_nodes,
            )
        return time_nodes if time_nodes % 2 else time_nodes + 1
    # auto: composite-Simpson error (h*omega)^4/180 per unit length vs rtol
    h = min(required_h, (180.0 * rtol) ** 0.25 / omega)
    n = max(3, int(math.ceil(T / h)) + 1)
    return n if n % 2 else n + 1


def bilinear_norm(
    u0: SpectralCoeffs,
    v0: SpectralCoeffs,
    T: float,
    time_nodes: int | None = None,
    rtol: float = 1e-6,
) -> float:
    """L2 norm over [0, T] x M of the product of the two free evolutions."""
    if u0.basis.manifold is not v0.basis.manifold or u0.basis.lam != v0.basis.lam:
        raise ValueError("factors live on different manifolds or scales")
    omega = _max_phase(u0, v0)
    n_nodes = _plan_time_nodes(T, omega, time_nodes, rtol)
    degree = 2 * (transform.support_bandwidth(u0) + transform.support_bandwidth(v0))
    grid = transform.grid_for_degree(u0.basis.manifold, u0.basis.lam, max(degree, 1))

    times = np.linspace(0.0, T, n_nodes)
    g = np.empty(n_nodes)
    for i, t in enumerate(times):
        fu = transform.synthesize(linear_propagate(u0, t), grid).values
        fv = transform.synthesize(linear_propagate(v0, t), grid).values
        g[i] = float(np.sum(np.abs(fu * fv) ** 2 * grid.weight_array))
    return math.sqrt(max(float(simpson(g, dx=times[1] - times[0])), 0.0))


_SUPPORTED_QR = {(4, 4), (8, 8 / 3), (8, 8)}


def linear_strichartz_norm(
    u0: SpectralCoeffs,
    q: float,
    r: float,
    T: float,
    time_nodes: int | None = None,
    rtol: float = 1e-6,
) -> float:
    """Mixed norm L^q_t L^r_x of the free evolution over [0, T].

    (4,4) and (8,8/3) are the admissible pairs used here; (8,8) is the
    diagnostic space-time norm.  Even-r space integrals are exact; r = 8/3
    is measured on an oversampled grid.
    """
    if (q, r) not in _SUPPORTED_QR:
        raise UnsupportedExponentError(f"(q, r) = ({q}, {r}) not supported")
    omega = 4.0 * _max_phase(u0)
    n_nodes = _plan_time_nodes(T, omega, time_nodes, rtol)
    bw = max(transform.support_bandwidth(u0), 1)
    if r == 8 / 3:
        grid = transform.grid_for_degree(u0.basis.manifold, u0.basis.lam, 8 * bw)
    else:
        grid = transform.grid_for_degree(u0.basis.manifold, u0.basis.lam, int(r) * bw)

    times = np.linspace(0.0, T, n_nodes)
    s_q = np.empty(n_nodes)
    for i, t in enumerate(times):
        vals = transform.synthesize(linear_propagate(u0, t), grid).values
        space = float(np.sum(np.abs(vals) ** r * grid.weight_array))
        s_q[i] = space ** (q / r)
    return float(simpson(s_q, dx=times[1] - times[0])) ** (1.0 / q)


def strichartz_sweep(
    N1_list: list[float],
    N2: float,
    trials: int,
    seed: int,
    manifold: ManifoldKind = ManifoldKind.TORUS,
    lam: float = 1.0,
    regime: str = "semiclassical",
    rtol: float = 1e-4,
    max_modes: int | None = None,
    low_band: bool = False,
) -> list[StrichartzSample]:
    """Measured/reference ratios for random band-localized data.

    ``semiclassical``: horizon T = 1/N1 on the unit-scale manifold, reference
    (N2/N1)^(1/2).  ``rescaled``: horizon T = 1 on the dilated manifold,
    reference from the rescaled short-range constant.  ``low_band`` widens the
    second factor's band to [0, 2 N2) instead of the dyadic [N2, 2 N2).
    """
    if regime not in ("semiclassical", "rescaled"):
        raise ValueError(f"unknown regime {regime!r}")
    if any(N2 > n1 for n1 in N1_list):
        raise ValueError("need N2 <= min(N1_list)")
    samples = []
    root = np.random.SeedSequence(seed)
    for n1, child in zip(N1_list, root.spawn(len(N1_list))):
        use_lam = lam if regime == "rescaled" else 1.0
        basis = build_basis(manifold, cutoff=2.0 * n1, lam=use_lam)
        T = 1.0 / n1 if regime == "semiclassical" else 1.0
        if regime == "semiclassical":
            reference = lambda_reference(T, n1, N2)
        else:
            reference = lambda_reference(use_lam**-2, use_lam * n1, use_lam * N2)
        v_band = (0.0, 2.0 * N2) if low_band else (N2, 2.0 * N2)
        for trial, tseed in enumerate(child.spawn(trials)):
            rng = np.random.default_rng(tseed)
            u0 = random_band_coeffs(basis, (n1, 2.0 * n1), rng, max_modes=max_modes)
            v0 = random_band_coeffs(basis, v_band, rng, max_modes=max_modes)
            measured = bilinear_norm(u0, v0, T, rtol=rtol)
            samples.append(
                StrichartzSample(
                    manifold=manifold.value,
                    lam=use_lam,
                    N1=float(n1),
                    N2=float(N2),
                    T=T,
                    trial=trial,
                    measured_norm=measured,
                    reference=reference,
                    ratio=measured / reference,
                    seed=seed,
                )
            )
    return samples


def sweep_csv(samples: list[StrichartzSample]) -> str:
    lines = [",".join(StrichartzSample.CSV_COLUMNS)]
    for s in samples:
        lines.append(
            ",".join(
                [
                    s.manifold,
                    f"{s.lam:.17g}",
                    f"{s.N1:.17g}",
                    f"{s.N2:.17g}",
                    f"{s.T:.17g}",
                    str(s.trial),
                    f"{s.measured_norm:.17g}",
                    f"{s.reference:.17g}",
                    f"{s.ratio:.17g}",
                    str(s.seed),
                ]
            )
        )
    return "\n".join(lines) + "\n"
