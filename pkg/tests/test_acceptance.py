"""Acceptance battery: one test per headline criterion, one printed line each.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
verdict lines and timings.  Tolerances are pinned here and nowhere else.
"""
import math
import time

import numpy as np
import pytest

import oracles
from nlslab import transform as tr
from nlslab.cli import RunConfig, _conservation_point, _fit_slope
from nlslab.fields import gaussian_profile_coeffs, random_band_coeffs
from nlslab.imethod import IMultiplier, rescale_data, sandwich_check
from nlslab.solver import REFERENCE_RK4, EvolveConfig, evolve
from nlslab.spectra import (
    ManifoldKind,
    SpectralCoeffs,
    build_basis,
    rescale_basis,
    single_mode,
)
from nlslab.strichartz import bilinear_norm, strichartz_sweep
from nlslab.tensorizer import (
    apply_tensorized_form,
    multiplier_ratio_symbol,
    separated_interval_block,
    tensorize,
)


def _report(num: int, desc: str, ok: bool, detail: str, t0: float):
    line = f"criterion {num:02d} [{'PASS' if ok else 'FAIL'}] {desc}: {detail} ({time.time() - t0:.1f}s)"
    print(line)
    assert ok, line


def _unit_random(basis, rng):
    vals = rng.standard_normal(basis.n_modes) + 1j * rng.standard_normal(basis.n_modes)
    return SpectralCoeffs(basis, vals / np.linalg.norm(vals))


def test_c01_roundtrip_parseval():
    t0 = time.time()
    worst = 0.0
    for kind, cutoff in ((ManifoldKind.TORUS, 32.0), (ManifoldKind.SPHERE, math.sqrt(48 * 49) + 1e-9)):
        basis = build_basis(kind, cutoff)
        grid = tr.grid_for_degree(kind, 1.0, 2 * tr.basis_bandwidth(basis))
        rng = np.random.default_rng(100)
        for _ in range(100):
            c = _unit_random(basis, rng)
            back = tr.analyze(tr.synthesize(c, grid), basis)
            worst = max(worst, float(np.abs(back.values - c.values).max()))
    _report(1, "round-trip & Parseval", worst <= 1e-12, f"max coefficient error {worst:.2e}", t0)


def test_c02_conservation_and_dt_order():
    t0 = time.time()
    basis = build_basis(ManifoldKind.TORUS, 24.0)
    rng = np.random.default_rng(42)
    c0 = gaussian_profile_coeffs(basis, rng, bandwidth=8.0)  # unit mass
    traj = evolve(c0, EvolveConfig(dt=1e-3, T=1.0, record_every=25))
    masses = np.array([r.mass for r in traj.reports])
    energies = np.array(traj.true_energies)
    mass_drift = float(np.abs(masses - masses[0]).max())
    drift_coarse = float(np.abs(energies - energies[0]).max())
    traj2 = evolve(c0, EvolveConfig(dt=5e-4, T=1.0, record_every=50))
    drift_fine = float(np.abs(np.array(traj2.true_energies) - traj2.true_energies[0]).max())
    ratio = drift_coarse / drift_fine
    ok = mass_drift <= 1e-11 and drift_coarse <= 1e-4 and 3.5 <= ratio <= 4.5
    _report(
        2,
        "mass/energy conservation",
        ok,
        f"mass drift {mass_drift:.2e}, energy drift {drift_coarse:.2e}, dt-halving ratio {ratio:.2f}",
        t0,
    )


def test_c03_solver_cross_validation():
    t0 = time.time()
    basis = build_basis(ManifoldKind.TORUS, 8.0)
    rng = np.random.default_rng(5)
    c0 = gaussian_profile_coeffs(basis, rng, bandwidth=8.0 / 3.0)
    c0.values *= 0.5
    final_split = evolve(c0, EvolveConfig(dt=1e-4, T=0.1, record_every=10**9)).final_state
    final_rk4 = evolve(
        c0, EvolveConfig(dt=1e-4, T=0.1, scheme=REFERENCE_RK4, record_every=10**9)
    ).final_state
    diff = float(np.linalg.norm(final_split.values - final_rk4.values))
    _report(3, "split-step vs RK4", diff <= 1e-6, f"final L2 difference {diff:.2e}", t0)


def test_c04_scaling_covariance():
    t0 = time.time()
    basis = build_basis(ManifoldKind.TORUS, 12.0)
    rng = np.random.default_rng(9)
    u_base = gaussian_profile_coeffs(basis, rng, bandwidth=4.0)
    worst = 0.0
    for lam in (2.0, 4.0):
        big = evolve(
            rescale_data(u_base, lam), EvolveConfig(dt=1e-3, T=0.05, record_every=10**9)
        ).final_state
        base = evolve(
            u_base, EvolveConfig(dt=1e-3 / lam**2, T=0.05 / lam**2, record_every=10**9)
        ).final_state
        worst = max(worst, float(np.linalg.norm(big.values - rescale_data(base, lam).values)))
    _report(4, "manifold-rescaling covariance", worst <= 1e-6, f"max L2 difference {worst:.2e}", t0)


def test_c05_semiclassical_bilinear_sweep():
    t0 = time.time()
    samples = strichartz_sweep([8, 16, 32, 64], 4, trials=20, seed=123, rtol=1e-4)
    by_n1: dict[float, list[float]] = {}
    for s in samples:
        by_n1.setdefault(s.N1, []).append(s.ratio)
    spread = max(by_n1[64.0]) / max(by_n1[8.0])
    spread = max(spread, 1.0 / spread)

    worst_oracle = 0.0
    for n1, seed in ((8, 0), (16, 1), (32, 2)):
        rng = np.random.default_rng(seed)
        basis = build_basis(ManifoldKind.TORUS, 2.0 * n1)
        u0 = random_band_coeffs(basis, (n1, 2 * n1), rng, max_modes=60)
        v0 = random_band_coeffs(basis, (4, 8), rng, max_modes=60)
        got = bilinear_norm(u0, v0, 1.0 / n1, rtol=1e-10)
        want = oracles.bilinear_norm_closed_form(u0, v0, 1.0 / n1)
        worst_oracle = max(worst_oracle, abs(got - want) / want)
    ok = spread <= 2.0 and worst_oracle <= 1e-8
    _report(
        5,
        "semiclassical bilinear sweep",
        ok,
        f"max-ratio spread {spread:.3f} (<= 2), oracle mismatch {worst_oracle:.2e}",
        t0,
    )


def test_c06_rescaled_bilinear_identity():
    t0 = time.time()
    rng = np.random.default_rng(61)
    worst = 0.0
    instances = 0
    for lam in (2.0, 4.0, 8.0):
        scaled = build_basis(ManifoldKind.TORUS, 8.0, lam=lam)
        base = rescale_basis(scaled, 1.0)
        for _ in range(7):
            u = random_band_coeffs(scaled, (2, 4), rng, max_modes=40)
            v = random_band_coeffs(scaled, (1, 2), rng, max_modes=40)
            lhs = bilinear_norm(u, v, 1.0, rtol=1e-5)
            u_tilde = SpectralCoeffs(base, u.values / lam)
            v_tilde = SpectralCoeffs(base, v.values / lam)
            rhs = lam**2 * bilinear_norm(u_tilde, v_tilde, lam**-2.0, rtol=1e-5)
            worst = max(worst, abs(lhs - rhs) / lhs)
            instances += 1
            if instances >= 20:
                break
    _report(6, "rescaled bilinear identity", worst <= 1e-9, f"max relative gap {worst:.2e}", t0)


def test_c07_locality_exactness():
    t0 = time.time()
    basis = build_basis(ManifoldKind.TORUS, 40.0)
    rng = np.random.default_rng(7)
    worst_torus = 0.0
    checked = 0
    while checked < 1000:
        xis = rng.integers(-8, 9, size=(4, 2))
        if (xis.sum(axis=0) == 0).all():
            continue
        chars = [single_mode(basis, (int(a), int(b))) for a, b in xis]
        worst_torus = max(worst_torus, abs(tr.correlation_integral(chars)))
        checked += 1

    l2, l3 = 24, 6
    sphere = build_basis(ManifoldKind.SPHERE, float(l2 + l3) + 2.0)
    f = random_band_coeffs(sphere, (math.sqrt(l2 * (l2 + 1)), math.sqrt(l2 * (l2 + 1)) + 0.5), rng)
    g = random_band_coeffs(sphere, (math.sqrt(l3 * (l3 + 1)), math.sqrt(l3 * (l3 + 1)) + 0.5), rng)
    target = build_basis(ManifoldKind.SPHERE, math.sqrt((l2 + l3 + 2) * (l2 + l3 + 3)))
    product = tr.pointwise_product([f, g], target)
    beyond = target.labels[:, 0] > l2 + l3
    worst_sphere = float(np.abs(product.values[beyond]).max())
    ok = worst_torus <= 1e-13 and worst_sphere <= 1e-10
    _report(
        7,
        "product localization exactness",
        ok,
        f"torus off-resonance {worst_torus:.2e}, sphere beyond-triangle {worst_sphere:.2e}",
        t0,
    )


def test_c08_contraction_identity():
    t0 = time.time()
    from nlslab.locality import an_identity_check

    rng = np.random.default_rng(8)
    worst = 0.0
    used = 0
    while used < 100:
        xis = rng.integers(-10, 11, size=(3, 2))
        res = an_identity_check(*xis, n_iters=2)
        if res.skipped:
            continue
        used += 1
        worst = max(worst, max(r.rel_error for r in res.rows))
    _report(8, "quadruple-correlation identity", worst <= 1e-10, f"max relative error {worst:.2e}", t0)


def test_c09_tensorization():
    t0 = time.time()
    mult = IMultiplier(N=16.0, s=0.7)
    block = separated_interval_block(mult, level=3, N2=64.0, N3=4.0, N4=1.0, alpha=10)
    expansion = tensorize(block, mode_cap=4, tol=1e-6)  # 9 modes per axis

    basis = build_basis(ManifoldKind.TORUS, 16.0)
    rng = np.random.default_rng(90)
    f = random_band_coeffs(basis, (4, 8), rng, max_modes=50)
    g = random_band_coeffs(basis, (4, 8), rng, max_modes=50)
    ratio_mult = IMultiplier(N=4.0, s=0.7)
    ratio_block = multiplier_ratio_symbol(ratio_mult, 4.0, 4.0)
    ratio_exp = tensorize(ratio_block, mode_cap=64)
    got = apply_tensorized_form(ratio_exp, [f, g])

    from nlslab.imethod import multiplier_value

    lookup = {tuple(basis.labels[i]): i for i in np.nonzero(g.values)[0]}
    want = 0.0 + 0.0j
    for i in np.nonzero(f.values)[0]:
        a, b = (int(v) for v in basis.labels[i])
        j = lookup.get((-a, -b))
        if j is not None:
            sym = multiplier_value(ratio_mult, float(basis.frequencies[i])) / multiplier_value(
                ratio_mult, float(basis.frequencies[j])
            )
            want += sym * f.values[i] * g.values[j]
    apply_err = abs(got - want) / abs(want)
    ok = expansion.ok and expansion.sup_error <= 1e-6 and apply_err <= 1e-6
    _report(
        9,
        "multiplier tensorization",
        ok,
        f"sup reconstruction {expansion.sup_error:.2e} (l1 {expansion.l1_mass:.2e}), "
        f"form vs direct sum {apply_err:.2e}",
        t0,
    )


def test_c10_almost_conservation_trend():
    t0 = time.time()
    cfg = RunConfig(
        "almost-conservation",
        {
            "s": 0.7,
            "N_list": [4, 8, 16, 32],
            "delta": 0.5,
            "dt": 1e-3,
            "base_bandwidth": 48.0,
            "resolve_factor": 2.2,
            "seed": 0,
            "record_every": 10,
        },
    )
    seed = np.random.SeedSequence(0).spawn(1)[0]
    results = [_conservation_point((cfg, n, seed)) for n in cfg["N_list"]]
    increments = [max(r[3], 1e-300) for r in results]
    slope = _fit_slope([r[0] for r in results], increments)
    detail = ", ".join(f"N={r[0]}: {r[3]:.2e}" for r in results) + f"; slope {slope:.2f}"
    _report(10, "almost-conservation decay trend", slope <= -0.3, detail, t0)


def test_c11_smoothing_sandwich():
    t0 = time.time()
    basis = build_basis(ManifoldKind.TORUS, 64.0)
    rng = np.random.default_rng(110)
    violations = 0
    for s in (0.7, 0.8):
        mult = IMultiplier(N=16.0, s=s)
        for s0 in (0.0, s):
            for _ in range(50):
                c = _unit_random(basis, rng)
                lower, middle, upper = sandwich_check(c, mult, s0)
                if not (lower <= middle * (1 + 1e-13) and middle <= upper * (1 + 1e-13)):
                    violations += 1
    _report(
        11,
        "smoothing-operator sandwich",
        violations == 0,
        f"violations {violations}/200 (dyadic Sobolev form)",
        t0,
    )
