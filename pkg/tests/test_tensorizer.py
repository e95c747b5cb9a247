import math

import numpy as np
import pytest

from nlslab import transform as tr
from nlslab.fields import random_band_coeffs
from nlslab.imethod import IMultiplier, multiplier_value
from nlslab.spectra import ManifoldKind, build_basis
from nlslab.tensorizer import (
    SymbolBlock,
    apply_tensorized_form,
    constant_symbol,
    energy_increment_symbol,
    modulate,
    multiplier_ratio_symbol,
    separated_interval_block,
    symbol_estimate_check,
    tensorize,
    window,
)


def direct_double_sum(symbol, f, g):
    """Oracle: sum over mode pairs of m(n1, n2) times the pair correlation."""
    basis = f.basis
    total = 0.0 + 0.0j
    lookup = {tuple(basis.labels[i]): i for i in np.nonzero(g.values)[0]}
    for i in np.nonzero(f.values)[0]:
        a, b = (int(v) for v in basis.labels[i])
        j = lookup.get((-a, -b))
        if j is not None:
            total += symbol(basis.frequencies[i], basis.frequencies[j]) * f.values[i] * g.values[j]
    return total


class TestWindow:
    def test_plateau_support_and_smoothness(self):
        xs = np.arange(-1.0, 3.0 + 1e-12, 2.0**-8)  # dyadic steps: exact wrap
        w = window(xs)
        assert np.all(w[(xs >= 0) & (xs <= 2)] == 1.0)
        assert w[0] == 0.0 and w[-1] == 0.0
        assert np.all((w >= 0) & (w <= 1))
        assert np.array_equal(window(xs + 4.0), w)  # 4-periodic


class TestTensorize:
    def test_constant_symbol_is_delta(self):
        exp = tensorize(constant_symbol(2, 1.0, scales=(4.0, 4.0)), mode_cap=6)
        cap = exp.mode_cap
        assert exp.coeffs[cap, cap] == pytest.approx(1.0, rel=1e-14)
        off = np.abs(exp.coeffs).sum() - abs(exp.coeffs[cap, cap])
        assert off <= 1e-12
        assert exp.window_id == "raw-periodic"
        assert exp.sup_error <= 1e-12

    def test_lattice_modulation_single_coefficient(self):
        a = math.pi / 2 * 2
        b = math.pi / 2 * (-1)

        def ev(n1, n2):
            return np.exp(1j * a * np.asarray(n1) / 4.0) * np.exp(1j * b * np.asarray(n2) / 4.0)

        exp = tensorize(SymbolBlock(evaluator=ev, scales=(4.0, 4.0)), mode_cap=4)
        peak = abs(exp.coeffs[4 + 2, 4 - 1])
        assert peak == pytest.approx(1.0, rel=1e-12)
        assert np.abs(exp.coeffs).sum() - peak <= 1e-12

    def test_separated_block_reconstruction(self):
        mult = IMultiplier(N=16, s=0.7)
        block = separated_interval_block(mult, level=3, N2=64, N3=4, N4=1, alpha=10)
        exp = tensorize(block, mode_cap=4, tol=1e-6)
        assert exp.ok and exp.sup_error <= 1e-6
        assert exp.l1_mass > 0

    def test_failure_flag_not_silent(self):
        # a symbol too rough for one mode per axis must come back flagged
        def ev(n1, n2):
            return np.cos(3.0 * np.asarray(n1)) * np.cos(2.0 * np.asarray(n2))

        exp = tensorize(SymbolBlock(evaluator=ev, scales=(4.0, 4.0)), mode_cap=0, tol=1e-8)
        assert not exp.ok

    def test_reconstruction_converges_with_cap(self):
        mult = IMultiplier(N=4, s=0.7)
        block = multiplier_ratio_symbol(mult, 4.0, 4.0)
        sups = [tensorize(block, mode_cap=cap).sup_error for cap in (8, 16, 32)]
        assert sups[1] <= 1.1 * sups[0]
        assert sups[2] <= 1.1 * sups[1]

    def test_l1_mass_tracks_c2_norm(self):
        # across the smoothing-ratio family, l1 mass stays within a fixed
        # multiple of the measured C2 size of the symbol
        for n_cut in (4.0, 8.0, 16.0):
            mult = IMultiplier(N=n_cut, s=0.7)
            block = multiplier_ratio_symbol(mult, n_cut, n_cut)
            exp = tensorize(block, mode_cap=16)
            est = symbol_estimate_check(block, order=2)
            c2 = max(est.values())
            assert exp.l1_mass <= 10.0 * c2

    def test_expansion_json(self):
        import json

        exp = tensorize(constant_symbol(2, 1.0, scales=(2.0, 2.0)), mode_cap=2)
        doc = json.loads(exp.to_json())
        assert doc["mode_cap"] == 2 and doc["window"] == "raw-periodic"
        assert doc["scales"] == [2.0, 2.0]

    def test_denominator_guard(self):
        mult = IMultiplier(N=16, s=0.7)
        # a fourth-factor block big enough to cross the singular set
        with pytest.raises(ValueError, match="sign-definite"):
            separated_interval_block(mult, level=3, N2=8, N3=4, N4=64, alpha=8)
        with pytest.raises(ValueError, match="separation"):
            separated_interval_block(mult, level=3, N2=64, N3=4, N4=1, alpha=4)


class TestApply:
    def setup_method(self):
        self.basis = build_basis(ManifoldKind.TORUS, 16.0)
        rng = np.random.default_rng(7)
        self.f = random_band_coeffs(self.basis, (4, 8), rng, max_modes=50)
        self.g = random_band_coeffs(self.basis, (4, 8), rng, max_modes=50)

    def test_constant_matches_plain_correlation(self):
        exp = tensorize(constant_symbol(2, 1.0, scales=(4.0, 4.0)), mode_cap=5)
        got = apply_tensorized_form(exp, [self.f, self.g])
        want = tr.correlation_integral([self.f, self.g])
        assert abs(got - want) <= 1e-10 * max(abs(want), 1e-6)

    def test_ratio_symbol_matches_direct_sum(self):
        mult = IMultiplier(N=4, s=0.7)
        block = multiplier_ratio_symbol(mult, 4.0, 4.0)
        exp = tensorize(block, mode_cap=64)
        got = apply_tensorized_form(exp, [self.f, self.g])
        want = direct_double_sum(
            lambda n1, n2: multiplier_value(mult, float(n1)) / multiplier_value(mult, float(n2)),
            self.f,
            self.g,
        )
        assert abs(got - want) <= 1e-6 * abs(want)

    def test_modulation_preserves_l2(self):
        block = constant_symbol(2, 1.0, scales=(4.0, 4.0))
        for theta in (math.pi / 2, -3 * math.pi / 2, 7 * math.pi / 2):
            out = modulate(self.f, block, 0, theta)
            assert out.l2_norm() == pytest.approx(self.f.l2_norm(), rel=1e-15)

    def test_linearity_in_each_slot(self):
        exp = tensorize(constant_symbol(2, 1.0, scales=(4.0, 4.0)), mode_cap=4)
        from nlslab.spectra import SpectralCoeffs

        combo = SpectralCoeffs(self.basis, 2.0 * self.f.values + 3.0j * self.g.values)
        lhs = apply_tensorized_form(exp, [combo, self.g])
        rhs = 2.0 * apply_tensorized_form(exp, [self.f, self.g]) + 3.0j * apply_tensorized_form(
            exp, [self.g, self.g]
        )
        assert abs(lhs - rhs) <= 1e-10 * max(abs(rhs), 1e-12)

    def test_block_mismatch_rejected(self):
        exp = tensorize(constant_symbol(2, 1.0, scales=(2.0, 2.0)), mode_cap=3)
        with pytest.raises(ValueError, match="not localized"):
            apply_tensorized_form(exp, [self.f, self.g])

    def test_arity_mismatch_rejected(self):
        exp = tensorize(constant_symbol(2, 1.0, scales=(4.0, 4.0)), mode_cap=3)
        with pytest.raises(ValueError):
            apply_tensorized_form(exp, [self.f])


class TestSymbolEstimates:
    def test_constant_derivatives_at_noise_floor(self):
        est = symbol_estimate_check(constant_symbol(2, 1.0, scales=(8.0, 8.0)), order=2)
        for alpha, val in est.items():
            if sum(alpha) > 0:
                assert val <= 1e-8

    def test_ratio_symbol_first_derivatives_bounded(self):
        mult = IMultiplier(N=16, s=0.7)
        est = symbol_estimate_check(multiplier_ratio_symbol(mult, 64.0, 16.0), order=2)
        firsts = [v for a, v in est.items() if sum(a) == 1]
        assert max(firsts) <= 10.0

    def test_denominator_symbol_scaled_derivatives(self):
        mult = IMultiplier(N=16, s=0.7)
        block = separated_interval_block(mult, level=3, N2=64, N3=4, N4=1, alpha=10)

        def denom_only(n1, n2, n3, n4):
            arrs = [np.asarray(v, dtype=np.float64) for v in (n1, n2, n3, n4)]
            scale = 2.0 * 68.0 * 4.0 * 10.0  # 2 N2 N3 alpha normalization
            return (arrs[0] ** 2 - arrs[1] ** 2 - arrs[2] ** 2 - arrs[3] ** 2) / scale

        dblock = SymbolBlock(
            evaluator=denom_only,
            scales=block.scales,
            offsets=block.offsets,
            widths=block.widths,
        )
        est = symbol_estimate_check(dblock, order=2)
        assert est[(0, 0, 0, 0)] >= 0.5  # normalized quadratic stays bounded below
