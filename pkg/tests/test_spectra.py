import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nlslab.errors import ModeBudgetError, UnsupportedExponentError
from nlslab.spectra import (
    ManifoldKind,
    SpectralCoeffs,
    build_basis,
    conjugate_coeffs,
    dyadic_blocks,
    lp_scaling_check,
    project_interval,
    rescale_basis,
    single_mode,
    sobolev_norm,
    sobolev_norm_dyadic,
)


def random_coeffs(basis, seed=0):
    rng = np.random.default_rng(seed)
    return SpectralCoeffs(
        basis, rng.standard_normal(basis.n_modes) + 1j * rng.standard_normal(basis.n_modes)
    )


class TestBuildBasis:
    def test_torus_small_cutoff(self):
        b = build_basis(ManifoldKind.TORUS, 1.5)
        assert b.n_modes == 9
        assert set(map(tuple, b.labels)) == {
            (0, 0), (1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1),
        }
        assert sorted(set(np.round(b.frequencies, 12))) == [0.0, 1.0, round(math.sqrt(2), 12)]

    def test_sphere_small_cutoff(self):
        b = build_basis(ManifoldKind.SPHERE, 2.5)
        assert b.n_modes == 9  # degrees 0, 1, 2
        assert set(b.labels[:, 0]) == {0, 1, 2}

    def test_rescaled_torus_includes_base_mode(self):
        b = build_basis(ManifoldKind.TORUS, 2.0, lam=2.0)
        assert b.base_eigenvalues.max() == 16.0
        assert b.eigenvalues.max() == pytest.approx(4.0, rel=1e-15)

    def test_eigenvalue_scaling_exact(self):
        base = build_basis(ManifoldKind.SPHERE, 6.0)
        for lam in (2.0, 3.7):
            scaled = build_basis(ManifoldKind.SPHERE, 6.0 / lam + 1e-9, lam=lam)
            n = min(base.n_modes, scaled.n_modes)
            ratio = scaled.eigenvalues[:n] * lam**2 / np.maximum(base.eigenvalues[:n], 1)
            assert np.abs(ratio[base.eigenvalues[:n] > 0] - 1).max() <= 1e-14

    def test_deterministic_and_hashable(self):
        a = build_basis(ManifoldKind.TORUS, 7.3)
        b = build_basis(ManifoldKind.TORUS, 7.3)
        assert np.array_equal(a.labels, b.labels)
        assert np.array_equal(a.base_eigenvalues, b.base_eigenvalues)
        assert a.content_hash == b.content_hash

    def test_mode_cap_refusal(self):
        with pytest.raises(ModeBudgetError):
            build_basis(ManifoldKind.TORUS, 100.0, mode_cap=1000)

    def test_volume(self):
        assert build_basis(ManifoldKind.TORUS, 2, lam=3.0).volume == pytest.approx(
            9 * (2 * math.pi) ** 2
        )
        assert build_basis(ManifoldKind.SPHERE, 2, lam=3.0).volume == pytest.approx(36 * math.pi)

    def test_mode_view(self):
        b = build_basis(ManifoldKind.TORUS, 1.5)
        m = b.mode(0)
        assert m.label == (0, 0) and m.eigenvalue == 0.0
        assert all(abs(x.frequency**2 - x.eigenvalue) <= 1e-14 for x in b.modes)


class TestProjection:
    def test_dyadic_window_contents(self):
        b = build_basis(ManifoldKind.TORUS, 5.0)
        c = SpectralCoeffs(b, np.ones(b.n_modes, dtype=complex))
        p = project_interval(c, 2.0, 4.0)
        kept = set(b.base_eigenvalues[p.values != 0])
        assert kept == {4.0, 5.0, 8.0, 9.0, 10.0, 13.0}

    def test_p1_convention(self):
        b = build_basis(ManifoldKind.TORUS, 5.0)
        c = SpectralCoeffs(b, np.ones(b.n_modes, dtype=complex))
        p1 = project_interval(c, 0.0, 2.0)
        assert set(b.base_eigenvalues[p1.values != 0]) == {0.0, 1.0, 2.0}

    @settings(max_examples=30, deadline=None)
    @given(
        a=st.floats(min_value=0.0, max_value=6.0),
        width=st.floats(min_value=0.01, max_value=4.0),
        seed=st.integers(0, 1000),
    )
    def test_idempotent(self, a, width, seed):
        b = build_basis(ManifoldKind.TORUS, 6.0)
        c = random_coeffs(b, seed)
        p = project_interval(c, a, a + width)
        pp = project_interval(p, a, a + width)
        assert np.array_equal(p.values, pp.values)

    def test_completeness(self):
        for kind in ManifoldKind:
            b = build_basis(kind, 9.0)
            c = random_coeffs(b, 3)
            total = np.zeros_like(c.values)
            for lo, hi in dyadic_blocks(b):
                total += project_interval(c, lo, hi).values
            assert np.array_equal(total, c.values)


class TestSobolev:
    def test_single_mode_forced_value(self):
        b = build_basis(ManifoldKind.TORUS, 6.0)
        c = single_mode(b, (3, 4))  # eigenvalue 25
        assert sobolev_norm(c, 1.0) == pytest.approx(math.sqrt(26.0), rel=1e-15)

    def test_s0_is_l2(self):
        b = build_basis(ManifoldKind.SPHERE, 6.0)
        c = random_coeffs(b, 11)
        assert sobolev_norm(c, 0.0) == pytest.approx(float(np.linalg.norm(c.values)), rel=1e-15)

    @pytest.mark.parametrize("s", [-1.0, 0.5, 1.0])
    def test_dyadic_form_equivalence(self, s):
        b = build_basis(ManifoldKind.TORUS, 16.0)
        c = random_coeffs(b, 5)
        ratio = sobolev_norm(c, s) / sobolev_norm_dyadic(c, s)
        margin = 2.0 ** abs(s)
        assert 1.0 / margin <= ratio <= margin


class TestConjugation:
    def test_torus_map(self):
        b = build_basis(ManifoldKind.TORUS, 3.0)
        c = random_coeffs(b, 7)
        cc = conjugate_coeffs(c)
        for i, (a1, a2) in enumerate(map(tuple, b.labels)):
            j = b.label_index[(-a1, -a2)]
            assert cc.values[j] == np.conj(c.values[i])

    def test_sphere_phase(self):
        b = build_basis(ManifoldKind.SPHERE, 3.0)
        c = random_coeffs(b, 8)
        cc = conjugate_coeffs(c)
        for i, (l, m) in enumerate(map(tuple, b.labels)):
            j = b.label_index[(l, -m)]
            assert cc.values[j] == pytest.approx((-1.0) ** m * np.conj(c.values[i]))

    def test_involution(self):
        b = build_basis(ManifoldKind.SPHERE, 4.0)
        c = random_coeffs(b, 9)
        back = conjugate_coeffs(conjugate_coeffs(c))
        assert np.allclose(back.values, c.values, rtol=0, atol=0)


class TestLpScaling:
    def test_constant_function(self):
        lam = 2.5
        b = build_basis(ManifoldKind.TORUS, 2.0, lam=lam)
        c = single_mode(b, (0, 0), 2 * math.pi * lam)  # the function 1
        lhs, rhs = lp_scaling_check(c, 2)
        assert lhs == pytest.approx(lam * 2 * math.pi, rel=1e-13)
        assert rhs == pytest.approx(lhs, rel=1e-13)

    def test_single_eigenfunction_unit(self):
        b = build_basis(ManifoldKind.SPHERE, 3.0, lam=2.0)
        c = single_mode(b, (2, 1))
        lhs, rhs = lp_scaling_check(c, 2)
        assert lhs == pytest.approx(1.0, rel=1e-12)
        assert rhs == pytest.approx(1.0, rel=1e-12)

    @pytest.mark.parametrize("kind", list(ManifoldKind))
    def test_random_field_p4(self, kind):
        b = build_basis(kind, 5.0, lam=3.0)
        c = random_coeffs(b, 13)
        lhs, rhs = lp_scaling_check(c, 4)
        assert abs(lhs - rhs) / lhs <= 1e-10

    def test_unsupported_exponent(self):
        b = build_basis(ManifoldKind.TORUS, 2.0)
        with pytest.raises(UnsupportedExponentError):
            lp_scaling_check(random_coeffs(b), 6)


def test_rescale_basis_roundtrip():
    b = build_basis(ManifoldKind.TORUS, 4.0, lam=1.0)
    scaled = rescale_basis(b, 5.0)
    back = rescale_basis(scaled, 1.0)
    assert np.array_equal(back.labels, b.labels)
    assert np.allclose(scaled.eigenvalues * 25.0, b.eigenvalues, rtol=1e-15, atol=0)


def test_descriptor_json():
    import json

    b = build_basis(ManifoldKind.SPHERE, 3.0, lam=2.0)
    doc = json.loads(b.descriptor_json())
    assert doc["manifold"] == "sphere"
    assert doc["n_modes"] == b.n_modes
    assert len(doc["hash"]) == 16
