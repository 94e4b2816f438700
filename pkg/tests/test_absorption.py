import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qnmkit.absorption import (
    AbsorbingSpec, BranchCut, chi0, dchi0, smooth_step, f_z, p_hat,
    pairing_ds, q_semiclassical, extend_p, ellipticity_scan, choose_digamma,
)
from qnmkit.spacetime import SpacetimeParams

SPEC = AbsorbingSpec()
KDS = SpacetimeParams(3.0, 0.2, 0.05, "KerrDeSitter")


class TestChi:
    @given(st.floats(1e-3, 20.0))
    @settings(max_examples=100, deadline=None)
    def test_exact_derivative_identity(self, s):
        # s^2 chi0'(s) = chi0(s) holds exactly in closed form
        assert s * s * dchi0(s) == pytest.approx(chi0(s), rel=1e-14)

    def test_partition_of_unity(self):
        mu = np.linspace(-0.7, 0.2, 400)
        np.testing.assert_allclose(SPEC.chi1(mu) + SPEC.chi2(mu), 1.0, atol=1e-12)

    def test_support_and_plateau(self):
        assert SPEC.chi(SPEC.mu1 - 0.01) == 0.0
        assert SPEC.chi(SPEC.mu0 + 0.01) == 0.0
        mid = np.linspace(SPEC.mu1p, SPEC.mu0p, 50)
        np.testing.assert_allclose(SPEC.chi(mid), SPEC.digamma_scale, rtol=1e-12)

    def test_chi_derivative_consistent(self):
        mu = np.linspace(-0.7, 0.0, 300)
        h = 1e-7
        fd = (SPEC.chi(mu + h) - SPEC.chi(mu - h)) / (2 * h)
        np.testing.assert_allclose(SPEC.dchi(mu), fd, atol=1e-5)

    def test_sqrt_pair_smooth_and_finite(self):
        mu = np.linspace(-0.7, 0.0, 300)
        v = SPEC.sqrt_chi_pair(mu)
        assert np.all(np.isfinite(v)) and np.all(v >= 0)


class TestFz:
    def test_real_limit(self):
        assert f_z(0.0, 2.0, 1, 0.0) == pytest.approx(2.0)

    def test_positive_real_part_grid(self):
        xs = np.linspace(0, 4, 100)
        zs = [complex(a, b) for a in np.linspace(-2, 2, 10)
              for b in np.linspace(-1, 1, 10)]
        for z in zs:
            vals = f_z(xs, z, 1, 2.0)
            assert np.all(np.real(vals) > 0)

    def test_square_positive_real_part_for_j2(self):
        xs = np.linspace(0, 4, 50)
        for b in np.linspace(-1, 1, 9):
            for a in np.linspace(-2, 2, 9):
                v = f_z(xs, complex(a, b), 2, 2.0) ** 2
                assert np.all(np.real(v) > 0)

    def test_branch_cut_raises(self):
        with pytest.raises(BranchCut):
            f_z(0.0, 3.0j, 1, 2.0)   # 0 - 9 + 4 = -5 on the cut

    def test_phat_is_fz_squared(self):
        v = f_z(1.3, 0.7 + 0.2j, 2, 0.0)
        assert p_hat(1.3, 0.7 + 0.2j, 2) == pytest.approx(v * v, rel=1e-13)


class TestQ:
    def test_real_for_real_z(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            mu = rng.uniform(-0.6, 0.9)
            xi = rng.uniform(-3, 3)
            q = q_semiclassical("deSitter", None, mu, xi, 1.3, SPEC, 0.4)
            assert abs(complex(q).imag) < 1e-14

    def test_ds_display_form(self):
        # q = -(2 r^2 xi + z) f_z chi(mu)
        mu, xi, z = -0.3, 0.8, 1.1
        got = q_semiclassical("deSitter", None, mu, xi, z, SPEC, 0.0)
        want = -(2 * (1 - mu) * xi + z) * f_z(abs(xi), z, SPEC.j, SPEC.C) \
            * SPEC.chi(mu)
        assert got == pytest.approx(want, rel=1e-13)

    def test_vanishes_off_support(self):
        assert q_semiclassical("deSitter", None, 0.5, 1.0, 1.0, SPEC, 0.0) == 0.0

    def test_kds_pairing_is_half_z_derivative(self):
        # pairing against dtau/tau equals (d/dsigma p_full)/2
        from qnmkit.absorption import pairing_kds
        from qnmkit.symbols import PhasePoint, kds_full_symbol
        from qnmkit.spacetime import choose_c
        cf = choose_c(KDS)
        rng = np.random.default_rng(1)
        for _ in range(10):
            pt = PhasePoint(rng.uniform(0.3, 1.0), rng.uniform(0.5, 2.6), 0.0,
                            rng.uniform(-2, 2), rng.uniform(-2, 2),
                            rng.uniform(-2, 2))
            z = rng.uniform(-2, 2)
            h = 1e-6
            dp = (kds_full_symbol(KDS, cf, pt, z + h)
                  - kds_full_symbol(KDS, cf, pt, z - h)) / (2 * h)
            got = pairing_kds(KDS, pt.r, pt.theta, pt.xi, pt.zeta, z, cf)
            assert got == pytest.approx(dp.real / 2, rel=1e-6, abs=1e-8)

    def test_holomorphy_proxy(self):
        # discrete Cauchy-Riemann residual in z on the slit domain interior
        h = 1e-5
        for mu in (-0.4, -0.3, -0.25):
            for xi in (-1.5, 0.3, 2.0):
                z0 = 1.2 + 0.3j
                dre = (q_semiclassical("deSitter", None, mu, xi, z0 + h, SPEC, 0.1)
                       - q_semiclassical("deSitter", None, mu, xi, z0 - h, SPEC, 0.1)) / (2 * h)
                dim = (q_semiclassical("deSitter", None, mu, xi, z0 + 1j * h, SPEC, 0.1)
                       - q_semiclassical("deSitter", None, mu, xi, z0 - 1j * h, SPEC, 0.1)) / (2j * h)
                assert abs(dre - dim) < 1e-6 * max(1.0, abs(dre))


class TestExtension:
    def test_physical_region_unchanged(self):
        from qnmkit.symbols import ds_symbol_polar
        mu, xi, z = 0.4, 1.2, 1.0 + 0.2j
        got = extend_p("deSitter", None, mu, xi, z, SPEC, 0.3)
        assert got == pytest.approx(ds_symbol_polar(4, mu, xi, 0.3, z), rel=1e-13)

    def test_deep_collar_negative(self):
        v = extend_p("deSitter", None, -0.55, 1.5, 2.0, SPEC, 0.2)
        assert complex(v).imag == pytest.approx(0.0, abs=1e-13)
        assert complex(v).real < 0

    def test_blend_matches_independent_reevaluation(self):
        from qnmkit.symbols import ds_symbol_polar
        rng = np.random.default_rng(2)
        for _ in range(20):
            mu = rng.uniform(SPEC.mu1p, SPEC.mu0p)
            xi = rng.uniform(-3, 3)
            e2 = rng.uniform(0, 2)
            z = complex(rng.uniform(0.5, 2), rng.uniform(0, 0.5))
            got = extend_p("deSitter", None, mu, xi, z, SPEC, e2)
            c1 = SPEC.chi1(mu)
            want = c1 * ds_symbol_polar(4, mu, xi, e2, z) \
                - (1 - c1) * (complex(xi ** 2 + e2 + z ** 2))  # j=1 oracle
            assert got == pytest.approx(want, rel=1e-10)


class TestEllipticityScan:
    def test_collar_elliptic_and_signs(self):
        rep = ellipticity_scan("deSitter", None, SPEC,
                               [2.0 + 0.0j, 1.0 + 0.5j, -1.5 + 0.0j],
                               n_mu=48, n_xi=32, n_eta=4)
        assert rep.min_abs > 0
        assert rep.sign_violations == 0

    def test_interior_bound_for_large_im_z(self):
        z = 1.0 + 0.5j
        rep = ellipticity_scan("deSitter", None, SPEC, [z],
                               n_mu=40, n_xi=32, n_eta=4)
        interior = dict(rep.details)["interior_min_abs"]
        assert interior > z.imag ** 2

    def test_digamma_search_terminates(self):
        F = choose_digamma("deSitter", SPEC, 1.0 + 0.6j)
        assert F >= SPEC.digamma_scale
        # margin shrinks when the plateau is made too small with j >= 2
        spec2 = AbsorbingSpec(j=2, digamma_scale=1e-4)
        F2 = choose_digamma("deSitter", spec2, 1.0 + 0.6j)
        assert F2 > spec2.digamma_scale


class TestFzProperties:
    @given(st.floats(0.0, 5.0), st.floats(-2.0, 2.0), st.floats(-0.9, 0.9),
           st.integers(1, 3))
    @settings(max_examples=150, deadline=None)
    def test_fz_right_half_plane(self, norm, zre, zim, j):
        # principal 2j-th root with C = 2 stays in the open right half plane
        try:
            v = f_z(norm, complex(zre, zim), j, 2.0)
        except BranchCut:
            return
        assert complex(v).real > 0


class TestThresholdProperty:
    @given(st.floats(0.0, 3.0), st.floats(-2.0, 2.0), st.floats(0.2, 3.0))
    @settings(max_examples=150, deadline=None)
    def test_regime_matches_membership(self, s, im_sigma, beta):
        # being above the radial threshold is the same inequality as membership
        # in the Fredholm half-plane
        from qnmkit.mellin import threshold
        rep = threshold(s, 2.0, beta, im_sigma)
        if rep.regime == "propagate-away":
            assert rep.Cs_member
        elif rep.regime == "propagate-toward":
            assert not rep.Cs_member
