import math

import numpy as np
import pytest

from qnmkit.mellin import (
    TemporalSamples, ExpansionTerm, default_tau_grid, mellin_transform,
    inverse_mellin, laurent_coefficients, expand_family, resonance_expand,
    log_gaussian_pulse, log_gaussian_pulse_hat, evaluate_terms,
    fit_decay, threshold, correction_pass,
    ContourDivergence, PoleOnContour, DegenerateFit,
)
from qnmkit.spacetime import SpacetimeParams, horizon_roots
from qnmkit.resonances import build_operator
from qnmkit.absorption import AbsorbingSpec

TAU = default_tau_grid(1024)
DS = SpacetimeParams(3.0, 0.0, 0.0, "deSitter")


def bump_samples(x0=-7.0, w=0.5):
    return TemporalSamples(TAU, log_gaussian_pulse(TAU, x0, w))


class TestTransformPair:
    def test_power_law_closed_form(self):
        a = 0.8
        u = TemporalSamples(TAU, TAU ** a)
        sig = np.linspace(-3, 3, 11)
        got = mellin_transform(u, alpha=0.2, sigma_re=sig, tail_tol=1.0)
        want = 1.0 / (a - 1j * (sig - 0.2j))
        # trapezoid endpoint error at the tau = 1 cutoff is O(h^2)
        np.testing.assert_allclose(got, want, atol=1e-3)

    def test_closed_form_pulse_hat(self):
        u = bump_samples()
        sig = np.linspace(-10, 10, 41)
        got = mellin_transform(u, alpha=0.0, sigma_re=sig)
        want = log_gaussian_pulse_hat(x0=-7.0)(sig.astype(complex))
        np.testing.assert_allclose(got, want, rtol=1e-10, atol=1e-12)

    def test_plancherel(self):
        u = bump_samples()
        alpha = 0.4
        sig = np.linspace(-60, 60, 6000)
        v = mellin_transform(u, alpha, sig)
        x = u.logtau
        dx = abs(x[1] - x[0])
        lhs = np.sum(np.abs(u.values) ** 2 * np.exp(-2 * alpha * x)) * dx
        rhs = np.sum(np.abs(v) ** 2) * (sig[1] - sig[0]) / (2 * math.pi)
        assert rhs == pytest.approx(lhs, rel=1e-8)

    def test_roundtrip(self):
        u = bump_samples()
        alpha = 0.1
        sig = np.linspace(-80, 80, 8000)
        v = mellin_transform(u, alpha, sig)
        back = inverse_mellin(v, alpha, sig, TAU)
        assert np.max(np.abs(back.values - u.values)) < 1e-6

    def test_zero_maps_to_zero(self):
        v = np.zeros(64)
        back = inverse_mellin(v, 0.0, np.linspace(-5, 5, 64), TAU)
        assert np.all(back.values == 0)

    def test_shift_rule(self):
        # multiplying the transform by tau0^{i sigma} translates u in log tau
        u = bump_samples()
        alpha = 0.0
        sig = np.linspace(-80, 80, 8000)
        v = mellin_transform(u, alpha, sig)
        tau0 = math.exp(0.7)
        back = inverse_mellin(v * tau0 ** (1j * sig), alpha, sig, TAU)
        shifted = log_gaussian_pulse(TAU * tau0, x0=-7.0)
        assert np.max(np.abs(back.values - shifted)) < 1e-6

    def test_divergence_detected(self):
        u = TemporalSamples(TAU, TAU ** (-0.5))
        with pytest.raises(ContourDivergence):
            mellin_transform(u, alpha=1.0, sigma_re=np.array([0.0]))

    def test_grid_validation(self):
        with pytest.raises(ValueError):
            TemporalSamples(np.linspace(1.0, 1e-3, 64), np.zeros(64))


class TestLaurent:
    def test_simple_pole(self):
        f0 = np.array([2.0 - 1.0j])
        pole = 0.3 - 0.7j
        solve = lambda s: f0 / (s - pole)
        cs = laurent_coefficients(solve, pole)
        np.testing.assert_allclose(cs[0], f0, rtol=1e-12)
        assert np.max(np.abs(cs[1])) < 1e-12

    def test_jordan_block(self):
        # A(sigma) = [[s-p, 1], [0, s-p]]; A^-1 has a second-order pole
        pole = -0.2 - 1.1j
        f = np.array([0.7, -0.4 + 0.3j])
        def solve(s):
            d = s - pole
            return np.array([f[0] / d - f[1] / d ** 2, f[1] / d])
        cs = laurent_coefficients(solve, pole)
        np.testing.assert_allclose(cs[0], [f[0], f[1]], rtol=1e-11, atol=1e-13)
        np.testing.assert_allclose(cs[1], [-f[1], 0.0], rtol=1e-11, atol=1e-13)


class TestExpandFamily:
    def test_single_simple_pole_reconstruction(self):
        pole = -0.8j
        fhat = log_gaussian_pulse_hat()
        solve = lambda s: np.array([fhat(s) / (s - pole)])
        terms, rem = expand_family(solve, [pole], ell_target=2.0,
                                   sigma_max=60, n_sigma=6000)
        assert len(terms) == 1 and terms[0].kappa == 0
        # -i times the residue of the scalar family
        want = -1j * fhat(pole)
        assert complex(terms[0].a) == pytest.approx(want, rel=1e-10)
        # reconstruction: terms + remainder = unshifted inverse transform
        sig = np.linspace(-60, 60, 6000)
        direct = inverse_mellin(np.array([complex(solve(s + 0.5j * 0)[0])
                                          for s in sig]), 0.0, sig, rem.tau_grid)
        synth = evaluate_terms(terms, rem.tau_grid) + rem.values
        assert np.max(np.abs(direct.values - synth)) < 1e-6

    def test_jordan_block_log_term(self):
        pole = -1.0j
        fhat = log_gaussian_pulse_hat()
        f = np.array([0.3, 0.9])
        def solve(s):
            d = s - pole
            return fhat(s) * np.array([f[0] / d - f[1] / d ** 2, f[1] / d])
        terms, rem = expand_family(solve, [pole], 2.5, sigma_max=60, n_sigma=6000)
        kappas = sorted(t.kappa for t in terms)
        assert kappas == [0, 1]
        t1 = [t for t in terms if t.kappa == 1][0]
        want = -1j * 1j * (-f[1]) * fhat(pole)   # -i * i^1/1! * c_-2, first entry
        assert t1.a[0] == pytest.approx(want, rel=1e-8)
        assert abs(t1.a[1]) < 1e-10

    def test_remainder_decay_rate(self):
        pole = -0.5j
        fhat = log_gaussian_pulse_hat()
        solve = lambda s: np.array([fhat(s) / (s - pole)])
        ell = 2.0
        terms, rem = expand_family(solve, [pole], ell, sigma_max=80, n_sigma=9000)
        rate, power, _ = fit_decay(TemporalSamples(rem.tau_grid, rem.values),
                                   window=(1e-4, 3e-2))
        assert rate >= ell - 0.02 * ell

    def test_pole_on_contour(self):
        pole = -2.0j
        solve = lambda s: np.array([1.0 / (s - pole)])
        with pytest.raises(PoleOnContour):
            expand_family(solve, [pole], 2.0)

    def test_contour_shift_consistency(self):
        poles = [-0.5j, -1.5j]
        fhat = log_gaussian_pulse_hat()
        solve = lambda s: np.array([fhat(s) * (1.0 / (s - poles[0])
                                               + 1.0 / (s - poles[1]))])
        t1, _ = expand_family(solve, poles, 1.0, sigma_max=60, n_sigma=5000)
        t2, _ = expand_family(solve, poles, 2.0, sigma_max=60, n_sigma=5000)
        assert len(t1) == 1 and len(t2) == 2
        lead1 = [t for t in t2 if abs(t.sigma_j - t1[0].sigma_j) < 1e-12]
        assert complex(lead1[0].a) == pytest.approx(complex(t1[0].a), rel=1e-8)


class TestPipeline:
    def test_static_patch_expansion(self):
        op = build_operator("deSitter", DS, 0, 48, AbsorbingSpec(digamma_scale=1e-12))
        f0 = np.exp(-((op.grid - 0.5) / 0.15) ** 2)
        terms, rem = expand_family(
            lambda s: __import__("qnmkit.resonances", fromlist=["resolvent_apply"])
            .resolvent_apply(op, s, log_gaussian_pulse_hat()(s) * f0,
                             with_absorber=False),
            [0.0 + 0.0j], ell_target=1.5, sigma_max=60, n_sigma=4000)
        # the leading term is the constant mode: spatially flat coefficient
        lead = terms[0]
        spread = np.max(np.abs(lead.a - lead.a[len(lead.a) // 2]))
        assert spread < 1e-6 * max(1.0, np.max(np.abs(lead.a)))
        rate, _, _ = fit_decay(TemporalSamples(rem.tau_grid, rem.values),
                               window=(1e-4, 3e-2))
        assert rate >= 1.5 - 0.03

    def test_resonance_expand_wrapper(self):
        op = build_operator("deSitter", DS, 0, 48, AbsorbingSpec(digamma_scale=1e-12))
        f0 = np.exp(-((op.grid - 0.5) / 0.15) ** 2)
        terms, rem = resonance_expand(f0, op, ell_target=1.5,
                                      sigma_max=60, n_sigma=4000)
        assert any(abs(t.sigma_j) < 1e-8 for t in terms)


class TestFitDecay:
    def test_pure_power(self):
        u = TemporalSamples(TAU, TAU ** 0.7)
        rate, power, _ = fit_decay(u, window=(1e-5, 1e-1))
        assert rate == pytest.approx(0.7, abs=1e-6)
        assert power == 0

    def test_power_with_log(self):
        u = TemporalSamples(TAU, TAU ** 0.7 * np.log(TAU))
        rate, power, _ = fit_decay(u, window=(1e-5, 1e-1))
        assert rate == pytest.approx(0.7, abs=1e-2)
        assert power == 1

    def test_degenerate(self):
        u = TemporalSamples(TAU, TAU)
        with pytest.raises(DegenerateFit):
            fit_decay(u, window=(1e-5, 1.08e-5))


class TestThreshold:
    def test_basic_arithmetic(self):
        rep = threshold(1.0, 2.0, 1.0, 0.0)
        assert rep.regime == "propagate-away"
        assert rep.threshold_s == 0.5
        assert rep.Cs_member        # Im sigma = 0 > -1

    def test_boundary(self):
        rep = threshold(0.5, 2.0, 1.0, 0.0)
        assert rep.regime == "boundary"

    def test_toward(self):
        rep = threshold(0.1, 2.0, 1.0, 0.0)
        assert rep.regime == "propagate-toward"
        assert not rep.Cs_member    # needs Im sigma > 0.8

    def test_de_sitter_strip(self):
        hd = horizon_roots(DS)
        rep = threshold(1.0, 2.0, hd, -0.5)
        assert rep.beta_used == pytest.approx(1.0, abs=1e-12)

    def test_max_min_selection(self):
        hd = horizon_roots(SpacetimeParams(3.0, 0.2, 0.0, "dSSchwarzschild"))
        hi = threshold(1.0, 2.0, hd, 0.0).beta_used
        lo = threshold(0.25, 2.0, hd, 0.0).beta_used
        assert hi == max(hd.beta_plus, hd.beta_minus)
        assert lo == min(hd.beta_plus, hd.beta_minus)


class TestCorrectionPass:
    def test_shifted_pole_appears(self):
        op = build_operator("deSitter", DS, 0, 40, AbsorbingSpec(digamma_scale=1e-12))
        rng = np.random.default_rng(0)
        P1 = np.diag(0.05 * rng.standard_normal(41))
        f0 = np.exp(-((op.grid - 0.5) / 0.15) ** 2)
        terms, rem = correction_pass(op, P1, f0, ell_target=1.5,
                                     sigma_max=50, n_sigma=3000)
        # the constant mode at 0 and its integer shift at -i both appear
        assert any(abs(t.sigma_j - 0.0) < 1e-8 for t in terms)
        assert any(abs(t.sigma_j + 1j) < 1e-8 for t in terms)
