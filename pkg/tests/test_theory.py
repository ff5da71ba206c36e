import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from rpdist.ensemble import EnsembleParams
from rpdist.errors import DomainError
from rpdist.specfun import EULER_GAMMA
from rpdist.theory import (
    MODES,
    NormalizationMode,
    TheoryContext,
    bulk_cdf,
    convert_density,
    distribution_bulk,
    distribution_center,
    distribution_general,
    distribution_tail,
    half_moment_prefactor,
    level_density,
    mean_square_component,
    moment_asymptotic,
    moment_correction,
    moment_exact,
    moment_half,
    normalization_constant,
    scaling_exponent,
    spreading_width,
    tail_scaled,
    theory_moments,
)

from oracles import (
    B_CONST,
    C_EIGHTH,
    C_TWO,
    CORR_COEF_EIGHTH,
    DELTA_4096,
    HALF_BRACKET_4096,
)

EPS = 1 / math.sqrt(2)
GRID_PARAMS = [(g, e) for g in (1.25, 1.5, 1.75) for e in (0.5, EPS, 1.0)]


def rel(a, b):
    return abs(a - b) / abs(b)


def params(n=4096, g=1.5, eps=EPS):
    return EnsembleParams(n, g, eps)


def center_integral(ctx, power=0.0):
    """2 int_0^inf x^power P(x) dx by QUADPACK, in units of sqrt(a)."""
    s = math.sqrt(ctx.a_const)
    d = ctx.delta

    def f(u):
        return u**power * float(distribution_center(s * u, ctx))

    cuts = sorted({0.0, 1.0, 10.0, 1.0 / d, 3.0 / d, 10.0 / d, 40.0 / d})
    total = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            total += integrate.quad(f, lo, hi, epsabs=0.0, epsrel=1e-13, limit=400)[0]
    return 2.0 * total * s ** (power + 1.0)


# ---------------------------------------------------------------------------
# contexts and elementary pieces


class TestContext:
    @given(st.integers(2, 10**6), st.floats(0.0, 3.0), st.sampled_from(MODES))
    def test_normalisation_constant(self, n, g, tag):
        c = NormalizationMode.of(tag, EnsembleParams(n, g, 0.7)).c_value
        expect = {"unit": 1.0, "bulk": n ** (g / 2), "tail": n ** (1 - g / 2)}[tag]
        assert rel(c, expect) < 1e-12

    def test_unknown_mode(self):
        with pytest.raises(DomainError):
            normalization_constant("peak", 10, 1.5)

    @given(st.integers(16, 10**5), st.floats(1.01, 2.5), st.floats(0.1, 2.0),
           st.sampled_from(MODES), st.floats(-2, 2))
    def test_derived_constants(self, n, g, eps, tag, energy):
        p = EnsembleParams(n, g, eps)
        ctx = TheoryContext.build(p, tag, energy)
        c = ctx.mode.c_value
        assert rel(ctx.a_const, c * c * eps * eps / n**g) < 1e-12
        assert rel(ctx.delta, math.sqrt(math.pi) * eps**2 / (math.sqrt(2) * n ** (g - 1))) < 1e-12
        rho = math.exp(-energy**2 / 2) / math.sqrt(2 * math.pi)
        assert rel(ctx.width, math.pi * eps**2 * rho / n ** (g - 1)) < 1e-12
        assert ctx.as_dict()["mode"] == tag

    def test_constants_pinned(self):
        ctx = TheoryContext.build(params(), "unit")
        assert rel(ctx.delta, DELTA_4096) < 1e-13
        assert rel(ctx.delta, 9.791e-3) < 1e-4
        assert rel(ctx.b_const, B_CONST) < 1e-14


class TestLevelDensityAndWidth:
    def test_values(self):
        assert level_density(0.0) == pytest.approx(0.3989422804, rel=1e-10)
        assert level_density(1.0) == level_density(-1.0)
        val, _ = integrate.quad(lambda e: float(level_density(e)), -np.inf, np.inf)
        assert val == pytest.approx(1.0, abs=1e-12)

    def test_width(self):
        p = params()
        assert rel(float(spreading_width(0.0, p)), DELTA_4096) < 1e-13
        for e in (0.3, 1.7):
            ratio = spreading_width(e, p) / spreading_width(0.0, p)
            assert rel(ratio, level_density(e) / level_density(0.0)) < 1e-14
        p2 = EnsembleParams(1000, 2.0, 0.7)
        assert rel(spreading_width(0.2, p2.replace(n=2000)), spreading_width(0.2, p2) / 2) < 1e-14

    def test_breit_wigner_profile(self):
        ctx = TheoryContext.build(params(), "unit")
        w = ctx.width
        peak = mean_square_component(0.0, 0.0, ctx)
        assert rel(peak, ctx.a_const / w**2) < 1e-14
        assert rel(mean_square_component(0.0, w, ctx), peak / 2) < 1e-14
        assert rel(mean_square_component(0.0, -w, ctx), peak / 2) < 1e-14

    @staticmethod
    def _profile_sum(p, e_site):
        ctx = TheoryContext.build(p, "unit")
        w = float(spreading_width(e_site, p))

        def f(th):
            e = e_site + w * math.tan(th)
            return float(level_density(e)) * mean_square_component(e, e_site, ctx) * w / math.cos(th) ** 2

        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            val = integrate.quad(f, -math.pi / 2, math.pi / 2, epsabs=0, epsrel=1e-13,
                                 limit=500, points=[0.0])[0]
        return val, w

    @pytest.mark.parametrize("e_site", [0.0, 0.8])
    def test_profile_normalisation_narrow(self, e_site):
        # sum rule int rho(E) Sigma^2(E) dE = 1/N; exact up to O(width)
        p = EnsembleParams(4096, 3.0, 0.7)
        val, _ = self._profile_sum(p, e_site)
        assert abs(val * p.n - 1) < 1e-6

    @pytest.mark.parametrize("e_site", [0.0, 0.8])
    def test_profile_normalisation_wide(self, e_site):
        p = EnsembleParams(4096, 1.5, 0.7)
        val, w = self._profile_sum(p, e_site)
        assert abs(val * p.n - 1) < w


# ---------------------------------------------------------------------------
# distributions


class TestDistributions:
    @pytest.mark.parametrize("g,eps", GRID_PARAMS)
    @pytest.mark.parametrize("n", [512, 4096])
    def test_closed_form_vs_quadrature(self, g, eps, n):
        ctx = TheoryContext.build(EnsembleParams(n, g, eps), "bulk")
        x = eps * np.concatenate([np.linspace(0, 5, 100), np.geomspace(5.05, 5 / ctx.delta, 100)])
        closed = distribution_center(x, ctx)
        quad = distribution_general(x, 0.0, ctx)
        assert np.max(np.abs(closed / quad - 1)) < 1e-8

    @pytest.mark.parametrize("g,eps", GRID_PARAMS)
    @pytest.mark.parametrize("tag", MODES)
    def test_normalised(self, g, eps, tag):
        ctx = TheoryContext.build(EnsembleParams(1024, g, eps), tag)
        assert abs(center_integral(ctx) - 1) < 1e-8

    @pytest.mark.parametrize("energy", [-1.2, 0.4, 2.0])
    def test_general_normalised_and_even(self, energy):
        ctx = TheoryContext.build(params(1024), "unit", energy)
        s = math.sqrt(ctx.a_const)
        w = ctx.width

        def f(u):
            return distribution_general(s * u, energy, ctx)

        cuts = [0.0, 1.0, 10.0, 1 / w, 5 / w, 40 / w]
        total = sum(integrate.quad(f, lo, hi, epsabs=0, epsrel=1e-12, limit=300)[0]
                    for lo, hi in zip(cuts[:-1], cuts[1:]))
        assert abs(2 * total * s - 1) < 1e-8
        x = s * np.array([0.3, 2.0, 50.0])
        assert np.array_equal(distribution_general(x, energy, ctx),
                              distribution_general(-x, energy, ctx))

    def test_center_requires_zero_energy(self):
        ctx = TheoryContext.build(params(), "unit", 0.1)
        with pytest.raises(DomainError):
            distribution_center(0.0, ctx)

    def test_finite_at_origin(self):
        ctx = TheoryContext.build(params(), "bulk")
        assert np.isfinite(distribution_center(0.0, ctx))

    def test_second_moment(self):
        # <y^2> = N^(gamma-1) up to O(delta)
        p = params(1024)
        ctx = TheoryContext.build(p, "bulk")
        m2 = center_integral(ctx, 2.0)
        assert abs(m2 / p.n ** (p.gamma_exp - 1) - 1) < 2 * ctx.delta

    def test_bulk_law(self):
        assert distribution_bulk(0.0, EPS) == pytest.approx(math.sqrt(2) / math.pi, rel=1e-15)
        assert distribution_bulk(EPS, EPS) == pytest.approx(distribution_bulk(0.0, EPS) / 2, rel=1e-15)
        assert bulk_cdf(0.0, EPS) == 0.5
        y = np.linspace(-3, 3, 7)
        assert np.allclose(bulk_cdf(y, EPS), 0.5 + np.arctan(y / EPS) / math.pi, rtol=0, atol=1e-16)

    def test_bulk_limit(self):
        y = np.linspace(-5 * EPS, 5 * EPS, 201)
        errs = []
        for n in (2**9, 2**12, 2**15, 2**18):
            ctx = TheoryContext.build(params(n), "bulk")
            errs.append(np.max(np.abs(distribution_center(y, ctx) - distribution_bulk(y, EPS))))
        assert all(b < a for a, b in zip(errs, errs[1:]))
        assert errs[-1] < 1e-3

    def test_tail_law(self):
        z = np.linspace(0.5, 4.0, 20)
        p = params(1024)
        ctx = TheoryContext.build(p, "tail")
        assert np.allclose(distribution_tail(z, ctx) * p.n ** 0.5, tail_scaled(z, EPS), rtol=1e-14)
        # N independence of the rescaled law is exact
        other = TheoryContext.build(params(4096), "tail")
        assert np.allclose(distribution_tail(z, other) * 4096**0.5, tail_scaled(z, EPS), rtol=1e-14)

    def test_tail_limit(self):
        z = np.array([1.0, 2.0, 3.0])
        prev = None
        for n in (2**9, 2**12, 2**15, 2**18):
            p = params(n)
            ctx = TheoryContext.build(p, "tail")
            scaled = n ** (p.gamma_exp - 1) * distribution_center(z, ctx)
            err = np.max(np.abs(scaled / tail_scaled(z, EPS) - 1))
            if prev is not None:
                assert err < prev
            prev = err
        assert prev < 0.01

    def test_tail_log_slope(self):
        # ln(N^(gamma-1) P) ~ -2 b^2 z^2 at large z
        z1, z2 = 8.0, 9.0
        slope = (math.log(tail_scaled(z2, EPS)) - math.log(tail_scaled(z1, EPS))) / (z2**2 - z1**2)
        assert slope == pytest.approx(-2 * B_CONST**2, rel=0.02)

    def test_tail_domain(self):
        with pytest.raises(DomainError):
            distribution_tail(1.0, TheoryContext.build(EnsembleParams(64, 2.0, 0.7), "tail"))
        with pytest.raises(DomainError):
            tail_scaled(0.0, EPS)

    @given(st.floats(-50, 50), st.sampled_from(MODES), st.sampled_from(MODES),
           st.integers(64, 8192), st.floats(1.1, 1.9))
    def test_mode_conversion(self, w, src, dst, n, g):
        p = EnsembleParams(n, g, EPS)
        a_ctx = TheoryContext.build(p, src)
        b_ctx = TheoryContext.build(p, dst)
        w = w * math.sqrt(a_ctx.a_const)
        w2, dens = convert_density(w, distribution_center(w, a_ctx),
                                   a_ctx.mode.c_value, b_ctx.mode.c_value)
        assert rel(dens, distribution_center(w2, b_ctx)) < 1e-10

    def test_conversion_roundtrip(self):
        w, d = convert_density(np.array([1.0, 2.0]), np.array([0.3, 0.1]), 3.0, 7.0)
        w0, d0 = convert_density(w, d, 7.0, 3.0)
        assert np.allclose(w0, [1.0, 2.0]) and np.allclose(d0, [0.3, 0.1])


# ---------------------------------------------------------------------------
# moments


class TestMoments:
    def test_zeroth_moment_is_n(self):
        for n in (64, 1000, 4096):
            ctx = TheoryContext.build(params(n), "unit")
            assert moment_exact(0, ctx) == pytest.approx(n, rel=1e-15)

    def test_first_moment_is_one(self):
        ctx = TheoryContext.build(params(1024), "unit")
        assert abs(moment_exact(1, ctx) - 1) <= 2 * ctx.delta

    @pytest.mark.parametrize("q", [0.125, 0.5, 1.0, 2.0, 3.0])
    @pytest.mark.parametrize("n", [1024, 4096])
    def test_exact_vs_quadrature(self, q, n):
        p = params(n)
        ctx = TheoryContext.build(p, "unit")
        assert rel(moment_exact(q, ctx), n * center_integral(ctx, 2 * q)) < 1e-6

    def test_divergent_order(self):
        ctx = TheoryContext.build(params(), "unit")
        with pytest.raises(DomainError):
            moment_exact(-0.5, ctx)
        with pytest.raises(DomainError):
            moment_asymptotic(-0.7, params())

    def test_scaling_exponent(self):
        assert scaling_exponent(2, 1.5) == 0.5
        assert scaling_exponent(0.125, 1.5) == pytest.approx(1.5 / 8 - 1)
        assert scaling_exponent(3, 1.25) == pytest.approx(2 * 0.75)

    def test_prefactors(self):
        p = params()
        assert moment_asymptotic(2, p) == (0.5, pytest.approx(C_TWO, rel=1e-14))
        assert moment_asymptotic(0.125, p)[1] == pytest.approx(C_EIGHTH, rel=1e-14)
        assert C_EIGHTH == pytest.approx(EPS**0.25 / math.cos(math.pi / 8), rel=1e-15)
        with pytest.raises(DomainError):
            moment_asymptotic(0.5, p)

    def test_correction(self):
        p = params()
        expect = 1 + CORR_COEF_EIGHTH * 4096 ** (-0.375)
        assert moment_correction(0.125, p) == pytest.approx(expect, rel=1e-14)
        assert moment_correction(0.125, p) < 1
        assert moment_correction(0.0, p) == 1.0
        assert abs(moment_correction(0.125, params(2**40)) - 1) < 1e-4
        for q in (0.5, -0.5, 1.0):
            with pytest.raises(DomainError):
                moment_correction(q, p)

    def test_correction_exponent(self):
        # N-dependence of the correction term is N^-(gamma-1)(1-2q) = N^-0.375
        p = params()
        t1 = moment_correction(0.125, p.replace(n=2**10)) - 1
        t2 = moment_correction(0.125, p.replace(n=2**14)) - 1
        assert math.log(t1 / t2) / math.log(2**4) == pytest.approx(0.375, rel=1e-12)

    def test_half_moment(self):
        p = params()
        bracket = half_moment_prefactor(p) * math.pi / EPS
        assert bracket == pytest.approx(HALF_BRACKET_4096, rel=1e-13)
        assert moment_half(p) == pytest.approx(4096**0.25 * EPS / math.pi * HALF_BRACKET_4096, rel=1e-13)
        # two distinct constants: the exponent and Euler's
        assert EULER_GAMMA == pytest.approx(0.5772156649, rel=1e-10)

    def test_half_moment_consistency(self):
        devs = []
        for k in range(9, 15):
            p = params(2**k)
            ctx = TheoryContext.build(p, "unit")
            devs.append(abs(moment_exact(0.5, ctx) / moment_half(p) - 1))
        assert all(b < a for a, b in zip(devs, devs[1:]))

    @pytest.mark.parametrize("q", [2.0, 3.0, 0.125])
    def test_asymptotic_approach_monotone(self, q):
        devs = []
        for k in range(9, 15):
            p = params(2**k)
            ctx = TheoryContext.build(p, "unit")
            tau, pref = moment_asymptotic(q, p)
            val = moment_exact(q, ctx) * p.n**tau / pref
            if q < 0.5:
                val /= moment_correction(q, p)
            devs.append(abs(val - 1))
        assert all(b < a for a, b in zip(devs, devs[1:]))

    def test_theory_moments(self):
        p = params(1024)
        ms = theory_moments([0, 0.125, 0.5, 2], p)
        by_q = ms.by_q()
        assert ms.qs() == [0.0, 0.125, 0.5, 2.0]
        assert by_q[0.0].value == pytest.approx(1024, rel=1e-15)
        assert by_q[0.125].correction == moment_correction(0.125, p)
        assert by_q[2.0].correction is None
        assert by_q[0.5].prefactor == half_moment_prefactor(p)
        assert by_q[2.0].scaling_tau == 0.5
