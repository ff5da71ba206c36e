import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.stats import norm

from rpdist.compare import (
    FitReport,
    chi2_hist,
    chi2_two_sample,
    expected_counts,
    fit_lorentzian,
    ks_distance,
    ks_distance_hist,
    moment_ratio_table,
    moment_targets,
)
from rpdist.empirics import Binning, Histogram, ProfileAccumulator, histogram
from rpdist.ensemble import EnsembleParams
from rpdist.errors import InputError
from rpdist.theory import MomentEntry, MomentSet, bulk_cdf, half_moment_prefactor

EPS = 1 / math.sqrt(2)


class TestKS:
    def test_quantile_grid(self):
        n = 1000
        u = (np.arange(n) + 0.5) / n
        samples = norm.ppf(u)
        assert ks_distance(samples, norm.cdf) <= 1 / n

    def test_degenerate(self):
        d = ks_distance(np.zeros(50), norm.cdf)
        assert d >= 0.5 - 1e-12
        assert 0 <= d <= 1

    def test_cauchy_draws(self, rng):
        x = EPS * rng.standard_cauchy(10**5)
        assert ks_distance(x, lambda y: bulk_cdf(y, EPS)) < 0.01

    def test_empty(self):
        with pytest.raises(InputError):
            ks_distance(np.array([]), norm.cdf)

    @given(st.integers(0, 2**32 - 1))
    def test_monotone_reparameterisation(self, seed):
        x = np.random.default_rng(seed).standard_normal(200)
        base = ks_distance(x, norm.cdf)
        # the same increasing map t -> sinh(3t) applied to samples and cdf
        moved = ks_distance(np.sinh(3 * x), lambda s: norm.cdf(np.arcsinh(s) / 3))
        assert moved == pytest.approx(base, abs=1e-9)

    def test_histogram_lower_bound(self, rng):
        x = EPS * rng.standard_cauchy(50000)
        b = Binning("uniform", -5 * EPS, 5 * EPS, 2000)
        h = histogram(x, b)
        cdf = lambda y: bulk_cdf(y, EPS)
        exact = ks_distance(x, cdf)
        binned = ks_distance_hist(h, cdf)
        max_mass = np.max(np.diff(cdf(b.edges)))
        assert binned <= exact + 1e-12
        assert exact <= binned + max_mass + 1e-12

    def test_histogram_conditional(self, rng):
        x = EPS * rng.standard_cauchy(50000)
        inside = x[np.abs(x) <= 5 * EPS]
        b = Binning("uniform", -5 * EPS, 5 * EPS, 4000)
        h = histogram(x, b)
        lo, hi = bulk_cdf(-5 * EPS, EPS), bulk_cdf(5 * EPS, EPS)
        cond = lambda y: (bulk_cdf(y, EPS) - lo) / (hi - lo)
        exact = ks_distance(inside, cond)
        binned = ks_distance_hist(h, lambda y: bulk_cdf(y, EPS), conditional=True)
        assert binned <= exact + 1e-12
        assert exact <= binned + 1.0 / 4000 * 2


class TestChi2:
    def test_calibration(self, rng):
        b = Binning("uniform", -4.0, 4.0, 60)
        vals = []
        for k in range(20):
            h = histogram(rng.standard_normal(200000), b)
            vals.append(chi2_hist(h, norm.pdf).chi2_per_dof)
        assert all(0.5 <= v <= 2.0 for v in vals)

    def test_folded_expected_counts(self):
        # square bins act on |w|; expected counts include both signs
        b = Binning("square", 0.0, 3.0, 10)
        h = Histogram(b, np.zeros(10, dtype=np.int64), 1000)
        exp = expected_counts(h, norm.pdf)
        assert exp.sum() == pytest.approx(1000 * (2 * norm.cdf(3.0) - 1), rel=1e-9)

    def test_zero_density(self):
        h = Histogram(Binning("uniform", 0.0, 1.0, 5), np.full(5, 10), 50)
        with pytest.raises(InputError):
            chi2_hist(h, lambda x: 0.0)

    def test_doubling(self, rng):
        b = Binning("uniform", -3.0, 3.0, 30)
        h = histogram(rng.standard_normal(5000), b)
        h2 = Histogram(b, 2 * h.counts, 2 * h.total, 2 * h.underflow, 2 * h.overflow)
        # the bin set is held fixed: the expected-count cut would move otherwise
        a = chi2_hist(h, norm.pdf, min_expected=0.0)
        c = chi2_hist(h2, norm.pdf, min_expected=0.0)
        assert c.chi2 == pytest.approx(2 * a.chi2, rel=1e-12)
        assert c.dof == a.dof

    def test_dof_and_thresholds(self, rng):
        b = Binning("uniform", -6.0, 6.0, 24)
        h = histogram(rng.standard_normal(1000), b)
        rep = chi2_hist(h, norm.pdf, min_expected=10)
        exp = expected_counts(h, norm.pdf)
        assert rep.dof == int(np.sum(exp >= 10)) - 1
        ranged = chi2_hist(h, norm.pdf, fit_range=(-1.0, 1.0))
        assert all(-1.0 <= r["bin_lo"] and r["bin_hi"] <= 1.0 for r in ranged.residuals)
        counted = chi2_hist(h, norm.pdf, min_count=60)
        assert all(r["observed"] >= 60 for r in counted.residuals)

    def test_two_sample(self, rng):
        b = Binning("uniform", -3.0, 3.0, 30)
        h_a = histogram(rng.standard_normal(40000), b)
        h_b = histogram(rng.standard_normal(90000), b)
        assert chi2_two_sample(h_a, h_b, min_count=10).chi2_per_dof < 2.0
        # a genuine difference is detected
        h_c = histogram(1.1 * rng.standard_normal(90000), b)
        assert chi2_two_sample(h_a, h_c, min_count=10).chi2_per_dof > 3.0
        with pytest.raises(InputError):
            chi2_two_sample(h_a, histogram(rng.standard_normal(10), Binning("uniform", -3, 3, 31)))

    def test_two_sample_scales(self, rng):
        # densities N^s * P(z) with different s compare equal after rescaling
        b = Binning("uniform", 0.0, 4.0, 20)
        h_a = histogram(np.abs(rng.standard_normal(50000)), b)
        h_b = histogram(np.abs(rng.standard_normal(50000)), b)
        same = chi2_two_sample(h_a, h_b, 3.0, 3.0, min_count=10).chi2
        assert same == pytest.approx(chi2_two_sample(h_a, h_b, min_count=10).chi2, rel=1e-12)


class TestReports:
    def test_roundtrip(self, tmp_path):
        rep = FitReport("x", 3.0, 2, 1.5, 0.01, [{"a": 1}], {"master_seed": 4})
        path = tmp_path / "fit_x.json"
        rep.write(path)
        assert FitReport.read(path) == rep
        d = json.loads(path.read_text())
        del d["dof"]
        with pytest.raises(InputError, match="dof"):
            FitReport.from_dict(d)

    def test_moment_targets(self):
        p = EnsembleParams(2048, 1.5, EPS)
        assert moment_targets(2.0, p) == (pytest.approx(6 / math.pi), "asymptotic")
        assert moment_targets(0.5, p) == (half_moment_prefactor(p), "log-corrected")
        assert moment_targets(0.125, p)[1] == "corrected"

    def test_ratio_table(self):
        p = EnsembleParams(1024, 1.5, EPS)
        emp = MomentSet([MomentEntry(0.0, 1024.0, -1.0, None, None, 0.0),
                         MomentEntry(2.0, 0.06, 0.5, None, None, 1e-4)])
        rows = moment_ratio_table(emp, p).residuals
        assert rows[0]["ratio"] == 1.0
        assert rows[0]["target"] == pytest.approx(1.0, rel=1e-15)
        assert rows[1]["target"] == pytest.approx(6 / math.pi)
        assert rows[1]["ratio"] == pytest.approx(0.06 * 32)
        assert rows[1]["ratio_stderr"] == pytest.approx(1e-4 * 32)


class TestLorentzian:
    def test_recovers_width(self, rng):
        b = Binning("uniform", -0.2, 0.2, 100)
        u = rng.uniform(-0.2, 0.2, 400000)
        width = 0.02
        mean = 1e-4 / (u**2 + width**2)
        w = mean * rng.chisquare(1, size=u.size)
        idx = ((u + 0.2) / 0.4 * 100).astype(int)
        prof = ProfileAccumulator(b, np.bincount(idx, w, 100), np.bincount(idx, minlength=100))
        popt, perr = fit_lorentzian(prof)
        assert abs(popt[2] / width - 1) < 0.05
        assert abs(popt[1]) < 3 * perr[1] + 1e-3

    def test_too_few_bins(self):
        prof = ProfileAccumulator(Binning("uniform", -1.0, 1.0, 10))
        with pytest.raises(InputError):
            fit_lorentzian(prof)
