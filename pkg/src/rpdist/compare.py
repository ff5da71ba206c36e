"""Goodness-of-fit between simulated statistics and the analytic curves."""
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import curve_fit

from .empirics import Histogram, ScaledSamples
from .errors import AccuracyError, InputError
from .specfun import QuadratureSpec, integrate
from .theory import (
    half_moment_prefactor,
    moment_asymptotic,
    moment_correction,
    scaling_exponent,
    theory_moments,
)

DEFAULT_MIN_EXPECTED = 10.0

_BIN_SPEC = QuadratureSpec(abs_tol=1e-300, rel_tol=1e-10, max_subdivisions=200)


@dataclass
class FitReport:
    name: str = ""
    chi2: float = None
    dof: int = None
    chi2_per_dof: float = None
    ks_distance: float = None
    residuals: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        known = {"name", "chi2", "dof", "chi2_per_dof", "ks_distance", "residuals", "metadata"}
        missing = known - set(d)
        if missing:
            raise InputError(f"fit report is missing fields {sorted(missing)}")
        return cls(**{k: d[k] for k in known})

    def write(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def read(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def ks_distance(samples, cdf):
    """Kolmogorov-Smirnov sup distance between the sample ECDF and ``cdf``."""
    values = samples.values if isinstance(samples, ScaledSamples) else np.asarray(samples)
    values = np.sort(np.ravel(values))
    n = values.size
    if n == 0:
        raise InputError("ks_distance needs at least one sample")
    f = np.asarray(cdf(values), dtype=float)
    upper = np.arange(1, n + 1) / n - f
    lower = f - np.arange(0, n) / n
    return float(max(upper.max(), lower.max()))


def ks_distance_hist(hist, cdf, conditional=False):
    """KS distance evaluated at the bin edges of a histogram.

    A lower bound on the sample-level distance; it falls short by at most the
    largest probability mass ``cdf`` puts in a single bin.  With
    ``conditional`` only samples inside the binned range count and ``cdf``
    is renormalised to that range.
    """
    if hist.total == 0:
        raise InputError("empty histogram")
    edges = hist.binning.edges
    f = np.asarray(cdf(edges), dtype=float)
    cum = np.concatenate([[0], np.cumsum(hist.counts)])
    if conditional:
        if cum[-1] == 0:
            raise InputError("no samples inside the binned range")
        ecdf = cum / cum[-1]
        f = (f - f[0]) / (f[-1] - f[0])
    else:
        ecdf = (hist.underflow + cum) / hist.total
    return float(np.max(np.abs(ecdf - f)))


def expected_counts(hist, density, bins=None):
    """total * integral of ``density`` over each bin (both signs if folded)."""
    edges = hist.binning.edges
    factor = 2.0 if hist.binning.folded else 1.0
    idx = range(hist.binning.bins) if bins is None else bins
    out = np.zeros(hist.binning.bins)
    for k in idx:
        try:
            mass, _ = integrate(lambda t: float(density(t)), edges[k], edges[k + 1], _BIN_SPEC)
        except AccuracyError as exc:
            mass = exc.value
        out[k] = hist.total * factor * mass
    return out


def chi2_hist(hist, density, min_expected=DEFAULT_MIN_EXPECTED, min_count=0,
              fit_range=None, name=""):
    """Pearson chi-square of a histogram against a probability density.

    Bins count when their expected count is at least ``min_expected``, their
    observed count at least ``min_count``, and they lie inside ``fit_range``
    (bounds in the binned coordinate).  dof = qualifying bins - 1.
    """
    edges = hist.binning.edges
    candidates = np.arange(hist.binning.bins)
    if fit_range is not None:
        lo, hi = fit_range
        candidates = candidates[(edges[:-1] >= lo) & (edges[1:] <= hi)]
    expected = expected_counts(hist, density, candidates)
    observed = hist.counts.astype(float)
    keep = np.zeros(hist.binning.bins, dtype=bool)
    keep[candidates] = True
    keep &= expected >= min_expected
    keep &= observed >= min_count
    n_keep = int(keep.sum())
    if n_keep < 2:
        raise InputError("fewer than two bins qualify for the chi-square test")
    resid = (observed - expected)[keep] / np.sqrt(expected[keep])
    chi2 = float(np.sum(resid**2))
    dof = n_keep - 1
    rows = [
        {"bin_lo": float(edges[k]), "bin_hi": float(edges[k + 1]),
         "observed": int(hist.counts[k]), "expected": float(expected[k]),
         "pull": float(r)}
        for k, r in zip(np.flatnonzero(keep), resid)
    ]
    return FitReport(name=name, chi2=chi2, dof=dof, chi2_per_dof=chi2 / dof, residuals=rows,
                     metadata={"binning": hist.binning.to_dict(), "total": hist.total,
                               "min_expected": min_expected, "min_count": min_count,
                               "fit_range": list(fit_range) if fit_range else None})


def chi2_two_sample(h_a, h_b, scale_a=1.0, scale_b=1.0, min_count=0, fit_range=None,
                    name=""):
    """Chi-square between two histograms on identical bins.

    Compares the rescaled densities ``scale * counts / total``; Poisson
    errors from both histograms.  dof = qualifying bins - 1.
    """
    if h_a.binning != h_b.binning:
        raise InputError("two-sample comparison needs identical binning")
    edges = h_a.binning.edges
    keep = (h_a.counts >= min_count) & (h_b.counts >= min_count)
    if fit_range is not None:
        keep &= (edges[:-1] >= fit_range[0]) & (edges[1:] <= fit_range[1])
    n_keep = int(keep.sum())
    if n_keep < 2:
        raise InputError("fewer than two bins qualify for the chi-square test")
    wa = scale_a / h_a.total
    wb = scale_b / h_b.total
    ca = h_a.counts[keep].astype(float)
    cb = h_b.counts[keep].astype(float)
    pulls = (wa * ca - wb * cb) / np.sqrt(wa**2 * ca + wb**2 * cb)
    chi2 = float(np.sum(pulls**2))
    dof = n_keep - 1
    rows = [{"bin_lo": float(edges[k]), "bin_hi": float(edges[k + 1]), "pull": float(p)}
            for k, p in zip(np.flatnonzero(keep), pulls)]
    return FitReport(name=name, chi2=chi2, dof=dof, chi2_per_dof=chi2 / dof, residuals=rows,
                     metadata={"binning": h_a.binning.to_dict(),
                               "totals": [h_a.total, h_b.total],
                               "scales": [scale_a, scale_b], "min_count": min_count})


def moment_targets(q, params):
    """Asymptotic comparison value for I_q * N^tau(q) and its label."""
    if q == 0.5:
        return half_moment_prefactor(params), "log-corrected"
    tau, pref = moment_asymptotic(q, params)
    if -0.5 < q < 0.5:
        return pref * moment_correction(q, params), "corrected"
    return pref, "asymptotic"


def moment_ratio_table(empirical, params, name="moments"):
    """Empirical moments times N^tau(q) against the analytic values.

    Each row carries the bare asymptotic prefactor, the comparison target
    (corrected for |q| < 1/2, log-corrected at q = 1/2), the exact finite-N
    value and the relative deviations.
    """
    qs = empirical.qs()
    theory = theory_moments(qs, params).by_q()
    n = float(params.n)
    rows = []
    for entry in empirical.entries:
        q = entry.q
        if q not in theory:
            raise InputError(f"no theory value for q={q}")
        tau = scaling_exponent(q, params.gamma_exp)
        ratio = entry.value * n**tau
        target, kind = moment_targets(q, params)
        exact_ratio = theory[q].value * n**tau
        row = {
            "q": q, "n": params.n, "tau": tau, "empirical": entry.value,
            "empirical_stderr": entry.stderr, "ratio": ratio,
            "prefactor": theory[q].prefactor, "correction": theory[q].correction,
            "target": target, "target_kind": kind, "exact_ratio": exact_ratio,
            "rel_dev_target": ratio / target - 1.0,
            "rel_dev_exact": ratio / exact_ratio - 1.0,
        }
        if entry.stderr is not None:
            row["ratio_stderr"] = entry.stderr * n**tau
        rows.append(row)
    return FitReport(name=name, residuals=rows,
                     metadata={"n": params.n, "gamma_exp": params.gamma_exp,
                               "epsilon": params.epsilon})


def _lorentzian(u, amplitude, centre, half_width):
    return amplitude / ((u - centre) ** 2 + half_width**2)


def fit_lorentzian(profile, min_count=100):
    """Least-squares Lorentzian fit to a binned Breit-Wigner profile.

    Returns ``(amplitude, centre, half_width)`` and their standard errors.
    Bin errors assume |psi|^2 is locally chi-square with one degree of
    freedom (variance 2 * mean^2).
    """
    u = profile.centers()
    means = profile.means()
    ok = profile.counts >= min_count
    if ok.sum() < 4:
        raise InputError("not enough populated bins for a Lorentzian fit")
    u, means, counts = u[ok], means[ok], profile.counts[ok]
    sigma = math.sqrt(2.0) * means / np.sqrt(counts)
    peak = means.max()
    guess_width = max(np.ptp(u[means > 0.5 * peak]) / 2.0, np.diff(u).min())
    p0 = [peak * guess_width**2, u[np.argmax(means)], guess_width]
    popt, pcov = curve_fit(_lorentzian, u, means, p0=p0, sigma=sigma, absolute_sigma=True)
    popt[2] = abs(popt[2])
    return popt, np.sqrt(np.diag(pcov))
