"""Eigenvector statistics gathered from decompositions.

Everything here is a mergeable accumulator: histograms, moment sums and the
Breit-Wigner profile can be built per realisation and combined afterwards.
Merging in a fixed order gives bit-identical totals however the work was
split up.
"""
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError
from .theory import MomentEntry, MomentSet, NormalizationMode, scaling_exponent


@dataclass(frozen=True)
class EnergyWindow:
    """Which eigenvectors to use.

    ``kind="central"`` keeps ``floor(fraction*N)`` consecutive eigenvalue
    ranks centred on the middle of the spectrum; ``kind="interval"`` keeps
    the eigenvalues inside ``[lo, hi]``.
    """

    kind: str = "central"
    fraction: float = 0.125
    lo: float = None
    hi: float = None

    def __post_init__(self):
        if self.kind == "central":
            if not 0 < self.fraction <= 1:
                raise InputError(f"window fraction must be in (0, 1], got {self.fraction}")
        elif self.kind == "interval":
            if self.lo is None or self.hi is None or not self.lo < self.hi:
                raise InputError("interval window needs lo < hi")
        else:
            raise InputError(f"unknown window kind {self.kind!r}")

    def central_ranks(self, n):
        count = int(np.floor(self.fraction * n))
        start = (n - count) // 2
        return slice(start, start + count)

    def to_dict(self):
        if self.kind == "central":
            return {"kind": "central", "fraction": self.fraction}
        return {"kind": "interval", "lo": self.lo, "hi": self.hi}

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


def select_window(decomp, window):
    """Resolve ``window`` against a sorted decomposition; returns a slice."""
    if window.kind == "central":
        sl = window.central_ranks(decomp.order)
    else:
        lo = int(np.searchsorted(decomp.eigenvalues, window.lo, side="left"))
        hi = int(np.searchsorted(decomp.eigenvalues, window.hi, side="right"))
        sl = slice(lo, hi)
    if sl.stop <= sl.start:
        raise InputError("energy window selects no eigenvalues")
    return sl


@dataclass
class ScaledSamples:
    values: np.ndarray
    mode: NormalizationMode


def collect_components(decomp, window, mode, components=None):
    """Rescaled components ``C * psi_j(E_alpha)`` for alpha in the window.

    The output is ordered eigenvector by eigenvector; ``components`` picks a
    subset of site indices j (default: all).
    """
    sl = select_window(decomp, window)
    block = decomp.eigenvectors[:, sl]
    if components is not None:
        block = block[np.asarray(components)]
    return ScaledSamples(mode.c_value * block.T.ravel(), mode)


# ---------------------------------------------------------------------------
# histograms


@dataclass(frozen=True)
class Binning:
    """``uniform``: equal-width bins on w in [lo, hi).

    ``square``: bins of equal width in w**2, applied to |w| in [lo, hi);
    suited to the fast-decaying tail of the distribution.
    """

    kind: str
    lo: float
    hi: float
    bins: int

    def __post_init__(self):
        if self.kind not in ("uniform", "square"):
            raise InputError(f"unknown binning kind {self.kind!r}")
        if not (np.isfinite(self.lo) and np.isfinite(self.hi) and self.lo < self.hi):
            raise InputError("binning range must be finite with lo < hi")
        if self.kind == "square" and self.lo < 0:
            raise InputError("square binning acts on |w| and needs lo >= 0")
        if int(self.bins) < 1:
            raise InputError("binning needs at least one bin")

    @property
    def folded(self):
        return self.kind == "square"

    @property
    def edges(self):
        if self.kind == "uniform":
            return np.linspace(self.lo, self.hi, self.bins + 1)
        return np.sqrt(np.linspace(self.lo**2, self.hi**2, self.bins + 1))

    def scaled(self, factor):
        """Same bins expressed in a coordinate multiplied by ``factor`` > 0."""
        return Binning(self.kind, self.lo * factor, self.hi * factor, self.bins)

    def to_dict(self):
        return {"kind": self.kind, "lo": self.lo, "hi": self.hi, "bins": self.bins}

    @classmethod
    def from_dict(cls, d):
        return cls(d["kind"], float(d["lo"]), float(d["hi"]), int(d["bins"]))


def default_bulk_binning(epsilon):
    return Binning("uniform", -8.0 * epsilon, 8.0 * epsilon, 160)


def default_tail_binning(params, bins=100, reach=0.8):
    zmax = float(params.n) ** (1.0 - params.gamma_exp / 2.0)
    return Binning("square", 0.0, reach * zmax, bins)


@dataclass
class Histogram:
    binning: Binning
    counts: np.ndarray
    total: int = 0
    underflow: int = 0
    overflow: int = 0

    @classmethod
    def empty(cls, binning):
        return cls(binning, np.zeros(binning.bins, dtype=np.int64))

    def density(self):
        """Counts per sample per unit width (density of |w| if folded)."""
        return self.counts / (self.total * np.diff(self.binning.edges))

    def centers(self):
        e = self.binning.edges
        return 0.5 * (e[:-1] + e[1:])


def histogram(samples, binning):
    values = samples.values if isinstance(samples, ScaledSamples) else np.asarray(samples)
    b = binning
    if b.kind == "uniform":
        pos = (values - b.lo) / (b.hi - b.lo) * b.bins
    else:
        values = np.abs(values)
        pos = (values**2 - b.lo**2) / (b.hi**2 - b.lo**2) * b.bins
    under = values < b.lo
    over = values >= b.hi
    inside = ~(under | over)
    idx = np.minimum(pos[inside].astype(np.int64), b.bins - 1)
    counts = np.bincount(idx, minlength=b.bins).astype(np.int64)
    return Histogram(b, counts, int(values.size), int(under.sum()), int(over.sum()))


def merge_hist(h_a, h_b):
    if h_a.binning != h_b.binning:
        raise InputError("cannot merge histograms with different binning")
    return Histogram(h_a.binning, h_a.counts + h_b.counts, h_a.total + h_b.total,
                     h_a.underflow + h_b.underflow, h_a.overflow + h_b.overflow)


# ---------------------------------------------------------------------------
# moments


@dataclass
class MomentAccumulator:
    """Running sums of sum_j |psi_j|^(2q) over eigenvectors, per q."""

    q_list: tuple
    sums: np.ndarray
    sum_sq: np.ndarray
    count: int = 0

    @classmethod
    def empty(cls, q_list):
        q_list = tuple(float(q) for q in q_list)
        return cls(q_list, np.zeros(len(q_list)), np.zeros(len(q_list)), 0)

    def estimates(self):
        return self.sums / self.count

    def stderr(self):
        mean = self.estimates()
        var = np.maximum(self.sum_sq / self.count - mean**2, 0.0)
        return np.sqrt(var / max(self.count - 1, 1))

    def to_moment_set(self, params):
        entries = [
            MomentEntry(q, float(v), scaling_exponent(q, params.gamma_exp), None, None, float(s))
            for q, v, s in zip(self.q_list, self.estimates(), self.stderr())
        ]
        return MomentSet(entries)


def accumulate_moments(decomp, window, q_list, acc=None):
    """Add the window's eigenvectors (unit normalisation) to an accumulator."""
    if any(q <= -0.5 for q in q_list):
        raise InputError("moments need q > -1/2")
    acc = acc or MomentAccumulator.empty(q_list)
    if acc.q_list != tuple(float(q) for q in q_list):
        raise InputError("accumulator was built for a different q list")
    sl = select_window(decomp, window)
    sq = decomp.eigenvectors[:, sl] ** 2
    sums = acc.sums.copy()
    sum_sq = acc.sum_sq.copy()
    for k, q in enumerate(acc.q_list):
        per_vector = np.sum(sq**q, axis=0)
        sums[k] += per_vector.sum()
        sum_sq[k] += np.dot(per_vector, per_vector)
    return MomentAccumulator(acc.q_list, sums, sum_sq, acc.count + sq.shape[1])


def merge(acc_a, acc_b):
    if acc_a.q_list != acc_b.q_list:
        raise InputError("cannot merge accumulators with different q lists")
    return MomentAccumulator(acc_a.q_list, acc_a.sums + acc_b.sums,
                             acc_a.sum_sq + acc_b.sum_sq, acc_a.count + acc_b.count)


# ---------------------------------------------------------------------------
# Breit-Wigner profile


@dataclass
class ProfileAccumulator:
    """Binned sums of |psi_j(E)|^2 against the detuning E - e_j."""

    binning: Binning
    sums: np.ndarray = field(default=None)
    counts: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.binning.kind != "uniform":
            raise InputError("profile needs uniform binning")
        if self.sums is None:
            self.sums = np.zeros(self.binning.bins)
        if self.counts is None:
            self.counts = np.zeros(self.binning.bins, dtype=np.int64)

    def means(self):
        with np.errstate(invalid="ignore", divide="ignore"):
            return self.sums / self.counts

    def centers(self):
        e = self.binning.edges
        return 0.5 * (e[:-1] + e[1:])


def accumulate_profile(decomp, diagonal, window, acc):
    """Add |psi_j(E_alpha)|^2 binned by E_alpha - H_jj for the window."""
    sl = select_window(decomp, window)
    b = acc.binning
    detuning = decomp.eigenvalues[sl][None, :] - np.asarray(diagonal)[:, None]
    weight = decomp.eigenvectors[:, sl] ** 2
    pos = (detuning - b.lo) / (b.hi - b.lo) * b.bins
    inside = (detuning >= b.lo) & (detuning < b.hi)
    idx = np.minimum(pos[inside].astype(np.int64), b.bins - 1)
    sums = acc.sums + np.bincount(idx, weights=weight[inside], minlength=b.bins)
    counts = acc.counts + np.bincount(idx, minlength=b.bins)
    return ProfileAccumulator(b, sums, counts)


def merge_profile(p_a, p_b):
    if p_a.binning != p_b.binning:
        raise InputError("cannot merge profiles with different binning")
    return ProfileAccumulator(p_a.binning, p_a.sums + p_b.sums, p_a.counts + p_b.counts)
