"""Experiment orchestration: configuration, realisation farming, persistence.

Realisations are independent given ``(master_seed, index)``.  They are
mapped over a process pool in contiguous chunks and reduced in index order,
so the merged result does not depend on the worker count.
"""
import csv
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import partial

import numpy as np

from . import theory
from .compare import (
    FitReport,
    chi2_hist,
    chi2_two_sample,
    fit_lorentzian,
    ks_distance_hist,
    moment_ratio_table,
)
from .eigensolve import eigh
from .empirics import (
    Binning,
    EnergyWindow,
    Histogram,
    MomentAccumulator,
    ProfileAccumulator,
    accumulate_moments,
    accumulate_profile,
    collect_components,
    default_bulk_binning,
    default_tail_binning,
    histogram,
    merge,
    merge_hist,
    merge_profile,
)
from .ensemble import EnsembleParams, sample_matrix
from .errors import ConvergenceError, InputError

MAX_FAILURE_FRACTION = 0.01
RAW_DUMP_MAX_N = 256
CURVES = ("center", "bulk", "tail", "general")


class NumericalFailure(RuntimeError):
    """Too many realisations failed to produce a decomposition."""


class ThresholdViolation(RuntimeError):
    """A goodness-of-fit metric exceeded its configured threshold."""


@dataclass
class HistogramSpec:
    mode: str
    binning: Binning = None

    def to_dict(self):
        return {"mode": self.mode,
                "binning": self.binning.to_dict() if self.binning else None}

    @classmethod
    def from_dict(cls, d):
        binning = d.get("binning")
        return cls(d["mode"], Binning.from_dict(binning) if binning else None)


def _default_histograms():
    return {"bulk": HistogramSpec("bulk"), "tail": HistogramSpec("tail")}


@dataclass
class ExperimentConfig:
    n: int = 1024
    gamma_exp: float = 1.5
    epsilon: float = 1.0 / math.sqrt(2.0)
    master_seed: int = 0
    realizations: int = 200
    window: EnergyWindow = field(default_factory=EnergyWindow)
    histograms: dict = field(default_factory=_default_histograms)
    q_list: tuple = (0.0, 0.125, 0.5, 1.0, 2.0, 3.0)
    components: list = None
    profile: Binning = None
    n_list: list = None
    worker_count: int = 1
    out_dir: str = "out"
    backend: str = "lapack"
    thresholds: dict = field(default_factory=lambda: {"chi2_per_dof_max": 2.0, "ks_max": 0.02})
    raw_dump: bool = False

    def __post_init__(self):
        self.params  # validates
        if int(self.realizations) < 1:
            raise InputError("realizations must be positive")
        if int(self.worker_count) < 1:
            raise InputError("worker_count must be positive")
        for name, spec in self.histograms.items():
            if spec.mode not in theory.MODES:
                raise InputError(f"histogram {name!r}: unknown mode {spec.mode!r}")
        if self.raw_dump and self.n > RAW_DUMP_MAX_N:
            raise InputError(f"raw eigenvector dumps are limited to N <= {RAW_DUMP_MAX_N}")

    @property
    def params(self):
        return EnsembleParams(int(self.n), float(self.gamma_exp), float(self.epsilon),
                              int(self.master_seed))

    def for_n(self, n):
        d = self.to_dict()
        d["n"] = int(n)
        return ExperimentConfig.from_dict(d)

    def binning_for(self, name):
        spec = self.histograms[name]
        if spec.binning is not None:
            return spec.binning
        params = self.params
        if spec.mode == "tail":
            return default_tail_binning(params)
        bulk = default_bulk_binning(self.epsilon)
        c_bulk = theory.normalization_constant("bulk", self.n, self.gamma_exp)
        c = theory.normalization_constant(spec.mode, self.n, self.gamma_exp)
        return bulk if spec.mode == "bulk" else bulk.scaled(c / c_bulk)

    def to_dict(self):
        d = asdict(self)
        d["window"] = self.window.to_dict()
        d["histograms"] = {k: v.to_dict() for k, v in self.histograms.items()}
        d["profile"] = self.profile.to_dict() if self.profile else None
        d["q_list"] = [float(q) for q in self.q_list]
        return d

    @classmethod
    def from_dict(cls, d):
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise InputError(f"unknown config keys {sorted(unknown)}")
        d = dict(d)
        if "window" in d:
            d["window"] = EnergyWindow.from_dict(d["window"])
        if "histograms" in d:
            d["histograms"] = {k: HistogramSpec.from_dict(v) for k, v in d["histograms"].items()}
        if d.get("profile"):
            d["profile"] = Binning.from_dict(d["profile"])
        if "q_list" in d:
            d["q_list"] = tuple(float(q) for q in d["q_list"])
        try:
            return cls(**d)
        except TypeError as exc:
            raise InputError(str(exc)) from exc

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path):
        try:
            with open(path) as fh:
                return cls.from_dict(json.load(fh))
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: not valid JSON ({exc})") from exc


# ---------------------------------------------------------------------------
# simulation


@dataclass
class SimulationResult:
    config: ExperimentConfig
    histograms: dict
    moments: MomentAccumulator
    profile: ProfileAccumulator = None
    failures: list = field(default_factory=list)
    wall_time: float = 0.0


def _empty_result(config):
    hists = {name: Histogram.empty(config.binning_for(name)) for name in config.histograms}
    profile = ProfileAccumulator(config.profile) if config.profile else None
    return SimulationResult(config, hists, MomentAccumulator.empty(config.q_list), profile)


def realize(config, index):
    """All statistics of one realisation, as a SimulationResult."""
    params = config.params
    result = _empty_result(config)
    matrix = sample_matrix(params, index)
    try:
        decomp = eigh(matrix, backend=config.backend)
    except ConvergenceError:
        result.failures.append(int(index))
        return result
    for name, spec in config.histograms.items():
        mode = theory.NormalizationMode.of(spec.mode, params)
        samples = collect_components(decomp, config.window, mode, config.components)
        result.histograms[name] = histogram(samples, result.histograms[name].binning)
    result.moments = accumulate_moments(decomp, config.window, config.q_list)
    if result.profile is not None:
        result.profile = accumulate_profile(decomp, matrix.diagonal(), config.window,
                                            result.profile)
    if config.raw_dump:
        os.makedirs(config.out_dir, exist_ok=True)
        np.savetxt(os.path.join(config.out_dir, f"raw_{index:06d}.csv"),
                   np.column_stack([decomp.eigenvalues, decomp.eigenvectors.T]),
                   delimiter=",", fmt="%.17g")
    return result


def _combine(a, b):
    hists = {k: merge_hist(a.histograms[k], b.histograms[k]) for k in a.histograms}
    profile = merge_profile(a.profile, b.profile) if a.profile is not None else None
    return SimulationResult(a.config, hists, merge(a.moments, b.moments), profile,
                            a.failures + b.failures)


def _realize_chunk(config, indices):
    return [realize(config, i) for i in indices]


def simulate(config):
    """Run every realisation and reduce in realisation-index order."""
    start = time.perf_counter()
    indices = list(range(int(config.realizations)))
    workers = int(config.worker_count)
    if workers == 1:
        parts = (realize(config, i) for i in indices)
    else:
        chunk = max(1, math.ceil(len(indices) / (4 * workers)))
        chunks = [indices[i:i + chunk] for i in range(0, len(indices), chunk)]
        pool = ProcessPoolExecutor(max_workers=workers)
        parts = (r for batch in pool.map(partial(_realize_chunk, config), chunks) for r in batch)
    total = _empty_result(config)
    try:
        for part in parts:
            total = _combine(total, part)
    finally:
        if workers > 1:
            pool.shutdown()
    if len(total.failures) > MAX_FAILURE_FRACTION * len(indices):
        raise NumericalFailure(
            f"{len(total.failures)} of {len(indices)} realisations failed to converge")
    total.wall_time = time.perf_counter() - start
    return total


# ---------------------------------------------------------------------------
# persistence


def _fmt(x):
    return format(float(x), ".17g")


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _read_csv(path, expected):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[:len(expected)] != list(expected):
            raise InputError(f"{path}: expected columns {expected}, found {header}")
        return [row for row in reader]


def _update_meta(out_dir, section, payload):
    path = os.path.join(out_dir, "meta.json")
    meta = {}
    if os.path.exists(path):
        with open(path) as fh:
            meta = json.load(fh)
    meta[section] = payload
    with open(path, "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return meta


def read_meta(out_dir):
    path = os.path.join(out_dir, "meta.json")
    if not os.path.exists(path):
        raise InputError(f"{out_dir}: no meta.json")
    with open(path) as fh:
        return json.load(fh)


def write_result(result, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    config = result.config
    hist_meta = {}
    for name, hist in result.histograms.items():
        edges = hist.binning.edges
        _write_csv(os.path.join(out_dir, f"hist_{name}.csv"), ["bin_lo", "bin_hi", "count"],
                   [[_fmt(lo), _fmt(hi), int(c)]
                    for lo, hi, c in zip(edges[:-1], edges[1:], hist.counts)])
        mode = config.histograms[name].mode
        hist_meta[name] = {
            "mode": mode,
            "C": theory.normalization_constant(mode, config.n, config.gamma_exp),
            "binning": hist.binning.to_dict(), "total": hist.total,
            "underflow": hist.underflow, "overflow": hist.overflow,
        }
    acc = result.moments
    _write_csv(os.path.join(out_dir, "moments.csv"), ["q", "sum", "count", "sum_sq"],
               [[_fmt(q), _fmt(s), acc.count, _fmt(s2)]
                for q, s, s2 in zip(acc.q_list, acc.sums, acc.sum_sq)])
    if result.profile is not None:
        edges = result.profile.binning.edges
        _write_csv(os.path.join(out_dir, "profile.csv"), ["bin_lo", "bin_hi", "sum", "count"],
                   [[_fmt(lo), _fmt(hi), _fmt(s), int(c)] for lo, hi, s, c in
                    zip(edges[:-1], edges[1:], result.profile.sums, result.profile.counts)])
    _update_meta(out_dir, "sample", {
        "config": config.to_dict(),
        "master_seed": config.master_seed,
        "failure_count": len(result.failures),
        "failures": result.failures,
        "histograms": hist_meta,
        "eigenvectors": acc.count,
        "profile": config.profile.to_dict() if config.profile else None,
        "wall_time_s": result.wall_time,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
    })


def load_result(out_dir):
    """Rebuild a SimulationResult from files written by :func:`write_result`."""
    meta = read_meta(out_dir)
    if "sample" not in meta:
        raise InputError(f"{out_dir}: meta.json has no sample section")
    sample = meta["sample"]
    config = ExperimentConfig.from_dict(sample["config"])
    hists = {}
    for name, info in sample["histograms"].items():
        binning = Binning.from_dict(info["binning"])
        rows = _read_csv(os.path.join(out_dir, f"hist_{name}.csv"),
                         ("bin_lo", "bin_hi", "count"))
        if len(rows) != binning.bins:
            raise InputError(f"hist_{name}.csv: {len(rows)} rows, binning says {binning.bins}")
        counts = np.array([int(r[2]) for r in rows], dtype=np.int64)
        hists[name] = Histogram(binning, counts, int(info["total"]), int(info["underflow"]),
                                int(info["overflow"]))
    rows = _read_csv(os.path.join(out_dir, "moments.csv"), ("q", "sum", "count"))
    q_list = tuple(float(r[0]) for r in rows)
    acc = MomentAccumulator(q_list, np.array([float(r[1]) for r in rows]),
                            np.array([float(r[3]) if len(r) > 3 else 0.0 for r in rows]),
                            int(rows[0][2]) if rows else 0)
    profile = None
    if sample.get("profile"):
        rows = _read_csv(os.path.join(out_dir, "profile.csv"), ("bin_lo", "bin_hi", "sum", "count"))
        profile = ProfileAccumulator(Binning.from_dict(sample["profile"]),
                                     np.array([float(r[2]) for r in rows]),
                                     np.array([int(r[3]) for r in rows], dtype=np.int64))
    return SimulationResult(config, hists, acc, profile, list(sample["failures"]),
                            float(sample.get("wall_time_s", 0.0)))


def run_sample(config, out_dir=None):
    result = simulate(config)
    write_result(result, out_dir or config.out_dir)
    return result


# ---------------------------------------------------------------------------
# theory curves


def default_grid(config, curve):
    """Abscissae for a curve; ``center``/``general`` span the whole support."""
    params = config.params
    if curve == "bulk":
        return np.linspace(-8 * config.epsilon, 8 * config.epsilon, 401)
    if curve == "tail":
        return np.linspace(0.05, 5.0, 200)
    ctx = theory.TheoryContext.build(params, "bulk")
    scale = math.sqrt(ctx.a_const)
    reach = 12.0 * scale / ctx.delta + 10.0 * scale
    t = np.linspace(-math.asinh(reach / scale * 4.0), math.asinh(reach / scale * 4.0), 4001)
    return scale / 4.0 * np.sinh(t)


def theory_curve(config, curve, grid=None, mode="bulk", energy=0.0):
    """``(abscissa, density, metadata)`` for one analytic curve.

    ``center`` and ``general`` are in the requested normalisation mode;
    ``bulk`` is the Cauchy law in y; ``tail`` is N^(gamma-1) * P(z).
    """
    params = config.params
    if curve not in CURVES:
        raise InputError(f"unknown curve {curve!r}; choose from {CURVES}")
    if grid is None:
        grid = default_grid(config, curve)
        if curve in ("center", "general") and mode != "bulk":
            c = theory.normalization_constant(mode, config.n, config.gamma_exp)
            grid = grid * c / theory.normalization_constant("bulk", config.n, config.gamma_exp)
    grid = np.asarray(grid, dtype=float)
    if not np.all(np.isfinite(grid)):
        raise InputError("grid must be finite")
    ctx = theory.TheoryContext.build(params, "tail" if curve == "tail" else
                                     ("bulk" if curve == "bulk" else mode),
                                     energy if curve == "general" else 0.0)
    if curve == "center":
        dens = theory.distribution_center(grid, ctx)
    elif curve == "general":
        dens = theory.distribution_general(grid, energy, ctx)
    elif curve == "bulk":
        dens = theory.distribution_bulk(grid, config.epsilon)
    else:
        if config.gamma_exp >= 2:
            raise theory.DomainError("the tail law exists only for gamma_exp < 2")
        dens = theory.tail_scaled(grid, config.epsilon)
    meta = ctx.as_dict()
    meta["curve"] = curve
    if curve == "tail":
        meta["density_column"] = "N^(gamma-1) * P(z)"
    return grid, dens, meta


def run_theory(config, curve, grid=None, mode="bulk", energy=0.0, out_dir=None):
    out_dir = out_dir or config.out_dir
    os.makedirs(out_dir, exist_ok=True)
    x, dens, meta = theory_curve(config, curve, grid, mode, energy)
    _write_csv(os.path.join(out_dir, f"curve_{curve}.csv"), ["abscissa", "density"],
               [[_fmt(a), _fmt(b)] for a, b in zip(x, dens)])
    full = read_meta(out_dir) if os.path.exists(os.path.join(out_dir, "meta.json")) else {}
    curves = full.get("theory", {})
    curves[curve] = dict(meta, master_seed=config.master_seed)
    _update_meta(out_dir, "theory", curves)
    return x, dens, meta


# ---------------------------------------------------------------------------
# moments across N

MOMENT_COLUMNS = ["n", "q", "tau", "empirical", "empirical_stderr", "ratio", "ratio_stderr",
                  "exact_ratio", "prefactor", "correction", "target", "target_kind",
                  "rel_dev_target", "rel_dev_exact"]


def run_moments(config, data_dirs=None, out_dir=None):
    """Moment ratios I_q * N^tau(q) for every N in ``config.n_list``.

    Uses existing sample outputs from ``data_dirs`` when given, otherwise
    simulates each N (moments only) in-line.
    """
    out_dir = out_dir or config.out_dir
    os.makedirs(out_dir, exist_ok=True)
    rows = []
    if data_dirs:
        results = [load_result(d) for d in data_dirs]
    else:
        results = []
        for n in (config.n_list or [config.n]):
            cfg = config.for_n(n)
            cfg.histograms = {}
            results.append(simulate(cfg))
    for res in results:
        missing = [q for q in config.q_list if q not in res.moments.q_list]
        if missing:
            raise InputError(f"sample data for N={res.config.n} lacks q={missing}")
        params = res.config.params
        emp = res.moments.to_moment_set(params)
        emp.entries = [e for e in emp.entries if e.q in config.q_list]
        report = moment_ratio_table(emp, params)
        rows.extend(report.residuals)
    _write_csv(os.path.join(out_dir, "moments_table.csv"), MOMENT_COLUMNS,
               [[r.get(c) if not isinstance(r.get(c), float) else _fmt(r[c])
                 for c in MOMENT_COLUMNS] for r in rows])
    report = FitReport(name="moments", residuals=rows,
                       metadata={"config": config.to_dict(),
                                 "n_list": [r.config.n for r in results]})
    report.write(os.path.join(out_dir, "fit_moments.json"))
    return report


# ---------------------------------------------------------------------------
# comparison


def tail_fit_range(binning, n, gamma_exp, cut=0.9):
    """Fit window for the tail law: drop the bin touching z = 0 (the law is
    not integrable there) and everything above ``cut`` times the largest
    possible component N^(1-gamma/2)."""
    edges = binning.edges
    zmax = float(n) ** (1.0 - gamma_exp / 2.0)
    lo = edges[1] if edges[0] == 0 else edges[0]
    return lo, min(edges[-1], cut * zmax)


def compare_result(result, min_expected=10.0):
    """FitReports for every histogram (and profile) of a simulation."""
    config = result.config
    params = config.params
    base_meta = {"config": config.to_dict(), "master_seed": config.master_seed}
    reports = []
    for name, hist in result.histograms.items():
        mode = config.histograms[name].mode
        ctx = theory.TheoryContext.build(params, mode)
        rep = chi2_hist(hist, lambda w: theory.distribution_center(w, ctx),
                        min_expected=min_expected, name=f"{name}_center")
        if not hist.binning.folded:
            c = ctx.mode.c_value / theory.normalization_constant("bulk", config.n, config.gamma_exp)
            rep.ks_distance = ks_distance_hist(
                hist, lambda w: theory.bulk_cdf(w / c, config.epsilon))
        rep.metadata.update(base_meta)
        reports.append(rep)
        if mode == "tail" and config.gamma_exp < 2:
            rng = tail_fit_range(hist.binning, config.n, config.gamma_exp)
            rep = chi2_hist(hist, lambda z: theory.distribution_tail(z, ctx),
                            min_expected=min_expected, fit_range=rng, name=f"{name}_tail_law")
            rep.metadata.update(base_meta)
            reports.append(rep)
    if result.profile is not None:
        popt, perr = fit_lorentzian(result.profile)
        width = float(theory.spreading_width(0.0, params))
        reports.append(FitReport(
            name="profile", residuals=[{"amplitude": popt[0], "centre": popt[1],
                                        "half_width": popt[2], "half_width_err": perr[2],
                                        "predicted_half_width": width,
                                        "rel_dev": popt[2] / width - 1.0}],
            metadata=base_meta))
    return reports


def compare_pair(result_a, result_b, name, min_count=50):
    """Two-sample chi-square of histogram ``name`` in its N-free rescaling."""
    ha, hb = result_a.histograms.get(name), result_b.histograms.get(name)
    if ha is None or hb is None:
        raise InputError(f"histogram {name!r} missing from one of the inputs")
    mode = result_a.config.histograms[name].mode
    scale = (lambda cfg: float(cfg.n) ** (cfg.gamma_exp - 1.0)) if mode == "tail" else \
        (lambda cfg: 1.0)
    fit_range = None
    if mode == "tail":
        # same window as the single-N tail fits, taken at the smaller N; the
        # bin at z = 0 holds the bulk, which does not follow the tail scaling
        small = min(result_a.config, result_b.config, key=lambda cfg: cfg.n)
        fit_range = tail_fit_range(ha.binning, small.n, small.gamma_exp)
    rep = chi2_two_sample(ha, hb, scale(result_a.config), scale(result_b.config),
                          min_count=min_count, fit_range=fit_range, name=f"{name}_pair")
    rep.metadata["n"] = [result_a.config.n, result_b.config.n]
    return rep


def violations(reports, thresholds):
    bad = []
    chi_max = thresholds.get("chi2_per_dof_max")
    ks_max = thresholds.get("ks_max")
    for rep in reports:
        if chi_max is not None and rep.chi2_per_dof is not None and rep.chi2_per_dof > chi_max:
            bad.append(f"{rep.name}: chi2/dof {rep.chi2_per_dof:.3g} > {chi_max}")
        if ks_max is not None and rep.ks_distance is not None and rep.ks_distance > ks_max:
            bad.append(f"{rep.name}: KS {rep.ks_distance:.3g} > {ks_max}")
    return bad


def run_compare(config, data_dirs, out_dir=None):
    """Write fit_<name>.json for each input; returns (reports, violations)."""
    out_dir = out_dir or config.out_dir
    os.makedirs(out_dir, exist_ok=True)
    results = [load_result(d) for d in data_dirs]
    reports = []
    for res in results:
        for rep in compare_result(res):
            if len(results) > 1:
                rep.name = f"{rep.name}_n{res.config.n}"
            reports.append(rep)
    for i in range(len(results)):
        for j in range(i + 1, len(results)):
            for name in results[i].histograms:
                if results[i].histograms[name].binning.folded:
                    reports.append(compare_pair(results[i], results[j], name))
                    reports[-1].name += f"_n{results[i].config.n}_n{results[j].config.n}"
    for rep in reports:
        rep.write(os.path.join(out_dir, f"fit_{rep.name}.json"))
    return reports, violations(reports, config.thresholds)
