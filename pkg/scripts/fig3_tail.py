"""Collapse of the tail distribution across system sizes.

For each N the scaled component z = N^(1 - gamma/2) * psi is histogrammed on a
common square binning; N^(gamma-1) P(z) should fall on the K-Bessel tail law.

    python scripts/fig3_tail.py --n-list 512 1024 2048 --realizations 400 200 100
"""
import argparse
import math
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from rpdist.compare import chi2_hist
from rpdist.empirics import Binning
from rpdist.pipeline import ExperimentConfig, HistogramSpec, run_sample, tail_fit_range
from rpdist.theory import tail_scaled


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--n-list", type=int, nargs="+", default=[512, 1024, 2048])
    ap.add_argument("--realizations", type=int, nargs="+", default=[400, 200, 100])
    ap.add_argument("--gamma", type=float, default=1.5)
    ap.add_argument("--epsilon", type=float, default=1 / math.sqrt(2))
    ap.add_argument("--bins", type=int, default=100)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--workers", type=int, default=os.cpu_count())
    ap.add_argument("--out", default="runs/fig3")
    args = ap.parse_args()
    if len(args.realizations) != len(args.n_list):
        ap.error("--realizations needs one value per N")

    g, eps = args.gamma, args.epsilon
    binning = Binning("square", 0.0, 0.8 * min(args.n_list) ** (1 - g / 2), args.bins)
    fig, ax = plt.subplots(figsize=(6, 4))
    for n, reps in zip(args.n_list, args.realizations):
        config = ExperimentConfig(
            n=n, gamma_exp=g, epsilon=eps, master_seed=args.seed, realizations=reps,
            worker_count=args.workers, out_dir=os.path.join(args.out, f"n{n}"),
            histograms={"tail": HistogramSpec("tail", binning)}, q_list=(0.0,))
        hist = run_sample(config).histograms["tail"]
        scale = n ** (g - 1)
        rep = chi2_hist(hist, lambda z: tail_scaled(z, eps) / scale, min_expected=0.0,
                        min_count=50, fit_range=tail_fit_range(binning, n, g))
        print(f"N={n} R={reps}: chi2/dof vs tail law {rep.chi2_per_dof:.2f} ({rep.dof} dof)")
        # the histogram is of |z|; halve it to compare with the density of z
        ok = hist.counts > 0
        ax.loglog(hist.centers()[ok], 0.5 * scale * hist.density()[ok], ".", ms=3, label=f"N={n}")
    z = np.geomspace(binning.edges[1] / 2, binning.hi, 400)
    ax.loglog(z, tail_scaled(z, eps), "k-", lw=1, label="tail law")
    ax.set_xlabel(r"$z$")
    ax.set_ylabel(r"$N^{\gamma-1} P(z)$")
    ax.legend()
    fig.tight_layout()
    path = os.path.join(args.out, "fig3_tail.png")
    fig.savefig(path, dpi=150)
    print("wrote", path)


if __name__ == "__main__":
    main()
