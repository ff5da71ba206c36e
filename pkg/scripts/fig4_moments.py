"""Finite-size scaling of the eigenvector moments I_q.

Simulates each N (moments only), tabulates I_q * N^tau(q) against the
asymptotic prefactors and the exact finite-N theory, and plots the ratios.

    python scripts/fig4_moments.py --n-list 256 512 1024 2048 --realizations 100
"""
import argparse
import math
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from rpdist.pipeline import ExperimentConfig, run_moments


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--n-list", type=int, nargs="+", default=[256, 512, 1024, 2048])
    ap.add_argument("--q", type=float, nargs="+", default=[0.125, 0.5, 2.0])
    ap.add_argument("--realizations", type=int, default=100)
    ap.add_argument("--gamma", type=float, default=1.5)
    ap.add_argument("--epsilon", type=float, default=1 / math.sqrt(2))
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--workers", type=int, default=os.cpu_count())
    ap.add_argument("--out", default="runs/fig4")
    args = ap.parse_args()

    config = ExperimentConfig(
        gamma_exp=args.gamma, epsilon=args.epsilon, master_seed=args.seed,
        realizations=args.realizations, worker_count=args.workers, out_dir=args.out,
        q_list=tuple(args.q), n_list=args.n_list)
    rows = run_moments(config).residuals

    fig, ax = plt.subplots(figsize=(6, 4))
    for q in args.q:
        sel = sorted((r for r in rows if r["q"] == q), key=lambda r: r["n"])
        ns = [r["n"] for r in sel]
        for r in sel:
            print(f"q={q:<6g} N={r['n']:<5d} ratio {r['ratio']:.4f} +- {r['ratio_stderr']:.4f}"
                  f"  target {r['target']:.4f} ({r['target_kind']})  exact {r['exact_ratio']:.4f}")
        line = ax.errorbar(ns, [r["ratio"] for r in sel], [r["ratio_stderr"] for r in sel],
                           fmt="o", ms=4, label=f"q={q:g}")
        ax.plot(ns, [r["exact_ratio"] for r in sel], "-", color=line[0].get_color(), lw=0.8)
        ax.plot(ns, [r["target"] for r in sel], ":", color=line[0].get_color(), lw=0.8)
    ax.set_xscale("log", base=2)
    ax.set_xlabel("N")
    ax.set_ylabel(r"$I_q\,N^{\tau(q)}$")
    ax.legend()
    fig.tight_layout()
    path = os.path.join(args.out, "fig4_moments.png")
    fig.savefig(path, dpi=150)
    print("wrote", path)


if __name__ == "__main__":
    main()
