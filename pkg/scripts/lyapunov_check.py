"""Derive the Lyapunov constants for unit coefficients and stress them on random trajectories.

Reports the constants, the worst residual of each inequality and the
fitted uniform decay rate next to the Gronwall rate eps^2 / 2.
"""
import argparse

import numpy as np

from stabilyze import dynamics
from stabilyze.modal import LogGrid, SystemParams, timoshenko_block


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--alpha0", type=float, default=1.0)
    ap.add_argument("--probes", type=int, default=1000)
    ap.add_argument("--t-max", type=float, default=50.0)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    p = SystemParams()
    k = dynamics.lyapunov_constants(p, args.alpha0)
    print(f"C1={k.C1:g} C2={k.C2:g} C3={k.C3:g} eps={k.eps:.6g} M={k.M_const:g} nu={k.nu:.6g}")

    rng = np.random.default_rng(args.seed)
    times = np.linspace(0.0, args.t_max, 101)
    worst = np.zeros(6)
    for _ in range(args.probes):
        b = timoshenko_block(p, float(args.alpha0 * 10 ** rng.uniform(0, 8)))
        u = rng.standard_normal(5)
        z0 = b.from_energy(u / np.linalg.norm(u))
        r = dynamics.lyapunov_residuals(p, b, z0, times, k)
        worst = np.maximum(worst, [r.lemma1, r.lemma2, r.lemma3, r.combined, r.equivalence, r.gronwall])
    for name, v in zip(("lemma1", "lemma2", "lemma3", "combined", "equivalence", "gronwall"), worst):
        print(f"{name:>12}: worst violation {v:.3e}")

    fit = dynamics.decay_rate_fit(p, LogGrid(args.alpha0, args.alpha0 * 1e4, 9), None, np.linspace(0, 1e3, 1001))
    print(f"fitted kappa={fit.kappa:.6g}  K={fit.K:.4g}  Gronwall rate={k.eps ** 2 / 2:.3g}")


if __name__ == "__main__":
    main()
