"""Sweep the two matrix weights on the two-matrix task and report type-A NMI."""

import argparse

import numpy as np

from relembed.experiments import two_matrix_run


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=3)
    ap.add_argument("--grid", type=float, nargs="+", default=[0.0, 0.25, 0.5, 0.75, 1.0])
    args = ap.parse_args()
    print("alpha_ab alpha_ac nmi4 nmi_ab nmi_ac  (medians over seeds)")
    for a_ab in args.grid:
        for a_ac in args.grid:
            if a_ab == a_ac == 0.0:
                continue
            runs = [two_matrix_run(seed=s, alphas=(a_ab, a_ac)) for s in range(args.seeds)]
            med = [np.median([getattr(r, k) for r in runs]) for k in ("nmi_four", "nmi_ab", "nmi_ac")]
            print(f"{a_ab:.2f} {a_ac:.2f} " + " ".join(f"{x:.3f}" for x in med))


if __name__ == "__main__":
    main()
