"""Bias of the LNC estimator against the Gaussian closed form over a range of alpha."""
import argparse
import math

import numpy as np

from skgsim.mi import gaussian_mi_oracle, mi_lnc


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=5000)
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--k", type=int, default=5)
    args = ap.parse_args()
    alphas = (0.0, 0.1, 0.25, 0.5, 0.75)
    rhos = (0.0, 0.5, 0.9, 0.99, 0.999)
    print("rho     " + "".join(f"a={a:<8g}" for a in alphas))
    for rho in rhos:
        bias = np.zeros(len(alphas))
        for s in range(args.seeds):
            rng = np.random.default_rng([s, int(rho * 1000)])
            a = rng.standard_normal(args.n)
            b = rho * a + math.sqrt(1 - rho ** 2) * rng.standard_normal(args.n)
            bias += [mi_lnc(a, b, args.k, al, seed=s).nats for al in alphas]
        bias = bias / args.seeds - gaussian_mi_oracle(rho)
        print(f"{rho:<8g}" + "".join(f"{v:+.4f}   " for v in bias))


if __name__ == "__main__":
    main()
