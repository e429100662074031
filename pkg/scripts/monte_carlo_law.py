"""Empirical vs analytic joint covariance of the smoothed residuals.

Default model: scalar random walk (B = Q = Z = R = Lambda = 1, T = 3) with
the middle observation held out.

    python scripts/monte_carlo_law.py --sims 10000
"""

import argparse

import numpy as np

from marssresid.model import ModelSpec, ObservationSet
from marssresid.oracle import monte_carlo_check
from marssresid.smoothations import residual_report


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sims", type=int, default=10_000)
    parser.add_argument("--seed", type=int, default=1)
    args = parser.parse_args()

    spec = ModelSpec(B=[[1.0]], u=[0.0], Q=[[1.0]], Z=[[1.0]], a=[0.0], R=[[1.0]],
                     xi=[0.0], Lambda=[[1.0]], horizon=3)
    mask = np.array([[True, False, True]])
    rep = residual_report(spec, ObservationSet(np.zeros((1, 3)), mask))
    mc = monte_carlo_check(spec, mask, args.sims, seed=args.seed)
    np.set_printoptions(precision=4, suppress=True)
    for i in range(spec.horizon):
        print(f"t={i + 1} ({'observed' if mask[0, i] else 'held out'})")
        print("  analytic  ", rep.sigma_contemp[i].ravel())
        print("  empirical ", mc.cov[i].ravel())
        print("  +/- 1 SE  ", mc.se_cov[i].ravel())
        print("  mean      ", mc.mean[i], "+/-", mc.se_mean[i])


if __name__ == "__main__":
    main()
