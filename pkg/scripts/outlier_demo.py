"""Inject an additive outlier and a level shift, then flag them from standardized residuals.

The outlier shows up in the model residual at its time step; the level
shift in the state residual.

    python scripts/outlier_demo.py
"""

import argparse

import numpy as np

from marssresid.model import ModelSpec, ObservationSet, simulate
from marssresid.smoothations import flag_outliers, residual_report, standardize


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--T", type=int, default=60)
    parser.add_argument("--seed", type=int, default=4)
    parser.add_argument("--threshold", type=float, default=3.0)
    args = parser.parse_args()

    # local level model observed by two noisy series
    spec = ModelSpec(B=[[1.0]], u=[0.0], Q=[[0.1]], Z=[[1.0], [1.0]], a=[0.0, 0.0],
                     R=np.diag([0.5, 0.5]), xi=[0.0], Lambda=[[1.0]], horizon=args.T)
    _, obs = simulate(spec, args.seed)
    y = obs.y.copy()
    t_out, t_shift = args.T // 3, 2 * args.T // 3
    y[0, t_out - 1] += 6.0
    y[:, t_shift - 1 :] += 4.0
    mask = np.random.default_rng(args.seed).random(y.shape) > 0.1
    rep = residual_report(spec, ObservationSet(y, mask))
    std = standardize(rep, "contemporaneous", "marginal")
    flags = flag_outliers(std, args.threshold)
    print(f"injected: outlier in y1 at t={t_out}, level shift at t={t_shift}")
    for i, k in zip(*np.nonzero(flags)):
        kind = f"model y{k + 1}" if k < spec.num_obs else "state"
        print(f"  t={i + 1:3d} {kind:<9s} std={std.values[i, k]:+.2f}")


if __name__ == "__main__":
    main()
