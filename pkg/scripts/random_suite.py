"""Oracle and cross-algorithm discrepancies over a batch of random small models.

    python scripts/random_suite.py --count 200 --missing 0.3
"""

import argparse

import numpy as np

from marssresid.model import ObservationSet, random_mask, random_model, simulate
from marssresid.verify import verify


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--count", type=int, default=100)
    parser.add_argument("--missing", type=float, default=0.3)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    worst = {}
    for k in range(args.count):
        rng = np.random.default_rng([args.seed, k])
        m, n, T = (int(rng.integers(1, hi + 1)) for hi in (3, 4, 6))
        spec = random_model(rng, m, n, T, time_varying=bool(k % 2), degenerate=k % 5 == 0)
        obs = ObservationSet(simulate(spec, rng)[1].y, random_mask(rng, n, T, args.missing))
        for d in verify(spec, obs):
            if d.max_abs >= worst.get(d.quantity, (0.0,))[0]:
                worst[d.quantity] = (d.max_abs, k, d.t)
    print(f"{args.count} models, {args.missing:.0%} missing")
    for q, (v, k, t) in sorted(worst.items(), key=lambda kv: -kv[1][0]):
        print(f"  {q:<14s} {v:.3e}  (model {k}, t={t})")


if __name__ == "__main__":
    main()
