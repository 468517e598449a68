"""Monte Carlo draws of Z against the exact mixture CDF, for several n.

    python3 scripts/mc_check.py --reps 1000000 --sizes 20,200,2000
"""

import argparse

from bwmedge.binomial import BinomialParams
from bwmedge.bwm import BwmProblem, atom_mass, default_grid, mixture_cdf
from bwmedge.distributions import parse_distribution
from bwmedge.montecarlo import SimConfig, compare_with_cdf, sample_z


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dist", default="family=exponential rate=1.0")
    ap.add_argument("--sizes", default="10,50,200")
    ap.add_argument("--p", type=float, default=0.3)
    ap.add_argument("--reps", type=int, default=10**6)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--streams", type=int, default=4)
    ap.add_argument("--confidence", type=float, default=0.999)
    args = ap.parse_args()

    d = parse_distribution(args.dist)
    grid = default_grid()
    print("n,maxDeviation,epsilon,inside,zeroFraction,zeroExpected,zeroZScore")
    for n in (int(v) for v in args.sizes.split(",")):
        prob = BwmProblem(d, BinomialParams(n, args.p), 4)
        z = sample_z(SimConfig(prob, args.reps, args.seed, args.streams))
        c = compare_with_cdf(z, grid, mixture_cdf(prob, grid), atom_mass(prob.b), args.confidence)
        print(f"{n},{c.max_deviation:.3e},{c.epsilon:.3e},{c.inside},{c.zero_fraction:.6f},"
              f"{c.zero_expected:.6f},{c.zero_z_score:+.2f}")


if __name__ == "__main__":
    main()
