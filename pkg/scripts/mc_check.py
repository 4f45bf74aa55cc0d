"""Monte Carlo completion frequencies of ITLTO plans on a handful of layouts."""
import argparse

from uavplan.harness import generate_scenario
from uavplan.planner import Mission, itlto
from uavplan.simkit import monte_carlo

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--scenarios", type=int, default=10)
    ap.add_argument("--reps", type=int, default=2000)
    args = ap.parse_args()
    for s in range(args.scenarios):
        sc = generate_scenario(s)
        ctx = Mission(sc)
        rep = monte_carlo(itlto(sc, ctx=ctx), sc, args.reps, seed=s, ctx=ctx)
        print(f"seed {s}: min freq {min(rep.success_freq):.4f}  min analytic {min(rep.analytic_prob):.4f}")
