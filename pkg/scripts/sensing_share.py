"""Sensing share of T for two-task missions moving toward or away from the base station."""
from pathlib import Path
import argparse

from uavplan.harness import sensing_proportion_experiment

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("results") / "sensing_share.csv")
    args = ap.parse_args()
    args.out.parent.mkdir(parents=True, exist_ok=True)
    for r in sensing_proportion_experiment(out=args.out):
        flag = "" if r.bound_active else "  (sensing floor binds)"
        print(f"{r.geometry:13s} R_s={r.rs_bits:.3g} share={r.sense_share:.3f} "
              f"d_delta={r.d_delta:.4f} d_flight={r.d_flight:.4f}{flag}")
