"""Mean completion time against buffer capacity at R_s = 200 Mb.

Also prints the part of T spent before the final drain, which is where a
larger buffer pays off.
"""
import numpy as np

from uavplan.harness import emit_plots, generate_scenario, sweep_buffer

from _common import parser

if __name__ == "__main__":
    ap = parser(__doc__, "buffer.csv")
    ap.add_argument("--values", default="5,10,15,20")
    args = ap.parse_args()
    args.out.parent.mkdir(parents=True, exist_ok=True)
    res = sweep_buffer(generate_scenario(0), [int(v) for v in args.values.split(",")],
                       range(args.seeds), out=args.out, workers=args.workers)
    for k in sorted({r.buffer_k for r in res.rows}):
        for a in res.meta["algorithms"]:
            rows = [r for r in res.rows if r.buffer_k == k and r.algorithm == a and r.feasible]
            if rows:
                T = np.mean([r.total_slots for r in rows])
                pre = np.mean([r.total_slots - r.residual_slots for r in rows])
                print(f"K={k:3d} {a:10s} T={T:8.1f} before drain={pre:8.1f}")
    emit_plots(args.out)
