"""Mean completion time of all four planners against packet size (K = 10)."""
from uavplan.harness import emit_plots, generate_scenario, sweep_packet_size

from _common import parser

if __name__ == "__main__":
    ap = parser(__doc__, "packet_size.csv")
    ap.add_argument("--values", default="50e6,100e6,150e6,200e6,250e6")
    args = ap.parse_args()
    args.out.parent.mkdir(parents=True, exist_ok=True)
    res = sweep_packet_size(generate_scenario(0), [float(v) for v in args.values.split(",")],
                            range(args.seeds), out=args.out, workers=args.workers)
    for v in sorted({r.rs_bits for r in res.rows}):
        print(f"R_s={v:.3g}: " + "  ".join(f"{a}={res.mean_total(a, rs_bits=v):.1f}" for a in res.meta["algorithms"]))
    emit_plots(args.out)
