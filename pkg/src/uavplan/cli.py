"""Command line entry point: ``uavplan {plan,compare,sweep,mc,plot}``."""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from . import harness
from .config import ScenarioConfig, load_scenario
from .errors import PlanningError
from .planner import Mission
from .simkit import monte_carlo


def parse_seeds(text: str) -> list[int]:
    """``20`` means seeds 0..19, ``3:7`` a half-open range, ``1,4,9`` an explicit list."""
    text = text.strip()
    if "," in text:
        return [int(s) for s in text.split(",") if s.strip()]
    if ":" in text:
        a, b = text.split(":", 1)
        return list(range(int(a), int(b)))
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError("seed count must be >= 1")
    return list(range(n))


def parse_list(text: str) -> list[str]:
    return [s.strip() for s in text.split(",") if s.strip()]


def _base(args) -> ScenarioConfig:
    if args.config:
        return load_scenario(args.config)
    return harness.generate_scenario(0)


def _error(kind: str, msg: str, code: int = 2) -> int:
    print("error: " + json.dumps({"kind": kind, "message": msg}, sort_keys=True), file=sys.stderr)
    return code


def _emit(text: str, out):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_plan(args) -> int:
    sc = _base(args)
    docs = []
    for alg in parse_list(args.algs):
        try:
            docs.append(harness.plan_to_dict(harness.plan_with(alg, sc)))
        except PlanningError as exc:
            return _error("infeasible", f"{alg}: {exc}")
    _emit(json.dumps(docs if len(docs) > 1 else docs[0], indent=2) + "\n", args.out)
    return 0


def _finish(res, args) -> int:
    text = res.to_csv()
    if args.out:
        harness._write(res, args.out)
    else:
        sys.stdout.write(text)
    if res.all_infeasible():
        return _error("infeasible", "every cell was infeasible")
    gains = res.meta.get("gain_over")
    if gains:
        print("itlto gain: " + ", ".join(f"{k} {100 * v:.2f}%" for k, v in sorted(gains.items())), file=sys.stderr)
    return 0


def cmd_compare(args) -> int:
    res = harness.run_compare(_base(args), parse_list(args.algs), parse_seeds(args.seeds), workers=args.workers)
    return _finish(res, args)


def cmd_sweep(args) -> int:
    if not args.values:
        return _error("usage", "--values is required for sweep", 1)
    cast = float if args.param == "packet_size" else int
    values = tuple(cast(float(v)) for v in parse_list(args.values))
    spec = harness.SweepSpec(args.param, values, tuple(parse_list(args.algs)), tuple(parse_seeds(args.seeds)))
    return _finish(harness.run_sweep(_base(args), spec, workers=args.workers), args)


def cmd_mc(args) -> int:
    sc = _base(args)
    ctx = Mission(sc)
    seeds = parse_seeds(args.seeds)
    rows = []
    for alg in parse_list(args.algs):
        try:
            plan = harness.plan_with(alg, sc, ctx)
        except PlanningError as exc:
            return _error("infeasible", f"{alg}: {exc}")
        for seed in seeds:
            rep = monte_carlo(plan, sc, args.reps, seed, ctx)
            for i in range(len(plan.sensing)):
                rows.append([alg, seed, i + 1, rep.replications, repr(rep.analytic_prob[i]),
                             repr(rep.success_freq[i]), repr(rep.mean_accepted[i]), repr(rep.blocking_fraction[i])])
    buf = []
    w = csv.writer(_Lines(buf), lineterminator="\n")
    w.writerow(["algorithm", "mc_seed", "task_id", "replications", "analytic_prob", "success_freq",
                "mean_accepted", "blocking_fraction"])
    w.writerows(rows)
    _emit("".join(buf), args.out)
    return 0


class _Lines:
    def __init__(self, buf):
        self.buf = buf

    def write(self, s):
        self.buf.append(s)


def cmd_plot(args) -> int:
    try:
        paths = harness.emit_plots(args.csv, args.out)
    except harness.EmptyDataError as exc:
        return _error("empty", str(exc))
    for p in paths:
        print(p)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="uavplan", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, algs="itlto,greedy,msm,nonbuffer", seeds=str(harness.DEFAULT_SEEDS)):
        p.add_argument("--config", help="scenario JSON file (defaults to a generated 11-task layout)")
        p.add_argument("--out", help="output file (stdout when omitted)")
        p.add_argument("--algs", default=algs, help="comma separated algorithms")
        p.add_argument("--seeds", default=seeds, help="count, a:b range or comma list")
        p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("plan", help="plan one scenario and print the plan document")
    common(p, algs="itlto")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("compare", help="benchmark algorithms over random layouts")
    common(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("sweep", help="sweep packet size or buffer capacity")
    common(p)
    p.add_argument("--param", choices=harness.SWEEP_PARAMS, default="packet_size")
    p.add_argument("--values", help="comma separated values (bits or packets)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("mc", help="Monte Carlo completion frequencies for a plan")
    common(p, algs="itlto", seeds="1")
    p.add_argument("--reps", type=int, default=2000)
    p.set_defaults(func=cmd_mc)

    p = sub.add_parser("plot", help="render a results CSV as SVG")
    p.add_argument("csv")
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_plot)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (PlanningError, ValueError, OSError) as exc:
        return _error(type(exc).__name__, str(exc), 1)


if __name__ == "__main__":
    sys.exit(main())
