"""Scenario generation, benchmark sweeps, CSV output and SVG charts."""
from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from . import queueing as qmod
from .baselines import plan_greedy, plan_msm, plan_nonbuffer
from .config import ScenarioConfig
from .core import TaskTarget
from .errors import PlanningError
from .planner import Mission, MissionPlan, itlto
from .simkit import replay_deterministic

ALGORITHMS: dict[str, Callable] = {
    "itlto": lambda sc, ctx: itlto(sc, ctx=ctx),
    "greedy": plan_greedy,
    "msm": plan_msm,
    "nonbuffer": plan_nonbuffer,
}
SWEEP_PARAMS = ("packet_size", "buffer_k")
CSV_COLUMNS = ("scenario_seed", "algorithm", "rs_bits", "buffer_k", "total_slots", "fly_slots",
               "sense_slots", "residual_slots", "iterations", "feasible")
PROPORTION_COLUMNS = ("geometry", "rs_bits", "total_slots", "sense_slots", "sense_share",
                      "rate_at_location", "rate_avg", "d_delta", "d_flight", "bound_active")
DEFAULT_SEEDS = 20


class EmptyDataError(ValueError):
    pass


def generate_scenario(seed: int, n: int = 11, area: tuple[float, float] = (600.0, 600.0),
                      base: ScenarioConfig | None = None) -> ScenarioConfig:
    """``n`` targets uniform over ``area``; physics from ``base`` or the defaults."""
    if n < 1:
        raise ValueError("need at least one task")
    rng = np.random.default_rng(seed)
    xy = rng.uniform((0.0, 0.0), area, size=(n, 2))
    tasks = tuple(TaskTarget(i + 1, float(x), float(y)) for i, (x, y) in enumerate(xy))
    if base is None:
        return ScenarioConfig(tasks, seed=seed, area_m=area)
    return replace(base, tasks=tasks, seed=seed, area_m=area)


def plan_with(algorithm: str, scenario: ScenarioConfig, ctx: Mission | None = None) -> MissionPlan:
    try:
        fn = ALGORITHMS[algorithm]
    except KeyError:
        raise ValueError(f"unknown algorithm {algorithm!r}; choose from {sorted(ALGORITHMS)}") from None
    return fn(scenario, ctx or Mission(scenario))


@dataclass(frozen=True)
class SweepSpec:
    param: str
    values: tuple
    algorithms: tuple[str, ...] = tuple(ALGORITHMS)
    seeds: tuple[int, ...] = tuple(range(DEFAULT_SEEDS))

    def __post_init__(self):
        if self.param not in SWEEP_PARAMS:
            raise ValueError(f"sweep parameter must be one of {SWEEP_PARAMS}")
        if not self.values or not self.algorithms or not self.seeds:
            raise ValueError("values, algorithms and seeds must be non-empty")
        bad = set(self.algorithms) - set(ALGORITHMS)
        if bad:
            raise ValueError(f"unknown algorithms {sorted(bad)}")


@dataclass(frozen=True)
class ResultRow:
    scenario_seed: int
    algorithm: str
    rs_bits: float
    buffer_k: int
    total_slots: int | None
    fly_slots: int | None
    sense_slots: int | None
    residual_slots: int | None    # includes drain hovers outside the final one
    iterations: int | None
    feasible: bool
    wall_s: float = field(default=0.0, compare=False)

    def csv_fields(self) -> list:
        if not self.feasible:
            head = [self.scenario_seed, self.algorithm, _num(self.rs_bits), self.buffer_k]
            return head + [""] * 5 + [0]
        return [self.scenario_seed, self.algorithm, _num(self.rs_bits), self.buffer_k, self.total_slots,
                self.fly_slots, self.sense_slots, self.residual_slots, self.iterations, 1]


def _num(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


def _cell(args) -> ResultRow:
    scenario, algorithm = args
    t0 = time.perf_counter()
    ctx = Mission(scenario)
    try:
        plan = plan_with(algorithm, scenario, ctx)
    except PlanningError:
        return ResultRow(scenario.seed, algorithm, scenario.sensing.packet_size_bits, scenario.buffer.capacity,
                         None, None, None, None, None, False, time.perf_counter() - t0)
    replay_deterministic(plan, scenario, ctx)      # audit, raises on a broken plan
    return ResultRow(scenario.seed, algorithm, scenario.sensing.packet_size_bits, scenario.buffer.capacity,
                     plan.total, plan.fly_slots, plan.sense_slots, plan.residual + plan.hover_slots,
                     plan.iterations, True, time.perf_counter() - t0)


@dataclass
class CompareResult:
    rows: list[ResultRow]
    meta: dict = field(default_factory=dict)

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in sorted(self.rows, key=_row_key):
            w.writerow(r.csv_fields())
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    def mean_total(self, algorithm: str, **where) -> float:
        vals = [r.total_slots for r in self.rows if r.algorithm == algorithm and r.feasible
                and all(getattr(r, k) == v for k, v in where.items())]
        return float(np.mean(vals)) if vals else math.nan

    def means(self) -> dict:
        out = {}
        for r in self.rows:
            out.setdefault((r.algorithm, r.rs_bits, r.buffer_k), []).append(r.total_slots if r.feasible else None)
        return {k: float(np.mean([v for v in vs if v is not None])) if any(v is not None for v in vs) else math.nan
                for k, vs in sorted(out.items(), key=lambda kv: (kv[0][1], kv[0][2], kv[0][0]))}

    def gain_over(self, baseline: str, algorithm: str = "itlto") -> float:
        """Relative reduction of the mean completion time, e.g. 0.05 for 5%."""
        a, b = self.mean_total(algorithm), self.mean_total(baseline)
        return (b - a) / b if b else math.nan

    def all_infeasible(self) -> bool:
        return not any(r.feasible for r in self.rows)


def _row_key(r: ResultRow):
    return (r.rs_bits, r.buffer_k, r.scenario_seed, list(ALGORITHMS).index(r.algorithm))


def _run_cells(cells: list, workers: int) -> list[ResultRow]:
    if workers > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            rows = list(ex.map(_cell, cells, chunksize=max(1, len(cells) // (4 * workers))))
    else:
        rows = [_cell(c) for c in cells]
    return sorted(rows, key=_row_key)


def _layouts(base: ScenarioConfig, seeds: Iterable[int]) -> list[ScenarioConfig]:
    return [generate_scenario(s, base.n_tasks, base.area_m, base) for s in seeds]


def run_compare(base: ScenarioConfig, algorithms: Sequence[str] = tuple(ALGORITHMS),
                seeds: Sequence[int] = tuple(range(DEFAULT_SEEDS)), *, out=None, workers: int = 1,
                random_layout: bool = True) -> CompareResult:
    """Plan every (seed, algorithm) cell; a fresh random layout per seed unless ``random_layout`` is off."""
    scen = _layouts(base, seeds) if random_layout else [replace(base, seed=s) for s in seeds]
    cells = [(sc, a) for sc in scen for a in algorithms]
    res = CompareResult(_run_cells(cells, workers), {
        "kind": "compare", "seeds": list(seeds), "n_seeds": len(seeds), "algorithms": list(algorithms),
        "n_tasks": base.n_tasks, "area_m": list(base.area_m)})
    if "itlto" in algorithms:
        res.meta["gain_over"] = {a: res.gain_over(a) for a in algorithms if a != "itlto"}
    if out is not None:
        _write(res, out)
    return res


def _write(res: CompareResult, out):
    out = Path(out)
    res.to_csv(out)
    out.with_suffix(out.suffix + ".meta.json").write_text(json.dumps(res.meta, indent=2, sort_keys=True) + "\n")


def run_sweep(base: ScenarioConfig, spec: SweepSpec, *, out=None, workers: int = 1) -> CompareResult:
    cells = []
    for sc in _layouts(base, spec.seeds):
        for v in spec.values:
            cfg = sc.with_packet_size(float(v)) if spec.param == "packet_size" else sc.with_capacity(int(v))
            cells.extend((cfg, a) for a in spec.algorithms)
    res = CompareResult(_run_cells(cells, workers), {
        "kind": "sweep", "param": spec.param, "values": [float(v) for v in spec.values],
        "seeds": list(spec.seeds), "n_seeds": len(spec.seeds), "algorithms": list(spec.algorithms),
        "n_tasks": base.n_tasks, "area_m": list(base.area_m)})
    if out is not None:
        _write(res, out)
    return res


def sweep_packet_size(base: ScenarioConfig, values: Sequence[float], seeds: Sequence[int] = tuple(range(DEFAULT_SEEDS)),
                      algorithms: Sequence[str] = tuple(ALGORITHMS), **kw) -> CompareResult:
    return run_sweep(base.with_capacity(10), SweepSpec("packet_size", tuple(values), tuple(algorithms), tuple(seeds)), **kw)


def sweep_buffer(base: ScenarioConfig, values: Sequence[int], seeds: Sequence[int] = tuple(range(DEFAULT_SEEDS)),
                 algorithms: Sequence[str] = tuple(ALGORITHMS), **kw) -> CompareResult:
    return run_sweep(base.with_packet_size(200e6), SweepSpec("buffer_k", tuple(values), tuple(algorithms), tuple(seeds)), **kw)


# two-task sensing share ----------------------------------------------------
DEFAULT_GEOMETRIES = {
    "toward_bs": ((450.0, 450.0), (40.0, 40.0)),
    "away_from_bs": ((40.0, 40.0), (450.0, 450.0)),
}


@dataclass(frozen=True)
class ProportionRow:
    geometry: str
    rs_bits: float
    total_slots: int
    sense_slots: int
    sense_share: float
    rate_at_location: float
    rate_avg: float
    d_delta: float
    d_flight: float
    bound_active: bool    # sensing time above its one-slot floor, so the increments apply

    def csv_fields(self) -> list:
        return [self.geometry, _num(self.rs_bits), self.total_slots, self.sense_slots, repr(self.sense_share),
                repr(self.rate_at_location), repr(self.rate_avg), repr(self.d_delta), repr(self.d_flight),
                int(self.bound_active)]


def sensing_proportion_experiment(geometries: dict | None = None, rs_values: Sequence[float] = (50e6, 100e6, 150e6, 200e6, 250e6),
                                  base: ScenarioConfig | None = None, d_rs_bits: float = 1e6, out=None) -> list[ProportionRow]:
    """Sensing share of T for two-task missions, with the closed-form packet-size increments.

    The increments are taken at the second task: the extra sensing slots paid at
    its location versus the extra flight slots paid at the mean rate of the
    segment flown into it, for a packet-size step of ``d_rs_bits``.
    """
    geometries = geometries or DEFAULT_GEOMETRIES
    rows = []
    for name, (p1, p2) in geometries.items():
        tasks = (TaskTarget(1, *map(float, p1)), TaskTarget(2, *map(float, p2)))
        sc0 = replace(base, tasks=tasks) if base is not None else ScenarioConfig(tasks)
        for rs in rs_values:
            sc = sc0.with_packet_size(float(rs)).with_capacity(10)
            ctx = Mission(sc)
            plan = itlto(sc, ctx=ctx)
            sp, seg = plan.sensing[1], plan.segments[1]
            r_loc = sp.rate
            r_avg = float(np.mean(seg.slot_rates)) if seg.slot_rates else r_loc
            m_star = ctx.threshold(r_loc)
            theta = sp.required_packets - (m_star if m_star is not None else ctx.K)
            dd, df = qmod.tradeoff_increments(theta, float(rs), sp.arrival_buffer, r_loc, r_avg, d_rs_bits)
            rows.append(ProportionRow(name, float(rs), plan.total, plan.sense_slots,
                                      plan.sense_slots / plan.total if plan.total else 0.0, r_loc, r_avg, dd, df,
                                      theta * float(rs) + sp.arrival_buffer > 0))
    if out is not None:
        proportion_to_csv(rows, out)
    return rows


def proportion_to_csv(rows: Sequence[ProportionRow], path=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(PROPORTION_COLUMNS)
    for r in rows:
        w.writerow(r.csv_fields())
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


# plan documents ------------------------------------------------------------
def plan_to_dict(plan: MissionPlan) -> dict:
    return {
        "algorithm": plan.algorithm,
        "total_slots": plan.total,
        "fly_slots": plan.fly_slots,
        "sense_slots": plan.sense_slots,
        "hover_slots": plan.hover_slots,
        "residual_slots": plan.residual,
        "history": list(plan.history),
        "tasks": [{
            "task_id": s.task_id,
            "location_m": [s.location.x, s.location.y, s.location.z],
            "delta_slots": s.delta,
            "completion_prob": s.completion_prob,
            "required_packets": s.required_packets,
            "arrival_buffer_bits": s.arrival_buffer,
            "rate_bits_per_slot": s.rate,
            "hover_before_slots": s.hover_before,
            "drain_after_slots": s.drain_after,
        } for s in plan.sensing],
        "segments": [{"from_m": [g.start.x, g.start.y, g.start.z], "to_m": [g.end.x, g.end.y, g.end.z],
                      "speeds_m_per_slot": list(g.speeds)} for g in plan.segments],
    }


# charts --------------------------------------------------------------------
def _read_csv(path) -> tuple[list[str], list[dict]]:
    text = Path(path).read_text()
    rd = csv.DictReader(io.StringIO(text))
    rows = list(rd)
    if not rd.fieldnames or not rows:
        raise EmptyDataError(f"{path}: no data rows to plot")
    return list(rd.fieldnames), rows


def _series(header, rows):
    """(x column, y column, {label: [(x, y), ...]}) for a results CSV."""
    if "geometry" in header:
        x, y, label = "rs_bits", "sense_share", "geometry"
    else:
        varying = [c for c in ("rs_bits", "buffer_k") if len({r[c] for r in rows}) > 1]
        x = varying[0] if varying else "rs_bits"
        y, label = "total_slots", "algorithm"
    acc: dict[str, dict[float, list[float]]] = {}
    for r in rows:
        if r.get("feasible", "1") != "1" or r[y] == "":
            continue
        acc.setdefault(r[label], {}).setdefault(float(r[x]), []).append(float(r[y]))
    return x, y, {k: sorted((xv, float(np.mean(ys))) for xv, ys in d.items()) for k, d in acc.items()}


def emit_plots(csv_path, out_dir=None) -> list[Path]:
    """Render the CSV as an SVG line chart next to it (or in ``out_dir``)."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    header, rows = _read_csv(csv_path)
    x, y, series = _series(header, rows)
    if not series:
        raise EmptyDataError(f"{csv_path}: no feasible rows to plot")
    csv_path = Path(csv_path)
    out_dir = Path(out_dir) if out_dir is not None else csv_path.parent
    out_dir.mkdir(parents=True, exist_ok=True)
    target = out_dir / (csv_path.stem + ".svg")
    with matplotlib.rc_context({"svg.hashsalt": "uavplan", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(6, 4))
        for name in sorted(series):
            pts = series[name]
            ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=name)
        ax.set_xlabel(x)
        ax.set_ylabel(y if y != "total_slots" else "mean total_slots")
        ax.legend()
        ax.grid(True, alpha=0.3)
        fig.tight_layout()
        fig.savefig(target, format="svg", metadata={"Date": None, "Creator": None})
        plt.close(fig)
    return [target]
