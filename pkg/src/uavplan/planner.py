"""Completion-time planner: flight-time enumeration, sensing location search, sensing times.

A plan is a chain of legs.  Leg ``n`` is the straight flight from the previous
sensing location (or the start point above the BS) to sensing location ``n``,
followed by ``delta_n`` hover slots of sensing.  Sensing times are never free
variables here: they are always the smallest feasible value for the buffer
level the UAV arrives with, so a plan is fully described by its locations and
per-slot speed schedules.

The outer loop alternates two coordinate steps and only accepts changes that
strictly lower the total completion time, which makes the recorded history
non-increasing by construction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy import stats

from . import queueing as qmod
from .config import PlannerConfig, ScenarioConfig
from .core import (
    Position3,
    TaskTarget,
    distance_to_target,
    link_rate_xyz,
    required_packets,
    sensing_success_prob,
)
from .errors import (
    InfeasibleSensingError,
    NoLinkError,
    PlanningError,
    ScenarioInfeasibleError,
    SegmentInfeasibleError,
)

_EPS = 1e-9


@dataclass(frozen=True)
class FlightSegment:
    start: Position3
    end: Position3
    speeds: tuple[float, ...]
    q_start: float
    arrival_buffer: float
    arrival_rate: float
    slot_rates: tuple[float, ...] = field(repr=False)

    @property
    def duration(self) -> int:
        return len(self.speeds)

    @property
    def length(self) -> float:
        return self.start.distance(self.end)

    def positions(self) -> list[Position3]:
        """UAV position at the end of every slot."""
        L = self.length
        if L == 0 or not self.speeds:
            return [self.end] * len(self.speeds)
        a, b = self.start.as_array(), self.end.as_array()
        u = (b - a) / L
        out = []
        for s in np.cumsum(self.speeds):
            p = a + min(s, L) * u
            out.append(Position3(float(p[0]), float(p[1]), max(float(p[2]), 0.0)))
        out[-1] = self.end
        return out

    def buffer_profile(self) -> np.ndarray:
        """Buffer bits at the end of every slot (drain only, never refills in flight)."""
        if not self.slot_rates:
            return np.zeros(0)
        return np.maximum(self.q_start - np.cumsum(self.slot_rates), 0.0)


@dataclass(frozen=True)
class SensingPlan:
    task_id: int
    location: Position3
    delta: int
    completion_prob: float
    required_packets: float
    arrival_buffer: float        # bits when sensing starts
    rate: float                  # bits per slot at the location
    hover_before: int = 0        # drain-only hover before sensing
    drain_after: int = 0         # drain-only hover after sensing


@dataclass(frozen=True)
class MissionPlan:
    algorithm: str
    segments: tuple[FlightSegment, ...]
    sensing: tuple[SensingPlan, ...]
    residual: int
    history: tuple[int, ...] = ()
    final_buffer: float = 0.0    # bits left when the residual drain starts

    @property
    def fly_slots(self) -> int:
        return sum(s.duration for s in self.segments)

    @property
    def sense_slots(self) -> int:
        return sum(s.delta for s in self.sensing)

    @property
    def hover_slots(self) -> int:
        return sum(s.hover_before + s.drain_after for s in self.sensing)

    @property
    def total(self) -> int:
        return self.fly_slots + self.sense_slots + self.hover_slots + self.residual

    @property
    def iterations(self) -> int:
        return max(len(self.history) - 1, 0)

    @property
    def locations(self) -> list[Position3]:
        return [s.location for s in self.sensing]


class _Line:
    """Rate profile along one straight segment, sampled on a regular grid."""

    def __init__(self, mission: "Mission", start: Position3, end: Position3):
        self.m = mission
        self.start, self.end = start, end
        self.a = start.as_array()
        self.L = start.distance(end)
        self.u = (end.as_array() - self.a) / self.L if self.L > 0 else np.zeros(3)
        v = mission.v_max
        self.t_min = math.ceil(self.L / v - _EPS) if self.L > 0 else 0
        self.t_cap = max(self.t_min, math.ceil(mission.planner.enumeration_factor * self.L / v - _EPS))
        self._sched: dict[int, tuple[tuple[float, ...], tuple[float, ...]]] = {}
        self._point: dict[float, float] = {}
        if self.L > 0:
            res = mission.planner.position_resolution_m
            n = int(math.floor(self.L / res - _EPS))
            self.res = res
            self.grid = np.arange(n + 1) * res
            self.grid_rates = self.rates(self.grid)
            self._build_table()

    def rates(self, s) -> np.ndarray:
        pts = self.a[None, :] + np.asarray(s, dtype=float)[:, None] * self.u[None, :]
        return link_rate_xyz(pts[:, 0], pts[:, 1], np.maximum(pts[:, 2], 0.0), self.m.cp, self.m.slot_s)

    def rate_at(self, s: float) -> float:
        r = self._point.get(s)
        if r is None:
            r = float(self.rates([s])[0]) if s < self.L else self.m.rate(self.end)
            self._point[s] = r
        return r

    def point(self, s: float) -> Position3:
        if s >= self.L:
            return self.end
        p = self.a + s * self.u
        return Position3(float(p[0]), float(p[1]), max(float(p[2]), 0.0))

    def _build_table(self):
        r = self.grid_rates
        table = [np.arange(len(r))]
        j = 1
        while (1 << j) <= len(r):
            prev = table[-1]
            half = 1 << (j - 1)
            left, right = prev[: len(r) - (1 << j) + 1], prev[half: half + len(r) - (1 << j) + 1]
            table.append(np.where(r[right] >= r[left], right, left))
            j += 1
        self._table = table

    def _argmax(self, lo: int, hi: int) -> int:
        k = (hi - lo + 1).bit_length() - 1
        i1, i2 = self._table[k][lo], self._table[k][hi - (1 << k) + 1]
        return int(i2 if self.grid_rates[i2] >= self.grid_rates[i1] else i1)

    def schedule(self, t_f: int) -> tuple[tuple[float, ...], tuple[float, ...]]:
        """Per-slot speeds maximizing the rate of each slot in turn, plus those rates."""
        hit = self._sched.get(t_f)
        if hit is not None:
            return hit
        if t_f < self.t_min:
            raise SegmentInfeasibleError(f"{t_f} slots cannot cover {self.L:.3f} m")
        L, v, res = self.L, self.m.v_max, getattr(self, "res", 1.0)
        n_grid = len(self.grid) - 1 if L > 0 else -1
        s_prev, pos, rates = 0.0, [], []
        for t in range(1, t_f + 1):
            hi_s = min(s_prev + v, L)
            lo_s = min(max(s_prev, L - v * (t_f - t)), hi_s)
            best_s, best_r = hi_s, self.rate_at(hi_s)
            r_lo = self.rate_at(lo_s)
            if r_lo > best_r:
                best_s, best_r = lo_s, r_lo
            lo, hi = math.ceil(lo_s / res - 1e-12), min(math.floor(hi_s / res + 1e-12), n_grid)
            if lo <= hi:
                i = self._argmax(lo, hi)
                g = float(self.grid[i])
                if self.grid_rates[i] > best_r or (self.grid_rates[i] == best_r and g > best_s):
                    best_s, best_r = max(min(g, hi_s), lo_s), float(self.grid_rates[i])
            pos.append(best_s)
            rates.append(best_r)
            s_prev = best_s
        speeds = tuple(float(x) for x in np.diff(np.concatenate([[0.0], pos])))
        out = (speeds, tuple(rates))
        self._sched[t_f] = out
        return out

    def full_speed(self) -> tuple[tuple[float, ...], tuple[float, ...]]:
        """v_max every slot with the remainder in the last one."""
        if self.t_min == 0:
            return (), ()
        v = self.m.v_max
        speeds = [v] * (self.t_min - 1) + [self.L - v * (self.t_min - 1)]
        s = np.cumsum(speeds)
        rates = [self.rate_at(float(x)) if x < self.L else self.m.rate(self.end) for x in s]
        return tuple(speeds), tuple(rates)


@dataclass(frozen=True)
class _Leg:
    loc: Position3
    speeds: tuple[float, ...]
    rates: tuple[float, ...]

    @property
    def drained(self) -> float:
        return float(np.cumsum(self.rates)[-1]) if self.rates else 0.0


class Mission:
    """A scenario plus memoised physics shared by every planner."""

    def __init__(self, scenario: ScenarioConfig, planner: PlannerConfig | None = None):
        self.sc = scenario
        self.planner = planner or scenario.planner
        self.cp = scenario.channel
        self.v_max = scenario.uav.v_max
        self.z_min = scenario.uav.z_min
        self.slot_s = scenario.uav.slot_duration_s
        self.rs = scenario.sensing.packet_size_bits
        self.K = scenario.buffer.capacity
        self.cap_bits = scenario.buffer.capacity_bits
        self.lam = scenario.sensing.arrival_rate
        self.p_min = scenario.sensing.p_min
        self.tasks = scenario.tasks
        self.start = scenario.start
        self._rate: dict[Position3, float] = {}
        self._thr: dict[float, int | None] = {}
        self._lines: dict[tuple[Position3, Position3], _Line] = {}
        self._sf: dict[tuple[int, int], float] = {}

    # physics -----------------------------------------------------------
    def rate(self, p: Position3) -> float:
        r = self._rate.get(p)
        if r is None:
            r = float(link_rate_xyz(p.x, p.y, p.z, self.cp, self.slot_s))
            self._rate[p] = r
        return r

    def required(self, n: int, loc: Position3) -> float:
        pr = sensing_success_prob(distance_to_target(loc, self.tasks[n]), self.sc.sensing.nu)
        return required_packets(pr, self.sc.sensing.base_packets)

    def queue(self, rate: float) -> qmod.QueueParams:
        return qmod.QueueParams(self.lam, qmod.service_time(self.rs, rate), self.K)

    def steady(self, rate: float) -> qmod.SteadyState:
        return qmod.steady_state(self.queue(rate), self.planner.queue_model)

    def threshold(self, rate: float) -> int | None:
        if rate not in self._thr:
            self._thr[rate] = qmod.sensing_threshold(self.steady(rate), self.p_min)
        return self._thr[rate]

    def line(self, start: Position3, end: Position3) -> _Line:
        key = (start, end)
        ln = self._lines.get(key)
        if ln is None:
            ln = _Line(self, start, end)
            self._lines[key] = ln
        return ln

    # sensing -----------------------------------------------------------
    def eq16_time(self, n: int, loc: Position3, q: float) -> int:
        rate = self.rate(loc)
        if rate <= 0:
            raise NoLinkError("no link at sensing location")
        c_n = self.required(n, loc)
        m = self.threshold(rate)
        cap = self.planner.max_sensing_slots
        if m is None:
            return qmod.brute_force_min_sensing_time(c_n, q, rate, self.queue(rate), self.p_min, self.rs,
                                                     model=self.planner.queue_model, delta_max=cap)
        delta = qmod.delta_for_threshold(c_n, q, rate, self.rs, m)
        if delta > cap:
            raise InfeasibleSensingError(f"task {n + 1} needs {delta} sensing slots")
        return delta

    def _fill_prob(self, delta: int, need: int) -> float:
        key = (delta, need)
        p = self._sf.get(key)
        if p is None:
            p = float(stats.poisson.sf(need - 1, self.lam * delta))
            self._sf[key] = p
        return p

    def transient_floor(self, n: int, loc: Position3, q: float, delta: int) -> int:
        """Raise ``delta`` until Poisson arrivals can lift occupancy to the completion index.

        The stationary completion probability ignores that a phase may start
        from a nearly empty buffer.  Departures are counted as if the server
        never idles, which only makes the floor more conservative.
        """
        rate, rs, c_n = self.rate(loc), self.rs, self.required(n, loc)
        n0 = max(math.ceil(q / rs - _EPS), 0)
        head = q - (n0 - 1) * rs if n0 else 0.0
        for d in range(delta, self.planner.max_sensing_slots + 1):
            m = qmod.completion_index(c_n, q, rate, d, rs)
            if m <= 0:
                return d
            sent = rate * d
            departures = 0 if (n0 == 0 or sent < head) else 1 + math.floor((sent - head) / rs)
            need = m - n0 + departures
            if need <= 0 or self._fill_prob(d, need) >= self.p_min:
                return d
        raise InfeasibleSensingError(f"task {n + 1}: arrivals cannot fill the buffer in time")

    def sensing_time(self, n: int, loc: Position3, q: float) -> int:
        delta = self.eq16_time(n, loc, q)
        if self.planner.transient_guard:
            delta = self.transient_floor(n, loc, q, delta)
        return delta

    def completion_prob(self, n: int, loc: Position3, q: float, delta: int) -> float:
        rate = self.rate(loc)
        cq = qmod.CompletionQuery(self.required(n, loc), q, rate, delta, self.rs, self.K)
        return qmod.completion_probability(cq, self.steady(rate))

    def sense_buffer(self, q: float, rate: float, delta: int) -> float:
        """Buffer after ``delta`` sensing slots under the mean net inflow, clamped every slot."""
        net = self.lam * self.rs - rate
        if net >= 0:
            return min(q + delta * net, self.cap_bits)
        return max(q + delta * net, 0.0)

    # plan evaluation ---------------------------------------------------
    def _walk(self, legs: Sequence[_Leg], drain_between: bool = False):
        q, total = 0.0, 0
        steps = []
        for n, leg in enumerate(legs):
            q_arr = max(q - leg.drained, 0.0)
            delta = self.sensing_time(n, leg.loc, q_arr)
            rate = self.rate(leg.loc)
            q = self.sense_buffer(q_arr, rate, delta)
            drain = 0
            if drain_between and n < len(legs) - 1 and q > 0:
                drain = math.ceil(q / rate)
                q = 0.0
            total += len(leg.speeds) + delta + drain
            steps.append((q_arr, delta, drain))
        res = residual_slots(q, self.rate(legs[-1].loc))
        return total + res, steps, res, q

    def total_time(self, legs: Sequence[_Leg], drain_between: bool = False) -> float:
        try:
            return self._walk(legs, drain_between)[0]
        except PlanningError:
            return math.inf

    def build(self, algorithm: str, legs: Sequence[_Leg], *, drain_between: bool = False,
              history: Sequence[int] = ()) -> MissionPlan:
        total, steps, res, q_final = self._walk(legs, drain_between)
        segments, sensing = [], []
        prev, q = self.start, 0.0
        for n, (leg, (q_arr, delta, drain)) in enumerate(zip(legs, steps)):
            segments.append(FlightSegment(prev, leg.loc, leg.speeds, q, q_arr, self.rate(leg.loc), leg.rates))
            rate = self.rate(leg.loc)
            sensing.append(SensingPlan(
                task_id=self.tasks[n].id, location=leg.loc, delta=delta,
                completion_prob=self.completion_prob(n, leg.loc, q_arr, delta),
                required_packets=self.required(n, leg.loc), arrival_buffer=q_arr, rate=rate,
                drain_after=drain))
            q = 0.0 if drain else self.sense_buffer(q_arr, rate, delta)
            prev = leg.loc
        hist = tuple(history) if history else (total,)
        return MissionPlan(algorithm, tuple(segments), tuple(sensing), res, hist, q_final)

    def start_of(self, legs: Sequence[_Leg], n: int) -> Position3:
        return self.start if n == 0 else legs[n - 1].loc

    def leg(self, start: Position3, loc: Position3, t_f: int | None = None) -> _Leg:
        ln = self.line(start, loc)
        speeds, rates = ln.schedule(ln.t_min if t_f is None else t_f)
        return _Leg(loc, speeds, rates)


def residual_slots(q: float, rate: float) -> int:
    if q <= 0:
        return 0
    if rate <= 0:
        raise NoLinkError("cannot drain the buffer without a link")
    return math.ceil(q / rate)


def residual_drain(final_loc: Position3, q: float, ctx: Mission) -> int:
    """Slots to empty ``q`` bits hovering at ``final_loc``."""
    return residual_slots(q, ctx.rate(final_loc))


def above_target(target: TaskTarget, z: float) -> Position3:
    return Position3(float(target.x), float(target.y), float(z))


def feasibility_check(arrival_q: float, arrival_rate: float, target: TaskTarget, loc: Position3,
                      ctx: Mission, delta: int | None = None, peak_buffer: float | None = None) -> bool:
    """Can sensing at ``loc`` reach p_min from this arrival state?

    With ``delta`` given the check is at that fixed sensing time, otherwise at
    the minimal sensing time within the configured cap.  The buffer bound is
    checked on ``peak_buffer`` when supplied (flight never adds data, so the
    segment start is the peak).
    """
    bound = ctx.cap_bits * (1 + 1e-12)
    if arrival_q < 0 or arrival_q > bound or (peak_buffer is not None and peak_buffer > bound):
        return False
    if arrival_rate <= 0:
        return False
    n = target.id - 1
    if delta is None:
        try:
            delta = ctx.eq16_time(n, loc, arrival_q)
        except PlanningError:
            return False
    return ctx.completion_prob(n, loc, arrival_q, delta) >= ctx.p_min


def _frontier(ctx: Mission, start: Position3, loc: Position3, q_start: float):
    """Yield (t_f, speeds, rates, arrival_q) for t_f from the minimum up to the cap."""
    ln = ctx.line(start, loc)
    for t_f in range(ln.t_min, ln.t_cap + 1):
        speeds, rates = ln.schedule(t_f)
        drained = float(np.cumsum(rates)[-1]) if rates else 0.0
        q_arr = max(q_start - drained, 0.0)
        yield t_f, speeds, rates, q_arr
        if q_arr == 0.0:
            return


def optimize_segment(start: Position3, end: Position3, q_start: float, ctx: Mission,
                     delta: int | None = None) -> FlightSegment:
    """Shortest flight time whose rate-maximizing schedule arrives in a feasible state.

    ``delta`` is the sensing time the arrival must satisfy; without it any
    sensing time up to the cap is acceptable.
    """
    n = _task_index(ctx, end)
    for t_f, speeds, rates, q_arr in _frontier(ctx, start, end, q_start):
        ok = feasibility_check(q_arr, ctx.rate(end), ctx.tasks[n], end, ctx, delta, q_start)
        if ok:
            return FlightSegment(start, end, speeds, q_start, q_arr, ctx.rate(end), rates)
    raise SegmentInfeasibleError("enumeration cap reached without a feasible flight time")


def _task_index(ctx: Mission, loc: Position3) -> int:
    # nearest target in the plane; optimize_segment is called with sensing locations
    d = [(loc.x - t.x) ** 2 + (loc.y - t.y) ** 2 for t in ctx.tasks]
    return int(np.argmin(d))


def update_sensing_time(plan: SensingPlan, arrival_q: float, ctx: Mission) -> SensingPlan:
    n = plan.task_id - 1
    delta = ctx.sensing_time(n, plan.location, arrival_q)
    p = ctx.completion_prob(n, plan.location, arrival_q, delta)
    if p < ctx.p_min:
        raise InfeasibleSensingError(f"task {plan.task_id}: completion probability {p:.4f} below p_min")
    return replace(plan, delta=delta, completion_prob=p, arrival_buffer=arrival_q,
                   required_packets=ctx.required(n, plan.location), rate=ctx.rate(plan.location))


def legs_of(plan: MissionPlan) -> list[_Leg]:
    return [_Leg(seg.end, seg.speeds, seg.slot_rates) for seg in plan.segments]


# search moves --------------------------------------------------------------
def _moved(ctx: Mission, legs: list[_Leg], n: int, extend: bool) -> list[_Leg] | None:
    """Lengthen leg n by one v_max slot, or drop its last slot, keeping the flight line."""
    leg = legs[n]
    start = ctx.start_of(legs, n)
    ln = ctx.line(start, leg.loc)
    if ln.L == 0 or (not extend and not leg.speeds):
        return None
    if extend:
        s_new = ln.L + ctx.v_max
        p = ln.a + s_new * ln.u
        loc = Position3(float(p[0]), float(p[1]), max(float(p[2]), ctx.z_min))
        r_new = ctx.rate(loc)
        new = _Leg(loc, leg.speeds + (ctx.v_max,), leg.rates + (r_new,))
    else:
        s_new = float(np.sum(leg.speeds[:-1])) if len(leg.speeds) > 1 else 0.0
        loc = ln.point(s_new) if s_new > 0 else start
        if loc.z < ctx.z_min:
            loc = Position3(loc.x, loc.y, ctx.z_min)
        new = _Leg(loc, leg.speeds[:-1], leg.rates[:-1])
    out = list(legs)
    out[n] = new
    if n + 1 < len(legs):
        nxt = legs[n + 1]
        ln2 = ctx.line(loc, nxt.loc)
        t_f = min(max(len(nxt.speeds), ln2.t_min), ln2.t_cap)
        out[n + 1] = ctx.leg(loc, nxt.loc, t_f)
    return out


def _task_cost(ctx: Mission, legs: list[_Leg], n: int, drain_between: bool = False) -> float:
    """Flight plus sensing slots of task n given the buffer left by earlier tasks."""
    try:
        q = 0.0 if n == 0 else _buffer_after(ctx, legs, n - 1, drain_between)
        leg = legs[n]
        q_arr = max(q - leg.drained, 0.0)
        return len(leg.speeds) + ctx.sensing_time(n, leg.loc, q_arr)
    except PlanningError:
        return math.inf


def _buffer_after(ctx: Mission, legs: list[_Leg], n: int, drain_between: bool = False) -> float:
    q = 0.0
    for k in range(n + 1):
        q_arr = max(q - legs[k].drained, 0.0)
        delta = ctx.sensing_time(k, legs[k].loc, q_arr)
        q = ctx.sense_buffer(q_arr, ctx.rate(legs[k].loc), delta)
        if drain_between and k < len(legs) - 1:
            q = 0.0
    return q


def _cost_fn(ctx: Mission, n: int, objective: str, drain_between: bool):
    if objective == "total":
        return lambda ls: ctx.total_time(ls, drain_between)
    if objective == "task":
        return lambda ls: _task_cost(ctx, ls, n, drain_between)
    raise ValueError(f"unknown objective {objective!r}")


def _search_location(ctx: Mission, legs: list[_Leg], n: int, objective: str,
                     drain_between: bool = False) -> list[_Leg]:
    cost = _cost_fn(ctx, n, objective, drain_between)

    best = cost(legs)
    for _ in range(10_000):
        cands = []
        for extend in (False, True):      # shorter flight first wins ties
            moved = _moved(ctx, legs, n, extend)
            if moved is not None:
                cands.append((cost(moved), moved))
        if not cands:
            break
        c, moved = min(cands, key=lambda cm: cm[0])
        if not c < best:
            break
        best, legs = c, moved
    return legs


def local_search_location(n: int, current: MissionPlan, ctx: Mission, objective: str = "total") -> MissionPlan:
    """Slide sensing location ``n`` (0-based) along its incoming flight line while it pays off."""
    legs = _search_location(ctx, legs_of(current), n, objective)
    return ctx.build(current.algorithm, legs, history=current.history)


def _best_flight(ctx: Mission, legs: list[_Leg], n: int, objective: str,
                 drain_between: bool = False) -> list[_Leg]:
    """Pick leg n's flight time from the enumeration (current schedule kept as a candidate)."""
    start = ctx.start_of(legs, n)
    try:
        q_start = 0.0 if n == 0 else _buffer_after(ctx, legs, n - 1, drain_between)
    except PlanningError:
        return legs
    cost = _cost_fn(ctx, n, objective, drain_between)

    best, best_legs = cost(legs), legs
    for _, speeds, rates, _ in _frontier(ctx, start, legs[n].loc, q_start):
        trial = list(legs)
        trial[n] = _Leg(legs[n].loc, speeds, rates)
        c = cost(trial)
        if c < best:
            best, best_legs = c, trial
    return best_legs


def initial_legs(ctx: Mission, z: float | None = None) -> list[_Leg]:
    z = ctx.z_min if z is None else max(z, ctx.z_min)
    legs, prev = [], ctx.start
    for t in ctx.tasks:
        loc = above_target(t, z)
        speeds, rates = ctx.line(prev, loc).full_speed()
        legs.append(_Leg(loc, speeds, rates))
        prev = loc
    return legs


def initial_solution(scenario: ScenarioConfig, ctx: Mission | None = None) -> MissionPlan:
    """Hover right above every target, fly straight at full speed."""
    ctx = ctx or Mission(scenario)
    try:
        return ctx.build("initial", initial_legs(ctx))
    except PlanningError as exc:
        raise ScenarioInfeasibleError(str(exc)) from exc


def descend(ctx: Mission, legs: list[_Leg], drain_between: bool = False) -> tuple[list[_Leg], list[int]]:
    """Outer loop on total time; returns the final legs and the accepted T values."""
    T = ctx.total_time(legs, drain_between)
    if not math.isfinite(T):
        raise ScenarioInfeasibleError("starting plan is infeasible")
    history = [int(T)]
    for _ in range(ctx.planner.max_outer_iterations):
        trial = list(legs)
        for n in range(len(trial)):
            trial = _best_flight(ctx, trial, n, "total", drain_between)
        for n in range(len(trial)):
            trial = _search_location(ctx, trial, n, "total", drain_between)
        T_new = ctx.total_time(trial, drain_between)
        if not T_new < T:
            break
        legs, T = trial, T_new
        history.append(int(T))
    return legs, history


def itlto(scenario: ScenarioConfig, cfg: PlannerConfig | None = None, *, ctx: Mission | None = None,
          start: MissionPlan | None = None) -> MissionPlan:
    """Alternate flight-time enumeration and sensing-location search until T stops falling."""
    ctx = ctx or Mission(scenario, cfg)
    try:
        legs = legs_of(start) if start is not None else initial_legs(ctx)
    except PlanningError as exc:
        raise ScenarioInfeasibleError(str(exc)) from exc
    legs, history = descend(ctx, legs)
    return ctx.build("itlto", legs, history=history)
