"""Slot-level mission replay and a finite-buffer queue simulator.

The deterministic replay is the plan auditor: it walks every slot, applies
the drain rule in flight and the mean net inflow while sensing, and raises
:class:`PlanInvalidError` on any broken constraint.

The stochastic replay treats each sensing phase as an M/D/1/K queue measured
in bits.  Arrivals are Poisson in continuous time; the head packet drains at
the link rate and a packet mid-transmission keeps its remaining bits across
slot boundaries.  While the buffer is full, arrivals are blocked until the next
departure, so that stretch is skipped in one step with a Poisson count of the
blocked packets.  Slot binning for the trace uses a second generator;
outcomes come only from the first.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .config import ScenarioConfig
from .core import Position3
from .errors import PlanInvalidError
from .planner import Mission, MissionPlan, residual_slots
from .queueing import QueueParams, completion_index

MODES = ("fly", "sense", "drain")
TRACE_COLUMNS = ("slot", "x", "y", "z", "rate_bits", "buffer_bits", "mode", "accepted", "blocked")
_TOL_BITS = 1e-6


@dataclass
class SimTrace:
    slot: list[int] = field(default_factory=list)
    x: list[float] = field(default_factory=list)
    y: list[float] = field(default_factory=list)
    z: list[float] = field(default_factory=list)
    rate_bits: list[float] = field(default_factory=list)
    buffer_bits: list[float] = field(default_factory=list)
    mode: list[str] = field(default_factory=list)
    accepted: list[float] = field(default_factory=list)
    blocked: list[float] = field(default_factory=list)
    residual: int = 0
    phase_counts: list = field(default_factory=list)   # (accepted, blocked) per sensing phase

    def __len__(self):
        return len(self.slot)

    @property
    def total(self) -> int:
        return len(self.slot)

    def add(self, pos: Position3, rate: float, buf: float, mode: str, acc: float = 0, blk: float = 0):
        self.slot.append(len(self.slot) + 1)
        self.x.append(pos.x)
        self.y.append(pos.y)
        self.z.append(pos.z)
        self.rate_bits.append(rate)
        self.buffer_bits.append(buf)
        self.mode.append(mode)
        self.accepted.append(acc)
        self.blocked.append(blk)

    def rows(self):
        return zip(*(getattr(self, c) for c in TRACE_COLUMNS))

    def buffer_array(self) -> np.ndarray:
        return np.asarray(self.buffer_bits, dtype=float)


def trace_to_csv(trace: SimTrace, path=None) -> str:
    """Serialize ``trace``; also writes it when ``path`` is given."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_COLUMNS)
    for row in trace.rows():
        w.writerow([repr(v) if isinstance(v, float) else v for v in row])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


@dataclass(frozen=True)
class McReport:
    replications: int
    success_freq: tuple[float, ...]
    mean_accepted: tuple[float, ...]
    blocking_fraction: tuple[float, ...]
    analytic_prob: tuple[float, ...]

    def min_margin(self, p_min: float) -> float:
        return min(self.success_freq) - p_min


# deterministic -------------------------------------------------------------
def _fail(msg: str):
    raise PlanInvalidError(msg)


def replay_deterministic(plan: MissionPlan, scenario: ScenarioConfig, ctx: Mission | None = None) -> SimTrace:
    """Replay ``plan`` slot by slot and audit it."""
    ctx = ctx or Mission(scenario)
    tr = SimTrace()
    if not plan.segments:
        return tr
    cap = ctx.cap_bits * (1 + 1e-12) + _TOL_BITS
    v_tol = ctx.v_max * (1 + 1e-9)
    lam_bits = ctx.lam * ctx.rs
    if len(plan.segments) != len(plan.sensing) or len(plan.sensing) != len(ctx.tasks):
        _fail("plan does not cover every task exactly once")
    q, prev = 0.0, ctx.start
    for n, (seg, sp) in enumerate(zip(plan.segments, plan.sensing)):
        if seg.start != prev:
            _fail(f"segment {n + 1} does not start where the previous phase ended")
        if sp.task_id != ctx.tasks[n].id:
            _fail("tasks visited out of order")
        if any(v < -1e-12 or v > v_tol for v in seg.speeds):
            _fail(f"segment {n + 1} breaks the speed bound")
        if abs(sum(seg.speeds) - seg.length) > 1e-6:
            _fail(f"segment {n + 1} speeds do not cover its length")
        if seg.end != sp.location or sp.location.z < ctx.z_min - 1e-9:
            _fail(f"sensing location {n + 1} is inconsistent or below z_min")
        for pos, r_plan in zip(seg.positions(), seg.slot_rates):
            r = ctx.rate(pos) if pos == seg.end else float(ctx.line(seg.start, seg.end).rate_at(
                min(pos.distance(seg.start), seg.length)))
            if abs(r - r_plan) > 1e-6 * max(r, 1.0):
                _fail(f"segment {n + 1} slot rate does not match its position")
            q = max(q - r_plan, 0.0)
            if q > cap:
                _fail("buffer bound exceeded in flight")
            tr.add(pos, r_plan, q, "fly")
        loc, rate = sp.location, ctx.rate(sp.location)
        for _ in range(sp.hover_before):
            q = max(q - rate, 0.0)
            tr.add(loc, rate, q, "drain")
        if abs(q - sp.arrival_buffer) > _TOL_BITS * max(1.0, q):
            _fail(f"task {sp.task_id}: arrival buffer differs from the plan")
        if sp.delta < 1:
            _fail(f"task {sp.task_id}: sensing time below one slot")
        p = ctx.completion_prob(n, loc, q, sp.delta)
        if p < ctx.p_min:
            _fail(f"task {sp.task_id}: completion probability {p:.4f} below p_min")
        for _ in range(sp.delta):
            q = min(max(q + lam_bits - rate, 0.0), ctx.cap_bits)
            tr.add(loc, rate, q, "sense", ctx.lam, 0.0)
        for _ in range(sp.drain_after):
            q = max(q - rate, 0.0)
            if q > cap:
                _fail("buffer bound exceeded while draining")
            tr.add(loc, rate, q, "drain")
        if sp.drain_after and q > _TOL_BITS:
            _fail(f"task {sp.task_id}: buffer not empty after the drain hover")
        prev = loc
    rate = ctx.rate(prev)
    slots = 0
    while q > _TOL_BITS:
        q = max(q - rate, 0.0)
        slots += 1
        tr.add(prev, rate, q, "drain")
    if slots != plan.residual:
        _fail(f"residual drain takes {slots} slots, plan says {plan.residual}")
    if tr.total != plan.total:
        _fail(f"trace has {tr.total} slots, plan says {plan.total}")
    tr.residual = slots
    return tr


# stochastic ----------------------------------------------------------------
@dataclass
class _PhaseResult:
    n_end: int
    bits_end: float
    accepted: int
    blocked: int
    events: list = field(default_factory=list)      # (time, bits after, packets after)
    arrivals: list = field(default_factory=list)
    blocked_spans: list = field(default_factory=list)


def _bits(n: int, head: float, rs: float) -> float:
    return (n - 1) * rs + max(head, 0.0) if n else 0.0


def sense_phase(rng: np.random.Generator, q_bits: float, rate: float, rs: float, K: int,
                lam: float, horizon: float, record: bool = False) -> _PhaseResult:
    """Run the bit-level M/D/1/K queue for ``horizon`` slots from ``q_bits``."""
    n = min(max(math.ceil(q_bits / rs - 1e-12), 0), K)
    head = min(q_bits - (n - 1) * rs, rs) if n else 0.0
    t, acc, blk = 0.0, 0, 0
    res = _PhaseResult(0, 0.0, 0, 0)
    if record:
        res.events.append((0.0, _bits(n, head, rs), n))
    inv = 1.0 / lam
    while t < horizon:
        if n >= K:
            td = t + head / rate
            end = min(td, horizon)
            b = int(rng.poisson(lam * (end - t)))
            blk += b
            if record and b:
                res.blocked_spans.append((t, end, b))
            if td >= horizon:
                head -= rate * (horizon - t)
                t = horizon
                break
            t, n, head = td, n - 1, rs
        else:
            ta = t + rng.exponential(inv)
            td = t + head / rate if n else math.inf
            if min(ta, td) >= horizon:
                if n:
                    head -= rate * (horizon - t)
                t = horizon
                break
            if ta < td:
                head = head - rate * (ta - t) if n else rs
                n += 1
                acc += 1
                t = ta
                if record:
                    res.arrivals.append(ta)
            else:
                t = td
                n -= 1
                head = rs if n else 0.0
        if record:
            res.events.append((t, _bits(n, head, rs), n))
    res.n_end, res.bits_end, res.accepted, res.blocked = n, _bits(n, head, rs), acc, blk
    return res


def _bin_phase(res: _PhaseResult, delta: int, rate: float, aux: np.random.Generator):
    ev_t = np.array([e[0] for e in res.events])
    ev_b = np.array([e[1] for e in res.events])
    ev_n = np.array([e[2] for e in res.events])
    ks = np.arange(1, delta + 1, dtype=float)
    idx = np.searchsorted(ev_t, ks, side="right") - 1
    bits = np.where(ev_n[idx] > 0, np.maximum(ev_b[idx] - rate * (ks - ev_t[idx]), 0.0), 0.0)
    bits[-1] = res.bits_end
    edges = np.arange(delta + 1, dtype=float)
    acc = np.histogram(res.arrivals, bins=edges)[0] if res.arrivals else np.zeros(delta, int)
    blk = np.zeros(delta, dtype=int)
    for a, b, c in res.blocked_spans:
        blk += np.histogram(aux.uniform(a, b, c), bins=edges)[0]
    return bits, acc, blk


def _rngs(seed):
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    main, aux = ss.spawn(2)
    return np.random.Generator(np.random.PCG64(main)), np.random.Generator(np.random.PCG64(aux))


CARRY_MODES = ("plan", "random")


def replay_stochastic(plan: MissionPlan, scenario: ScenarioConfig, seed, ctx: Mission | None = None,
                      record: bool = True, carry: str = "plan") -> tuple[SimTrace, list[bool]]:
    """One random mission; task n succeeds when its final occupancy reaches the completion index.

    With ``carry="plan"`` every sensing phase starts from the planned arrival
    buffer and flight follows the mean-flow levels, so flight slots match the
    deterministic replay exactly and each task tests its own completion
    probability.  ``carry="random"`` hands the simulated end-of-phase buffer to
    the next flight instead.
    """
    if carry not in CARRY_MODES:
        raise ValueError(f"carry must be one of {CARRY_MODES}")
    ctx = ctx or Mission(scenario)
    rng, aux = _rngs(seed)
    tr = SimTrace()
    ok: list[bool] = []
    q = 0.0
    for n, (seg, sp) in enumerate(zip(plan.segments, plan.sensing)):
        positions = seg.positions() if record else ()
        for i, r in enumerate(seg.slot_rates):
            q = max(q - r, 0.0)
            if record:
                tr.add(positions[i], r, q, "fly")
        loc, rate = sp.location, sp.rate
        for _ in range(sp.hover_before):
            q = max(q - rate, 0.0)
            if record:
                tr.add(loc, rate, q, "drain")
        m = completion_index(sp.required_packets, q, rate, sp.delta, ctx.rs)
        out = sense_phase(rng, q, rate, ctx.rs, ctx.K, ctx.lam, sp.delta, record)
        ok.append(m <= 0 or out.n_end >= m)
        tr.phase_counts.append((out.accepted, out.blocked))
        if record:
            bits, acc, blk = _bin_phase(out, sp.delta, rate, aux)
            for k in range(sp.delta):
                tr.add(loc, rate, float(bits[k]), "sense", int(acc[k]), int(blk[k]))
        q = out.bits_end if carry == "random" else ctx.sense_buffer(q, rate, sp.delta)
        for _ in range(sp.drain_after):
            q = max(q - rate, 0.0)
            if record:
                tr.add(loc, rate, q, "drain")
    if plan.sensing:
        loc, rate = plan.sensing[-1].location, plan.sensing[-1].rate
        tr.residual = residual_slots(q, rate)
        if record:
            for _ in range(tr.residual):
                q = max(q - rate, 0.0)
                tr.add(loc, rate, q, "drain")
    return tr, ok


def monte_carlo(plan: MissionPlan, scenario: ScenarioConfig, replications: int = 2000, seed=0,
                ctx: Mission | None = None, carry: str = "plan") -> McReport:
    if replications < 1:
        raise ValueError("need at least one replication")
    ctx = ctx or Mission(scenario)
    N = len(plan.sensing)
    succ = np.zeros(N)
    acc = np.zeros(N)
    blk = np.zeros(N)
    for child in np.random.SeedSequence(seed).spawn(replications):
        tr, ok = replay_stochastic(plan, scenario, child, ctx, record=False, carry=carry)
        succ += ok
        for i, (a, b) in enumerate(tr.phase_counts):
            acc[i] += a
            blk[i] += b
    offered = acc + blk
    frac = np.divide(blk, offered, out=np.zeros(N), where=offered > 0)
    return McReport(replications, tuple(succ / replications), tuple(acc / replications),
                    tuple(frac), tuple(s.completion_prob for s in plan.sensing))


@dataclass(frozen=True)
class DesEstimate:
    pi: np.ndarray
    half_width: np.ndarray     # 95% batch-means half-widths
    horizon: float


def mg1k_des_oracle(qp: QueueParams, warmup: float, horizon: float, seed=0, batches: int = 20) -> DesEstimate:
    """Time-average occupancy of the constant-service finite queue by simulation."""
    if horizon <= 0 or warmup < 0:
        raise ValueError("horizon must be positive and warmup non-negative")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    K, lam, X = int(qp.capacity), qp.arrival_rate, qp.service_time
    span = horizon / batches
    occ = np.zeros((batches, K + 1))
    t, n, dep = 0.0, 0, math.inf
    t_end = warmup + horizon
    nxt_arr = rng.exponential(1 / lam)

    def credit(a, b, k):
        # spread time [a, b) at occupancy k over the batches it overlaps
        a, b = max(a, warmup), min(b, t_end)
        while a < b:
            j = min(int((a - warmup) / span), batches - 1)
            hi = min(b, warmup + (j + 1) * span) if j < batches - 1 else b
            occ[j, k] += hi - a
            a = hi

    while t < t_end:
        if n >= K:
            # arrivals are blocked until the departure; memorylessness lets us redraw after it
            credit(t, dep, n)
            t, n = dep, n - 1
            dep = t + X
            nxt_arr = t + rng.exponential(1 / lam)
            continue
        if nxt_arr < dep:
            credit(t, nxt_arr, n)
            t = nxt_arr
            if n == 0:
                dep = t + X
            n += 1
            nxt_arr = t + rng.exponential(1 / lam)
        else:
            credit(t, dep, n)
            t = dep
            n -= 1
            dep = t + X if n else math.inf
    per = occ / occ.sum(axis=1, keepdims=True)
    pi = occ.sum(axis=0) / occ.sum()
    hw = 1.96 * per.std(axis=0, ddof=1) / math.sqrt(batches) if batches > 1 else np.full(K + 1, np.nan)
    return DesEstimate(pi, hw, horizon)


def agreement_table(plans: Sequence[MissionPlan], scenario: ScenarioConfig) -> list[tuple[str, int]]:
    """(algorithm, total slots) after auditing each plan."""
    ctx = Mission(scenario)
    return [(p.algorithm, replay_deterministic(p, scenario, ctx).total) for p in plans]
