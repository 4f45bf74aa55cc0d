"""Comparison planners evaluated under the same plan contract as ITLTO."""
from __future__ import annotations

import math

from .config import ScenarioConfig
from .errors import PlanningError, ScenarioInfeasibleError
from .planner import (
    MissionPlan,
    Mission,
    SensingPlan,
    FlightSegment,
    _best_flight,
    _search_location,
    _task_cost,
    above_target,
    descend,
    initial_legs,
    residual_slots,
)


def plan_msm(scenario: ScenarioConfig, ctx: Mission | None = None, z: float | None = None) -> MissionPlan:
    """Full speed straight to a point right above each target, sense there.

    If sensing cannot reach p_min from the arrival buffer, the UAV hovers and
    drains before it starts sensing; those slots count towards T.
    """
    ctx = ctx or Mission(scenario)
    z = ctx.z_min if z is None else max(z, ctx.z_min)
    segments, sensing = [], []
    prev, q = ctx.start, 0.0
    for n, t in enumerate(ctx.tasks):
        loc = above_target(t, z)
        speeds, rates = ctx.line(prev, loc).full_speed()
        q_arr = max(q - sum(rates), 0.0)
        segments.append(FlightSegment(prev, loc, speeds, q, q_arr, ctx.rate(loc), rates))
        rate = ctx.rate(loc)
        hover, q_s = 0, q_arr
        while True:
            try:
                delta = ctx.sensing_time(n, loc, q_s)
                break
            except PlanningError:
                if q_s <= 0 or rate <= 0:
                    raise ScenarioInfeasibleError(f"task {t.id} infeasible even with an empty buffer")
                hover += 1
                q_s = max(q_s - rate, 0.0)
        sensing.append(SensingPlan(t.id, loc, delta, ctx.completion_prob(n, loc, q_s, delta),
                                   ctx.required(n, loc), q_s, rate, hover_before=hover))
        q = ctx.sense_buffer(q_s, rate, delta)
        prev = loc
    res = residual_slots(q, ctx.rate(prev))
    plan = MissionPlan("msm", tuple(segments), tuple(sensing), res, final_buffer=q)
    return MissionPlan(plan.algorithm, plan.segments, plan.sensing, res, (plan.total,), q)


def plan_greedy(scenario: ScenarioConfig, ctx: Mission | None = None) -> MissionPlan:
    """One forward pass; each task minimizes its own flight plus sensing slots, ignoring later tasks."""
    ctx = ctx or Mission(scenario)
    try:
        legs = initial_legs(ctx)
    except PlanningError as exc:
        raise ScenarioInfeasibleError(str(exc)) from exc
    last = len(legs) - 1
    for n in range(len(legs)):
        # the last task finishes when the buffer is empty, so its own time includes the drain
        objective = "total" if n == last else "task"
        cost = (lambda ls: ctx.total_time(ls)) if n == last else (lambda ls, n=n: _task_cost(ctx, ls, n))
        best = cost(legs)
        for _ in range(ctx.planner.max_outer_iterations):
            trial = _best_flight(ctx, legs, n, objective)
            trial = _search_location(ctx, trial, n, objective)
            c = cost(trial)
            if not c < best:
                break
            legs, best = trial, c
    plan = ctx.build("greedy", legs)
    if not math.isfinite(plan.total):
        raise ScenarioInfeasibleError("greedy pass produced an infeasible plan")
    return plan


def plan_nonbuffer(scenario: ScenarioConfig, ctx: Mission | None = None) -> MissionPlan:
    """Empty the buffer by hovering after every task before flying on."""
    ctx = ctx or Mission(scenario)
    try:
        legs = initial_legs(ctx)
    except PlanningError as exc:
        raise ScenarioInfeasibleError(str(exc)) from exc
    legs, history = descend(ctx, legs, drain_between=True)
    return ctx.build("nonbuffer", legs, drain_between=True, history=history)
