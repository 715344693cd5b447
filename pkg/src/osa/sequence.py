"""Sequential retrieval: draw a target among the objects still on the shelf,
clear it optimally, take it out, repeat until the shelf is empty."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

from .planner import (
    DEFAULT_BUDGET,
    REMOVE,
    Action,
    RetrievalPlan,
    State,
    apply_action,
    initial_state,
    non_preemptive_actions,
    plan_from_state,
)
from .rng import Xoshiro256
from .shelf import Arrangement, Cell, ProblemInstance, ShelfError

TRACE_SCHEMA = 1


@dataclass(frozen=True)
class EpisodeStep:
    target: int
    plan: RetrievalPlan
    # moves actually carried out; equals plan.actions unless the plan fell back
    executed: List[Action]
    removed: List[int]
    post_state: Dict[int, Cell]


@dataclass
class EpisodeTrace:
    seed: int
    initial: Dict[int, Cell]
    steps: List[EpisodeStep] = field(default_factory=list)
    cumulative_cost: List[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "schema": TRACE_SCHEMA,
            "seed": self.seed,
            "initial": {str(l): list(c) for l, c in sorted(self.initial.items())},
            "steps": [
                {
                    "target": st.target,
                    "plan": st.plan.to_dict(),
                    "executed": [a.to_dict() for a in st.executed],
                    "removed": st.removed,
                    "post_state": {str(l): list(c) for l, c in sorted(st.post_state.items())},
                }
                for st in self.steps
            ],
            "cumulative_cost": self.cumulative_cost,
        }


def _draw(rng: Xoshiro256, instance: ProblemInstance, remaining: Sequence[int]) -> int:
    """Inverse-CDF draw over ascending ids, renormalized to ``remaining``."""
    weights = [instance.obj(l).p for l in remaining]
    total = math.fsum(weights)
    u = rng.random()
    if total <= 0:
        return remaining[min(int(u * len(remaining)), len(remaining) - 1)]
    acc = 0.0
    for l, w in zip(remaining, weights):
        acc += w / total
        if u < acc:
            return l
    # rounding left u just above the last partial sum
    return next(l for l, w in zip(reversed(remaining), reversed(weights)) if w > 0)


def _snapshot(state: State, instance: ProblemInstance) -> Dict[int, Cell]:
    grid = instance.grid
    return {v: grid.cell_at(k) for k, v in enumerate(state) if v > 0}


def run_episode(
    instance: ProblemInstance,
    arr: Arrangement,
    seed: int,
    budget_per_target: Optional[float] = DEFAULT_BUDGET,
    max_nodes: Optional[int] = None,
) -> EpisodeTrace:
    grid = instance.grid
    state = initial_state(instance, arr)
    rng = Xoshiro256(seed)
    trace = EpisodeTrace(seed, _snapshot(state, instance))
    total = 0.0
    while any(v > 0 for v in state):
        remaining = sorted(v for v in state if v > 0)
        target = _draw(rng, instance, remaining)
        plan = plan_from_state(instance, state, target, budget_per_target, max_nodes)
        executed = plan.actions if plan.exact else non_preemptive_actions(instance, state, target)
        for action in executed:
            state = apply_action(state, action, grid)
        k = state.index(target)
        if any(state[grid.index((grid.cell_at(k)[0], jj))] for jj in range(1, grid.cell_at(k)[1])):
            raise ShelfError(f"plan for {target} left obstacles in front")  # pragma: no cover
        state = state[:k] + (0,) + state[k + 1 :]
        total += plan.total_cost
        removed = [a.object for a in executed if a.kind == REMOVE]
        trace.steps.append(EpisodeStep(target, plan, list(executed), removed, _snapshot(state, instance)))
        trace.cumulative_cost.append(total)
    return trace


def cumulative_cost_curve(traces: Sequence[EpisodeTrace]) -> List[float]:
    """Mean cumulative cost after k retrievals, over traces that got that far."""
    if not traces:
        raise ValueError("no traces")
    longest = max(len(t.cumulative_cost) for t in traces)
    curve = []
    for k in range(longest):
        vals = [t.cumulative_cost[k] for t in traces if len(t.cumulative_cost) > k]
        curve.append(math.fsum(vals) / len(vals))
    return curve
