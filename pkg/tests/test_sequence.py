import json
import math
import statistics

import pytest

from osa.planner import apply_action, initial_state, plan_from_state
from osa.sequence import cumulative_cost_curve, run_episode
from osa.shelf import Arrangement, ProblemInstance


def test_single_object_episode():
    inst = ProblemInstance.create(2, 2, [1], [1], [2], 10.0)
    trace = run_episode(inst, Arrangement(((1, 2),)), seed=3)
    assert [s.target for s in trace.steps] == [1]
    assert trace.cumulative_cost == [0.0]


def test_single_column_two_cases():
    inst = ProblemInstance.create(1, 2, [1, 1], [1, 1], [2, 5], 10.0)
    arr = Arrangement(((1, 1), (1, 2)))
    totals = set()
    for seed in range(40):
        trace = run_episode(inst, arr, seed)
        first = trace.steps[0].target
        expected = 0.0 if first == 1 else 2 + 10.0
        assert trace.cumulative_cost[-1] == expected
        totals.add(trace.cumulative_cost[-1])
    assert totals == {0.0, 12.0}


def exact_expected_total(inst, arr):
    """Enumerate every target order with its sequential sampling
    probability; re-plan optimally from the state each order produces."""
    def rec(state, remaining):
        if not remaining:
            return 0.0
        mass = math.fsum(inst.obj(l).p for l in remaining)
        total = 0.0
        for l in remaining:
            w = inst.obj(l).p / mass
            plan = plan_from_state(inst, state, l, None)
            s = state
            for a in plan.actions:
                s = apply_action(s, a, inst.grid)
            s = tuple(0 if v == l else v for v in s)
            rest = [m for m in remaining if m != l and m in s]
            total += w * (plan.total_cost + rec(s, rest))
        return total

    state = initial_state(inst, arr)
    return rec(state, list(range(1, inst.n + 1)))


def test_monte_carlo_matches_exact_enumeration():
    inst = ProblemInstance.create(2, 2, [3, 2, 1], [1, 2, 1], [2, 3, 1], 10.0)
    arr = Arrangement(((1, 2), (1, 1), (2, 2)))
    exact = exact_expected_total(inst, arr)
    runs = [run_episode(inst, arr, seed).cumulative_cost[-1] for seed in range(1000)]
    mean = statistics.fmean(runs)
    se = statistics.stdev(runs) / math.sqrt(len(runs))
    assert abs(mean - exact) <= 3 * se


def test_removed_objects_leave_the_pool():
    inst = ProblemInstance.create(1, 3, [1, 1, 1], [1, 1, 1], [1, 1, 1], 5.0)
    arr = Arrangement(((1, 1), (1, 2), (1, 3)))
    for seed in range(30):
        trace = run_episode(inst, arr, seed)
        targets = [s.target for s in trace.steps]
        removed = {l for s in trace.steps for l in s.removed}
        assert not set(targets) & removed
        assert set(targets) | removed == {1, 2, 3}


def test_trace_is_deterministic_and_serializable():
    inst = ProblemInstance.create(2, 3, [4, 3, 2, 1], [1, 2, 3, 4], [2, 3, 4, 5], 10.0)
    arr = Arrangement(((1, 2), (1, 1), (2, 3), (2, 1)))
    a = json.dumps(run_episode(inst, arr, 11).to_dict(), sort_keys=True)
    b = json.dumps(run_episode(inst, arr, 11).to_dict(), sort_keys=True)
    assert a == b


def test_curves():
    inst = ProblemInstance.create(1, 2, [1, 1], [1, 1], [2, 5], 10.0)
    arr = Arrangement(((1, 1), (1, 2)))
    t = run_episode(inst, arr, 0)
    assert cumulative_cost_curve([t]) == t.cumulative_cost
    assert cumulative_cost_curve([t, t]) == t.cumulative_cost
    with pytest.raises(ValueError):
        cumulative_cost_curve([])


def test_single_column_closed_form_curve():
    # back object drawn first with probability 1/2 and then costs 2 + 10
    inst = ProblemInstance.create(1, 2, [1, 1], [1, 1], [2, 5], 10.0)
    arr = Arrangement(((1, 1), (1, 2)))
    traces = [run_episode(inst, arr, s) for s in range(2000)]
    curve = cumulative_cost_curve(traces)
    assert curve[0] == pytest.approx(6.0, abs=3 * 6.0 / math.sqrt(2000))
