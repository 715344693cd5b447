"""Optimal retrieval planning with preemptive push / suction / removal moves.

States are flat tuples over the grid (column-major, see
:meth:`ShelfGrid.index`) holding an object id, ``0`` for an empty cell, or a
negative id for an object that may not move (the target and anything behind
it).  A* runs with the sum of push costs of the obstacles currently in front
of the target as heuristic; it never overestimates because each of those
obstacles must be moved at least once.
"""

from __future__ import annotations

import heapq
import time
from dataclasses import dataclass, field
from typing import Dict, List, MutableMapping, NamedTuple, Optional, Sequence, Tuple

from .shelf import Arrangement, Cell, ProblemInstance, ShelfError, ShelfGrid, weighted_sum
from .surrogate import surrogate_retrieval_cost

State = Tuple[int, ...]

PUSH = "push"
SUCTION = "suction"
REMOVE = "remove"

DEFAULT_BUDGET = 60.0

EXACT = "exact"
FALLBACK = "fallback_surrogate"


@dataclass(frozen=True)
class Action:
    kind: str
    object: int
    source: Cell
    target: Optional[Cell]
    cost: float

    @property
    def direction(self) -> Optional[int]:
        if self.kind != PUSH or self.target is None:
            return None
        return self.target[0] - self.source[0]

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "object": self.object,
            "from": list(self.source),
            "to": list(self.target) if self.target else None,
            "cost": self.cost,
        }


@dataclass
class RetrievalPlan:
    target: int
    actions: List[Action]
    total_cost: float
    method: str
    nodes_expanded: int
    elapsed: float
    root_heuristic: float = 0.0

    @property
    def exact(self) -> bool:
        return self.method == EXACT

    def to_dict(self) -> dict:
        return {
            "target": self.target,
            "method": self.method,
            "total_cost": self.total_cost,
            "nodes_expanded": self.nodes_expanded,
            "root_heuristic": self.root_heuristic,
            "actions": [a.to_dict() for a in self.actions],
        }


class ExpectedCost(NamedTuple):
    total: float
    per_object: Dict[int, RetrievalPlan]
    any_fallback: bool


class SearchBudgetExceeded(Exception):
    pass


# raw action: (kind, label, source index, destination index or -1, cost)
RawAction = Tuple[str, int, int, int, float]


class _Layout:
    """Grid-shaped constants shared by every expansion."""

    __slots__ = ("m_x", "m_y", "c_push", "c_suction", "c_removal")

    def __init__(self, instance: ProblemInstance):
        self.m_x = instance.m_x
        self.m_y = instance.m_y
        self.c_push = [0.0] + [o.c_push for o in instance.objects]
        self.c_suction = [0.0] + [o.c_suction for o in instance.objects]
        self.c_removal = instance.c_removal


def _successors(state: State, lay: _Layout) -> List[Tuple[RawAction, State]]:
    m_x, m_y = lay.m_x, lay.m_y
    lead = [0] * m_x  # leading empty cells per column
    fronts = []
    for col in range(m_x):
        base = col * m_y
        j = 0
        while j < m_y and state[base + j] == 0:
            j += 1
        lead[col] = j
        if j < m_y and state[base + j] > 0:
            fronts.append((state[base + j], col, j))
    fronts.sort()
    out: List[Tuple[RawAction, State]] = []
    for label, col, j in fronts:
        src = col * m_y + j
        cp = lay.c_push[label]
        cs = lay.c_suction[label]
        for dc in (-1, 1):
            nc = col + dc
            if 0 <= nc < m_x:
                dst = nc * m_y + j
                if state[dst] == 0:
                    s = list(state)
                    s[src] = 0
                    s[dst] = label
                    out.append(((PUSH, label, src, dst, cp), tuple(s)))
        for c2 in range(m_x):
            base = c2 * m_y
            if c2 == col:
                # lifting the object opens the cells directly behind it
                stop = j + 1
                while stop < m_y and state[base + stop] == 0:
                    stop += 1
                rows = [r for r in range(stop) if r != j]
            else:
                rows = range(lead[c2])
            for r in rows:
                dst = base + r
                s = list(state)
                s[src] = 0
                s[dst] = label
                out.append(((SUCTION, label, src, dst, cs), tuple(s)))
        s = list(state)
        s[src] = 0
        out.append(((REMOVE, label, src, -1, cs + lay.c_removal), tuple(s)))
    return out


def _astar(
    start: State,
    front: Sequence[int],
    lay: _Layout,
    budget: Optional[float],
    max_nodes: Optional[int] = None,
) -> Tuple[float, List[RawAction], int, float]:
    """Returns ``(cost, raw actions, nodes expanded, root heuristic)`` or
    raises :class:`SearchBudgetExceeded`."""
    c_push = lay.c_push

    def h(s: State) -> float:
        total = 0.0
        for k in front:
            v = s[k]
            if v > 0:
                total += c_push[v]
        return total

    def is_goal(s: State) -> bool:
        for k in front:
            if s[k] != 0:
                return False
        return True

    h0 = h(start)
    deadline = None if budget is None else time.perf_counter() + budget
    best_g: Dict[State, float] = {start: 0.0}
    parent: Dict[State, Tuple[State, RawAction]] = {}
    heap = [(h0, -0.0, start)]
    closed = set()
    expanded = 0
    while heap:
        f, neg_g, s = heapq.heappop(heap)
        g = -neg_g
        if s in closed:
            continue
        if g > best_g[s]:
            continue
        if is_goal(s):
            actions = []
            cur = s
            while cur in parent:
                prev, act = parent[cur]
                actions.append(act)
                cur = prev
            actions.reverse()
            return g, actions, expanded, h0
        closed.add(s)
        expanded += 1
        if max_nodes is not None and expanded > max_nodes:
            raise SearchBudgetExceeded
        if deadline is not None and expanded % 128 == 0 and time.perf_counter() > deadline:
            raise SearchBudgetExceeded
        for act, nxt in _successors(s, lay):
            if nxt in closed:
                continue
            ng = g + act[4]
            old = best_g.get(nxt)
            if old is None or ng < old:
                best_g[nxt] = ng
                parent[nxt] = (s, act)
                heapq.heappush(heap, (ng + h(nxt), -ng, nxt))
    raise ShelfError("no retrieval plan exists")  # pragma: no cover - removal always succeeds


def initial_state(instance: ProblemInstance, arr: Arrangement) -> State:
    arr.validate(instance.grid, instance.n)
    grid = instance.grid
    s = [0] * grid.size
    for l, c in arr.items():
        s[grid.index(c)] = l
    return tuple(s)


def _pin_target(state: State, grid: ShelfGrid, cell: Cell) -> Tuple[State, List[int]]:
    """Mark the target and everything behind it immobile; return the state
    and the flat indices in front of the target."""
    i, j = cell
    s = list(state)
    for jj in range(j, grid.m_y + 1):
        k = grid.index((i, jj))
        if s[k] > 0:
            s[k] = -s[k]
    front = [grid.index((i, jj)) for jj in range(1, j)]
    return tuple(s), front


def _to_action(raw: RawAction, grid: ShelfGrid) -> Action:
    kind, label, src, dst, cost = raw
    return Action(kind, label, grid.cell_at(src), None if dst < 0 else grid.cell_at(dst), cost)


def legal_actions(state: State, instance: ProblemInstance, target: Optional[int] = None) -> List[Action]:
    """Every legal move from ``state`` (object ids, 0 = empty).  The target,
    if given, and objects behind it are never moved."""
    grid = instance.grid
    if target is not None:
        try:
            k = state.index(target)
        except ValueError:
            raise ShelfError(f"target {target} is not on the shelf") from None
        state, _ = _pin_target(state, grid, grid.cell_at(k))
    return [_to_action(raw, grid) for raw, _ in _successors(tuple(state), _Layout(instance))]


def apply_action(state: State, action: Action, grid: ShelfGrid) -> State:
    """Transition used for plan replay; raises on an illegal move."""
    s = list(state)
    src = grid.index(action.source)
    if s[src] != action.object:
        raise ShelfError(f"object {action.object} is not at {action.source}")
    i, j = action.source
    if any(s[grid.index((i, jj))] for jj in range(1, j)):
        raise ShelfError(f"object {action.object} is not accessible")
    s[src] = 0
    if action.kind == REMOVE:
        return tuple(s)
    if action.target is None or not grid.contains(action.target):
        raise ShelfError("destination out of bounds")
    dst = grid.index(action.target)
    if s[dst]:
        raise ShelfError(f"destination {action.target} is occupied")
    ti, tj = action.target
    if action.kind == PUSH:
        if tj != j or abs(ti - i) != 1:
            raise ShelfError("push must move one cell sideways")
    elif action.kind == SUCTION:
        if any(s[grid.index((ti, jj))] for jj in range(1, tj)):
            raise ShelfError(f"suction destination {action.target} is blocked in front")
    else:
        raise ShelfError(f"unknown action kind {action.kind!r}")
    s[dst] = action.object
    return tuple(s)


def is_cleared(state: State, grid: ShelfGrid, target: int) -> bool:
    i, j = grid.cell_at(state.index(target))
    return all(state[grid.index((i, jj))] == 0 for jj in range(1, j))


def plan_retrieval(
    instance: ProblemInstance,
    arr: Arrangement,
    target: int,
    budget: Optional[float] = DEFAULT_BUDGET,
    max_nodes: Optional[int] = None,
) -> RetrievalPlan:
    """Cheapest action sequence clearing every obstacle in front of
    ``target``.  If the search runs out of time (or nodes) the plan falls back
    to the surrogate price of the non-preemptive clearing, with no actions."""
    instance.obj(target)
    return plan_from_state(instance, initial_state(instance, arr), target, budget, max_nodes)


def plan_from_state(
    instance: ProblemInstance,
    state: State,
    target: int,
    budget: Optional[float] = DEFAULT_BUDGET,
    max_nodes: Optional[int] = None,
) -> RetrievalPlan:
    """Like :func:`plan_retrieval` but from a raw state, which may lack some
    of the instance's objects (already retrieved or removed)."""
    instance.obj(target)
    if budget is not None and budget <= 0:
        raise ValueError("budget must be positive")
    grid = instance.grid
    try:
        cell = grid.cell_at(state.index(target))
    except ValueError:
        raise ShelfError(f"target {target} is not on the shelf") from None
    start, front = _pin_target(state, grid, cell)
    t0 = time.perf_counter()
    try:
        cost, raw, expanded, h0 = _astar(start, front, _Layout(instance), budget, max_nodes)
    except SearchBudgetExceeded:
        fallback = _surrogate_from_state(instance, state, target)
        h0 = sum(instance.obj(start[k]).c_push for k in front if start[k] > 0)
        return RetrievalPlan(target, [], fallback, FALLBACK, -1, time.perf_counter() - t0, h0)
    actions = [_to_action(r, grid) for r in raw]
    return RetrievalPlan(target, actions, cost, EXACT, expanded, time.perf_counter() - t0, h0)


def _surrogate_from_state(instance: ProblemInstance, state: State, target: int) -> float:
    grid = instance.grid
    present = sorted(v for v in state if v > 0)
    if len(present) == instance.n:
        arr = Arrangement(tuple(grid.cell_at(state.index(l)) for l in range(1, instance.n + 1)))
        return surrogate_retrieval_cost(instance, arr, target)[0]
    objs = [instance.obj(l) for l in present]
    sub = ProblemInstance.create(
        grid.m_x,
        grid.m_y,
        [1.0] * len(objs),
        [o.c_push for o in objs],
        [o.c_suction for o in objs],
        instance.c_removal,
    )
    arr = Arrangement(tuple(grid.cell_at(state.index(l)) for l in present))
    return surrogate_retrieval_cost(sub, arr, present.index(target) + 1)[0]


def non_preemptive_actions(instance: ProblemInstance, state: State, target: int) -> List[Action]:
    """A concrete clearing that only touches the obstacles in front of
    ``target``, front to back: push sideways if a neighbour is free, else
    suction to the first free cell with a clear front outside the target's
    column, else remove."""
    grid = instance.grid
    s = list(state)
    ti, tj = grid.cell_at(s.index(target))
    actions: List[Action] = []
    for j in range(1, tj):
        k = grid.index((ti, j))
        l = s[k]
        if not l:
            continue
        o = instance.obj(l)
        action = None
        for ni in (ti - 1, ti + 1):
            if 1 <= ni <= grid.m_x and not s[grid.index((ni, j))]:
                action = Action(PUSH, l, (ti, j), (ni, j), o.c_push)
                break
        if action is None:
            for c in grid.cells():
                if c[0] == ti or s[grid.index(c)]:
                    continue
                if any(s[grid.index((c[0], jj))] for jj in range(1, c[1])):
                    continue
                action = Action(SUCTION, l, (ti, j), c, o.c_suction)
                break
        if action is None:
            action = Action(REMOVE, l, (ti, j), None, o.c_suction + instance.c_removal)
        s = list(apply_action(tuple(s), action, grid))
        actions.append(action)
    return actions


def expected_cost(
    instance: ProblemInstance,
    arr: Arrangement,
    budget_per_target: Optional[float] = DEFAULT_BUDGET,
    max_nodes: Optional[int] = None,
) -> ExpectedCost:
    plans = {
        l: plan_retrieval(instance, arr, l, budget_per_target, max_nodes)
        for l in range(1, instance.n + 1)
    }
    total = weighted_sum((o.p for o in instance.objects), (plans[l].total_cost for l in range(1, instance.n + 1)))
    return ExpectedCost(total, plans, any(not p.exact for p in plans.values()))


@dataclass
class CostOracle:
    """Memoized exact retrieval costs for one instance.

    Objects with identical (push, suction) costs are interchangeable as
    obstacles and everything from the target backwards is inert, so states are
    canonicalized before lookup.  Used by exhaustive true-cost searches.
    """

    instance: ProblemInstance
    budget: Optional[float] = None
    cache: MutableMapping[State, float] = field(default_factory=dict)
    searches: int = 0

    def __post_init__(self):
        reps: Dict[Tuple[float, float], int] = {}
        self._rep = [0]
        for o in self.instance.objects:
            self._rep.append(reps.setdefault((o.c_push, o.c_suction), o.id))
        self._layout = _Layout(self.instance)

    def cost(self, state: State, target_cell: Cell) -> float:
        grid = self.instance.grid
        i, j = target_cell
        if j == 1:
            return 0.0
        rep = self._rep
        s = [rep[v] if v > 0 else v for v in state]
        base = (i - 1) * grid.m_y
        for jj in range(j - 1, grid.m_y):
            if s[base + jj]:
                s[base + jj] = -1
        front = list(range(base, base + j - 1))
        if all(s[k] == 0 for k in front):
            return 0.0
        key = tuple(s)
        hit = self.cache.get(key)
        if hit is not None:
            return hit
        self.searches += 1
        value, _, _, _ = _astar(key, front, self._layout, self.budget)
        self.cache[key] = value
        return value

    def expected(self, arr: Arrangement) -> float:
        state = initial_state(self.instance, arr)
        return weighted_sum((o.p for o in self.instance.objects), (self.cost(state, c) for _, c in arr.items()))
