"""Arrangement solvers: exhaustive oracle, branch-and-bound, baselines."""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

from .planner import CostOracle, initial_state
from .rng import Xoshiro256
from .shelf import Arrangement, Cell, ProblemInstance, ShelfError, is_dense, removal_free_arrangement
from .surrogate import expected_from_costs, object_costs

SURROGATE = "surrogate"
TRUE_COST = "true_cost"

BRUTEFORCE_LIMIT = 10**7

# prune only when the bound beats the incumbent by more than float noise
_EPS = 1e-9


class SolverError(ValueError):
    pass


class InstanceTooLarge(SolverError):
    pass


class Infeasible(SolverError):
    pass


@dataclass
class SolverConfig:
    objective: str = SURROGATE
    time_budget: float = 500.0
    incumbent_patience: float = 90.0
    no_removal_constraint: bool = False
    rng_seed: int = 0
    fixed: Mapping[int, Cell] = field(default_factory=dict)
    planner_budget: Optional[float] = None
    # work-based limits; unlike the clock they make truncated runs repeatable
    node_limit: Optional[int] = None
    patience_nodes: Optional[int] = None

    def __post_init__(self):
        if self.time_budget <= 0 or self.incumbent_patience <= 0:
            raise SolverError("time budgets must be positive")
        if (self.node_limit is not None and self.node_limit <= 0) or (
            self.patience_nodes is not None and self.patience_nodes <= 0
        ):
            raise SolverError("node limits must be positive")
        if self.objective not in (SURROGATE, TRUE_COST):
            raise SolverError(f"unknown objective {self.objective!r}")


@dataclass
class SolveResult:
    arrangement: Arrangement
    objective_value: float
    proved_optimal: bool
    nodes: int
    elapsed: float


def _check_fixed(instance: ProblemInstance, fixed: Mapping[int, Cell]) -> Dict[int, Cell]:
    pins = {int(l): tuple(c) for l, c in fixed.items()}
    for l, c in pins.items():
        instance.obj(l)
        if not instance.grid.contains(c):
            raise ShelfError(f"pinned cell {c} out of bounds")
    if len(set(pins.values())) != len(pins):
        raise ShelfError("two pinned objects share a cell")
    return pins


def make_evaluator(instance: ProblemInstance, objective: str, planner_budget: Optional[float] = None):
    """Callable mapping an arrangement to its objective value."""
    if objective == SURROGATE:

        def evaluate(arr: Arrangement) -> float:
            occ = [[0] * instance.m_y for _ in range(instance.m_x)]
            for l, (i, j) in arr.items():
                occ[i - 1][j - 1] = l
            y, b = object_costs(instance, occ)
            return expected_from_costs(instance, y, b)

        return evaluate
    if objective == TRUE_COST:
        oracle = CostOracle(instance, planner_budget)
        return oracle.expected
    raise SolverError(f"unknown objective {objective!r}")


def _removal_free(instance: ProblemInstance, arr: Arrangement) -> bool:
    occ = [[0] * instance.m_y for _ in range(instance.m_x)]
    for l, (i, j) in arr.items():
        occ[i - 1][j - 1] = l
    _, b = object_costs(instance, occ)
    return sum(o.p * b[k] for k, o in enumerate(instance.objects)) <= 0


def true_cost_lower_bound(instance: ProblemInstance, arr: Arrangement) -> float:
    """Cheap bound on the exact expected cost: every obstacle is moved at least
    once at push price, and obstacles that cannot fit anywhere else on the
    shelf must be removed."""
    m_x, m_y = instance.m_x, instance.m_y
    objs = instance.objects
    cols: List[List[int]] = [[0] * m_y for _ in range(m_x)]
    for l, (i, j) in arr.items():
        cols[i - 1][j - 1] = l
    per_col = [sum(1 for v in col if v) for col in cols]
    total_objects = arr.n
    total = 0.0
    c_r = instance.c_removal
    for l, (i, j) in arr.items():
        col = cols[i - 1]
        push = 0.0
        k = 0
        for jj in range(j - 1):
            v = col[jj]
            if v:
                push += objs[v - 1].c_push
                k += 1
        if k:
            behind_free = sum(1 for jj in range(j, m_y) if not col[jj])
            others = total_objects - per_col[i - 1]
            forced = others + k - (m_x - 1) * m_y - behind_free
            if forced > 0:
                push += c_r * forced
        total += objs[l - 1].p * push
    return total


def _count_placements(cells: int, n: int) -> int:
    return math.perm(cells, n)


def solve_bruteforce(
    instance: ProblemInstance,
    objective: str = SURROGATE,
    fixed: Optional[Mapping[int, Cell]] = None,
    planner_budget: Optional[float] = None,
    limit: int = BRUTEFORCE_LIMIT,
) -> SolveResult:
    """Global minimizer by enumeration of every injective placement.

    Ties go to the lexicographically smallest placement vector.  The true-cost
    objective visits placements in order of :func:`true_cost_lower_bound` and
    stops once the bound exceeds the incumbent, which keeps the number of A*
    searches manageable on small shelves.
    """
    t0 = time.perf_counter()
    pins = _check_fixed(instance, fixed or {})
    free_objects = [l for l in range(1, instance.n + 1) if l not in pins]
    free_cells = [c for c in instance.grid.cells() if c not in set(pins.values())]
    count = _count_placements(len(free_cells), len(free_objects))
    if count > limit:
        raise InstanceTooLarge(f"{count} placements exceed the enumeration limit {limit}")

    def build(choice: Sequence[Cell]) -> Arrangement:
        placement: List[Optional[Cell]] = [None] * instance.n
        for l, c in pins.items():
            placement[l - 1] = c
        for l, c in zip(free_objects, choice):
            placement[l - 1] = c
        return Arrangement(tuple(placement))  # type: ignore[arg-type]

    evaluate = make_evaluator(instance, objective, planner_budget)
    best_value = math.inf
    best: Optional[Arrangement] = None
    nodes = 0
    if objective == SURROGATE:
        for choice in itertools.permutations(free_cells, len(free_objects)):
            nodes += 1
            arr = build(choice)
            value = evaluate(arr)
            if value < best_value:
                best_value, best = value, arr
    else:
        candidates = []
        for choice in itertools.permutations(free_cells, len(free_objects)):
            arr = build(choice)
            candidates.append((true_cost_lower_bound(instance, arr), arr.placement, arr))
        candidates.sort(key=lambda t: (t[0], t[1]))
        for bound, placement, arr in candidates:
            if bound > best_value + _EPS * max(1.0, abs(best_value)):
                break
            nodes += 1
            value = evaluate(arr)
            if value < best_value or (value == best_value and best is not None and placement < best.placement):
                best_value, best = value, arr
    assert best is not None
    return SolveResult(best, best_value, True, nodes, time.perf_counter() - t0)


class _BranchAndBound:
    """Depth-first search over assignments of objects (descending p) to cells
    (ascending depth, then column)."""

    def __init__(self, instance: ProblemInstance, config: SolverConfig):
        self.inst = instance
        self.cfg = config
        self.m_x, self.m_y = instance.m_x, instance.m_y
        self.pins = _check_fixed(instance, config.fixed)
        self.true_cost = config.objective == TRUE_COST
        self.evaluate = make_evaluator(instance, config.objective, config.planner_budget)
        objs = instance.objects
        self.c_push = [0.0] + [o.c_push for o in objs]
        self.c_suction = [0.0] + [o.c_suction for o in objs]
        self.p = [0.0] + [o.p for o in objs]
        self.order = sorted(
            (l for l in range(1, instance.n + 1) if l not in self.pins),
            key=lambda l: (-self.p[l], l),
        )
        # objects still unassigned at depth k are order[k:], lowest p last
        self.min_push = min((o.c_push for o in objs), default=0.0)
        self.cells = sorted(
            (c for c in instance.grid.cells() if c not in set(self.pins.values())),
            key=lambda c: (c[1], c[0]),
        )
        self.occ = [[0] * self.m_y for _ in range(self.m_x)]
        for l, (i, j) in self.pins.items():
            self.occ[i - 1][j - 1] = l
        self.best_value = math.inf
        self.best: Optional[Arrangement] = None
        self.nodes = 0
        self.timed_out = False
        self.t0 = time.perf_counter()
        self.last_improvement = self.t0
        self.last_improvement_node = 0

    # -- bounds -----------------------------------------------------------
    def lower_bound(self, depth: int) -> float:
        """Bound on the objective of every completion of the current partial
        assignment (``depth`` free objects placed)."""
        occ, m_x, m_y = self.occ, self.m_x, self.m_y
        c_push, c_suction, p = self.c_push, self.c_suction, self.p
        c_r = self.inst.c_removal
        unassigned = len(self.order) - depth

        lead = []
        free_col = []
        free_behind = []
        open_front = 0
        for col in occ:
            j = 0
            while j < m_y and not col[j]:
                j += 1
            lead.append(j)
            fc = 0
            fb = 0
            for jj in range(m_y):
                if not col[jj]:
                    fc += 1
                    if jj > j:
                        fb += 1
            free_col.append(fc)
            free_behind.append(fb)
            if not col[0]:
                open_front += 1
        lead_total = sum(lead)
        behind_total = sum(free_behind)

        total = 0.0
        for i in range(m_x):
            col = occ[i]
            left = occ[i - 1] if i > 0 else None
            right = occ[i + 1] if i + 1 < m_x else None
            y = 0.0
            obstacles = 0
            tuck_ub = 0
            d_other_ub = None
            for j in range(m_y):
                l = col[j]
                if not l:
                    continue
                if obstacles and p[l] > 0:
                    if self.true_cost:
                        cost = y
                    else:
                        if d_other_ub is None:
                            cap = free_col[i] + behind_total - free_behind[i]
                            d_other_ub = lead_total - lead[i] - max(0, unassigned - cap)
                        b = obstacles - tuck_ub - d_other_ub
                        cost = y + (c_r * b if b > 0 else 0.0)
                    total += p[l] * cost
                # this object as an obstacle for those behind it
                left_full = left is None or left[j]
                right_full = right is None or right[j]
                if self.true_cost:
                    y += c_push[l]
                else:
                    y += c_suction[l] if (left_full and right_full) else c_push[l]
                    if j > 0 and not (left_full and right_full):
                        tuck_ub += 1
                obstacles += 1
        if unassigned > open_front:
            blocked = self.order[depth + open_front :]
            total += self.min_push * sum(p[l] for l in blocked)
        return total

    # -- search -----------------------------------------------------------
    def arrangement(self) -> Arrangement:
        placement: List[Optional[Cell]] = [None] * self.inst.n
        for i, col in enumerate(self.occ):
            for j, l in enumerate(col):
                if l:
                    placement[l - 1] = (i + 1, j + 1)
        return Arrangement(tuple(placement))  # type: ignore[arg-type]

    def offer(self, arr: Arrangement) -> bool:
        if self.cfg.no_removal_constraint and not _removal_free(self.inst, arr):
            return False
        value = self.evaluate(arr)
        if value < self.best_value:
            self.best_value = value
            self.best = arr
            self.last_improvement = time.perf_counter()
            self.last_improvement_node = self.nodes
            return True
        return False

    def out_of_time(self) -> bool:
        now = time.perf_counter()
        if now - self.t0 > self.cfg.time_budget or now - self.last_improvement > self.cfg.incumbent_patience:
            self.timed_out = True
        return self.timed_out

    def search(self, depth: int) -> None:
        if self.timed_out:
            return
        self.nodes += 1
        cfg = self.cfg
        if (cfg.node_limit is not None and self.nodes > cfg.node_limit) or (
            cfg.patience_nodes is not None and self.nodes - self.last_improvement_node > cfg.patience_nodes
        ):
            self.timed_out = True
            return
        if self.nodes % 512 == 0 and self.out_of_time():
            return
        if depth == len(self.order):
            self.offer(self.arrangement())
            return
        l = self.order[depth]
        occ = self.occ
        threshold = self.best_value - _EPS * max(1.0, abs(self.best_value)) if self.best_value < math.inf else math.inf
        for i, j in self.candidate_cells(depth):
            col = occ[i - 1]
            if col[j - 1]:
                continue
            col[j - 1] = l
            if self.lower_bound(depth + 1) < threshold or threshold == math.inf:
                if not (self.cfg.no_removal_constraint and self.forced_removal()):
                    self.search(depth + 1)
                    threshold = (
                        self.best_value - _EPS * max(1.0, abs(self.best_value))
                        if self.best_value < math.inf
                        else math.inf
                    )
            col[j - 1] = 0
            if self.timed_out:
                return

    def candidate_cells(self, depth: int) -> Sequence[Cell]:
        if depth == 0 and not self.pins:
            # mirror symmetry: the first object never needs the right half
            half = (self.m_x + 1) // 2
            return [c for c in self.cells if c[0] <= half]
        return self.cells

    def forced_removal(self) -> bool:
        """True when some placed object with positive p already needs a
        removal whatever happens to the free cells."""
        inst = self.inst
        saved = self.lower_bound_removals()
        return saved > 0

    def lower_bound_removals(self) -> float:
        occ, m_x, m_y = self.occ, self.m_x, self.m_y
        unassigned = len(self.order)
        unassigned -= sum(1 for col in occ for v in col if v) - len(self.pins)
        lead, free_col, free_behind = [], [], []
        for col in occ:
            j = 0
            while j < m_y and not col[j]:
                j += 1
            lead.append(j)
            free_col.append(sum(1 for v in col if not v))
            free_behind.append(sum(1 for jj in range(j + 1, m_y) if not col[jj]))
        total = 0.0
        for i in range(m_x):
            col = occ[i]
            left = occ[i - 1] if i > 0 else None
            right = occ[i + 1] if i + 1 < m_x else None
            obstacles = 0
            tuck_ub = 0
            cap = free_col[i] + sum(free_behind) - free_behind[i]
            d_other_ub = sum(lead) - lead[i] - max(0, unassigned - cap)
            for j in range(m_y):
                l = col[j]
                if not l:
                    continue
                if obstacles and self.p[l] > 0 and obstacles - tuck_ub - d_other_ub > 0:
                    total += self.p[l] * (obstacles - tuck_ub - d_other_ub)
                left_full = left is None or left[j]
                right_full = right is None or right[j]
                if j > 0 and not (left_full and right_full):
                    tuck_ub += 1
                obstacles += 1
        return total


def _swap_descent(
    instance: ProblemInstance,
    arr: Arrangement,
    evaluate: Callable[[Arrangement], float],
    pins: Mapping[int, Cell],
    accept: Callable[[Arrangement], bool],
    deadline: float,
    max_evals: Optional[int] = None,
) -> Tuple[Arrangement, float]:
    """First-improvement local search over object swaps and moves to empty
    cells."""
    best = arr
    best_value = evaluate(arr)
    cells = instance.grid.cells()
    movable = [l for l in range(1, instance.n + 1) if l not in pins]
    improved = True
    evals = 0

    def spent() -> bool:
        return max_evals is not None and evals >= max_evals

    while improved and time.perf_counter() < deadline and not spent():
        improved = False
        placement = list(best.placement)
        occupied = set(placement)
        for a_idx, a in enumerate(movable):
            for b in movable[a_idx + 1 :]:
                cand = list(placement)
                cand[a - 1], cand[b - 1] = cand[b - 1], cand[a - 1]
                arr2 = Arrangement(tuple(cand))
                if accept(arr2) and not spent():
                    evals += 1
                    v = evaluate(arr2)
                    if v < best_value - _EPS * max(1.0, abs(best_value)):
                        best, best_value, improved = arr2, v, True
                        break
            if improved:
                break
            for c in cells:
                if c in occupied:
                    continue
                cand = list(placement)
                cand[a - 1] = c
                arr2 = Arrangement(tuple(cand))
                if accept(arr2) and not spent():
                    evals += 1
                    v = evaluate(arr2)
                    if v < best_value - _EPS * max(1.0, abs(best_value)):
                        best, best_value, improved = arr2, v, True
                        break
            if improved:
                break
    return best, best_value


def _seed_arrangements(instance: ProblemInstance, pins: Mapping[int, Cell]) -> List[Arrangement]:
    """Front-first and removal-free starting points (objects by priority)."""
    by_priority = sorted((l for l in range(1, instance.n + 1) if l not in pins), key=lambda l: (-instance.obj(l).p, l))
    taken = set(pins.values())
    seeds = []
    layouts = [sorted(instance.grid.cells(), key=lambda c: (c[1], c[0]))]
    witness = removal_free_arrangement(instance)
    if witness is not None:
        layouts.append(sorted(witness.placement, key=lambda c: (c[1], c[0])) + layouts[0])
    for cells in layouts:
        placement: Dict[int, Cell] = dict(pins)
        free = [c for c in dict.fromkeys(cells) if c not in taken]
        for l, c in zip(by_priority, free):
            placement[l] = c
        if len(placement) == instance.n:
            seeds.append(Arrangement.from_mapping(placement))
    return seeds


def solve_osa_bnb(instance: ProblemInstance, config: Optional[SolverConfig] = None) -> SolveResult:
    """Branch-and-bound minimization of the configured objective.

    The bound charges every placed object the cheapest price its already
    placed obstacles could have (push unless both row neighbours are taken)
    plus the removals that remain unavoidable, and charges the lowest-priority
    unplaced objects the cheapest push once the open columns are used up.
    The search stops on proof of optimality, on ``time_budget`` or when the
    incumbent has not improved for ``incumbent_patience`` seconds.
    """
    config = config or SolverConfig()
    if config.no_removal_constraint and is_dense(instance):
        raise Infeasible("a dense shelf always needs removals for some target")
    bnb = _BranchAndBound(instance, config)
    accept = (lambda a: _removal_free(instance, a)) if config.no_removal_constraint else (lambda a: True)
    deadline = bnb.t0 + min(config.time_budget, config.incumbent_patience) / 4
    for seed in _seed_arrangements(instance, bnb.pins):
        if accept(seed):
            arr, _ = _swap_descent(instance, seed, bnb.evaluate, bnb.pins, accept, deadline, config.node_limit)
            bnb.offer(arr)
    bnb.last_improvement = time.perf_counter()
    bnb.search(0)
    if bnb.best is None:
        raise Infeasible("no feasible arrangement found")
    return SolveResult(
        bnb.best,
        bnb.best_value,
        not bnb.timed_out,
        bnb.nodes,
        time.perf_counter() - bnb.t0,
    )


def arrange_random(instance: ProblemInstance, seed: int) -> Arrangement:
    """Uniform injective placement: objects in id order take the first ``n``
    cells of a seeded partial Fisher-Yates shuffle of the cell list."""
    rng = Xoshiro256(seed)
    cells = rng.sample(instance.grid.cells(), instance.n)
    return Arrangement(tuple(cells))


def arrange_priority_greedy(instance: ProblemInstance, seed: int) -> Arrangement:
    """Random cells, sorted front to back, filled in priority order."""
    rng = Xoshiro256(seed)
    cells = sorted(rng.sample(instance.grid.cells(), instance.n), key=lambda c: (c[1], c[0]))
    order = sorted(range(1, instance.n + 1), key=lambda l: (-instance.obj(l).p, l))
    return Arrangement.from_mapping(dict(zip(order, cells)))
