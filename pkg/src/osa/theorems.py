"""Executable checks of the structural results: density vs. removal-free
layouts, exactness of the surrogate optimum under a constant cost gap, and
the suboptimality chain for the surrogate optimum."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, List, Optional, Tuple

from .planner import ExpectedCost, expected_cost
from .rng import Xoshiro256, mix_seed
from .shelf import Arrangement, ProblemInstance, ShelfGrid, consolidate, is_dense, occupied_patterns
from .solvers import TRUE_COST, SolverConfig, solve_bruteforce, solve_osa_bnb
from .surrogate import object_costs, occupancy_grid, surrogate_expected_cost, surrogate_retrieval_cost

# 3x3 listed twice: it is where the interesting (preemptive) cases live
SMALL_GRIDS = [(1, 3), (3, 1), (2, 2), (2, 3), (3, 2), (3, 3), (3, 3)]
TOL = 1e-9


def grids_up_to(max_cells: int) -> List[Tuple[int, int]]:
    return [(a, b) for a in range(1, max_cells + 1) for b in range(1, max_cells + 1) if a * b <= max_cells]


def _uniform_instance(grid: ShelfGrid, n: int) -> ProblemInstance:
    return ProblemInstance.create(grid.m_x, grid.m_y, [1.0] * n, [1.0] * n, [1.0] * n, 1.0)


def has_removal_free_pattern(grid: ShelfGrid, n: int) -> bool:
    """Exhaustive: does some occupancy pattern of ``n`` cells, once
    consolidated, let every object be retrieved without a removal?"""
    inst = _uniform_instance(grid, n)
    seen = set()
    for cells in occupied_patterns(grid, n):
        arr = consolidate(Arrangement(tuple(cells)), grid)
        key = tuple(sorted(arr.placement))
        if key in seen:
            continue
        seen.add(key)
        _, b = object_costs(inst, occupancy_grid(inst, arr))
        if not any(b):
            return True
    return False


@dataclass
class DensityReport:
    cases: int = 0
    mismatches: List[Tuple[int, int, int]] = field(default_factory=list)


def check_density(max_cells: int = 9) -> DensityReport:
    rep = DensityReport()
    for m_x, m_y in grids_up_to(max_cells):
        grid = ShelfGrid(m_x, m_y)
        for n in range(1, grid.size + 1):
            rep.cases += 1
            dense = is_dense(_uniform_instance(grid, n))
            if has_removal_free_pattern(grid, n) == dense:
                rep.mismatches.append((m_x, m_y, n))
    return rep


def random_instance(
    seed: int,
    grids=SMALL_GRIDS,
    max_objects: int = 5,
    constant_gap: bool = False,
    cost_high: int = 10,
) -> ProblemInstance:
    """Small instance for the property suites.  With ``constant_gap`` every
    object gets c_s = c_p + dc for one dc <= min c_p."""
    rng = Xoshiro256(seed)
    m_x, m_y = grids[rng.below(len(grids))]
    cap = min(max_objects, m_x * m_y)
    n = rng.integers(min(2, cap), cap)
    c_push = [rng.integers(1, cost_high) for _ in range(n)]
    if constant_gap:
        gap = rng.integers(0, min(c_push))
        c_suction = [c + gap for c in c_push]
    else:
        c_suction = [c + rng.integers(0, cost_high) for c in c_push]
    p = [rng.integers(1, 20) for _ in range(n)]
    c_r = [0.0, 10.0, 100.0][rng.below(3)]
    return ProblemInstance.create(m_x, m_y, p, c_push, c_suction, c_r)


@dataclass
class RetrievalAudit:
    """One exactly planned retrieval: A* root heuristic, planned cost and the
    surrogate's price for the same target."""

    target: int
    root_heuristic: float
    cost: float
    surrogate: float


def audit_plans(instance: ProblemInstance, arr: Arrangement, exp: ExpectedCost) -> List[RetrievalAudit]:
    out = []
    for l, plan in sorted(exp.per_object.items()):
        if not plan.exact:
            continue
        sur, _ = surrogate_retrieval_cost(instance, arr, l)
        out.append(RetrievalAudit(l, plan.root_heuristic, plan.total_cost, sur))
    return out


@dataclass
class ExactnessCase:
    instance: ProblemInstance
    bnb: Arrangement
    bnb_true: float
    optimum_true: float
    fallback: bool
    audits: List[RetrievalAudit]

    @property
    def holds(self) -> bool:
        return not self.fallback and self.bnb_true == self.optimum_true


def exactness_case(instance: ProblemInstance, budget: Optional[float] = 10.0) -> ExactnessCase:
    bnb = solve_osa_bnb(instance, SolverConfig()).arrangement
    exp = expected_cost(instance, bnb, budget)
    best = solve_bruteforce(instance, TRUE_COST, planner_budget=budget)
    # re-evaluate through the same summation order as the B&B arrangement
    opt = expected_cost(instance, best.arrangement, budget)
    return ExactnessCase(
        instance, bnb, exp.total, opt.total, exp.any_fallback or opt.any_fallback, audits=audit_plans(instance, bnb, exp)
    )


@dataclass
class ChainCase:
    instance: ProblemInstance
    c_opt: float
    c_bnb: float
    sur_consolidated_opt: float
    sur_opt: float
    k: float
    fallback: bool
    audits: List[RetrievalAudit]

    def links(self) -> List[Tuple[str, float, float]]:
        mid = min(self.sur_consolidated_opt, self.sur_opt)
        return [
            ("C(S*) <= C(S_bnb)", self.c_opt, self.c_bnb),
            ("C(S_bnb) <= min surrogate", self.c_bnb, mid),
            ("min surrogate <= min(k C(S*), surrogate(S*))", mid, min(self.k * self.c_opt, self.sur_opt)),
        ]

    def broken(self) -> List[str]:
        return [name for name, lo, hi in self.links() if lo > hi + TOL]

    @property
    def holds(self) -> bool:
        return not self.fallback and not self.broken()


def chain_case(instance: ProblemInstance, budget: Optional[float] = 10.0) -> ChainCase:
    grid = instance.grid
    best = solve_bruteforce(instance, TRUE_COST, planner_budget=budget).arrangement
    bnb = solve_osa_bnb(instance, SolverConfig()).arrangement
    exp_opt = expected_cost(instance, best, budget)
    exp_bnb = expected_cost(instance, bnb, budget)
    k = max(o.c_suction / o.c_push for o in instance.objects)
    return ChainCase(
        instance,
        exp_opt.total,
        exp_bnb.total,
        surrogate_expected_cost(instance, consolidate(best, grid)),
        surrogate_expected_cost(instance, best),
        k,
        exp_opt.any_fallback or exp_bnb.any_fallback,
        audits=audit_plans(instance, bnb, exp_bnb) + audit_plans(instance, best, exp_opt),
    )


def run_all(max_cells: int = 9, samples: int = 30, seed: int = 0) -> Iterator[Tuple[str, bool, str]]:
    dens = check_density(max_cells)
    yield (
        "density",
        not dens.mismatches,
        f"{dens.cases} (grid, n) cases, mismatches {dens.mismatches}",
    )
    cases = [exactness_case(random_instance(mix_seed(seed, 2, s), constant_gap=True)) for s in range(samples)]
    bad = [i for i, c in enumerate(cases) if not c.holds]
    yield ("exactness", not bad, f"{samples} instances, failing {bad}")
    chains = [chain_case(random_instance(mix_seed(seed, 3, s))) for s in range(samples)]
    bad = [(i, c.broken()) for i, c in enumerate(chains) if not c.holds]
    yield ("suboptimality chain", not bad, f"{samples} instances, failing {bad}")
    audits = [a for c in cases + chains for a in c.audits]  # type: ignore[operator]
    inadmissible = sum(a.root_heuristic > a.cost + TOL for a in audits)
    above = sum(a.cost > a.surrogate + TOL for a in audits)
    yield ("heuristic admissible", inadmissible == 0, f"{len(audits)} retrievals, {inadmissible} violations")
    yield ("planner within surrogate", above == 0, f"{len(audits)} retrievals, {above} above the surrogate")


__all__ = [
    "check_density",
    "chain_case",
    "exactness_case",
    "random_instance",
    "audit_plans",
    "run_all",
]
