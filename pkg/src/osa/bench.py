"""Experiment harness: seeded instance generation, policy comparison against
the Random baseline, sequential-retrieval curves and CSV output."""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

from .planner import ExpectedCost, expected_cost
from .rng import Xoshiro256, mix_seed
from .sequence import cumulative_cost_curve, run_episode
from .shelf import Arrangement, ProblemInstance, ShelfError, ShelfGrid
from .solvers import SURROGATE, SolverConfig, arrange_priority_greedy, arrange_random, solve_osa_bnb
from .surrogate import evaluate_surrogate

Observer = Callable[[ProblemInstance, Arrangement, ExpectedCost], None]

RANDOM = "random"
PRIORITY_GREEDY = "priority_greedy"
OSA_BNB = "osa_bnb"
POLICIES = (RANDOM, PRIORITY_GREEDY, OSA_BNB)

CSV_VERSION = 1
GRID_COLUMNS = (
    "csv_version",
    "row_type",
    "m_x",
    "m_y",
    "rho",
    "psi",
    "c_r",
    "replicate",
    "seed",
    "n",
    "policy",
    "expected_cost",
    "surrogate_cost",
    "expected_removals",
    "fallback",
    "arrangement",
    # aggregate rows only
    "mean_random",
    "mean_priority_greedy",
    "mean_osa_bnb",
    "pct_random",
    "pct_priority_greedy",
    "pct_osa_bnb",
    "solve_seconds",
    "eval_seconds",
)
SEQ_COLUMNS = ("csv_version", "m_x", "m_y", "rho", "psi", "c_r", "policy", "step", "mean_cumulative_cost", "normalized_pct")
TIMING_COLUMNS = ("solve_seconds", "eval_seconds")

FULL_GRIDS = [(3, 3), (4, 4), (5, 5), (6, 6), (7, 7)]
FULL_DENSITIES = [0.3, 0.5, 0.7, 0.8, 0.9]
DESK_GRIDS = [(3, 3), (4, 3), (4, 4)]
DESK_DENSITIES = [0.3, 0.5, 0.7]


def objects_for_density(grid: ShelfGrid, rho: float) -> int:
    """``rho * m_x * m_y`` rounded half up, computed on the decimal value."""
    exact = Fraction(str(rho)) * grid.size
    return math.floor(exact + Fraction(1, 2))


def generate_instance(
    grid: Tuple[int, int],
    rho: float,
    psi: float,
    c_r: float,
    seed: int,
    cost_low: int = 1,
    cost_high: int = 10,
) -> ProblemInstance:
    g = ShelfGrid(*grid)
    if not 0 < rho <= 1:
        raise ShelfError(f"density must lie in (0, 1], got {rho}")
    if psi < 1:
        raise ShelfError(f"cost ratio must be at least 1, got {psi}")
    n = objects_for_density(g, rho)
    if n < 1:
        raise ShelfError(f"density {rho} leaves no object on a {g.m_x}x{g.m_y} shelf")
    rng = Xoshiro256(seed)
    c_push = [rng.integers(cost_low, cost_high) for _ in range(n)]
    c_suction = [psi * c for c in c_push]
    p = [n + 1 - l for l in range(1, n + 1)]
    return ProblemInstance.create(g.m_x, g.m_y, p, c_push, c_suction, c_r)


@dataclass
class ExperimentConfig:
    grids: List[Tuple[int, int]] = field(default_factory=lambda: list(DESK_GRIDS))
    densities: List[float] = field(default_factory=lambda: list(DESK_DENSITIES))
    cost_ratios: List[float] = field(default_factory=lambda: [1.3])
    removal_penalties: List[float] = field(default_factory=lambda: [100.0])
    cost_low: int = 1
    cost_high: int = 10
    replicates: int = 10
    base_seed: int = 0
    budget_per_target: Optional[float] = 60.0
    solver_time_budget: float = 500.0
    solver_patience: float = 90.0
    # deterministic work limits for the solver (None = clock only)
    solver_node_limit: Optional[int] = 30_000
    solver_patience_nodes: Optional[int] = 20_000
    # "ratio_of_means" or "mean_of_ratios"
    normalization: str = "ratio_of_means"

    def __post_init__(self):
        for name in ("grids", "densities", "cost_ratios", "removal_penalties"):
            if not getattr(self, name):
                raise ShelfError(f"{name} must not be empty")
        if any(not 0 < r <= 1 for r in self.densities):
            raise ShelfError("densities must lie in (0, 1]")
        if any(psi < 1 for psi in self.cost_ratios):
            raise ShelfError("cost ratios must be at least 1")
        if self.replicates < 1:
            raise ShelfError("need at least one replicate")
        if self.normalization not in ("ratio_of_means", "mean_of_ratios"):
            raise ShelfError(f"unknown normalization {self.normalization!r}")

    def cells(self) -> List[Tuple[Tuple[int, int], float, float, float]]:
        return [
            (tuple(g), rho, psi, c_r)  # type: ignore[misc]
            for g in self.grids
            for rho in self.densities
            for psi in self.cost_ratios
            for c_r in self.removal_penalties
        ]

    def solver_config(self, seed: int) -> SolverConfig:
        return SolverConfig(
            objective=SURROGATE,
            time_budget=self.solver_time_budget,
            incumbent_patience=self.solver_patience,
            rng_seed=seed,
            node_limit=self.solver_node_limit,
            patience_nodes=self.solver_patience_nodes,
        )


@dataclass
class ExperimentRecord:
    m_x: int
    m_y: int
    rho: float
    psi: float
    c_r: float
    replicate: int
    seed: int
    n: int
    policy: str
    expected_cost: float
    surrogate_cost: float
    expected_removals: float
    fallback: bool
    arrangement: Arrangement
    solve_seconds: float = 0.0
    eval_seconds: float = 0.0

    def row(self) -> Dict[str, object]:
        return {
            "csv_version": CSV_VERSION,
            "row_type": "data",
            "m_x": self.m_x,
            "m_y": self.m_y,
            "rho": self.rho,
            "psi": self.psi,
            "c_r": self.c_r,
            "replicate": self.replicate,
            "seed": self.seed,
            "n": self.n,
            "policy": self.policy,
            "expected_cost": repr(self.expected_cost),
            "surrogate_cost": repr(self.surrogate_cost),
            "expected_removals": repr(self.expected_removals),
            "fallback": int(self.fallback),
            "arrangement": arrangement_text(self.arrangement),
            "solve_seconds": f"{self.solve_seconds:.6f}",
            "eval_seconds": f"{self.eval_seconds:.6f}",
        }


def arrangement_text(arr: Arrangement) -> str:
    """Compact ``i:j`` list in object order, e.g. ``1:2 3:1``."""
    return " ".join(f"{i}:{j}" for i, j in arr.placement)


def parse_arrangement_text(text: str) -> Arrangement:
    cells = []
    for token in text.split():
        i, j = token.split(":")
        cells.append((int(i), int(j)))
    return Arrangement(tuple(cells))


def task_seed(base_seed: int, cell_index: int, replicate: int) -> int:
    return mix_seed(base_seed, cell_index, replicate)


def policy_arrangement(instance: ProblemInstance, policy: str, seed: int, config: ExperimentConfig) -> Tuple[Arrangement, float]:
    t0 = time.perf_counter()
    if policy == RANDOM:
        arr = arrange_random(instance, mix_seed(seed, 1))
    elif policy == PRIORITY_GREEDY:
        arr = arrange_priority_greedy(instance, mix_seed(seed, 2))
    elif policy == OSA_BNB:
        arr = solve_osa_bnb(instance, config.solver_config(mix_seed(seed, 3))).arrangement
    else:
        raise ShelfError(f"unknown policy {policy!r}")
    return arr, time.perf_counter() - t0


def expected_removals(instance: ProblemInstance, result: ExpectedCost, arr: Arrangement) -> float:
    surrogate = None
    total = 0.0
    for l, plan in result.per_object.items():
        if plan.exact:
            count = sum(1 for a in plan.actions if a.kind == "remove")
        else:
            surrogate = surrogate or evaluate_surrogate(instance, arr)
            count = surrogate.per_object_removals[l]
        total += instance.obj(l).p * count
    return total


def evaluate_record(
    instance: ProblemInstance,
    arr: Arrangement,
    budget_per_target: Optional[float],
    observer: Optional[Observer] = None,
) -> Tuple[float, float, float, bool, float]:
    """``(expected cost, surrogate cost, expected removals, fallback, seconds)``."""
    t0 = time.perf_counter()
    result = expected_cost(instance, arr, budget_per_target)
    if observer is not None:
        observer(instance, arr, result)
    surrogate = evaluate_surrogate(instance, arr).expected_cost
    removals = expected_removals(instance, result, arr)
    return result.total, surrogate, removals, result.any_fallback, time.perf_counter() - t0


def run_cell(
    config: ExperimentConfig, cell_index: int, cell, replicate: int, observer: Optional[Observer] = None
) -> List[ExperimentRecord]:
    grid, rho, psi, c_r = cell
    seed = task_seed(config.base_seed, cell_index, replicate)
    instance = generate_instance(grid, rho, psi, c_r, seed, config.cost_low, config.cost_high)
    records = []
    for policy in POLICIES:
        arr, solve_s = policy_arrangement(instance, policy, seed, config)
        cost, surrogate, removals, fallback, eval_s = evaluate_record(instance, arr, config.budget_per_target, observer)
        records.append(
            ExperimentRecord(
                grid[0], grid[1], rho, psi, c_r, replicate, seed, instance.n, policy,
                cost, surrogate, removals, fallback, arr, solve_s, eval_s,
            )
        )
    return records


def normalized_percentages(records: Sequence[ExperimentRecord], normalization: str = "ratio_of_means") -> Dict[str, float]:
    """Policy cost as a percentage of the Random policy's, for one grid cell."""
    by_policy: Dict[str, List[float]] = {p: [] for p in POLICIES}
    by_rep: Dict[int, Dict[str, float]] = {}
    for r in records:
        by_policy[r.policy].append(r.expected_cost)
        by_rep.setdefault(r.replicate, {})[r.policy] = r.expected_cost
    out = {}
    if normalization == "ratio_of_means":
        base = math.fsum(by_policy[RANDOM]) / len(by_policy[RANDOM])
        for p in POLICIES:
            mean = math.fsum(by_policy[p]) / len(by_policy[p])
            out[p] = 100.0 * (mean / base) if base > 0 else (100.0 if mean == 0 else math.inf)
    else:
        for p in POLICIES:
            ratios = [
                100.0 * (rep[p] / rep[RANDOM]) if rep[RANDOM] > 0 else 100.0
                for rep in by_rep.values()
            ]
            out[p] = math.fsum(ratios) / len(ratios)
    return out


def run_grid(
    config: ExperimentConfig, observer: Optional[Observer] = None
) -> Tuple[List[ExperimentRecord], List[Dict[str, object]]]:
    """All data records plus one aggregate row per grid cell.  ``observer``
    sees every planner evaluation."""
    records: List[ExperimentRecord] = []
    aggregates: List[Dict[str, object]] = []
    for cell_index, cell in enumerate(config.cells()):
        cell_records: List[ExperimentRecord] = []
        for rep in range(config.replicates):
            cell_records.extend(run_cell(config, cell_index, cell, rep, observer))
        records.extend(cell_records)
        pct = normalized_percentages(cell_records, config.normalization)
        grid, rho, psi, c_r = cell
        row: Dict[str, object] = {
            "csv_version": CSV_VERSION,
            "row_type": "aggregate",
            "m_x": grid[0],
            "m_y": grid[1],
            "rho": rho,
            "psi": psi,
            "c_r": c_r,
            "n": cell_records[0].n,
            "fallback": sum(1 for r in cell_records if r.fallback),
        }
        for policy in POLICIES:
            costs = [r.expected_cost for r in cell_records if r.policy == policy]
            row[f"mean_{policy}"] = repr(math.fsum(costs) / len(costs))
            row[f"pct_{policy}"] = repr(pct[policy])
        aggregates.append(row)
    return records, aggregates


def write_csv(rows: Iterable[Dict[str, object]], columns: Sequence[str], drop: Sequence[str] = ()) -> str:
    keep = [c for c in columns if c not in drop]
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=keep, restval="", extrasaction="ignore", lineterminator="\r\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


def grid_csv(records: Sequence[ExperimentRecord], aggregates: Sequence[Dict[str, object]], timing: bool = True) -> str:
    rows = [r.row() for r in records] + list(aggregates)
    return write_csv(rows, GRID_COLUMNS, () if timing else TIMING_COLUMNS)


def revalidate_row(row: Dict[str, str], budget_per_target: Optional[float]) -> bool:
    """Regenerate a data row's instance and re-evaluate its arrangement."""
    instance = generate_instance(
        (int(row["m_x"]), int(row["m_y"])), float(row["rho"]), float(row["psi"]), float(row["c_r"]), int(row["seed"])
    )
    arr = parse_arrangement_text(row["arrangement"])
    cost, surrogate, removals, fallback, _ = evaluate_record(instance, arr, budget_per_target)
    return (
        repr(cost) == row["expected_cost"]
        and repr(surrogate) == row["surrogate_cost"]
        and repr(removals) == row["expected_removals"]
        and int(fallback) == int(row["fallback"])
    )


def run_sequential(config: ExperimentConfig) -> List[Dict[str, object]]:
    """Mean cumulative-cost curves per grid cell and policy; one episode per
    replicate, each on its own generated instance."""
    rows: List[Dict[str, object]] = []
    for cell_index, cell in enumerate(config.cells()):
        grid, rho, psi, c_r = cell
        traces: Dict[str, list] = {p: [] for p in POLICIES}
        for rep in range(config.replicates):
            seed = task_seed(config.base_seed, cell_index, rep)
            instance = generate_instance(grid, rho, psi, c_r, seed, config.cost_low, config.cost_high)
            for policy in POLICIES:
                arr, _ = policy_arrangement(instance, policy, seed, config)
                traces[policy].append(run_episode(instance, arr, mix_seed(seed, 4), config.budget_per_target))
        curves = {p: cumulative_cost_curve(traces[p]) for p in POLICIES}
        for policy in POLICIES:
            for k, value in enumerate(curves[policy], start=1):
                base = curves[RANDOM][k - 1] if k <= len(curves[RANDOM]) else 0.0
                pct = 100.0 * (value / base) if base > 0 else (100.0 if value == 0 else math.inf)
                rows.append(
                    {
                        "csv_version": CSV_VERSION,
                        "m_x": grid[0],
                        "m_y": grid[1],
                        "rho": rho,
                        "psi": psi,
                        "c_r": c_r,
                        "policy": policy,
                        "step": k,
                        "mean_cumulative_cost": repr(value),
                        "normalized_pct": repr(pct),
                    }
                )
    return rows


def sequential_csv(rows: Sequence[Dict[str, object]]) -> str:
    return write_csv(rows, SEQ_COLUMNS)


def instance_json(instance: ProblemInstance) -> str:
    return json.dumps(instance.to_dict(), indent=2, sort_keys=True) + "\n"
