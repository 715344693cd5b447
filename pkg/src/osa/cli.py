"""``osa`` command line."""

from __future__ import annotations

import json
import sys
from pathlib import Path
from typing import List, Optional, Tuple

import click

from . import bench, mip
from .planner import DEFAULT_BUDGET, expected_cost
from .shelf import Arrangement, ProblemInstance
from .solvers import SURROGATE, TRUE_COST, SolverConfig, solve_bruteforce, solve_osa_bnb
from .surrogate import evaluate_surrogate


def _grid(text: str) -> Tuple[int, int]:
    a, b = text.lower().split("x")
    return int(a), int(b)


def _floats(text: str) -> List[float]:
    return [float(t) for t in text.split(",") if t.strip()]


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text, newline="")
    else:
        click.echo(text, nl=False)


def _load_instance(path: str) -> ProblemInstance:
    return ProblemInstance.from_dict(json.loads(Path(path).read_text()))


def _budget(value: float) -> Optional[float]:
    return None if value <= 0 else value


@click.group()
def main():
    """Object shelf arrangement: solve, evaluate and benchmark."""


@main.command()
@click.argument("instance_file")
@click.option("--objective", type=click.Choice([SURROGATE, TRUE_COST]), default=SURROGATE)
@click.option("--bruteforce", is_flag=True, help="Exhaustive search instead of branch-and-bound.")
@click.option("--time-budget", default=500.0, show_default=True)
@click.option("--patience", default=90.0, show_default=True)
@click.option("--no-removal", is_flag=True, help="Forbid removals instead of pricing them.")
@click.option("--seed", default=0, show_default=True)
@click.option("--budget-per-target", default=DEFAULT_BUDGET, show_default=True)
@click.option("--out", default=None)
def solve(instance_file, objective, bruteforce, time_budget, patience, no_removal, seed, budget_per_target, out):
    """Arrange one instance; prints arrangement JSON."""
    inst = _load_instance(instance_file)
    if bruteforce:
        res = solve_bruteforce(inst, objective, planner_budget=_budget(budget_per_target))
    else:
        cfg = SolverConfig(
            objective=objective,
            time_budget=time_budget,
            incumbent_patience=patience,
            no_removal_constraint=no_removal,
            rng_seed=seed,
            planner_budget=_budget(budget_per_target),
        )
        res = solve_osa_bnb(inst, cfg)
    doc = res.arrangement.to_dict()
    doc.update(objective=objective, objective_value=res.objective_value, proved_optimal=res.proved_optimal, nodes=res.nodes)
    _emit(json.dumps(doc, indent=2, sort_keys=True) + "\n", out)


@main.command()
@click.argument("instance_file")
@click.argument("arrangement_file")
@click.option("--budget-per-target", default=DEFAULT_BUDGET, show_default=True)
@click.option("--plans", is_flag=True, help="Include every retrieval plan.")
@click.option("--out", default=None)
def evaluate(instance_file, arrangement_file, budget_per_target, plans, out):
    """Surrogate and true expected cost of an arrangement."""
    inst = _load_instance(instance_file)
    arr = Arrangement.from_dict(json.loads(Path(arrangement_file).read_text()))
    sur = evaluate_surrogate(inst, arr)
    true = expected_cost(inst, arr, _budget(budget_per_target))
    doc = {
        "surrogate_cost": sur.expected_cost,
        "expected_cost": true.total,
        "any_fallback": true.any_fallback,
        "per_object": {
            str(l): {
                "surrogate": sur.per_object_cost[l],
                "true": plan.total_cost,
                "method": plan.method,
            }
            for l, plan in sorted(true.per_object.items())
        },
    }
    if plans:
        doc["plans"] = {str(l): plan.to_dict() for l, plan in sorted(true.per_object.items())}
    _emit(json.dumps(doc, indent=2, sort_keys=True) + "\n", out)


@main.command("export-lp")
@click.argument("instance_file")
@click.option("--out", default=None)
def export_lp(instance_file, out):
    """Write the linearized model in CPLEX LP format."""
    _emit(mip.write_lp(mip.build_model(_load_instance(instance_file))), out)


@main.command("verify-lp-solution")
@click.argument("instance_file")
@click.argument("solution_file")
def verify_lp_solution(instance_file, solution_file):
    """Check a 'name value' solution file against every model row."""
    model = mip.build_model(_load_instance(instance_file))
    report = mip.verify_solution(model, mip.parse_solution(Path(solution_file).read_text()))
    click.echo(f"objective {report.objective!r}")
    for v in report.violations:
        click.echo(f"violated {v.family} {v.name}: {v.detail}")
    click.echo("feasible" if report.feasible else f"{len(report.violations)} violations")
    sys.exit(0 if report.feasible else 1)


def _config(grid, density, psi, cr, seed, budget_per_target, replicates, solver_nodes, timing=True):
    return bench.ExperimentConfig(
        grids=[_grid(g) for g in grid] or list(bench.DESK_GRIDS),
        densities=_floats(density) if density else list(bench.DESK_DENSITIES),
        cost_ratios=_floats(psi),
        removal_penalties=_floats(cr),
        replicates=replicates,
        base_seed=seed,
        budget_per_target=_budget(budget_per_target),
        solver_node_limit=solver_nodes or None,
    )


_grid_options = [
    click.option("--grid", multiple=True, help="Shelf size like 4x3; repeatable."),
    click.option("--density", default="", help="Comma-separated densities."),
    click.option("--psi", default="1.3", show_default=True),
    click.option("--cr", default="100", show_default=True),
    click.option("--seed", default=0, show_default=True),
    click.option("--budget-per-target", default=DEFAULT_BUDGET, show_default=True),
    click.option("--replicates", default=10, show_default=True),
    click.option("--solver-nodes", default=30_000, show_default=True, help="0 = clock only."),
    click.option("--out", default=None),
]


def _with_grid_options(f):
    for opt in reversed(_grid_options):
        f = opt(f)
    return f


@main.command()
@_with_grid_options
@click.option("--no-timing", is_flag=True, help="Blank out runtime columns.")
def grid(grid, density, psi, cr, seed, budget_per_target, replicates, solver_nodes, out, no_timing):
    """Compare Random, Priority-Greedy and OSA arrangements over a grid."""
    cfg = _config(grid, density, psi, cr, seed, budget_per_target, replicates, solver_nodes)
    records, aggregates = bench.run_grid(cfg)
    _emit(bench.grid_csv(records, aggregates, timing=not no_timing), out)


@main.command()
@_with_grid_options
def sequential(grid, density, psi, cr, seed, budget_per_target, replicates, solver_nodes, out):
    """Cumulative cost curves for repeated retrieval."""
    cfg = _config(grid, density, psi, cr, seed, budget_per_target, replicates, solver_nodes)
    _emit(bench.sequential_csv(bench.run_sequential(cfg)), out)


@main.command("theorem-check")
@click.option("--max-cells", default=9, show_default=True)
@click.option("--samples", default=30, show_default=True)
@click.option("--seed", default=0, show_default=True)
def theorem_check(max_cells, samples, seed):
    """Run the density, exactness and bound property suites."""
    from . import theorems

    ok = True
    for name, passed, detail in theorems.run_all(max_cells=max_cells, samples=samples, seed=seed):
        click.echo(f"{'PASS' if passed else 'FAIL'} {name}: {detail}")
        ok &= passed
    sys.exit(0 if ok else 1)


if __name__ == "__main__":  # pragma: no cover
    main()
