"""Acceptance criteria, one printed PASS/FAIL line each (see the terminal
summary section "acceptance criteria")."""

import json
import math
import time

import pytest

from osa import bench, mip, theorems
from osa.examples import backward_tuck_example, preemptive_suction_example
from osa.planner import expected_cost
from osa.rng import Xoshiro256, mix_seed
from osa.shelf import Arrangement, ProblemInstance
from osa.solvers import TRUE_COST, SolverConfig, solve_bruteforce, solve_osa_bnb
from osa.surrogate import evaluate_surrogate

from conftest import record_criterion

SEED = 2024
A_STAR_BUDGET = 10.0
ROUND_TRIP_TOL = 1e-9
CHAIN_TOL = 1e-9
OSA_BAND = (15.0, 50.0)
GREEDY_BAND = (50.0, 95.0)

pytestmark = pytest.mark.slow


# -- criterion runners (shared by the repeat-for-determinism check) ----------

def round_trip_cases():
    rng = Xoshiro256(mix_seed(SEED, 1))
    out = []
    for _ in range(50):
        m_x, m_y = rng.integers(1, 4), rng.integers(1, 4)
        n = rng.integers(1, m_x * m_y)
        c_push = [rng.integers(1, 10) for _ in range(n)]
        c_suction = [c + rng.integers(0, 10) for c in c_push]
        p = [rng.integers(1, 20) for _ in range(n)]
        inst = ProblemInstance.create(m_x, m_y, p, c_push, c_suction, [0.0, 10.0, 100.0][rng.below(3)])
        out.append((inst, Arrangement(tuple(rng.sample(inst.grid.cells(), n)))))
    return out


def oracle_equivalence_run():
    rows = []
    for grid in [(1, 3), (2, 2), (3, 2), (2, 3)]:
        for n in range(2, min(4, grid[0] * grid[1]) + 1):
            for psi in (1.0, 1.3, 2.0):
                for c_r in (0.0, 10.0, 100.0):
                    for rep in range(3):
                        rng = Xoshiro256(mix_seed(SEED, 2, grid[0], grid[1], n, int(psi * 10), int(c_r), rep))
                        c_push = [rng.integers(1, 10) for _ in range(n)]
                        p = [rng.integers(1, 20) for _ in range(n)]
                        inst = ProblemInstance.create(*grid, p, c_push, [psi * c for c in c_push], c_r)
                        bnb = solve_osa_bnb(inst)
                        bf = solve_bruteforce(inst)
                        rows.append(
                            {
                                "instance": inst.to_dict(),
                                "bnb": bnb.arrangement.to_dict(),
                                "bnb_value": bnb.objective_value,
                                "bruteforce_value": bf.objective_value,
                            }
                        )
    return rows


def showcase_run():
    out = []
    for factory in (preemptive_suction_example, backward_tuck_example):
        ex = factory()
        bnb = solve_osa_bnb(ex.instance, SolverConfig(fixed=ex.pins))
        best = solve_bruteforce(ex.instance, TRUE_COST, fixed=ex.pins, planner_budget=A_STAR_BUDGET)
        true_a = expected_cost(ex.instance, ex.surrogate_pick, A_STAR_BUDGET)
        true_b = expected_cost(ex.instance, ex.true_pick, A_STAR_BUDGET)
        out.append(
            {
                "name": factory.__name__,
                "bnb_is_a": bnb.arrangement == ex.surrogate_pick,
                "true_best_is_b": best.arrangement == ex.true_pick,
                "true_a": true_a.total,
                "true_b": true_b.total,
                "fallback": true_a.any_fallback or true_b.any_fallback,
                "audits": theorems.audit_plans(ex.instance, ex.surrogate_pick, true_a)
                + theorems.audit_plans(ex.instance, ex.true_pick, true_b),
            }
        )
    return out


def showcase_json(results):
    return json.dumps([{k: v for k, v in r.items() if k != "audits"} for r in results], sort_keys=True)


DESK_CONFIG = dict(
    grids=[(3, 3), (4, 4)],
    densities=[0.3, 0.5, 0.7],
    cost_ratios=[1.3],
    removal_penalties=[100.0],
    replicates=30,
    base_seed=0,
    budget_per_target=A_STAR_BUDGET,
)


def desk_run(collect=None):
    def observer(inst, arr, result):
        if collect is not None:
            collect.extend(theorems.audit_plans(inst, arr, result))

    records, aggregates = bench.run_grid(bench.ExperimentConfig(**DESK_CONFIG), observer)
    return records, aggregates, bench.grid_csv(records, aggregates, timing=False)


# -- fixtures ------------------------------------------------------------------

@pytest.fixture(scope="module")
def c2():
    t0 = time.perf_counter()
    rows = oracle_equivalence_run()
    return rows, time.perf_counter() - t0


@pytest.fixture(scope="module")
def c4():
    t0 = time.perf_counter()
    cases = [
        theorems.exactness_case(theorems.random_instance(mix_seed(SEED, 4, s), constant_gap=True), A_STAR_BUDGET)
        for s in range(50)
    ]
    return cases, time.perf_counter() - t0


@pytest.fixture(scope="module")
def c5():
    t0 = time.perf_counter()
    cases = [theorems.chain_case(theorems.random_instance(mix_seed(SEED, 5, s)), A_STAR_BUDGET) for s in range(100)]
    return cases, time.perf_counter() - t0


@pytest.fixture(scope="module")
def c6():
    t0 = time.perf_counter()
    results = showcase_run()
    return results, time.perf_counter() - t0


@pytest.fixture(scope="module")
def c7():
    audits = []
    t0 = time.perf_counter()
    records, aggregates, text = desk_run(audits)
    return records, aggregates, text, audits, time.perf_counter() - t0


# -- criteria ------------------------------------------------------------------

def test_criterion_1_surrogate_lp_round_trip():
    t0 = time.perf_counter()
    worst_gap, violations = 0.0, 0
    for inst, arr in round_trip_cases():
        rep = mip.verify_solution(mip.build_model(inst), mip.feasible_point(inst, arr))
        violations += len(rep.violations)
        worst_gap = max(worst_gap, abs(rep.objective - evaluate_surrogate(inst, arr).expected_cost))
    elapsed = time.perf_counter() - t0
    ok = violations == 0 and worst_gap <= ROUND_TRIP_TOL and elapsed < 10
    record_criterion("criterion 1 (LP round trip)", ok, f"50 arrangements, {violations} violated rows, max |gap| {worst_gap:.2e}, {elapsed:.1f}s")
    assert ok


def test_criterion_2_solver_oracle_equivalence(c2):
    rows, elapsed = c2
    mismatches = sum(r["bnb_value"] != r["bruteforce_value"] for r in rows)
    ok = len(rows) >= 200 and mismatches == 0 and elapsed < 60
    record_criterion("criterion 2 (B&B = brute force)", ok, f"{len(rows)} instances, {mismatches} mismatches, {elapsed:.1f}s")
    assert ok


def test_criterion_3_density_theorem():
    t0 = time.perf_counter()
    rep = theorems.check_density(9)
    elapsed = time.perf_counter() - t0
    ok = not rep.mismatches and elapsed < 120
    record_criterion("criterion 3 (dense iff removals forced)", ok, f"{rep.cases} (grid, n) cases, mismatches {rep.mismatches}, {elapsed:.2f}s")
    assert ok


def test_criterion_4_exactness_under_constant_gap(c4):
    cases, elapsed = c4
    fallbacks = sum(c.fallback for c in cases)
    unequal = sum(c.bnb_true != c.optimum_true for c in cases)
    ok = fallbacks == 0 and unequal == 0 and elapsed < 600
    record_criterion("criterion 4 (exactness, constant gap)", ok, f"50 instances, {unequal} unequal, {fallbacks} fallbacks, {elapsed:.1f}s")
    assert ok


def test_criterion_5_suboptimality_chain(c5):
    cases, elapsed = c5
    broken = [(i, c.broken()) for i, c in enumerate(cases) if not c.holds]
    ok = not broken and elapsed < 600
    record_criterion("criterion 5 (suboptimality chain)", ok, f"100 instances, tol {CHAIN_TOL}, broken {broken}, {elapsed:.1f}s")
    assert ok


def test_criterion_6_showcases(c6):
    results, elapsed = c6
    ok = all(r["bnb_is_a"] and r["true_best_is_b"] and r["true_b"] < r["true_a"] and not r["fallback"] for r in results)
    ok = ok and elapsed < 60
    detail = ", ".join(f"{r['name']}: C(a)={r['true_a']:.4f} C(b)={r['true_b']:.4f}" for r in results)
    record_criterion("criterion 6 (surrogate misses preemption)", ok, f"{detail}, {elapsed:.1f}s")
    assert ok


def test_criterion_7_desk_scale_grid(c7):
    records, aggregates, _, _, elapsed = c7
    osa = [float(a["pct_osa_bnb"]) for a in aggregates]
    greedy = [float(a["pct_priority_greedy"]) for a in aggregates]
    osa_mean, greedy_mean = math.fsum(osa) / len(osa), math.fsum(greedy) / len(greedy)
    ordered = [
        float(a["mean_osa_bnb"]) < float(a["mean_priority_greedy"]) < float(a["mean_random"]) for a in aggregates
    ]
    ok = (
        OSA_BAND[0] <= osa_mean <= OSA_BAND[1]
        and GREEDY_BAND[0] <= greedy_mean <= GREEDY_BAND[1]
        and all(ordered)
        and elapsed < 1800
    )
    cells = " ".join(f"{a['m_x']}x{a['m_y']}/{a['rho']}:{float(a['pct_osa_bnb']):.1f}/{float(a['pct_priority_greedy']):.1f}" for a in aggregates)
    record_criterion(
        "criterion 7 (desk-scale comparison)",
        ok,
        f"OSA {osa_mean:.1f}% in {OSA_BAND}, greedy {greedy_mean:.1f}% in {GREEDY_BAND}, ordered in {sum(ordered)}/{len(ordered)} cells [{cells}], "
        f"{sum(r.fallback for r in records)} fallbacks, {elapsed:.0f}s",
    )
    assert ok


def _all_audits(c4, c5, c6, c7):
    audits = [a for c in c4[0] for a in c.audits] + [a for c in c5[0] for a in c.audits]
    audits += [a for r in c6[0] for a in r["audits"]]
    return audits + list(c7[3])


def test_criterion_8a_heuristic_admissible(c4, c5, c6, c7):
    audits = _all_audits(c4, c5, c6, c7)
    bad = sum(a.root_heuristic > a.cost for a in audits)
    record_criterion("criterion 8a (root heuristic <= planned cost)", bad == 0, f"{len(audits)} exact retrievals, {bad} violations")
    assert bad == 0


@pytest.mark.xfail(
    strict=True,
    reason="a push into a leading empty cell can block the slot behind it; the surrogate misses that cost",
)
def test_criterion_8b_planned_cost_within_surrogate(c4, c5, c6, c7):
    audits = _all_audits(c4, c5, c6, c7)
    above = [a for a in audits if a.cost > a.surrogate]
    worst = max((a.cost - a.surrogate for a in above), default=0.0)
    desk_above = sum(a.cost > a.surrogate for a in c7[3])
    record_criterion(
        "criterion 8b (planned cost <= surrogate price)",
        not above,
        f"{len(audits)} exact retrievals, {len(above)} above the surrogate ({desk_above} in criterion 7), worst excess {worst:.4g}",
    )
    assert not above


def test_criterion_9_determinism(c2, c6, c7):
    t0 = time.perf_counter()
    same2 = json.dumps(oracle_equivalence_run(), sort_keys=True) == json.dumps(c2[0], sort_keys=True)
    same6 = showcase_json(showcase_run()) == showcase_json(c6[0])
    same7 = desk_run()[2] == c7[2]
    ok = same2 and same6 and same7
    record_criterion(
        "criterion 9 (byte-identical reruns)",
        ok,
        f"criterion 2 JSON {same2}, criterion 6 JSON {same6}, criterion 7 CSV {same7}, {time.perf_counter() - t0:.0f}s",
    )
    assert ok
