"""Non-preemptive surrogate retrieval cost of a fixed arrangement.

Every decision variable of the linearized assignment model is materialized
for the given placement, so the value reported here is exactly the objective
the model (and :mod:`osa.solvers`) minimizes.  Cells beyond the side walls
count as occupied with nothing in front of them.
"""

from __future__ import annotations


from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

from .shelf import Arrangement, Cell, ProblemInstance, ShelfError, weighted_sum

Grid2 = List[List[int]]


@dataclass(frozen=True)
class SurrogateBreakdown:
    """Per-cell and per-object model variables; all arrays are 0-based
    (``a[i-1][j-1]`` is cell ``(i, j)``, ``y[l-1][i-1][j-1]`` object ``l``)."""

    a: Grid2
    e: Grid2
    f: Grid2
    d: List[int]
    delta: Grid2
    delta_push: List[Grid2]
    delta_suction: List[Grid2]
    tucked: Grid2
    y: List[List[List[float]]]
    b: List[Grid2]


@dataclass(frozen=True)
class SurrogateReport:
    per_object_cost: Dict[int, float]
    per_object_removals: Dict[int, int]
    expected_cost: float
    breakdown: SurrogateBreakdown


def occupancy_grid(instance: ProblemInstance, arr: Arrangement) -> Grid2:
    """Object id per cell (0 = empty)."""
    arr.validate(instance.grid, instance.n)
    occ = [[0] * instance.m_y for _ in range(instance.m_x)]
    for l, (i, j) in arr.items():
        occ[i - 1][j - 1] = l
    return occ


def _cell_flags(occ: Grid2, m_x: int, m_y: int):
    a = [[1 if occ[i][j] else 0 for j in range(m_y)] for i in range(m_x)]
    e = []
    f = []
    for i in range(m_x):
        run = 0
        e_col, f_col = [], []
        for j in range(m_y):
            run += a[i][j]
            e_col.append(run)
            f_col.append(1 if run == 0 else 0)
        e.append(e_col)
        f.append(f_col)
    d = [sum(col) for col in f]

    def a_at(i, j):
        return a[i][j] if 0 <= i < m_x else 1

    def open_or_clear(i, j):
        # wall cells: occupied, never clear
        if not 0 <= i < m_x:
            return 1
        return 1 if (a[i][j] or f[i][j]) else 0

    delta = [[0 if (a_at(i - 1, j) and a_at(i + 1, j)) else 1 for j in range(m_y)] for i in range(m_x)]
    tucked = [
        [
            1 if a[i][j] and not (open_or_clear(i - 1, j) and open_or_clear(i + 1, j)) else 0
            for j in range(m_y)
        ]
        for i in range(m_x)
    ]
    return a, e, f, d, delta, tucked


def object_costs(instance: ProblemInstance, occ: Grid2) -> Tuple[List[float], List[int]]:
    """Relocation cost ``y`` and removal count ``b`` for every object
    (index ``l - 1``) on a filled occupancy grid."""
    m_x, m_y = instance.m_x, instance.m_y
    objs = instance.objects
    a, e, f, d, delta, tucked = _cell_flags(occ, m_x, m_y)
    d_total = sum(d)
    y = [0.0] * instance.n
    b = [0] * instance.n
    for i in range(m_x):
        col = occ[i]
        relocation = 0.0
        tucks = 0
        d_other = d_total - d[i]
        for j in range(m_y):
            l = col[j]
            if not l:
                continue
            y[l - 1] = relocation
            b[l - 1] = max(e[i][j] - 1 - tucks - d_other, 0)
            o = objs[l - 1]
            relocation += o.c_push if delta[i][j] else o.c_suction
            tucks += tucked[i][j]
    return y, b


def expected_from_costs(instance: ProblemInstance, y: Sequence[float], b: Sequence[int]) -> float:
    c_r = instance.c_removal
    return weighted_sum((o.p for o in instance.objects), (y[l] + c_r * b[l] for l in range(instance.n)))


def surrogate_expected_cost(instance: ProblemInstance, arr: Arrangement) -> float:
    y, b = object_costs(instance, occupancy_grid(instance, arr))
    return expected_from_costs(instance, y, b)


def evaluate_surrogate(instance: ProblemInstance, arr: Arrangement) -> SurrogateReport:
    occ = occupancy_grid(instance, arr)
    m_x, m_y, n = instance.m_x, instance.m_y, instance.n
    a, e, f, d, delta, tucked = _cell_flags(occ, m_x, m_y)
    y_obj, b_obj = object_costs(instance, occ)

    def zeros():
        return [[0] * m_y for _ in range(m_x)]

    dp = [zeros() for _ in range(n)]
    ds = [zeros() for _ in range(n)]
    y = [[[0.0] * m_y for _ in range(m_x)] for _ in range(n)]
    b = [zeros() for _ in range(n)]
    for l, (i, j) in arr.items():
        if delta[i - 1][j - 1]:
            dp[l - 1][i - 1][j - 1] = 1
        else:
            ds[l - 1][i - 1][j - 1] = 1
        y[l - 1][i - 1][j - 1] = y_obj[l - 1]
        b[l - 1][i - 1][j - 1] = b_obj[l - 1]

    breakdown = SurrogateBreakdown(a, e, f, d, delta, dp, ds, tucked, y, b)
    per_cost: Dict[int, float] = {}
    per_removals: Dict[int, int] = {}
    c_r = instance.c_removal
    for l in range(1, n + 1):
        cost = 0.0
        removals = 0
        for i in range(m_x):
            for j in range(m_y):
                cost += y[l - 1][i][j] + c_r * b[l - 1][i][j]
                removals += b[l - 1][i][j]
        per_cost[l] = cost
        per_removals[l] = removals
    expected = weighted_sum((o.p for o in instance.objects), (per_cost[l] for l in range(1, n + 1)))
    return SurrogateReport(per_cost, per_removals, expected, breakdown)


def surrogate_retrieval_cost(instance: ProblemInstance, arr: Arrangement, target: int) -> Tuple[float, int]:
    """``(cost, removals)`` the surrogate charges for retrieving ``target``."""
    instance.obj(target)
    y, b = object_costs(instance, occupancy_grid(instance, arr))
    return y[target - 1] + instance.c_removal * b[target - 1], b[target - 1]


def occupancy_from_cells(instance: ProblemInstance, cells: Sequence[Cell]) -> Grid2:
    """Occupancy grid with objects 1..len(cells) on ``cells`` (labels only
    matter for costs; used when enumerating occupancy patterns)."""
    occ = [[0] * instance.m_y for _ in range(instance.m_x)]
    for l, (i, j) in enumerate(cells, start=1):
        if occ[i - 1][j - 1]:
            raise ShelfError("duplicate cell")
        occ[i - 1][j - 1] = l
    return occ
