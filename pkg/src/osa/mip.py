"""Fully linearized assignment model as CPLEX LP text, plus a checker that
evaluates any variable assignment against every row.

Side walls are handled by substituting constants (an out-of-bounds cell is
occupied, never clear, and so never hides a tucked object) instead of adding
phantom variables.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Tuple

from .shelf import Arrangement, ProblemInstance, ShelfError
from .surrogate import evaluate_surrogate

BINARY = "binary"
INTEGER = "integer"
CONTINUOUS = "continuous"

# constraint families in model order
FAMILIES = (
    "assign",
    "occupancy",
    "pushable",
    "push_le_x",
    "push_le_delta",
    "push_ge",
    "suction_le_x",
    "suction_le_not_delta",
    "suction_ge",
    "relocation",
    "negation",
    "prefix",
    "clear_front",
    "leading_empty",
    "tuck_le_a",
    "tuck_le_g",
    "tuck_ge",
    "hidden_le_not_a",
    "hidden_le_not_f",
    "hidden_ge",
    "gap_ge_left",
    "gap_ge_right",
    "gap_le",
    "removal",
)

TOL = 1e-6


@dataclass(frozen=True)
class Variable:
    name: str
    kind: str
    lb: float
    ub: float


@dataclass(frozen=True)
class Row:
    name: str
    family: str
    terms: Tuple[Tuple[float, str], ...]
    sense: str  # "<=", ">=", "="
    rhs: float


@dataclass
class LpModel:
    variables: Dict[str, Variable] = field(default_factory=dict)
    objective: List[Tuple[float, str]] = field(default_factory=list)
    rows: List[Row] = field(default_factory=list)
    big_m: float = 0.0

    def add_var(self, name: str, kind: str, lb: float = 0.0, ub: float = math.inf) -> str:
        if name in self.variables:
            raise ShelfError(f"duplicate variable {name}")
        if kind == BINARY:
            lb, ub = 0.0, 1.0
        self.variables[name] = Variable(name, kind, lb, ub)
        return name

    def add_row(self, name: str, family: str, terms: Iterable[Tuple[float, str]], sense: str, rhs: float) -> None:
        self.rows.append(Row(name, family, tuple(terms), sense, float(rhs)))

    def family_counts(self) -> Dict[str, int]:
        counts = {f: 0 for f in FAMILIES}
        for row in self.rows:
            counts[row.family] += 1
        return counts


# -- naming ---------------------------------------------------------------

def _v(prefix: str, *idx: int) -> str:
    return "_".join([prefix, *map(str, idx)])


def big_m_for(instance: ProblemInstance) -> float:
    """Dominates every count (at most m_x*m_y) and every cost sum."""
    return instance.grid.size + math.fsum(o.c_suction for o in instance.objects) + 1


def build_model(instance: ProblemInstance) -> LpModel:
    n, m_x, m_y = instance.n, instance.m_x, instance.m_y
    M = big_m_for(instance)
    model = LpModel(big_m=M)
    L = range(1, n + 1)
    I = range(1, m_x + 1)
    J = range(1, m_y + 1)
    LIJ = [(l, i, j) for l in L for i in I for j in J]
    IJ = [(i, j) for i in I for j in J]

    for l, i, j in LIJ:
        model.add_var(_v("y", l, i, j), CONTINUOUS)
    for l, i, j in LIJ:
        model.add_var(_v("b", l, i, j), INTEGER, 0, m_y - 1)
    for l, i, j in LIJ:
        model.add_var(_v("x", l, i, j), BINARY)
    for i, j in IJ:
        model.add_var(_v("a", i, j), INTEGER, 0, 1)
    for i, j in IJ:
        model.add_var(_v("delta", i, j), BINARY)
    for l, i, j in LIJ:
        model.add_var(_v("dp", l, i, j), BINARY)
    for l, i, j in LIJ:
        model.add_var(_v("ds", l, i, j), BINARY)
    for l, i, j in LIJ:
        model.add_var(_v("z", l, i, j), BINARY)
    for i, j in IJ:
        model.add_var(_v("e", i, j), INTEGER, 0, m_y)
    for i, j in IJ:
        model.add_var(_v("f", i, j), BINARY)
    for i in I:
        model.add_var(_v("d", i), INTEGER, 0, m_y)
    for i, j in IJ:
        model.add_var(_v("dt", i, j), BINARY)
    for i, j in IJ:
        model.add_var(_v("g", i, j), BINARY)
    for i, j in IJ:
        model.add_var(_v("h", i, j), BINARY)

    c_r = instance.c_removal
    for l, i, j in LIJ:
        p = instance.objects[l - 1].p
        if p:
            model.objective.append((p, _v("y", l, i, j)))
            if c_r:
                model.objective.append((p * c_r, _v("b", l, i, j)))

    def inside(i: int) -> bool:
        return 1 <= i <= m_x

    for l in L:
        model.add_row(_v("assign", l), "assign", [(1, _v("x", l, i, j)) for i in I for j in J], "=", 1)
    for i, j in IJ:
        xs = [(1, _v("x", l, i, j)) for l in L]
        model.add_row(_v("occ", i, j), "occupancy", [(1, _v("a", i, j))] + [(-1, t) for _, t in xs], "=", 0)
        model.add_row(_v("cap", i, j), "occupancy", xs, "<=", 1)
    for i, j in IJ:
        terms = [(1.0, _v("delta", i, j))]
        rhs = 2 * M
        for ni in (i - 1, i + 1):
            if inside(ni):
                terms.append((M, _v("a", ni, j)))
            else:
                rhs -= M
        model.add_row(_v("pushable", i, j), "pushable", terms, "<=", rhs)
    for l, i, j in LIJ:
        model.add_row(_v("push_le_x", l, i, j), "push_le_x", [(1, _v("dp", l, i, j)), (-1, _v("x", l, i, j))], "<=", 0)
    for l, i, j in LIJ:
        model.add_row(_v("push_le_delta", l, i, j), "push_le_delta", [(1, _v("dp", l, i, j)), (-1, _v("delta", i, j))], "<=", 0)
    for l, i, j in LIJ:
        model.add_row(
            _v("push_ge", l, i, j),
            "push_ge",
            [(1, _v("dp", l, i, j)), (-1, _v("x", l, i, j)), (-1, _v("delta", i, j))],
            ">=",
            -1,
        )
    for l, i, j in LIJ:
        model.add_row(_v("suction_le_x", l, i, j), "suction_le_x", [(1, _v("ds", l, i, j)), (-1, _v("x", l, i, j))], "<=", 0)
    for l, i, j in LIJ:
        model.add_row(
            _v("suction_le_not_delta", l, i, j),
            "suction_le_not_delta",
            [(1, _v("ds", l, i, j)), (1, _v("delta", i, j))],
            "<=",
            1,
        )
    for l, i, j in LIJ:
        model.add_row(
            _v("suction_ge", l, i, j),
            "suction_ge",
            [(1, _v("ds", l, i, j)), (-1, _v("x", l, i, j)), (1, _v("delta", i, j))],
            ">=",
            0,
        )
    for l, i, j in LIJ:
        terms: List[Tuple[float, str]] = []
        for l2 in L:
            if l2 == l:
                continue
            o = instance.objects[l2 - 1]
            for j2 in range(1, j):
                if o.c_push:
                    terms.append((o.c_push, _v("dp", l2, i, j2)))
                if o.c_suction:
                    terms.append((o.c_suction, _v("ds", l2, i, j2)))
        terms.append((-1, _v("y", l, i, j)))
        terms.append((-M, _v("z", l, i, j)))
        model.add_row(_v("relocation", l, i, j), "relocation", terms, "<=", 0)
    for l, i, j in LIJ:
        model.add_row(_v("negation", l, i, j), "negation", [(1, _v("x", l, i, j)), (1, _v("z", l, i, j))], "<=", 1)
    for i, j in IJ:
        model.add_row(
            _v("prefix", i, j),
            "prefix",
            [(1, _v("e", i, j))] + [(-1, _v("a", i, j2)) for j2 in range(1, j + 1)],
            "=",
            0,
        )
    for i, j in IJ:
        model.add_row(_v("clear_front", i, j), "clear_front", [(1, _v("e", i, j)), (M, _v("f", i, j))], "<=", M)
    for i in I:
        model.add_row(_v("leading_empty", i), "leading_empty", [(1, _v("d", i))] + [(-1, _v("f", i, j)) for j in J], "=", 0)
    for i, j in IJ:
        model.add_row(_v("tuck_le_a", i, j), "tuck_le_a", [(1, _v("dt", i, j)), (-1, _v("a", i, j))], "<=", 0)
    for i, j in IJ:
        model.add_row(_v("tuck_le_g", i, j), "tuck_le_g", [(1, _v("dt", i, j)), (-1, _v("g", i, j))], "<=", 0)
    for i, j in IJ:
        model.add_row(
            _v("tuck_ge", i, j), "tuck_ge", [(1, _v("dt", i, j)), (-1, _v("a", i, j)), (-1, _v("g", i, j))], ">=", -1
        )
    for i, j in IJ:
        model.add_row(_v("hidden_le_not_a", i, j), "hidden_le_not_a", [(1, _v("h", i, j)), (1, _v("a", i, j))], "<=", 1)
    for i, j in IJ:
        model.add_row(_v("hidden_le_not_f", i, j), "hidden_le_not_f", [(1, _v("h", i, j)), (1, _v("f", i, j))], "<=", 1)
    for i, j in IJ:
        model.add_row(
            _v("hidden_ge", i, j), "hidden_ge", [(1, _v("h", i, j)), (1, _v("a", i, j)), (1, _v("f", i, j))], ">=", 1
        )
    # a wall neighbour has h = 0
    for i, j in IJ:
        terms = [(1, _v("g", i, j))]
        if inside(i - 1):
            terms.append((-1, _v("h", i - 1, j)))
        model.add_row(_v("gap_ge_left", i, j), "gap_ge_left", terms, ">=", 0)
    for i, j in IJ:
        terms = [(1, _v("g", i, j))]
        if inside(i + 1):
            terms.append((-1, _v("h", i + 1, j)))
        model.add_row(_v("gap_ge_right", i, j), "gap_ge_right", terms, ">=", 0)
    for i, j in IJ:
        terms = [(1, _v("g", i, j))]
        for ni in (i - 1, i + 1):
            if inside(ni):
                terms.append((-1, _v("h", ni, j)))
        model.add_row(_v("gap_le", i, j), "gap_le", terms, "<=", 0)
    for l, i, j in LIJ:
        terms = [(1, _v("e", i, j)), (-1, _v("x", l, i, j))]
        terms += [(-1, _v("dt", i, j2)) for j2 in range(1, j)]
        terms += [(-1, _v("d", i2)) for i2 in I if i2 != i]
        terms += [(-1, _v("b", l, i, j)), (-M, _v("z", l, i, j))]
        model.add_row(_v("removal", l, i, j), "removal", terms, "<=", 0)
    return model


def expected_row_counts(n: int, m_x: int, m_y: int) -> Dict[str, int]:
    """Closed-form number of rows per family."""
    cells = m_x * m_y
    per_obj = n * cells
    counts = {f: cells for f in FAMILIES}
    counts["assign"] = n
    counts["occupancy"] = 2 * cells
    counts["leading_empty"] = m_x
    for fam in (
        "push_le_x",
        "push_le_delta",
        "push_ge",
        "suction_le_x",
        "suction_le_not_delta",
        "suction_ge",
        "relocation",
        "negation",
        "removal",
    ):
        counts[fam] = per_obj
    return counts


# -- LP text ----------------------------------------------------------------

def _num(value: float) -> str:
    if float(value).is_integer() and abs(value) < 1e15:
        return str(int(value))
    return repr(float(value))


def _linear(terms: Iterable[Tuple[float, str]]) -> List[str]:
    out = []
    for k, (coef, name) in enumerate(terms):
        sign = "-" if coef < 0 else "+"
        mag = abs(coef)
        body = name if mag == 1 else f"{_num(mag)} {name}"
        if k == 0:
            out.append(body if sign == "+" else f"- {body}")
        else:
            out.append(f"{sign} {body}")
    return out


def _wrap(head: str, tokens: List[str], tail: str = "", width: int = 78) -> List[str]:
    lines = []
    line = head
    for tok in tokens + ([tail] if tail else []):
        if len(line) + 1 + len(tok) > width and line.strip():
            lines.append(line)
            line = "   " + tok
        else:
            line = f"{line} {tok}" if line else tok
    lines.append(line)
    return lines


def write_lp(model: LpModel) -> str:
    lines = ["\\ shelf arrangement model", "Minimize"]
    terms = _linear(model.objective) or ["0 " + next(iter(model.variables))]
    lines += _wrap(" obj:", terms)
    lines.append("Subject To")
    for row in model.rows:
        lines += _wrap(f" {row.name}:", _linear(row.terms), f"{row.sense} {_num(row.rhs)}")
    lines.append("Bounds")
    for var in model.variables.values():
        if var.kind == INTEGER:
            lines.append(f" {_num(var.lb)} <= {var.name} <= {_num(var.ub)}")
    lines.append("Binaries")
    lines += _wrap("", [v.name for v in model.variables.values() if v.kind == BINARY])
    lines.append("Generals")
    lines += _wrap("", [v.name for v in model.variables.values() if v.kind == INTEGER])
    lines.append("End")
    return "\n".join(lines) + "\n"


# -- verification -----------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    name: str
    family: str
    detail: str


@dataclass
class VerificationReport:
    violations: List[Violation]
    objective: float

    @property
    def feasible(self) -> bool:
        return not self.violations

    def families(self) -> set[str]:
        return {v.family for v in self.violations}


def verify_solution(model: LpModel, assignment: Mapping[str, float]) -> VerificationReport:
    missing = [name for name in model.variables if name not in assignment]
    if missing:
        raise ShelfError(f"assignment misses {len(missing)} variables, e.g. {missing[0]}")
    violations: List[Violation] = []
    for var in model.variables.values():
        value = float(assignment[var.name])
        if value < var.lb - TOL or value > var.ub + TOL:
            violations.append(Violation(var.name, "bounds", f"{value} outside [{var.lb}, {var.ub}]"))
        if var.kind != CONTINUOUS and abs(value - round(value)) > TOL:
            violations.append(Violation(var.name, "integrality", f"{value} is not integral"))
    for row in model.rows:
        lhs = math.fsum(coef * float(assignment[name]) for coef, name in row.terms)
        ok = (
            lhs <= row.rhs + TOL
            if row.sense == "<="
            else lhs >= row.rhs - TOL
            if row.sense == ">="
            else abs(lhs - row.rhs) <= TOL
        )
        if not ok:
            violations.append(Violation(row.name, row.family, f"{lhs} {row.sense} {row.rhs} fails"))
    objective = math.fsum(coef * float(assignment[name]) for coef, name in model.objective)
    return VerificationReport(violations, objective)


def feasible_point(instance: ProblemInstance, arr: Arrangement) -> Dict[str, float]:
    """Model assignment induced by an arrangement's surrogate breakdown."""
    report = evaluate_surrogate(instance, arr)
    bd = report.breakdown
    n, m_x, m_y = instance.n, instance.m_x, instance.m_y
    x = {(l, i, j): 0 for l in range(1, n + 1) for i in range(1, m_x + 1) for j in range(1, m_y + 1)}
    for l, (i, j) in arr.items():
        x[(l, i, j)] = 1

    def a_at(i, j):
        return bd.a[i - 1][j - 1] if 1 <= i <= m_x else 1

    def f_at(i, j):
        return bd.f[i - 1][j - 1] if 1 <= i <= m_x else 0

    def h_at(i, j):
        return 0 if (a_at(i, j) or f_at(i, j)) else 1

    values: Dict[str, float] = {}
    for (l, i, j), xv in x.items():
        values[_v("x", l, i, j)] = xv
        values[_v("z", l, i, j)] = 1 - xv
        values[_v("y", l, i, j)] = bd.y[l - 1][i - 1][j - 1]
        values[_v("b", l, i, j)] = bd.b[l - 1][i - 1][j - 1]
        values[_v("dp", l, i, j)] = bd.delta_push[l - 1][i - 1][j - 1]
        values[_v("ds", l, i, j)] = bd.delta_suction[l - 1][i - 1][j - 1]
    for i in range(1, m_x + 1):
        values[_v("d", i)] = bd.d[i - 1]
        for j in range(1, m_y + 1):
            values[_v("a", i, j)] = bd.a[i - 1][j - 1]
            values[_v("e", i, j)] = bd.e[i - 1][j - 1]
            values[_v("f", i, j)] = bd.f[i - 1][j - 1]
            values[_v("delta", i, j)] = bd.delta[i - 1][j - 1]
            values[_v("dt", i, j)] = bd.tucked[i - 1][j - 1]
            values[_v("h", i, j)] = h_at(i, j)
            values[_v("g", i, j)] = 1 if (h_at(i - 1, j) or h_at(i + 1, j)) else 0
    return values


def parse_solution(text: str) -> Dict[str, float]:
    """Whitespace-separated ``name value`` lines; ``#`` and ``\\`` start
    comments."""
    values: Dict[str, float] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] in "#\\":
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ShelfError(f"line {lineno}: expected 'name value', got {raw!r}")
        try:
            values[parts[0]] = float(parts[1])
        except ValueError:
            raise ShelfError(f"line {lineno}: bad value {parts[1]!r}") from None
    return values


def matrix_form(model: LpModel):
    """Dense ``(c, A, lower, upper, var_lb, var_ub, integrality, names)`` view
    of the model for handing to an external MILP routine."""
    import numpy as np

    names = list(model.variables)
    col = {name: k for k, name in enumerate(names)}
    c = np.zeros(len(names))
    for coef, name in model.objective:
        c[col[name]] += coef
    A = np.zeros((len(model.rows), len(names)))
    lower = np.empty(len(model.rows))
    upper = np.empty(len(model.rows))
    for r, row in enumerate(model.rows):
        for coef, name in row.terms:
            A[r, col[name]] += coef
        lower[r] = -np.inf if row.sense == "<=" else row.rhs
        upper[r] = np.inf if row.sense == ">=" else row.rhs
    var_lb = np.array([model.variables[n].lb for n in names])
    var_ub = np.array([model.variables[n].ub for n in names])
    integrality = np.array([0 if model.variables[n].kind == CONTINUOUS else 1 for n in names])
    return c, A, lower, upper, var_lb, var_ub, integrality, names
