"""Shelf geometry, problem instances and arrangements.

Cells are 1-based ``(i, j)`` pairs: ``i`` is the column (x-axis) and ``j`` the
depth, with ``j == 1`` the open front of the shelf and ``j == m_y`` the back
wall.  An object is reachable by the robot only when every cell in front of
it in its column is empty.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, Iterator, Mapping, Optional, Sequence, Tuple

Cell = Tuple[int, int]


class ShelfError(ValueError):
    """Invalid instance, arrangement or object reference."""


_SPLIT = 134217729.0  # 2**27 + 1


def _two_product(a: float, b: float) -> Tuple[float, float]:
    """``(hi, lo)`` with ``hi + lo == a * b`` exactly (Dekker)."""
    hi = a * b
    t = _SPLIT * a
    ah = t - (t - a)
    al = a - ah
    t = _SPLIT * b
    bh = t - (t - b)
    bl = b - bh
    lo = ((ah * bh - hi) + ah * bl + al * bh) + al * bl
    return hi, lo


def weighted_sum(weights: Iterable[float], values: Iterable[float]) -> float:
    """Correctly rounded sum of exact products, so arrangements whose costs
    tie in real arithmetic also tie bit for bit."""
    parts: list[float] = []
    for w, v in zip(weights, values):
        parts.extend(_two_product(float(w), float(v)))
    return math.fsum(parts)


@dataclass(frozen=True)
class ShelfGrid:
    m_x: int
    m_y: int

    def __post_init__(self):
        if self.m_x < 1 or self.m_y < 1:
            raise ShelfError(f"grid dimensions must be positive, got {self.m_x}x{self.m_y}")

    @property
    def size(self) -> int:
        return self.m_x * self.m_y

    def cells(self) -> list[Cell]:
        """All cells in lexicographic ``(i, j)`` order."""
        return [(i, j) for i in range(1, self.m_x + 1) for j in range(1, self.m_y + 1)]

    def contains(self, cell: Cell) -> bool:
        i, j = cell
        return 1 <= i <= self.m_x and 1 <= j <= self.m_y

    def index(self, cell: Cell) -> int:
        """Flat index used by the planner's state tuples (column-major)."""
        i, j = cell
        return (i - 1) * self.m_y + (j - 1)

    def cell_at(self, index: int) -> Cell:
        return index // self.m_y + 1, index % self.m_y + 1


@dataclass(frozen=True)
class ObjectSpec:
    id: int
    p: float
    c_push: float
    c_suction: float

    @property
    def delta_c(self) -> float:
        return self.c_suction - self.c_push


@dataclass(frozen=True)
class ProblemInstance:
    """Immutable OSA input.  Use :meth:`create` to normalize probabilities."""

    grid: ShelfGrid
    objects: Tuple[ObjectSpec, ...]
    c_removal: float

    def __post_init__(self):
        n = len(self.objects)
        if n > self.grid.size:
            raise ShelfError(f"{n} objects do not fit on a {self.grid.m_x}x{self.grid.m_y} shelf")
        if [o.id for o in self.objects] != list(range(1, n + 1)):
            raise ShelfError("object ids must be 1..n in order")
        if self.c_removal < 0:
            raise ShelfError("removal penalty must be non-negative")
        for o in self.objects:
            if o.p < 0:
                raise ShelfError(f"object {o.id}: negative probability")
            if o.c_push < 0 or o.c_suction < o.c_push:
                raise ShelfError(f"object {o.id}: need 0 <= c_push <= c_suction")
        if n and abs(sum(o.p for o in self.objects) - 1.0) > 1e-9:
            raise ShelfError("probabilities must sum to 1 (use ProblemInstance.create)")

    @classmethod
    def create(
        cls,
        m_x: int,
        m_y: int,
        p: Sequence[float],
        c_push: Sequence[float],
        c_suction: Sequence[float],
        c_removal: float = 0.0,
    ) -> "ProblemInstance":
        """Build an instance, dividing ``p`` by its sum."""
        if not (len(p) == len(c_push) == len(c_suction)):
            raise ShelfError("p, c_push and c_suction must have equal length")
        total = math.fsum(p)
        if p and total <= 0:
            raise ShelfError("probability vector is all zero")
        objects = tuple(
            ObjectSpec(l + 1, float(p[l]) / total, float(c_push[l]), float(c_suction[l]))
            for l in range(len(p))
        )
        return cls(ShelfGrid(m_x, m_y), objects, float(c_removal))

    @property
    def n(self) -> int:
        return len(self.objects)

    @property
    def m_x(self) -> int:
        return self.grid.m_x

    @property
    def m_y(self) -> int:
        return self.grid.m_y

    def obj(self, object_id: int) -> ObjectSpec:
        if not 1 <= object_id <= self.n:
            raise ShelfError(f"unknown object id {object_id}")
        return self.objects[object_id - 1]

    def to_dict(self) -> dict:
        return {
            "m_x": self.m_x,
            "m_y": self.m_y,
            "c_removal": self.c_removal,
            "objects": [
                {"id": o.id, "p": o.p, "c_push": o.c_push, "c_suction": o.c_suction}
                for o in self.objects
            ],
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "ProblemInstance":
        objs = sorted(data["objects"], key=lambda o: o["id"])
        return cls.create(
            data["m_x"],
            data["m_y"],
            [o["p"] for o in objs],
            [o["c_push"] for o in objs],
            [o["c_suction"] for o in objs],
            data.get("c_removal", 0.0),
        )


@dataclass(frozen=True)
class Arrangement:
    """Injective map from object id (1..n) to cell; ``placement[l - 1]`` is
    the cell of object ``l``."""

    placement: Tuple[Cell, ...]

    def __post_init__(self):
        if len(set(self.placement)) != len(self.placement):
            raise ShelfError("two objects share a cell")

    @classmethod
    def from_mapping(cls, mapping: Mapping[int, Cell]) -> "Arrangement":
        n = len(mapping)
        if sorted(mapping) != list(range(1, n + 1)):
            raise ShelfError("arrangement must place objects 1..n")
        return cls(tuple(tuple(mapping[l]) for l in range(1, n + 1)))

    @property
    def n(self) -> int:
        return len(self.placement)

    def cell(self, object_id: int) -> Cell:
        if not 1 <= object_id <= self.n:
            raise ShelfError(f"unknown object id {object_id}")
        return self.placement[object_id - 1]

    def items(self) -> Iterator[Tuple[int, Cell]]:
        return ((l + 1, c) for l, c in enumerate(self.placement))

    def occupancy(self) -> Dict[Cell, int]:
        return {c: l for l, c in self.items()}

    def to_dict(self) -> dict:
        return {"placement": {str(l): list(c) for l, c in self.items()}}

    @classmethod
    def from_dict(cls, data: Mapping) -> "Arrangement":
        placement = data["placement"]
        return cls.from_mapping({int(k): tuple(v) for k, v in placement.items()})

    def validate(self, grid: ShelfGrid, n: Optional[int] = None) -> None:
        if n is not None and self.n != n:
            raise ShelfError(f"arrangement places {self.n} objects, instance has {n}")
        for l, c in self.items():
            if not grid.contains(c):
                raise ShelfError(f"object {l} placed out of bounds at {c}")


def density(instance: ProblemInstance) -> Fraction:
    return Fraction(instance.n, instance.grid.size)


def dense_threshold(grid: ShelfGrid) -> Fraction:
    return 1 - Fraction(1, grid.m_x) + Fraction(1, grid.size)


def is_dense(instance: ProblemInstance) -> bool:
    """True when no arrangement can avoid removals for every target."""
    return density(instance) > dense_threshold(instance.grid)


def is_accessible(arr: Arrangement, grid: ShelfGrid, object_id: int) -> bool:
    i, j = arr.cell(object_id)
    occupied = set(arr.placement)
    return all((i, jj) not in occupied for jj in range(1, j))


def cavities(arr: Arrangement, grid: ShelfGrid) -> set[Cell]:
    """Empty cells that have an occupied cell somewhere in front of them."""
    occupied = set(arr.placement)
    found = set()
    for i in range(1, grid.m_x + 1):
        seen_object = False
        for j in range(1, grid.m_y + 1):
            if (i, j) in occupied:
                seen_object = True
            elif seen_object:
                found.add((i, j))
    return found


def is_hollow(arr: Arrangement, grid: ShelfGrid) -> bool:
    return bool(cavities(arr, grid))


def consolidate(arr: Arrangement, grid: ShelfGrid) -> Arrangement:
    """Pack every column against the back wall, keeping front-to-back order."""
    by_column: Dict[int, list[Tuple[int, int]]] = {}
    for l, (i, j) in arr.items():
        by_column.setdefault(i, []).append((j, l))
    mapping: Dict[int, Cell] = {}
    for i, stack in by_column.items():
        stack.sort()
        first_row = grid.m_y - len(stack) + 1
        for offset, (_, l) in enumerate(stack):
            mapping[l] = (i, first_row + offset)
    return Arrangement(tuple(mapping[l] for l in range(1, arr.n + 1)))


def occupancy_counts_witness(grid: ShelfGrid, n: int) -> Optional[list[int]]:
    """Objects per column for a consolidated zero-removal layout, or None.

    The back ``m_y - k`` rows are filled completely and the remaining ``r``
    objects go to the front ``k`` rows, left to right, where ``k`` is the
    smallest depth satisfying ``k * m_x >= m_y + r - 1``.
    """
    m_x, m_y = grid.m_x, grid.m_y
    if n == 0:
        return [0] * m_x
    for k in range(0, m_y + 1):
        full_rows = m_y - k
        r = n - full_rows * m_x
        if r < 0:
            continue
        if r > k * m_x:
            return None
        # column with u extra objects needs k(m_x - 1) - (r - u) >= m_y - k + u - 1
        if k * m_x < m_y + r - 1:
            continue
        counts = [full_rows] * m_x
        remaining = r
        for col in range(m_x):
            take = min(k, remaining)
            counts[col] += take
            remaining -= take
        return counts
    return None


def removal_free_arrangement(instance: ProblemInstance) -> Optional[Arrangement]:
    """Witness arrangement needing no removal for any target, or ``None`` if
    the shelf is dense."""
    if is_dense(instance):
        return None
    counts = occupancy_counts_witness(instance.grid, instance.n)
    if counts is None:  # pragma: no cover - excluded by the density test
        raise AssertionError("non-dense shelf without witness")
    cells: list[Cell] = []
    for col, count in enumerate(counts, start=1):
        cells.extend((col, j) for j in range(instance.m_y - count + 1, instance.m_y + 1))
    return Arrangement(tuple(cells[: instance.n]))


def removal_free_arrangement_exists(instance: ProblemInstance) -> Tuple[bool, Optional[Arrangement]]:
    witness = removal_free_arrangement(instance)
    return witness is not None, witness


def occupied_patterns(grid: ShelfGrid, n: int) -> Iterable[Tuple[Cell, ...]]:
    """Every set of ``n`` occupied cells, as sorted cell tuples."""
    from itertools import combinations

    return combinations(grid.cells(), n)
