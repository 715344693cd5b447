"""Hand-built instances where minimizing the surrogate misses the true
optimum because it cannot see preemptive moves.

Each builder returns a :class:`Showcase`: all objects but one are pinned,
``surrogate_pick`` is the arrangement the surrogate prefers and
``true_pick`` the one that is really cheaper.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict

from .shelf import Arrangement, Cell, ProblemInstance


@dataclass(frozen=True)
class Showcase:
    instance: ProblemInstance
    pins: Dict[int, Cell]
    free_object: int
    surrogate_pick: Arrangement
    true_pick: Arrangement


def _with(pins: Dict[int, Cell], obj: int, cell: Cell) -> Arrangement:
    m = dict(pins)
    m[obj] = cell
    return Arrangement.from_mapping(m)


def preemptive_suction_example() -> Showcase:
    """Column 2 holds 4, 5, 6 front to back.  With 7 at (1,2) object 4 can be
    pushed but 5 is boxed in; sucking 7 away first lets both be pushed, which
    the surrogate never considers.  With 7 at (1,1) the roles flip and 5 sits
    next to a cavity.

    Costs: c_4 = (2, 3), c_5 = (2, 6), c_7s = 2, p_5 = 0.3, p_6 = 0.2, so
    dc_4 <= c_7s <= dc_5 and p_6 (dc_5 - dc_4) > p_5 dc_4 > p_6 (c_7s - dc_4).
    Object 9 is popular and sits behind (4,1), which keeps 7 out of that cell.
    """
    c_push = [5, 5, 9, 2, 2, 5, 2, 5, 5, 5]
    c_suction = [8, 8, 10, 3, 6, 8, 2, 8, 8, 8]
    p = [0.01, 0.01, 0.01, 0.01, 0.3, 0.2, 0.01, 0.002, 0.45, 0.002]
    inst = ProblemInstance.create(4, 3, p, c_push, c_suction, 10.0)
    pins = {1: (1, 3), 2: (3, 2), 3: (3, 1), 4: (2, 1), 5: (2, 2), 6: (2, 3), 8: (3, 3), 9: (4, 2), 10: (4, 3)}
    return Showcase(inst, pins, 7, _with(pins, 7, (1, 1)), _with(pins, 7, (1, 2)))


def backward_tuck_example() -> Showcase:
    """Object 12 shares column 1 with 8 and 5 (at the back).  Parked at (1,3)
    it leaves two free front cells, so clearing 1-3 in front of 4 (and 1-4 in
    front of 7) needs no extra removal, but it blocks pushing 10.  Parked at
    (1,2) it blocks 9 instead and the surrogate charges a removal for 4 and 7,
    although sucking 12 back to (1,3) first is cheaper than removing.

    dc_9 = 0 < c_12s = 6 < c_r = 20, dc_10 = 5, and with
    p_4 + p_7 = 15/74, p_10 = 5/74, p_11 = 20/74 the bound chain
    (p_4 + p_7) min(c_12s, c_r) + p_10 dc_9 = 90/74
      < p_11 min(dc_10 - dc_9, c_12s - dc_9) = 100/74
      <= p_11 (dc_10 - dc_9) = 100/74
      < (p_4 + p_7) c_r + p_10 dc_9 = 300/74
    holds.
    """
    c_push = [3, 4, 3, 3, 4, 5, 5, 3, 2, 2, 1, 6]
    c_suction = [5, 4, 5, 5, 4, 9, 5, 5, 2, 7, 1, 6]
    p = [5, 2, 10, 10, 2, 2, 5, 2, 10, 5, 20, 1]
    inst = ProblemInstance.create(3, 5, p, c_push, c_suction, 20.0)
    pins = {
        1: (3, 1), 2: (3, 2), 3: (3, 3), 4: (3, 4), 7: (3, 5),
        8: (1, 4), 5: (1, 5),
        9: (2, 2), 10: (2, 3), 11: (2, 4), 6: (2, 5),
    }
    return Showcase(inst, pins, 12, _with(pins, 12, (1, 3)), _with(pins, 12, (1, 2)))
