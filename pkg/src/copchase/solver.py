"""Exact solving by retrograde analysis.

Every move rule is translation invariant on the torus, so the value of a
state depends only on where the cops stand relative to the robber.  The
solver therefore works on arrays indexed by the relative cop positions
(one ``(n, n)`` axis pair per cop, ordered cop tuples) and grows the cops'
attractor one ply at a time with whole-array shifts:

* a cops-to-move state is won in ``t+1`` plies if some joint move reaches a
  robber-to-move state won in ``t`` (landing on the robber counts as 0);
* a robber-to-move state is won in ``t+1`` if every robber move lands on a
  cop or in a cops-to-move state won in ``t`` or fewer.

States never absorbed are robber wins.  The canonical state index used for
persistence is derived from these arrays on demand.
"""

from __future__ import annotations

import itertools
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .board import Vertex
from .engine import (
    CopAction,
    GameSpec,
    GameState,
    IllegalActionError,
    Turn,
    canonical_cops,
    legal_cop_actions,
    legal_robber_actions,
)
from .moves import MoveRule, move_offsets

logger = logging.getLogger(__name__)

ROBBER_WIN = 0xFFFF
RESERVED = 0xFFFE
MAX_PLIES = 0xFFFD

DEFAULT_MAX_STATES = 60_000_000


class BudgetExceeded(RuntimeError):
    def __init__(self, spec: GameSpec, states: int, work: int, budget: int) -> None:
        super().__init__(
            f"{spec.canonical_string()}: {states} canonical states "
            f"({work} working cells) exceeds the budget of {budget}"
        )
        self.spec = spec
        self.states = states
        self.work = work
        self.budget = budget


@dataclass(frozen=True)
class Value:
    """Game value: plies to capture under optimal play, or ``None`` if the robber wins."""

    plies: int | None

    @classmethod
    def decode(cls, raw: int) -> Value:
        raw = int(raw)
        if raw == ROBBER_WIN:
            return cls(None)
        if raw == RESERVED:
            raise ValueError("reserved value code in table")
        return cls(raw)

    @property
    def robber_wins(self) -> bool:
        return self.plies is None

    @property
    def cops_win(self) -> bool:
        return self.plies is not None

    def __str__(self) -> str:
        return "RobberWin" if self.plies is None else f"CopWinIn({self.plies})"


# --------------------------------------------------------------------------
# canonical state index


def multiset_count(universe: int, size: int) -> int:
    return math.comb(universe + size - 1, size)


def rank_multiset(sorted_items: Sequence[int]) -> int:
    """Colex rank of a sorted multiset via the combinatorial number system."""
    return sum(math.comb(v + j, j + 1) for j, v in enumerate(sorted_items))


def unrank_multiset(rank: int, size: int) -> list[int]:
    out = [0] * size
    for j in range(size - 1, -1, -1):
        w = j
        while math.comb(w + 1, j + 1) <= rank:
            w += 1
        rank -= math.comb(w, j + 1)
        out[j] = w - j
    return out


def config_count(spec: GameSpec) -> int:
    nn = spec.n * spec.n
    return math.prod(multiset_count(nn, stop - start) for start, stop in spec.groups)


def state_count(spec: GameSpec, quotient: bool = False) -> int:
    robbers = 1 if quotient else spec.n * spec.n
    return config_count(spec) * robbers * 2


def _turn_bit(turn: Turn) -> int:
    return 0 if Turn(turn) is Turn.COPS else 1


def encode_state(
    spec: GameSpec, cops: Sequence[Vertex], robber: Vertex, turn: Turn
) -> int:
    """Dense index ``((config_rank * n^2) + robber_index) * 2 + turn_bit``."""
    n = spec.n
    nn = n * n
    cops = canonical_cops(spec, cops)
    rank = 0
    for start, stop in spec.groups:
        items = [v[0] * n + v[1] for v in cops[start:stop]]
        rank = rank * multiset_count(nn, stop - start) + rank_multiset(items)
    return (rank * nn + robber[0] * n + robber[1]) * 2 + _turn_bit(turn)


def decode_state(spec: GameSpec, index: int) -> tuple[tuple[Vertex, ...], Vertex, Turn]:
    n = spec.n
    nn = n * n
    if not 0 <= index < state_count(spec):
        raise IndexError(f"state index {index} out of range")
    index, bit = divmod(index, 2)
    rank, rob = divmod(index, nn)
    cops: list[Vertex] = []
    for start, stop in reversed(spec.groups):
        rank, sub = divmod(rank, multiset_count(nn, stop - start))
        cops[:0] = [Vertex(*divmod(i, n)) for i in unrank_multiset(sub, stop - start)]
    return tuple(cops), Vertex(*divmod(rob, n)), Turn.ROBBER if bit else Turn.COPS


def _ranked_multisets(universe: int, size: int) -> np.ndarray:
    """All sorted multisets as rows, ordered by colex rank."""
    rows = np.array(
        list(itertools.combinations_with_replacement(range(universe), size)), dtype=np.int64
    ).reshape(-1, size)
    ranks = _rank_rows(rows)
    order = np.argsort(ranks, kind="stable")
    return rows[order]


def _rank_rows(rows: np.ndarray) -> np.ndarray:
    size = rows.shape[1]
    top = int(rows.max(initial=0)) + size + 1
    table = np.array(
        [[math.comb(a, b) for b in range(size + 1)] for a in range(top)], dtype=np.int64
    )
    ranks = np.zeros(rows.shape[0], dtype=np.int64)
    for j in range(size):
        ranks += table[rows[:, j] + j, j + 1]
    return ranks


def canonical_configs(spec: GameSpec) -> np.ndarray:
    """Every canonical cop configuration as vertex indices, row i = config rank i."""
    nn = spec.n * spec.n
    parts = [_ranked_multisets(nn, stop - start) for start, stop in spec.groups]
    out = parts[0]
    for part in parts[1:]:
        out = np.concatenate(
            [np.repeat(out, len(part), axis=0), np.tile(part, (len(out), 1))], axis=1
        )
    return out


def _config_ranks(spec: GameSpec, ordered: np.ndarray) -> np.ndarray:
    """Ranks of (not necessarily sorted) cop tuples given as vertex-index columns."""
    nn = spec.n * spec.n
    rank = np.zeros(ordered.shape[0], dtype=np.int64)
    for start, stop in spec.groups:
        block = np.sort(ordered[:, start:stop], axis=1)
        rank = rank * multiset_count(nn, stop - start) + _rank_rows(block)
    return rank


# --------------------------------------------------------------------------
# solving


def _offsets_with_stay(n: int, rule: MoveRule) -> list[tuple[int, int]]:
    return [(0, 0)] + [tuple(o) for o in move_offsets(n, rule)]


def _cop_axes(i: int) -> tuple[int, int]:
    return (2 * i, 2 * i + 1)


def _dilate_cops(won: np.ndarray, spec: GameSpec) -> np.ndarray:
    """``out[p]`` true iff some joint cop move from ``p`` lands in ``won``."""
    cur = won
    for i, rule in enumerate(spec.cop_rules):
        acc = np.zeros_like(cur)
        for dr, dc in _offsets_with_stay(spec.n, rule):
            acc |= np.roll(cur, shift=(-dr, -dc), axis=_cop_axes(i))
        cur = acc
    return cur


def _erode_robber(won: np.ndarray, spec: GameSpec) -> np.ndarray:
    """``out[p]`` true iff every robber move from ``p`` lands in ``won``."""
    axes = tuple(a for i in range(spec.k) for a in _cop_axes(i))
    acc = np.ones_like(won)
    for dr, dc in _offsets_with_stay(spec.n, spec.robber_rule):
        # the robber moving by e shifts every relative cop position by -e
        acc &= np.roll(won, shift=(dr, dc) * spec.k, axis=axes)
    return acc


def _terminal_mask(spec: GameSpec) -> np.ndarray:
    n = spec.n
    mask = np.zeros((n, n) * spec.k, dtype=bool)
    for i in range(spec.k):
        idx: list = [slice(None)] * (2 * spec.k)
        idx[2 * i] = 0
        idx[2 * i + 1] = 0
        mask[tuple(idx)] = True
    return mask


def working_cells(spec: GameSpec) -> int:
    return 2 * (spec.n * spec.n) ** spec.k


@dataclass
class SolvedTable:
    """Solved values for every state of one game.

    ``cop_values`` / ``robber_values`` hold raw 16-bit codes for cops-to-move
    and robber-to-move states, indexed by each cop's position relative to the
    robber (``(row_i - robber_row) % n, (col_i - robber_col) % n``).
    """

    spec: GameSpec
    cop_values: np.ndarray
    robber_values: np.ndarray
    metadata: dict = field(default_factory=dict)

    def _rel(self, cops: Sequence[Vertex], robber: Vertex) -> tuple[int, ...]:
        n = self.spec.n
        out: list[int] = []
        for c in cops:
            out += [(c[0] - robber[0]) % n, (c[1] - robber[1]) % n]
        return tuple(out)

    def raw(self, cops: Sequence[Vertex], robber: Vertex, turn: Turn) -> int:
        arr = self.cop_values if Turn(turn) is Turn.COPS else self.robber_values
        return int(arr[self._rel(cops, robber)])

    def value(self, state: GameState) -> Value:
        return Value.decode(self.raw(state.cops, state.robber, state.turn))

    def value_at(self, index: int) -> Value:
        cops, robber, turn = decode_state(self.spec, index)
        return Value.decode(self.raw(cops, robber, turn))

    @property
    def state_count(self) -> int:
        return state_count(self.spec)

    @property
    def max_plies(self) -> int:
        vals = np.concatenate([self.cop_values.ravel(), self.robber_values.ravel()])
        finite = vals[vals < RESERVED]
        return int(finite.max(initial=0))

    def values_array(self, quotient: bool = False) -> np.ndarray:
        """Raw codes for every canonical state index, in index order.

        With ``quotient`` the robber is pinned to ``(0, 0)`` and the index
        drops the robber component (translation quotient).
        """
        spec = self.spec
        n = spec.n
        nn = n * n
        configs = canonical_configs(spec)
        rows, cols = configs // n, configs % n
        cop_flat = self.cop_values.reshape(-1)
        rob_flat = self.robber_values.reshape(-1)
        robbers = [0] if quotient else range(nn)
        out = np.empty((len(configs), len(robbers), 2), dtype=np.uint16)
        weights = nn ** np.arange(spec.k - 1, -1, -1, dtype=np.int64)
        for j, r in enumerate(robbers):
            rr, rc = divmod(r, n)
            rel = ((rows - rr) % n) * n + (cols - rc) % n
            flat = rel @ weights
            out[:, j, 0] = cop_flat[flat]
            out[:, j, 1] = rob_flat[flat]
        return out.reshape(-1)

    @classmethod
    def from_values_array(
        cls, spec: GameSpec, values: np.ndarray, quotient: bool = False, metadata: dict | None = None
    ) -> SolvedTable:
        nn = spec.n * spec.n
        expected = state_count(spec, quotient)
        values = np.asarray(values, dtype=np.uint16)
        if values.shape != (expected,):
            raise ValueError(f"expected {expected} values, got {values.shape}")
        if np.any(values == RESERVED):
            raise ValueError("table contains the reserved value code")
        grids = np.indices((nn,) * spec.k).reshape(spec.k, -1).T
        ranks = _config_ranks(spec, grids)
        base = ranks * (1 if quotient else nn)  # robber at (0, 0)
        shape = (spec.n, spec.n) * spec.k
        cop = values[base * 2].reshape(shape)
        rob = values[base * 2 + 1].reshape(shape)
        return cls(spec, cop, rob, dict(metadata or {}))


def solve(spec: GameSpec, max_states: int = DEFAULT_MAX_STATES) -> SolvedTable:
    """Solve ``spec`` completely.

    Raises :class:`BudgetExceeded` when the working arrays would exceed
    ``max_states`` cells.
    """
    work = working_cells(spec)
    if work > max_states:
        raise BudgetExceeded(spec, state_count(spec), work, max_states)
    started = time.perf_counter()
    terminal = _terminal_mask(spec)
    cop_won = terminal.copy()
    rob_won = terminal.copy()
    cop_val = np.where(terminal, 0, ROBBER_WIN).astype(np.uint16)
    rob_val = cop_val.copy()

    ply = 0
    while True:
        ply += 1
        if ply > MAX_PLIES:
            raise RuntimeError("ply counter overflow; table cannot be stored in 16 bits")
        if ply % 2:
            new = _dilate_cops(rob_won, spec) & ~cop_won
            cop_won |= new
            cop_val[new] = ply
        else:
            new = _erode_robber(cop_won, spec) & ~rob_won
            rob_won |= new
            rob_val[new] = ply
        if not new.any():
            break

    elapsed = time.perf_counter() - started
    meta = {
        "solve_seconds": elapsed,
        "state_count": state_count(spec),
        "working_cells": work,
        "plies_iterated": ply - 1,
    }
    logger.info("solved %s in %.3fs", spec.canonical_string(), elapsed)
    return SolvedTable(spec, cop_val, rob_val, meta)


# --------------------------------------------------------------------------
# queries


def _worst_case(table: SolvedTable) -> np.ndarray:
    """Worst robber reply for every placement with the first cop pinned at (0, 0).

    Indexed by the other cops' absolute positions; entries are raw value codes
    (``ROBBER_WIN`` when some robber placement escapes).  Pinning is exact by
    translation invariance.
    """
    spec = table.spec
    n = spec.n
    acc = None
    rest_axes = tuple(range(2 * (spec.k - 1)))
    for rr in range(n):
        for rc in range(n):
            sub = table.cop_values[(-rr) % n, (-rc) % n]
            if rest_axes:
                sub = np.roll(sub, shift=(rr, rc) * (spec.k - 1), axis=rest_axes)
            # robber placed on a cop is terminal (code 0) and never the maximum
            acc = np.array(sub, copy=True) if acc is None else np.maximum(acc, sub)
    return np.asarray(acc)


def cops_can_win(table: SolvedTable) -> bool:
    """True iff some cop placement beats every robber placement."""
    return bool((_worst_case(table) != ROBBER_WIN).any())


def best_cop_placement(table: SolvedTable) -> tuple[Vertex, ...]:
    """Placement minimising plies-to-capture against the best robber placement.

    The first cop sits at (0, 0); ties go to the first placement in index order.
    """
    worst = _worst_case(table)
    if worst.ndim == 0:
        coords: list[int] = []
    else:
        coords = [int(x) for x in np.unravel_index(int(np.argmin(worst)), worst.shape)]
    cops = [Vertex(0, 0)] + [Vertex(coords[2 * i], coords[2 * i + 1]) for i in range(len(coords) // 2)]
    return canonical_cops(table.spec, cops)


def winning_placement(table: SolvedTable) -> tuple[Vertex, ...] | None:
    """A cop placement that wins against every robber placement, or ``None``."""
    if not cops_can_win(table):
        return None
    return best_cop_placement(table)


def escape_placement(table: SolvedTable, cops: Sequence[Vertex]) -> Vertex | None:
    """First robber placement (lexicographic) from which the robber wins, or ``None``."""
    n = table.spec.n
    for r in range(n):
        for c in range(n):
            v = Vertex(r, c)
            if v in cops:
                continue
            if table.raw(cops, v, Turn.COPS) == ROBBER_WIN:
                return v
    return None


def every_placement_escapable(table: SolvedTable) -> bool:
    """True iff every cop placement admits a robber placement valued RobberWin."""
    return not cops_can_win(table)


@dataclass(frozen=True)
class NotFoundWithin:
    k_max: int

    def __str__(self) -> str:
        return f"NotFoundWithin({self.k_max})"


RuleFactory = Callable[[int], Sequence[MoveRule]]


def repeat_last(rules: Sequence[MoveRule]) -> RuleFactory:
    """Factory giving the first ``k`` rules, repeating the last one as needed."""
    rules = list(rules)
    if not rules:
        raise ValueError("need at least one rule")

    def factory(k: int) -> list[MoveRule]:
        if k < 1:
            raise ValueError("k must be positive")
        return (rules + [rules[-1]] * k)[:k]

    return factory


def cop_number(
    n: int,
    rule_factory: RuleFactory,
    robber_rule: MoveRule,
    k_max: int,
    max_states: int = DEFAULT_MAX_STATES,
    solver: Callable[[GameSpec], SolvedTable] | None = None,
) -> int | NotFoundWithin:
    """Least ``k <= k_max`` for which the cops can force a capture."""
    run = solver or (lambda s: solve(s, max_states))
    for k in range(1, k_max + 1):
        spec = GameSpec(n, tuple(rule_factory(k)), robber_rule)
        if cops_can_win(run(spec)):
            return k
    return NotFoundWithin(k_max)


def _successor_cop_value(table: SolvedTable, state: GameState, action: CopAction) -> int:
    if state.robber in action:
        return 0
    return table.raw(action, state.robber, Turn.ROBBER)


def optimal_cop_action(table: SolvedTable, state: GameState) -> CopAction:
    """Cop move minimising the successor's plies-to-capture; first in lexicographic order on ties."""
    best: CopAction | None = None
    best_val = None
    for action in legal_cop_actions(table.spec, state):
        val = _successor_cop_value(table, state, action)
        if best_val is None or val < best_val:
            best, best_val = action, val
            if val == 0:
                break
    assert best is not None
    return tuple(best)


def optimal_robber_action(table: SolvedTable, state: GameState) -> Vertex:
    """Robber move maximising plies-to-capture, robber wins first; lexicographic on ties."""
    best: Vertex | None = None
    best_val = -1
    for dst in legal_robber_actions(table.spec, state):
        val = 0 if dst in state.cops else table.raw(state.cops, dst, Turn.COPS)
        if val > best_val:
            best, best_val = dst, val
    assert best is not None
    return best


def optimal_robber_placement(table: SolvedTable, cops: Sequence[Vertex]) -> Vertex:
    best: Vertex | None = None
    best_val = -1
    n = table.spec.n
    for r in range(n):
        for c in range(n):
            v = Vertex(r, c)
            if v in cops:
                continue
            val = table.raw(cops, v, Turn.COPS)
            if val > best_val:
                best, best_val = v, val
    if best is None:
        raise IllegalActionError("no free vertex for the robber")
    return best
