"""Cop strategies taken from the constructive proofs, plus robber evaders.

Cop strategies only see the canonical game state, so roles (which knight is
which corner of the formation, which foot cop belongs to which side) are
re-derived from geometry on every turn.  The ``phase`` attribute names what
the strategy did on its last move and ends up in transcripts.
"""

from __future__ import annotations

import math
import random
from collections import deque
from typing import Sequence

from .board import Offset, Vertex, torus_distance, translate, wrap
from .engine import (
    CopAction,
    GameSpec,
    GameState,
    IllegalActionError,
    legal_robber_actions,
    protected_set,
    safe_vertices,
)
from .moves import (
    CHIEF_RULE,
    FOOT_RULE,
    KNIGHT_RULE,
    SPEEDY,
    destinations,
    move_offsets,
    protected_by,
    speedy,
)
from .solver import (
    SolvedTable,
    best_cop_placement,
    optimal_cop_action,
    optimal_robber_action,
    optimal_robber_placement,
)


class StrategyError(IllegalActionError):
    """A scripted strategy met a position its script does not cover."""


class Strategy:
    name = "strategy"
    side = "cops"

    def __init__(self) -> None:
        self.phase: str | None = None
        self.rng = random.Random(0)

    def check_spec(self, spec: GameSpec) -> None:
        pass

    def reset(self, spec: GameSpec, rng: random.Random) -> None:
        self.check_spec(spec)
        self.rng = rng
        self.phase = None

    def place(self, spec: GameSpec, cops: tuple[Vertex, ...] | None):
        raise NotImplementedError

    def act(self, spec: GameSpec, state: GameState):
        raise NotImplementedError

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.name}>"


def capture_action(spec: GameSpec, state: GameState) -> CopAction | None:
    """First cop that protects the robber jumps on him; the others stay."""
    for i, (rule, pos) in enumerate(zip(spec.cop_rules, state.cops)):
        if state.robber in protected_by(spec.n, rule, pos):
            action = list(state.cops)
            action[i] = state.robber
            return tuple(action)
    return None


def shifted(n: int, cops: Sequence[Vertex], d: Offset) -> CopAction:
    return tuple(translate(n, c, d) for c in cops)


# --------------------------------------------------------------------------
# cop strategies


class StayCops(Strategy):
    """Debug strategy: stack every cop on (0, 0) and never move."""

    name = "stay"

    def place(self, spec, cops):
        return [Vertex(0, 0)] * spec.k

    def act(self, spec, state):
        self.phase = "STAY"
        return state.cops


class KnightPairSmall(Strategy):
    """Two knights against a robber on foot on the 3x3 or 4x4 torus.

    Both cops start on the two leftmost vertices of the top row and always
    move by the same offset.  On 4x4 the reply to each unprotected robber
    square of the starting frame is read off a fixed table.
    """

    name = "knight-pair"

    # robber offset from the left cop -> joint cop move (up/left are negative)
    TABLE_4 = {
        Offset(0, 2): Offset(-2, -1),  # vertex 1: up 2, left 1
        Offset(0, 3): Offset(-2, 1),  # vertex 2: up 2, right 1
        Offset(1, 0): Offset(-1, -2),  # vertex 3: up 1, left 2
        Offset(1, 1): Offset(-1, -2),  # vertex 4: up 1, left 2
        Offset(3, 0): Offset(1, -2),  # vertex 5: down 1, left 2
        Offset(3, 1): Offset(1, -2),  # vertex 6: down 1, left 2
    }
    STARS = (Offset(2, 2), Offset(2, 3))

    def check_spec(self, spec):
        if spec.n not in (3, 4):
            raise ValueError("knight-pair needs n in {3, 4}")
        if spec.cop_rules != (KNIGHT_RULE, KNIGHT_RULE) or spec.robber_rule != FOOT_RULE:
            raise ValueError("knight-pair needs two knight cops and a robber on foot")

    def place(self, spec, cops):
        self.phase = "PLACE"
        return [Vertex(0, 0), Vertex(0, 1)]

    def act(self, spec, state):
        cap = capture_action(spec, state)
        if cap is not None:
            self.phase = "CAPTURE"
            return cap
        n = spec.n
        if n == 3:
            return self._act3(spec, state)
        left = self._frame(n, state.cops)
        rel = Offset((state.robber.row - left.row) % n, (state.robber.col - left.col) % n)
        move = self.TABLE_4.get(rel)
        if move is None:
            raise StrategyError(f"robber at frame offset {tuple(rel)} is not covered by the table")
        self.phase = "TABLE"
        return shifted(n, state.cops, move)

    @staticmethod
    def _frame(n: int, cops: Sequence[Vertex]) -> Vertex:
        a, b = cops
        if translate(n, a, Offset(0, 1)) == b:
            return a
        if translate(n, b, Offset(0, 1)) == a:
            return b
        raise StrategyError(f"cops {a} and {b} are not side by side")

    def _act3(self, spec, state):
        # both cops drop into the row under the robber, one right below him
        n = spec.n
        below = translate(n, state.robber, Offset(1, 0))
        target_row = below.row
        a, b = state.cops
        for first, second in ((a, b), (b, a)):
            if below not in destinations(n, KNIGHT_RULE, first):
                continue
            for dst in sorted(destinations(n, KNIGHT_RULE, second)):
                if dst.row == target_row and dst != below:
                    self.phase = "DROP"
                    return (below, dst) if first == a else (dst, below)
        raise StrategyError("no joint move puts both knights under the robber")


def _knight_step_towards(n: int, start: Vertex, targets: frozenset[Vertex]) -> Vertex:
    """Next vertex on a shortest knight path from ``start`` into ``targets``."""
    dist = {t: 0 for t in targets}
    queue = deque(sorted(targets))
    while queue:
        v = queue.popleft()
        if start in dist:
            break
        for w in sorted(destinations(n, KNIGHT_RULE, v)):
            if w not in dist:
                dist[w] = dist[v] + 1
                queue.append(w)
    if start in targets or start not in dist:
        raise StrategyError(f"no knight path from {start}")
    return min(w for w in destinations(n, KNIGHT_RULE, start) if dist.get(w, math.inf) == dist[start] - 1)


def pinning_pair(spec: GameSpec, cops: Sequence[Vertex], robber: Vertex) -> tuple[int, int] | None:
    """Indices of two cops that together cover every move off the robber's vertex."""
    n = spec.n
    options = destinations(n, spec.robber_rule, robber)
    for i in range(len(cops)):
        for j in range(i + 1, len(cops)):
            cover = (
                protected_by(n, spec.cop_rules[i], cops[i])
                | protected_by(n, spec.cop_rules[j], cops[j])
                | {cops[i], cops[j]}
            )
            if options <= cover:
                return i, j
    return None


class KnightFormation(Strategy):
    """Three knights against a robber on foot, n >= 5.

    The cops keep a rigid 3x5 formation (corners A, C on the bottom row and B
    in the middle of the top row), chase until the robber can be herded onto
    a square of a known case table, then pin him with two knights while the
    third walks up to strike.
    """

    name = "knight-formation"

    A = Offset(2, 0)
    B = Offset(0, 2)
    C = Offset(2, 4)
    CENTER = Offset(1, 2)

    # robber offset from the formation origin (robber to move) -> plies-to-pin rank
    RANK = {
        Offset(0, 0): 0,  # 1
        Offset(1, 1): 0,  # 4
        Offset(2, 2): 0,  # 7
        Offset(1, 3): 0,  # 4'
        Offset(0, 4): 0,  # 1'
        Offset(1, 2): 1,  # 5: every escape lands on a pin
        Offset(0, 1): 2,  # 2: forced up, then cops up 2 left 1
        Offset(0, 3): 2,  # 2'
        Offset(2, 1): 2,  # 6: forced down, then cops down 2 left 1
        Offset(2, 3): 2,  # 6'
        Offset(1, 0): 3,  # 3: forced left, then cops left 2 up 1
        Offset(1, 4): 3,  # 3'
    }

    def check_spec(self, spec):
        if spec.n < 5:
            raise ValueError("knight-formation needs n >= 5")
        if spec.cop_rules != (KNIGHT_RULE,) * 3 or spec.robber_rule != FOOT_RULE:
            raise ValueError("knight-formation needs three knight cops and a robber on foot")

    def place(self, spec, cops):
        self.phase = "PLACE"
        return [Vertex(*self.A), Vertex(*self.B), Vertex(*self.C)]

    def formation_origin(self, n: int, cops: Sequence[Vertex]) -> Vertex | None:
        want = sorted(cops)
        for c in sorted(cops):
            o = translate(n, c, -self.A)
            if sorted(translate(n, o, d) for d in (self.A, self.B, self.C)) == want:
                return o
        return None

    def formation_moves(self, n: int) -> list[Offset]:
        return [Offset(0, 0)] + list(move_offsets(n, KNIGHT_RULE))

    def rank(self, n: int, origin: Vertex, robber: Vertex) -> int | None:
        rel = Offset((robber.row - origin.row) % n, (robber.col - origin.col) % n)
        for key, value in self.RANK.items():
            if (key.drow % n, key.dcol % n) == rel:
                return value
        return None

    def act(self, spec, state):
        n = spec.n
        cap = capture_action(spec, state)
        if cap is not None:
            self.phase = "CAPTURE"
            return cap
        pin = pinning_pair(spec, state.cops, state.robber)
        if pin is not None:
            self.phase = "TRAP"
            (walker,) = set(range(3)) - set(pin)
            action = list(state.cops)
            action[walker] = _knight_step_towards(
                n, state.cops[walker], destinations(n, KNIGHT_RULE, state.robber)
            )
            return tuple(action)
        origin = self.formation_origin(n, state.cops)
        if origin is None:
            raise StrategyError(f"cops {state.cops} are neither pinning nor in formation")
        best = None
        for d in self.formation_moves(n):
            r = self.rank(n, translate(n, origin, d), state.robber)
            if r is not None and (best is None or r < best[0]):
                best = (r, d)
        if best is not None:
            self.phase = "HERD"
            return shifted(n, state.cops, best[1])
        self.phase = "CHASE"
        center = translate(n, origin, self.CENTER)
        d = min(
            self.formation_moves(n),
            key=lambda o: torus_distance(n, translate(n, center, o), state.robber),
        )
        return shifted(n, state.cops, d)


class ChiefPin(Strategy):
    """A lone chief against a robber on foot.

    Step into the robber's column; once he sidesteps, take the square he
    left.  From there every move he has is covered.
    """

    name = "chief-pin"

    def check_spec(self, spec):
        if spec.cop_rules != (CHIEF_RULE,) or spec.robber_rule != FOOT_RULE:
            raise ValueError("chief-pin needs a single chief against a robber on foot")

    def place(self, spec, cops):
        self.phase = "PLACE"
        return [Vertex(0, 0)]

    def act(self, spec, state):
        cap = capture_action(spec, state)
        if cap is not None:
            self.phase = "CAPTURE"
            return cap
        n = spec.n
        (chief,) = state.cops
        rob = state.robber
        if (rob.col - chief.col) % n in (1, n - 1):
            self.phase = "CLOSE"
            return (Vertex(rob.row, chief.col),)
        self.phase = "ENTER"
        return (Vertex(chief.row, rob.col),)


def sweep_foot_count(m: int) -> int:
    return 2 * math.ceil(m / 3)


def speedy_cop_count(m: int) -> int:
    """Cops needed (chief plus foot cops) against an m-speedy robber, m >= 2."""
    if not isinstance(m, int) or m < 2:
        raise ValueError("the count is only claimed for m >= 2; an m=1 robber is on foot")
    return sweep_foot_count(m) + 1


class ChiefSpeedySweep(Strategy):
    """A chief plus ``2 ceil(m/3)`` foot cops against an m-speedy robber.

    The chief shadows the robber's column so he never leaves his row.  The
    foot cops start three apart on the top row, walk down to that row, then
    close in from both sides, each side stopping two squares short of him.
    """

    name = "chief-sweep"

    def __init__(self, m: int | None = None) -> None:
        super().__init__()
        self.m = m

    def check_spec(self, spec):
        rob = spec.robber_rule
        if rob.tag != SPEEDY:
            raise ValueError("chief-sweep needs an m-speedy robber")
        if self.m is not None and rob.m != self.m:
            raise ValueError(f"strategy built for m={self.m}, robber is {rob}")
        f = math.ceil(rob.m / 3)
        if spec.cop_rules != (CHIEF_RULE,) + (FOOT_RULE,) * (2 * f):
            raise ValueError(f"chief-sweep needs cops [chief] + [foot] * {2 * f}")
        if spec.n < 6 * f + 3:
            raise ValueError(f"chief-sweep needs n >= {6 * f + 3}")

    def place(self, spec, cops):
        self.phase = "PLACE"
        f = math.ceil(spec.robber_rule.m / 3)
        return [Vertex(spec.n // 2, 0)] + [Vertex(0, 3 * j) for j in range(2 * f)]

    def act(self, spec, state):
        cap = capture_action(spec, state)
        if cap is not None:
            self.phase = "CAPTURE"
            return cap
        n = spec.n
        chief, *foot = state.cops
        rob = state.robber
        # the chief is never in the robber's column here, else he would be protected
        new_chief = Vertex(chief.row, rob.col)
        if any(v.row != rob.row for v in foot):
            self.phase = "DESCEND"
            return (new_chief, *(wrap(n, v.row + 1, v.col) for v in foot))
        self.phase = "CLOSE"
        f = len(foot) // 2
        order = sorted(range(len(foot)), key=lambda i: ((foot[i].col - rob.col) % n, i))
        right, left = order[:f], order[f:]
        moved = list(foot)
        if min((foot[i].col - rob.col) % n for i in right) >= 3:
            for i in right:
                moved[i] = wrap(n, foot[i].row, foot[i].col - 1)
        if min((rob.col - foot[i].col) % n for i in left) >= 3:
            for i in left:
                moved[i] = wrap(n, foot[i].row, foot[i].col + 1)
        return (new_chief, *moved)


class TableCops(Strategy):
    """Cops playing the solver's optimal policy."""

    name = "optimal"

    def __init__(self, table: SolvedTable) -> None:
        super().__init__()
        self.table = table

    def check_spec(self, spec):
        if spec != self.table.spec:
            raise ValueError("table was solved for a different game")

    def place(self, spec, cops):
        self.phase = "PLACE"
        return best_cop_placement(self.table)

    def act(self, spec, state):
        self.phase = "OPTIMAL"
        return optimal_cop_action(self.table, state)


# --------------------------------------------------------------------------
# robber strategies


def _min_cop_distance(n: int, v: Vertex, cops: Sequence[Vertex]) -> int:
    return min(torus_distance(n, v, c) for c in cops)


class GreedyEvader(Strategy):
    """Move to a safe vertex as far as possible from the nearest cop."""

    name = "greedy"
    side = "robber"

    def place(self, spec, cops):
        n = spec.n
        bad = protected_set(spec, cops)
        free = [Vertex(r, c) for r in range(n) for c in range(n) if Vertex(r, c) not in cops]
        pool = [v for v in free if v not in bad] or free
        return min(pool, key=lambda v: (-_min_cop_distance(n, v, cops), v))

    def act(self, spec, state):
        n = spec.n
        safe = safe_vertices(spec, state)
        if safe:
            return min(safe, key=lambda v: (-_min_cop_distance(n, v, state.cops), v))
        legal = [v for v in legal_robber_actions(spec, state) if v not in state.cops]
        return legal[0] if legal else state.robber


class RandomSafeEvader(Strategy):
    """Uniform choice among safe vertices (or among legal moves if none is safe)."""

    name = "random"
    side = "robber"

    def place(self, spec, cops):
        n = spec.n
        bad = protected_set(spec, cops)
        free = [Vertex(r, c) for r in range(n) for c in range(n) if Vertex(r, c) not in cops]
        pool = [v for v in free if v not in bad] or free
        return self.rng.choice(pool)

    def act(self, spec, state):
        safe = sorted(safe_vertices(spec, state))
        return self.rng.choice(safe or legal_robber_actions(spec, state))


class TableEvader(Strategy):
    """Robber playing the solver's optimal policy (longest survival)."""

    name = "optimal"
    side = "robber"

    def __init__(self, table: SolvedTable) -> None:
        super().__init__()
        self.table = table

    def check_spec(self, spec):
        if spec != self.table.spec:
            raise ValueError("table was solved for a different game")

    def place(self, spec, cops):
        return optimal_robber_placement(self.table, cops)

    def act(self, spec, state):
        return optimal_robber_action(self.table, state)


class FixedStart(Strategy):
    """Wrap a robber strategy but force its initial vertex."""

    side = "robber"

    def __init__(self, inner: Strategy, start: Vertex) -> None:
        super().__init__()
        self.inner = inner
        self.start = Vertex(*start)
        self.name = inner.name

    def reset(self, spec, rng):
        self.inner.reset(spec, rng)

    def place(self, spec, cops):
        return self.start

    def act(self, spec, state):
        return self.inner.act(spec, state)


# --------------------------------------------------------------------------
# factories

COP_STRATEGIES = ("knight-pair", "knight-formation", "chief-pin", "chief-sweep", "optimal", "stay")
ROBBER_STRATEGIES = ("greedy", "optimal", "random")


def knight_pair_small(n: int) -> KnightPairSmall:
    if n not in (3, 4):
        raise ValueError("knight-pair needs n in {3, 4}")
    return KnightPairSmall()


def knight_formation(n: int) -> KnightFormation:
    if n < 5:
        raise ValueError("knight-formation needs n >= 5")
    return KnightFormation()


def chief_pin() -> ChiefPin:
    return ChiefPin()


def chief_speedy_sweep(m: int) -> ChiefSpeedySweep:
    if m < 2:
        raise ValueError("chief-sweep needs m >= 2")
    return ChiefSpeedySweep(m)


def sweep_spec(m: int, n: int) -> GameSpec:
    return GameSpec(n, (CHIEF_RULE,) + (FOOT_RULE,) * sweep_foot_count(m), speedy(m))


def greedy_evader() -> GreedyEvader:
    return GreedyEvader()


def table_optimal_evader(table: SolvedTable) -> TableEvader:
    return TableEvader(table)


def random_safe_evader(seed: int | None = None) -> RandomSafeEvader:
    ev = RandomSafeEvader()
    if seed is not None:
        ev.rng = random.Random(seed)
    return ev


def make_cop_strategy(name: str, spec: GameSpec, table: SolvedTable | None = None) -> Strategy:
    if name == "knight-pair":
        return knight_pair_small(spec.n)
    if name == "knight-formation":
        return knight_formation(spec.n)
    if name == "chief-pin":
        return chief_pin()
    if name == "chief-sweep":
        if spec.robber_rule.tag != SPEEDY:
            raise ValueError("chief-sweep needs an m-speedy robber")
        return chief_speedy_sweep(spec.robber_rule.m)
    if name == "stay":
        return StayCops()
    if name == "optimal":
        if table is None:
            raise ValueError("optimal cops need a solved table")
        return TableCops(table)
    raise ValueError(f"unknown cop strategy {name!r}")


def make_robber_strategy(name: str, table: SolvedTable | None = None) -> Strategy:
    if name == "greedy":
        return greedy_evader()
    if name == "random":
        return RandomSafeEvader()
    if name == "optimal":
        if table is None:
            raise ValueError("the optimal evader needs a solved table")
        return TableEvader(table)
    raise ValueError(f"unknown robber strategy {name!r}")


def default_cop_strategy(spec: GameSpec) -> str | None:
    """Name of the scripted strategy that fits ``spec``, if any."""
    rules = spec.cop_rules
    if spec.robber_rule == FOOT_RULE:
        if rules == (KNIGHT_RULE,) * 2 and spec.n in (3, 4):
            return "knight-pair"
        if rules == (KNIGHT_RULE,) * 3 and spec.n >= 5:
            return "knight-formation"
        if rules == (CHIEF_RULE,):
            return "chief-pin"
    if spec.robber_rule.tag == SPEEDY:
        try:
            ChiefSpeedySweep().check_spec(spec)
            return "chief-sweep"
        except ValueError:
            return None
    return None

