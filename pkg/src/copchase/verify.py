"""Brute-force checks of the lemmas and theorems, with JSON reports.

Every check returns a :class:`VerificationReport`.  A ``refuted`` verdict
always carries a concrete witness; ``recorded-with-discrepancy`` is used when
finite enumeration disagrees with a figure or an asymptotic statement that
the suite deliberately does not score as pass/fail.
"""

from __future__ import annotations

import itertools
import json
import math
import random
import time
from dataclasses import asdict, dataclass
from typing import Any, Callable, Sequence

import numpy as np

from .board import Offset, Vertex, check_size, translate, vertices
from .engine import GameSpec, GameState, Transcript, Turn, legal_cop_actions, legal_robber_actions, simulate
from .moves import (
    CHIEF_RULE,
    FOOT_RULE,
    KNIGHT_RULE,
    MoveRule,
    chief_coverage_count,
    move_offsets,
    protected_by,
    speedy,
)
from .solver import (
    DEFAULT_MAX_STATES,
    ROBBER_WIN,
    BudgetExceeded,
    NotFoundWithin,
    SolvedTable,
    best_cop_placement,
    cops_can_win,
    decode_state,
    escape_placement,
    repeat_last,
    solve,
    state_count,
    working_cells,
)
from .strategies import (
    ChiefSpeedySweep,
    FixedStart,
    GreedyEvader,
    RandomSafeEvader,
    Strategy,
    TableEvader,
    chief_pin,
    knight_formation,
    knight_pair_small,
    speedy_cop_count,
    sweep_spec,
)

CONFIRMED = "confirmed"
REFUTED = "refuted"
DISCREPANCY = "recorded-with-discrepancy"

Solver = Callable[[GameSpec], SolvedTable]


@dataclass
class VerificationReport:
    check: str
    params: dict
    verdict: str
    witness: Any = None
    runtime_ms: float = 0.0

    def __post_init__(self) -> None:
        if self.verdict not in (CONFIRMED, REFUTED, DISCREPANCY):
            raise ValueError(f"bad verdict {self.verdict!r}")
        if self.verdict == REFUTED and self.witness is None:
            raise ValueError("a refuted report needs a witness")

    @property
    def confirmed(self) -> bool:
        return self.verdict == CONFIRMED

    @property
    def budget_exceeded(self) -> bool:
        return isinstance(self.witness, dict) and "budget_exceeded" in self.witness

    def to_json(self) -> dict:
        return asdict(self)

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, default=_jsonable)

    def summary(self) -> str:
        params = ", ".join(f"{k}={v}" for k, v in self.params.items())
        return f"{self.check}({params}): {self.verdict} [{self.runtime_ms:.0f} ms]"


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, MoveRule):
        return obj.name
    raise TypeError(f"cannot serialise {type(obj).__name__}")


class _Timer:
    def __enter__(self) -> _Timer:
        self.start = time.perf_counter()
        self.end: float | None = None
        return self

    def __exit__(self, *exc: object) -> None:
        self.end = time.perf_counter()

    @property
    def ms(self) -> float:
        end = self.end if self.end is not None else time.perf_counter()
        return (end - self.start) * 1000.0


def _cached(solver: Solver | None, max_states: int) -> Solver:
    if solver is not None:
        return solver
    memo: dict[GameSpec, SolvedTable] = {}

    def run(spec: GameSpec) -> SolvedTable:
        if spec not in memo:
            memo[spec] = solve(spec, max_states)
        return memo[spec]

    return run


# --------------------------------------------------------------------------
# plus-shape lemma

PLUS = (Offset(0, 0), Offset(-1, 0), Offset(1, 0), Offset(0, -1), Offset(0, 1))


def verify_plus_shape(n: int, occupancy: bool = False) -> VerificationReport:
    """Two knights never cover the whole plus shape around the robber.

    The plus is centred at (0, 0), which loses nothing by translation
    invariance.  With ``occupancy`` a plus vertex holding a cop also counts as
    covered.
    """
    check_size(n)
    with _Timer() as t:
        plus = [translate(n, Vertex(0, 0), o) for o in PLUS]
        # which plus vertices each knight position covers, as a bitmask
        masks = {}
        for v in vertices(n):
            prot = protected_by(n, KNIGHT_RULE, v)
            bits = sum(1 << i for i, p in enumerate(plus) if p in prot or (occupancy and p == v))
            masks[v] = bits
        full = (1 << len(plus)) - 1
        best, witness, pairs = 0, None, 0
        for a, b in itertools.product(vertices(n), repeat=2):
            pairs += 1
            covered = masks[a] | masks[b]
            best = max(best, bin(covered).count("1"))
            if covered == full and witness is None:
                witness = {"cops": [list(a), list(b)]}
    name = "plus-shape-occupancy" if occupancy else "plus-shape"
    params = {"n": n, "occupancy": occupancy}
    if witness is not None:
        witness["max_coverage"] = best
        return VerificationReport(name, params, REFUTED, witness, t.ms)
    return VerificationReport(name, params, CONFIRMED, {"pairs": pairs, "max_coverage": best}, t.ms)


# --------------------------------------------------------------------------
# chief coverage lemma


def coverage_grid(m: int, n: int) -> np.ndarray:
    """``grid[dr, dc]`` = robber options covered by a chief at offset ``(dr, dc)``.

    The robber sits at (0, 0); the cell under him is ``-1``.
    """
    speedy(m).check_board(n)
    grid = np.full((n, n), -1, dtype=int)
    for v in vertices(n):
        if v != (0, 0):
            grid[v] = chief_coverage_count(n, v, Vertex(0, 0), m)
    return grid


def figure_label(a: int, b: int, m: int) -> int | None:
    """Count the 3/4/6 narrative assigns to a chief ``a`` right and ``b`` up.

    Only defined for off-axis offsets within ``m`` of the robber on both axes.
    """
    if not (1 <= a <= m and 1 <= b <= m):
        return None
    if a == b:
        return 3
    return 6 if a + b <= m else 4


def protection_count_map(m: int, n: int) -> tuple[np.ndarray, VerificationReport]:
    """Coverage grid plus a check of "a chief in the robber's row or column is best".

    The claim under test is the literal one: the maximum is ``2m+1`` and every
    same-row/same-column placement attains it.  Cells of the 3/4/6 narrative
    are compared separately and only reported, never scored.
    """
    with _Timer() as t:
        grid = coverage_grid(m, n)
        claimed = 2 * m + 1
        on_axis = {
            (r, c): int(grid[r, c]) for r in range(n) for c in range(n) if (r == 0) != (c == 0)
        }
        off_axis_max = max(
            int(grid[r, c]) for r in range(n) for c in range(n) if r != 0 and c != 0
        )
        top = int(grid.max())
        argmax = sorted(cell for cell, v in on_axis.items() if v == top) if top in on_axis.values() else []
        axis_misses = sorted(cell for cell, v in on_axis.items() if v != claimed)

        agree, disagree = 0, []
        for a in range(1, m + 1):
            for b in range(1, m + 1):
                label = figure_label(a, b, m)
                got = int(grid[(-b) % n, a % n])
                if got == label:
                    agree += 1
                else:
                    disagree.append({"right": a, "up": b, "figure": label, "enumerated": got})

    witness = {
        "claimed_max": claimed,
        "max": top,
        "off_axis_max": off_axis_max,
        "axis_counts": sorted(set(on_axis.values())),
        "figure_cells_agreeing": agree,
        "figure_cells_disagreeing": disagree,
    }
    params = {"m": m, "n": n}
    if top == claimed and not axis_misses:
        return grid, VerificationReport("chief-coverage", params, CONFIRMED, witness, t.ms)
    witness["max_attained_at"] = [list(c) for c in argmax[:8]]
    witness["axis_cells_not_at_claimed_max"] = [
        {"cell": list(c), "count": on_axis[c]} for c in axis_misses[:8]
    ]
    return grid, VerificationReport("chief-coverage", params, REFUTED, witness, t.ms)


def format_grid(grid: np.ndarray, radius: int | None = None) -> str:
    """Planar picture of a coverage grid centred on the robber (``R``)."""
    n = grid.shape[0]
    radius = n // 2 if radius is None else radius
    lines = []
    for dr in range(-radius, radius + 1):
        cells = []
        for dc in range(-radius, radius + 1):
            v = grid[dr % n, dc % n]
            cells.append(" R" if v < 0 else f"{v:2d}")
        lines.append(" ".join(cells))
    return "\n".join(lines)


# --------------------------------------------------------------------------
# cop numbers


def verify_cop_number(
    n: int,
    rules: Sequence[MoveRule] | Callable[[int], Sequence[MoveRule]],
    robber_rule: MoveRule,
    expected: int,
    k_max: int,
    max_states: int = DEFAULT_MAX_STATES,
    solver: Solver | None = None,
) -> VerificationReport:
    """Compare the solver's cop number against ``expected``.

    The lower bound is stated as a solver fact: with ``expected - 1`` cops,
    every cop placement has a robber placement valued RobberWin.
    """
    factory = repeat_last(rules) if not callable(rules) else rules
    run = _cached(solver, max_states)
    params = {
        "n": n,
        "cops": [r.name for r in factory(max(expected, 1))],
        "robber": robber_rule.name,
        "expected": expected,
        "k_max": k_max,
    }
    with _Timer() as t:
        per_k = []
        found: int | None = None
        try:
            for k in range(1, k_max + 1):
                spec = GameSpec(n, tuple(factory(k)), robber_rule)
                table = run(spec)
                win = cops_can_win(table)
                entry = {
                    "k": k,
                    "cops_can_win": win,
                    "states": table.state_count,
                    "solve_seconds": round(table.metadata.get("solve_seconds", 0.0), 4),
                }
                if win:
                    entry["placement"] = [list(v) for v in best_cop_placement(table)]
                    entry["max_plies"] = table.max_plies
                else:
                    cops = best_cop_placement(table)
                    entry["sample_placement"] = [list(v) for v in cops]
                    entry["escape"] = list(escape_placement(table, cops))
                per_k.append(entry)
                if win:
                    found = k
                    break
        except BudgetExceeded as exc:
            witness = {"budget_exceeded": str(exc), "per_k": per_k}
            return VerificationReport("cop-number", params, DISCREPANCY, witness, t.ms)
    result = found if found is not None else str(NotFoundWithin(k_max))
    witness = {"cop_number": result, "per_k": per_k}
    verdict = CONFIRMED if found == expected else REFUTED
    return VerificationReport("cop-number", params, verdict, witness, t.ms)


# --------------------------------------------------------------------------
# strategies


def _free_vertices(spec: GameSpec, cops: Sequence[Vertex]) -> list[Vertex]:
    return [v for v in vertices(spec.n) if v not in cops]


def verify_strategy(
    spec: GameSpec,
    cop_factory: Callable[[], Strategy],
    ply_bound: int,
    table: SolvedTable | None = None,
    seeds: Sequence[int] = range(20),
    use_solver: bool | None = None,
    max_states: int = DEFAULT_MAX_STATES,
) -> VerificationReport:
    """Run a cop strategy against evaders and check every game ends in capture.

    With a table (or when the solver fits the budget) the solver-optimal
    evader is started from every free vertex.  Otherwise greedy evaders from
    random starts and random evaders are run over ``seeds``.
    """
    with _Timer() as t:
        name = cop_factory().name
        if use_solver is None:
            use_solver = table is not None or working_cells(spec) <= max_states
        if use_solver and table is None:
            table = solve(spec, max_states)
        placement = cop_factory().place(spec, None)

        games: list[tuple[str, Strategy, int]] = []
        if table is not None:
            for v in _free_vertices(spec, placement):
                games.append((f"optimal@{v}", FixedStart(TableEvader(table), v), 0))
        else:
            for seed in seeds:
                start = random.Random(f"{seed}:start").choice(_free_vertices(spec, placement))
                games.append((f"greedy@{start}#{seed}", FixedStart(GreedyEvader(), start), seed))
                games.append((f"random#{seed}", RandomSafeEvader(), seed))

        plies: list[int] = []
        failure: Transcript | None = None
        failed_game = None
        for label, evader, seed in games:
            tr = simulate(spec, cop_factory(), evader, ply_bound, seed=seed)
            if not tr.outcome.cops_won:
                failure, failed_game = tr, label
                break
            plies.append(tr.outcome.plies)

    params = {
        "spec": spec.canonical_string(),
        "strategy": name,
        "ply_bound": ply_bound,
        "evaders": "optimal" if table is not None else "greedy+random",
    }
    if table is None:
        params["seeds"] = [int(s) for s in seeds]
    if failure is not None:
        witness = {"game": failed_game, "outcome": failure.outcome.to_json(), "transcript": failure.to_json()}
        return VerificationReport("strategy", params, REFUTED, witness, t.ms)
    witness = {"games": len(plies), "max_plies": max(plies, default=0), "mean_plies": float(np.mean(plies)) if plies else 0.0}
    return VerificationReport("strategy", params, CONFIRMED, witness, t.ms)


# --------------------------------------------------------------------------
# distance differential


def _distance_matrix(n: int) -> np.ndarray:
    idx = np.arange(n)
    axis = np.abs(idx[:, None] - idx[None, :])
    axis = np.minimum(axis, n - axis)
    # d[(r1, c1), (r2, c2)] = axis[r1, r2] + axis[c1, c2]
    return (axis[:, None, :, None] + axis[None, :, None, :]).reshape(n * n, n * n)


def max_distance_change(n: int, rule: MoveRule) -> tuple[int, tuple[Vertex, Vertex, Vertex]]:
    """Largest ``|d(u, x) - d(w, x)|`` over all u, one-move successors w, targets x."""
    dist = _distance_matrix(n)
    best, where = -1, None
    for o in move_offsets(n, rule):
        for u in vertices(n):
            w = translate(n, u, o)
            diff = np.abs(dist[u[0] * n + u[1]] - dist[w[0] * n + w[1]])
            j = int(diff.argmax())
            if diff[j] > best:
                best, where = int(diff[j]), (u, w, Vertex(*divmod(j, n)))
    assert where is not None
    return best, where


def verify_knight_distance_bound(n: int) -> VerificationReport:
    """A knight move shifts torus distance to any target by at most 3, a step on foot by 1."""
    check_size(n)
    with _Timer() as t:
        knight, kw = max_distance_change(n, KNIGHT_RULE)
        foot, fw = max_distance_change(n, FOOT_RULE)
    witness = {
        "knight_max_change": knight,
        "knight_attained": [list(v) for v in kw],
        "foot_max_change": foot,
        "foot_attained": [list(v) for v in fw],
    }
    verdict = CONFIRMED if (knight, foot) == (3, 1) else REFUTED
    return VerificationReport("knight-distance", {"n": n}, verdict, witness, t.ms)


# --------------------------------------------------------------------------
# solver self-consistency


def expected_value(table: SolvedTable, state: GameState) -> int:
    """One-step recomputation of a state's code from its successors."""
    spec = table.spec
    if state.turn is Turn.COPS:
        if any(state.robber in protected_by(spec.n, r, c) for r, c in zip(spec.cop_rules, state.cops)):
            return 1
        best = min(table.raw(a, state.robber, Turn.ROBBER) for a in legal_cop_actions(spec, state))
    else:
        best = max(
            0 if d in state.cops else table.raw(state.cops, d, Turn.COPS)
            for d in legal_robber_actions(spec, state)
        )
    return ROBBER_WIN if best == ROBBER_WIN else best + 1


def verify_value_consistency(
    table: SolvedTable, sample: int | None = None, seed: int = 0
) -> VerificationReport:
    """Every stored value agrees with a one-step lookahead over the engine's moves.

    Exhaustive when ``sample`` is None, otherwise ``sample`` random indices.
    """
    spec = table.spec
    total = state_count(spec)
    with _Timer() as t:
        if sample is None or sample >= total:
            indices: Sequence[int] = range(total)
        else:
            indices = random.Random(seed).sample(range(total), sample)
        checked = 0
        for index in indices:
            cops, robber, turn = decode_state(spec, index)
            if robber in cops:
                continue
            state = GameState(cops, robber, turn)
            stored = table.raw(cops, robber, turn)
            want = expected_value(table, state)
            checked += 1
            if stored != want:
                witness = {
                    "index": int(index),
                    "cops": [list(c) for c in cops],
                    "robber": list(robber),
                    "turn": turn.value,
                    "stored": stored,
                    "recomputed": want,
                }
                return VerificationReport(
                    "value-consistency", {"spec": spec.canonical_string(), "sample": sample, "seed": seed},
                    REFUTED, witness, t.ms,
                )
    params = {"spec": spec.canonical_string(), "sample": sample, "seed": seed}
    return VerificationReport("value-consistency", params, CONFIRMED, {"states_checked": checked}, t.ms)


# --------------------------------------------------------------------------
# suites


def suite_small_knights(ns: Sequence[int] = (3, 4), solver: Solver | None = None, **kw) -> list[VerificationReport]:
    out = []
    for n in ns:
        out.append(verify_cop_number(n, [KNIGHT_RULE], FOOT_RULE, 2, 4, solver=solver, **kw))
        out.append(verify_strategy(GameSpec(n, (KNIGHT_RULE,) * 2, FOOT_RULE), lambda n=n: knight_pair_small(n), 40 * n))
    return out


def suite_knights(ns: Sequence[int] = (5, 6, 7, 8), solver: Solver | None = None, **kw) -> list[VerificationReport]:
    out = []
    for n in ns:
        out.append(verify_cop_number(n, [KNIGHT_RULE], FOOT_RULE, 3, 4, solver=solver, **kw))
        spec = GameSpec(n, (KNIGHT_RULE,) * 3, FOOT_RULE)
        out.append(verify_strategy(spec, lambda n=n: knight_formation(n), 40 * n, **kw))
    return out


def suite_plus(ns: Sequence[int] = (5, 6, 7, 8, 9)) -> list[VerificationReport]:
    return [verify_plus_shape(n, occ) for n in ns for occ in (False, True)]


def suite_chief_coverage(ms: Sequence[int] = range(2, 9), n: int | None = None) -> list[VerificationReport]:
    return [protection_count_map(m, n if n is not None else 4 * m + 3)[1] for m in ms]


def suite_chief_foot(ns: Sequence[int] = range(4, 17), solver: Solver | None = None, **kw) -> list[VerificationReport]:
    out = []
    for n in ns:
        out.append(verify_cop_number(n, [CHIEF_RULE], FOOT_RULE, 1, 2, solver=solver, **kw))
        out.append(verify_strategy(GameSpec(n, (CHIEF_RULE,), FOOT_RULE), chief_pin, 40 * n, **kw))
    return out


def verify_speedy_formula(ms: Sequence[int] = range(2, 10)) -> VerificationReport:
    """``speedy_cop_count`` against the closed form, evaluated independently."""
    with _Timer() as t:
        got = {m: speedy_cop_count(m) for m in ms}
        # ceil(m/3) by repeated subtraction, not math.ceil
        want = {}
        for m in ms:
            f, rest = 0, m
            while rest > 0:
                f, rest = f + 1, rest - 3
            want[m] = 2 * f + 1
    bad = {m: (got[m], want[m]) for m in ms if got[m] != want[m]}
    params = {"m": list(ms)}
    if bad:
        return VerificationReport("speedy-formula", params, REFUTED, {"mismatch": bad}, t.ms)
    return VerificationReport("speedy-formula", params, CONFIRMED, {"counts": got}, t.ms)


def verify_speedy_lower_bound(m: int, n: int, max_states: int = DEFAULT_MAX_STATES) -> VerificationReport:
    """Solve with one cop fewer than the formula and record the verdict.

    The formula is an asymptotic statement, so a small board that needs fewer
    cops is recorded as a discrepancy rather than a refutation.
    """
    count = speedy_cop_count(m)
    rules = (CHIEF_RULE,) + (FOOT_RULE,) * (count - 2)
    spec = GameSpec(n, rules, speedy(m))
    params = {"m": m, "n": n, "cops": [r.name for r in rules]}
    with _Timer() as t:
        try:
            table = solve(spec, max_states)
        except BudgetExceeded as exc:
            return VerificationReport("speedy-lower-bound", params, DISCREPANCY, {"budget_exceeded": str(exc)}, 0.0)
        win = cops_can_win(table)
        witness: dict = {"cops_can_win": win, "states": table.state_count}
        if win:
            witness["placement"] = [list(v) for v in best_cop_placement(table)]
            witness["max_plies"] = table.max_plies
        else:
            cops = best_cop_placement(table)
            witness["sample_placement"] = [list(v) for v in cops]
            witness["escape"] = list(escape_placement(table, cops))
    verdict = DISCREPANCY if win else CONFIRMED
    return VerificationReport("speedy-lower-bound", params, verdict, witness, t.ms)


def suite_speedy(
    ms: Sequence[int] = (2,),
    n: int | None = None,
    seeds: Sequence[int] = range(100),
    max_states: int = DEFAULT_MAX_STATES,
) -> list[VerificationReport]:
    out = [verify_speedy_formula(ms)]
    for m in ms:
        f = math.ceil(m / 3)
        size = n if n is not None else 6 * f + 5
        spec = sweep_spec(m, size)
        fits = working_cells(spec) <= max_states
        out.append(
            verify_strategy(spec, lambda m=m: ChiefSpeedySweep(m), 6 * size, seeds=seeds, use_solver=fits, max_states=max_states)
        )
        out.append(verify_speedy_lower_bound(m, size, max_states))
    return out


def suite_knight_distance(ns: Sequence[int] = (5, 6, 7, 8, 9)) -> list[VerificationReport]:
    return [verify_knight_distance_bound(n) for n in ns]


SUITES = (
    "thm-small-knights",
    "thm-knights",
    "lemma-plus",
    "lemma-chief-coverage",
    "chief-foot",
    "speedy",
    "knight-distance",
)
