"""Command-line interface: ``copchase <subcommand> ...``.

Exit codes: 0 success/confirmed, 1 refuted, 2 usage error, 3 solver budget.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Callable, Sequence, TextIO

from . import __version__
from . import verify as V
from .board import Vertex
from .engine import (
    GameSpec,
    GameState,
    IllegalActionError,
    Outcome,
    Turn,
    apply_cop_action,
    apply_robber_action,
    protected_set,
    simulate,
)
from .moves import MoveRule, RuleError
from .solver import (
    DEFAULT_MAX_STATES,
    BudgetExceeded,
    SolvedTable,
    cop_number,
    cops_can_win,
    repeat_last,
    winning_placement,
)
from .store import TableLoadError, cached_solve, load_table, save_table
from .strategies import (
    COP_STRATEGIES,
    ROBBER_STRATEGIES,
    GreedyEvader,
    Strategy,
    TableCops,
    TableEvader,
    default_cop_strategy,
    make_cop_strategy,
    make_robber_strategy,
)

logger = logging.getLogger("copchase")

EXIT_OK, EXIT_REFUTED, EXIT_USAGE, EXIT_BUDGET = 0, 1, 2, 3


class UsageError(Exception):
    pass


# --------------------------------------------------------------------------
# argument helpers


def parse_rule_list(text: str) -> list[MoveRule]:
    """``"chief,foot*2"`` -> [chief, foot, foot]."""
    rules: list[MoveRule] = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            raise UsageError(f"empty entry in rule list {text!r}")
        name, star, count = item.partition("*")
        times = 1
        if star:
            if not count.strip().isdigit() or int(count) < 1:
                raise UsageError(f"bad repeat count in {item!r}")
            times = int(count)
        try:
            rules += [MoveRule.parse(name)] * times
        except RuleError as exc:
            raise UsageError(str(exc)) from exc
    return rules


def parse_int_range(text: str) -> list[int]:
    """``"5..9"`` (inclusive), ``"5,7,9"`` or ``"6"``."""
    out: list[int] = []
    try:
        for part in text.split(","):
            lo, dots, hi = part.partition("..")
            if dots:
                out += list(range(int(lo), int(hi) + 1))
            else:
                out.append(int(part))
    except ValueError as exc:
        raise UsageError(f"bad integer range {text!r}") from exc
    if not out:
        raise UsageError(f"empty range {text!r}")
    return out


def build_spec(n: int, cops: str, robber: str) -> GameSpec:
    try:
        return GameSpec(n, tuple(parse_rule_list(cops)), MoveRule.parse(robber))
    except UsageError:
        raise
    except (ValueError, TypeError) as exc:
        raise UsageError(str(exc)) from exc


def _emit(args: argparse.Namespace, payload: dict, human: str) -> None:
    if args.json:
        print(json.dumps(payload, sort_keys=True, default=V._jsonable))
    else:
        print(human)


def _get_table(args: argparse.Namespace, spec: GameSpec) -> SolvedTable:
    if getattr(args, "table", None):
        table = load_table(args.table)
        if table.spec != spec:
            raise UsageError(f"table {args.table} is for {table.spec.canonical_string()}")
        return table
    if args.no_cache:
        from .solver import solve

        return solve(spec, args.max_states)
    return cached_solve(spec, args.cache_dir, args.max_states)


# --------------------------------------------------------------------------
# subcommands


def cmd_cop_number(args: argparse.Namespace) -> int:
    rules = parse_rule_list(args.cops)
    try:
        robber = MoveRule.parse(args.robber)
        GameSpec(args.n, tuple(rules), robber)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    solver = (lambda s: cached_solve(s, args.cache_dir, args.max_states)) if not args.no_cache else None
    result = cop_number(args.n, repeat_last(rules), robber, args.max_k, args.max_states, solver)
    value = result if isinstance(result, int) else str(result)
    payload = {"n": args.n, "cops": [r.name for r in rules], "robber": robber.name, "max_k": args.max_k, "cop_number": value}
    _emit(args, payload, str(value))
    return EXIT_OK


def cmd_solve(args: argparse.Namespace) -> int:
    spec = build_spec(args.n, args.cops, args.robber)
    table = _get_table(args, spec)
    placement = winning_placement(table)
    payload = {
        "spec": spec.to_json(),
        "cops_can_win": cops_can_win(table),
        "winning_placement": None if placement is None else [list(v) for v in placement],
        "max_plies": table.max_plies,
        "state_count": table.state_count,
        "solve_seconds": table.metadata.get("solve_seconds"),
    }
    if args.out:
        payload["saved_to"] = str(save_table(table, args.out, args.quotient))
    lines = [
        spec.canonical_string(),
        f"cops can win: {payload['cops_can_win']}",
        f"states: {payload['state_count']}",
        f"longest forced capture: {payload['max_plies']} plies",
    ]
    if placement is not None:
        lines.append("winning placement: " + " ".join(map(str, placement)))
    if args.out:
        lines.append(f"saved to {payload['saved_to']}")
    _emit(args, payload, "\n".join(lines))
    return EXIT_OK


def _cop_player(args, spec: GameSpec) -> Strategy:
    name = args.cop_strategy or default_cop_strategy(spec)
    if name is None:
        raise UsageError("no scripted strategy fits this game; pass --cop-strategy optimal")
    table = _get_table(args, spec) if name == "optimal" else None
    try:
        return make_cop_strategy(name, spec, table)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def cmd_simulate(args: argparse.Namespace) -> int:
    spec = build_spec(args.n, args.cops, args.robber)
    cops = _cop_player(args, spec)
    table = _get_table(args, spec) if args.robber_strategy == "optimal" else None
    robber = make_robber_strategy(args.robber_strategy, table)
    max_plies = args.max_plies if args.max_plies is not None else 40 * spec.n
    tr = simulate(spec, cops, robber, max_plies, seed=args.seed)
    if args.trace:
        Path(args.trace).write_text(tr.dumps(indent=1) + "\n")
    payload = tr.to_json()
    out = tr.outcome
    human = f"{out.kind} after {out.plies} plies" + (f" ({out.detail})" if out.detail else "")
    _emit(args, payload, human)
    return EXIT_REFUTED if out.kind == "strategy_fault" else EXIT_OK


def run_suite(name: str, args: argparse.Namespace) -> list[V.VerificationReport]:
    ns = parse_int_range(args.n) if args.n else None
    ms = parse_int_range(args.m) if args.m else None
    kw = {"max_states": args.max_states}
    if name == "thm-small-knights":
        return V.suite_small_knights(ns or (3, 4), max_states=args.max_states)
    if name == "thm-knights":
        return V.suite_knights(ns or (5, 6, 7, 8), **kw)
    if name == "lemma-plus":
        return V.suite_plus(ns or range(5, 10))
    if name == "lemma-chief-coverage":
        if ns and len(ns) != 1:
            raise UsageError("lemma-chief-coverage takes a single --n")
        return V.suite_chief_coverage(ms or range(2, 9), ns[0] if ns else None)
    if name == "chief-foot":
        return V.suite_chief_foot(ns or range(4, 17), **kw)
    if name == "speedy":
        if ns and len(ns) != 1:
            raise UsageError("speedy takes a single --n")
        return V.suite_speedy(ms or (2,), ns[0] if ns else None, range(args.seeds), args.max_states)
    if name == "knight-distance":
        return V.suite_knight_distance(ns or range(5, 10))
    raise UsageError(f"unknown suite {name!r}")


def cmd_verify(args: argparse.Namespace) -> int:
    names = V.SUITES if args.suite == "all" else (args.suite,)
    if args.suite == "all" and (args.n or args.m):
        raise UsageError("--n/--m cannot be combined with 'all'")
    reports = [r for name in names for r in run_suite(name, args)]
    if args.json:
        print(json.dumps([r.to_json() for r in reports], sort_keys=True, default=V._jsonable))
    else:
        for r in reports:
            print(r.summary())
            if r.verdict != V.CONFIRMED and isinstance(r.witness, dict):
                short = {k: v for k, v in r.witness.items() if k != "transcript"}
                print("  witness: " + json.dumps(short, default=V._jsonable))
    if any(r.verdict == V.REFUTED for r in reports):
        return EXIT_REFUTED
    if any(r.budget_exceeded for r in reports):
        return EXIT_BUDGET
    return EXIT_OK


# --------------------------------------------------------------------------
# interactive play


def render(spec: GameSpec, cops: Sequence[Vertex], robber: Vertex | None) -> str:
    """Planar board: ``C`` cop, ``R`` robber, ``*`` protected, ``.`` free."""
    n = spec.n
    prot = protected_set(spec, cops)
    width = len(str(n - 1))
    lines = [" " * (width + 1) + " ".join(f"{c:>{width}}" for c in range(n))]
    for r in range(n):
        cells = []
        for c in range(n):
            v = Vertex(r, c)
            ch = "C" if v in cops else "R" if v == robber else "*" if v in prot else "."
            cells.append(f"{ch:>{width}}")
        lines.append(f"{r:>{width}} " + " ".join(cells))
    return "\n".join(lines)


def _read_vertices(prompt: str, count: int, inp: TextIO, out: TextIO) -> list[Vertex] | None:
    out.write(prompt)
    out.flush()
    line = inp.readline()
    if not line:
        return None
    try:
        nums = [int(x) for x in line.replace(",", " ").split()]
    except ValueError:
        return []
    if len(nums) != 2 * count:
        return []
    return [Vertex(nums[i], nums[i + 1]) for i in range(0, len(nums), 2)]


def play_session(
    spec: GameSpec,
    human: str,
    machine: Strategy,
    inp: TextIO,
    out: TextIO,
    max_plies: int,
    seed: int = 0,
) -> Outcome:
    """Text game; illegal human input re-prompts without changing the state."""
    import random

    machine.reset(spec, random.Random(seed))
    n = spec.n

    def ask(prompt: str, count: int, check: Callable[[list[Vertex]], object]):
        while True:
            got = _read_vertices(prompt, count, inp, out)
            if got is None:
                return None
            if not got:
                out.write(f"need {count} vertex(es) as 'row col'\n")
                continue
            try:
                return check(got)
            except (IllegalActionError, ValueError) as exc:
                out.write(f"illegal: {exc}\n")

    def on_board(vs: list[Vertex]) -> None:
        for v in vs:
            if not (0 <= v.row < n and 0 <= v.col < n):
                raise IllegalActionError(f"{v} is off the board")

    if human == "robber":
        cops = tuple(machine.place(spec, None))
        out.write(render(spec, cops, None) + "\n")

        def place_robber(vs):
            on_board(vs)
            return GameState.make(spec, cops, vs[0])

        state = ask("place robber (row col): ", 1, place_robber)
    else:
        def place_cops(vs):
            on_board(vs)
            return tuple(vs)

        cops = ask(f"place {spec.k} cop(s) (row col ...): ", spec.k, place_cops)
        state = None
        if cops is not None:
            state = GameState.make(spec, cops, machine.place(spec, cops))
    if state is None:
        out.write("input ended\n")
        return Outcome.robber_survives(0)

    result: GameState | Outcome = state
    ply = 0
    while ply < max_plies:
        assert isinstance(result, GameState)
        out.write(render(spec, result.cops, result.robber) + "\n")
        ply += 1
        cur = result
        human_turn = (cur.turn is Turn.ROBBER) == (human == "robber")
        if human_turn:
            if cur.turn is Turn.ROBBER:
                nxt = ask(
                    f"ply {ply} robber move (row col): ", 1,
                    lambda vs: apply_robber_action(spec, cur, vs[0], ply),
                )
            else:
                nxt = ask(
                    f"ply {ply} cop moves (row col ...): ", spec.k,
                    lambda vs: apply_cop_action(spec, cur, vs, ply),
                )
            if nxt is None:
                out.write("input ended\n")
                return Outcome.robber_survives(ply - 1)
        else:
            action = machine.act(spec, cur)
            if cur.turn is Turn.COPS:
                nxt = apply_cop_action(spec, cur, action, ply)
                out.write(f"ply {ply}: cops move to {' '.join(map(str, action))}\n")
            else:
                nxt = apply_robber_action(spec, cur, action, ply)
                out.write(f"ply {ply}: robber moves to {action}\n")
        result = nxt
        if isinstance(result, Outcome):
            out.write(f"*** CAPTURED: cops win after {result.plies} plies ***\n")
            return result
    out.write(f"*** robber survives {max_plies} plies ***\n")
    return Outcome.robber_survives(max_plies)


def cmd_play(args: argparse.Namespace) -> int:
    spec = build_spec(args.n, args.cops, args.robber)
    table = load_table(args.table) if args.table else None
    if table is not None and table.spec != spec:
        raise UsageError(f"table {args.table} is for {table.spec.canonical_string()}")
    if args.human == "robber":
        if table is not None:
            machine: Strategy = TableCops(table)
        else:
            name = args.cop_strategy or default_cop_strategy(spec)
            if name is None or name == "optimal":
                machine = TableCops(_get_table(args, spec))
            else:
                machine = make_cop_strategy(name, spec)
    else:
        machine = TableEvader(table) if table is not None else GreedyEvader()
    max_plies = args.max_plies if args.max_plies is not None else 40 * spec.n
    play_session(spec, args.human, machine, sys.stdin, sys.stdout, max_plies, args.seed)
    return EXIT_OK


# --------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--max-states", type=int, default=DEFAULT_MAX_STATES, help="solver working-array budget")
    common.add_argument("--threads", type=int, default=1, help="worker cap (the solver is single-threaded)")
    common.add_argument("--cache-dir", default=None, help="table cache directory (default $COPCHASE_CACHE)")
    common.add_argument("--no-cache", action="store_true", help="never read or write cached tables")
    common.add_argument("--json", action="store_true", help="machine-readable output")
    common.add_argument("-v", "--verbose", action="count", default=0)

    game = argparse.ArgumentParser(add_help=False)
    game.add_argument("--n", type=int, required=True, help="board size")
    game.add_argument("--cops", required=True, help="cop rules, e.g. 'knight*3' or 'chief,foot*2'")
    game.add_argument("--robber", default="foot", help="robber rule (foot or speedy:<m>)")

    p = argparse.ArgumentParser(prog="copchase", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("cop-number", parents=[common], help="least number of cops that can force a capture")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--cops", required=True, help="rules for cops 1, 2, ...; the last one repeats")
    s.add_argument("--robber", default="foot")
    s.add_argument("--max-k", type=int, default=4)
    s.set_defaults(func=cmd_cop_number)

    s = sub.add_parser("solve", parents=[common, game], help="solve one game and optionally save the table")
    s.add_argument("--out", help="write the table file here")
    s.add_argument("--quotient", action="store_true", help="store the translation quotient only")
    s.set_defaults(func=cmd_solve, table=None)

    s = sub.add_parser("simulate", parents=[common, game], help="play one game and export the transcript")
    s.add_argument("--cop-strategy", choices=COP_STRATEGIES)
    s.add_argument("--robber-strategy", choices=ROBBER_STRATEGIES, default="greedy")
    s.add_argument("--max-plies", type=int)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--trace", help="write the transcript JSON here")
    s.add_argument("--table", help="solved table for the optimal players")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("verify", parents=[common], help="run a verification suite")
    s.add_argument("suite", choices=V.SUITES + ("all",))
    s.add_argument("--n", help="board sizes, e.g. 5..9 or 5,7")
    s.add_argument("--m", help="robber speeds, e.g. 2..8")
    s.add_argument("--seeds", type=int, default=100, help="seed count for simulation campaigns")
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("play", parents=[common, game], help="interactive game in the terminal")
    s.add_argument("--human", choices=("robber", "cops"), default="robber")
    s.add_argument("--table", help="machine side plays this table's optimal policy")
    s.add_argument("--cop-strategy", choices=COP_STRATEGIES)
    s.add_argument("--max-plies", type=int)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_play)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    if args.threads < 1:
        parser.error("--threads must be >= 1")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"copchase: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except TableLoadError as exc:
        print(f"copchase: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BudgetExceeded as exc:
        print(f"copchase: budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET


if __name__ == "__main__":
    sys.exit(main())
