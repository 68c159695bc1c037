"""Game state machine: placement, alternating turns, capture and simulation."""

from __future__ import annotations

import itertools
import json
import logging
import random
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Protocol, Sequence

from .board import Vertex, check_size
from .moves import MoveRule, allowable, protected_by

logger = logging.getLogger(__name__)

CopAction = tuple[Vertex, ...]
RobberAction = Vertex


class IllegalActionError(ValueError):
    """An action or placement breaks the rules of the configured game."""


class Turn(str, Enum):
    COPS = "cops"
    ROBBER = "robber"

    @property
    def other(self) -> Turn:
        return Turn.ROBBER if self is Turn.COPS else Turn.COPS


@dataclass(frozen=True)
class GameSpec:
    n: int
    cop_rules: tuple[MoveRule, ...]
    robber_rule: MoveRule

    def __post_init__(self) -> None:
        check_size(self.n)
        object.__setattr__(self, "cop_rules", tuple(self.cop_rules))
        if not self.cop_rules:
            raise ValueError("a game needs at least one cop")
        for rule in (*self.cop_rules, self.robber_rule):
            rule.check_board(self.n)

    @classmethod
    def from_names(cls, n: int, cops: Sequence[str], robber: str) -> GameSpec:
        return cls(n, tuple(MoveRule.parse(c) for c in cops), MoveRule.parse(robber))

    @property
    def k(self) -> int:
        return len(self.cop_rules)

    @property
    def groups(self) -> list[tuple[int, int]]:
        """Maximal runs ``[start, stop)`` of identical cop rules."""
        runs = []
        start = 0
        for i in range(1, self.k + 1):
            if i == self.k or self.cop_rules[i] != self.cop_rules[start]:
                runs.append((start, i))
                start = i
        return runs

    def canonical_string(self, sym: int = 0) -> str:
        cops = ",".join(r.name for r in self.cop_rules)
        return f"n={self.n};cops={cops};robber={self.robber_rule.name};sym={sym}"

    def to_json(self) -> dict[str, Any]:
        return {
            "n": self.n,
            "cops": [r.name for r in self.cop_rules],
            "robber": self.robber_rule.name,
        }

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> GameSpec:
        return cls.from_names(data["n"], data["cops"], data["robber"])


def canonical_cops(spec: GameSpec, positions: Sequence[Vertex]) -> tuple[Vertex, ...]:
    """Sort cop positions within each run of identical rules."""
    if len(positions) != spec.k:
        raise IllegalActionError(f"expected {spec.k} cop positions, got {len(positions)}")
    out: list[Vertex] = []
    for start, stop in spec.groups:
        out.extend(sorted(Vertex(*p) for p in positions[start:stop]))
    return tuple(out)


@dataclass(frozen=True)
class GameState:
    cops: tuple[Vertex, ...]
    robber: Vertex
    turn: Turn = Turn.COPS

    def __post_init__(self) -> None:
        if self.robber in self.cops:
            raise ValueError("robber shares a vertex with a cop; that is a capture, not a state")

    @classmethod
    def make(
        cls, spec: GameSpec, cops: Sequence[Vertex], robber: Vertex, turn: Turn = Turn.COPS
    ) -> GameState:
        n = spec.n
        for v in (*cops, robber):
            if not (0 <= v[0] < n and 0 <= v[1] < n):
                raise IllegalActionError(f"vertex {tuple(v)} is off the {n}x{n} board")
        return cls(canonical_cops(spec, cops), Vertex(*robber), Turn(turn))


@dataclass(frozen=True)
class Outcome:
    kind: str  # "cops_win" | "robber_survives" | "strategy_fault"
    plies: int
    detail: str | None = None

    @classmethod
    def cops_win(cls, plies: int) -> Outcome:
        return cls("cops_win", plies)

    @classmethod
    def robber_survives(cls, plies: int) -> Outcome:
        return cls("robber_survives", plies)

    @classmethod
    def fault(cls, plies: int, detail: str) -> Outcome:
        return cls("strategy_fault", plies, detail)

    @property
    def cops_won(self) -> bool:
        return self.kind == "cops_win"

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {"type": self.kind, "plies": self.plies}
        if self.detail is not None:
            out["detail"] = self.detail
        return out


def legal_cop_actions(spec: GameSpec, state: GameState):
    if state.turn is not Turn.COPS:
        raise IllegalActionError("it is not the cops' turn")
    choices = [
        sorted(allowable(spec.n, rule, pos)) for rule, pos in zip(spec.cop_rules, state.cops)
    ]
    return itertools.product(*choices)


def legal_robber_actions(spec: GameSpec, state: GameState) -> list[Vertex]:
    if state.turn is not Turn.ROBBER:
        raise IllegalActionError("it is not the robber's turn")
    return sorted(allowable(spec.n, spec.robber_rule, state.robber))


def apply_cop_action(
    spec: GameSpec, state: GameState, action: Sequence[Vertex], ply: int = 1
) -> GameState | Outcome:
    """Move every cop at once; ``ply`` is the number stamped on a resulting capture."""
    if state.turn is not Turn.COPS:
        raise IllegalActionError("it is not the cops' turn")
    if len(action) != spec.k:
        raise IllegalActionError(f"expected {spec.k} destinations, got {len(action)}")
    dest = tuple(Vertex(*a) for a in action)
    for i, (rule, src, dst) in enumerate(zip(spec.cop_rules, state.cops, dest)):
        if dst not in allowable(spec.n, rule, src):
            raise IllegalActionError(f"cop {i} ({rule}) cannot move {src} -> {dst}")
    if state.robber in dest:
        return Outcome.cops_win(ply)
    return GameState(canonical_cops(spec, dest), state.robber, Turn.ROBBER)


def apply_robber_action(
    spec: GameSpec, state: GameState, action: Vertex, ply: int = 2
) -> GameState | Outcome:
    if state.turn is not Turn.ROBBER:
        raise IllegalActionError("it is not the robber's turn")
    dst = Vertex(*action)
    if dst not in allowable(spec.n, spec.robber_rule, state.robber):
        raise IllegalActionError(f"robber ({spec.robber_rule}) cannot move {state.robber} -> {dst}")
    if dst in state.cops:
        return Outcome.cops_win(ply)
    return GameState(state.cops, dst, Turn.COPS)


def protected_set(spec: GameSpec, cops: Sequence[Vertex]) -> set[Vertex]:
    out: set[Vertex] = set()
    for rule, pos in zip(spec.cop_rules, cops):
        out |= protected_by(spec.n, rule, pos)
    return out


def safe_vertices(spec: GameSpec, state: GameState) -> set[Vertex]:
    """Robber options that are neither protected nor occupied by a cop."""
    if state.turn is not Turn.ROBBER:
        raise IllegalActionError("safe vertices are defined on the robber's turn")
    unsafe = protected_set(spec, state.cops) | set(state.cops)
    return set(allowable(spec.n, spec.robber_rule, state.robber)) - unsafe


class Player(Protocol):
    name: str

    def reset(self, spec: GameSpec, rng: random.Random) -> None: ...

    def place(self, spec: GameSpec, cops: tuple[Vertex, ...] | None) -> Any: ...

    def act(self, spec: GameSpec, state: GameState) -> Any: ...


@dataclass(frozen=True)
class Move:
    ply: int
    side: Turn
    to: CopAction | Vertex
    state: GameState | None  # None when the move ended the game
    phase: str | None = None

    def to_json(self) -> dict[str, Any]:
        if self.side is Turn.COPS:
            to: Any = [list(v) for v in self.to]
        else:
            to = list(self.to)
        out: dict[str, Any] = {"ply": self.ply, "side": self.side.value, "to": to}
        if self.phase is not None:
            out["phase"] = self.phase
        return out


@dataclass
class Transcript:
    spec: GameSpec
    cop_placement: tuple[Vertex, ...]
    robber_placement: Vertex | None
    moves: list[Move] = field(default_factory=list)
    outcome: Outcome | None = None
    seed: int | None = None

    def states(self) -> list[GameState]:
        return [m.state for m in self.moves if m.state is not None]

    def to_json(self) -> dict[str, Any]:
        out = {
            "spec": self.spec.to_json(),
            "placements": {
                "cops": [list(v) for v in self.cop_placement],
                "robber": None if self.robber_placement is None else list(self.robber_placement),
            },
            "moves": [m.to_json() for m in self.moves],
            "outcome": None if self.outcome is None else self.outcome.to_json(),
        }
        if self.seed is not None:
            out["seed"] = self.seed
        return out

    def dumps(self, **kwargs: Any) -> str:
        return json.dumps(self.to_json(), **kwargs)

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> Transcript:
        """Rebuild a transcript, re-deriving every state from the recorded actions."""
        spec = GameSpec.from_json(data["spec"])
        cops = tuple(Vertex(*v) for v in data["placements"]["cops"])
        rob = data["placements"]["robber"]
        actions = [
            (m["side"], m["to"], m.get("phase")) for m in data["moves"]
        ]
        out = replay_actions(spec, cops, None if rob is None else Vertex(*rob), actions)
        out.seed = data.get("seed")
        recorded = data.get("outcome")
        if recorded is None:
            return out
        if out.outcome is not None and recorded != out.outcome.to_json():
            raise ValueError(f"recorded outcome {recorded} does not replay ({out.outcome})")
        if out.outcome is None:
            if recorded["type"] == "cops_win":
                raise ValueError("recorded capture does not happen on replay")
            out.outcome = Outcome(recorded["type"], recorded["plies"], recorded.get("detail"))
        return out


def replay_actions(
    spec: GameSpec,
    cop_placement: Sequence[Vertex],
    robber_placement: Vertex | None,
    actions: Sequence[tuple[str, Any, str | None]],
) -> Transcript:
    tr = Transcript(spec, tuple(Vertex(*v) for v in cop_placement), robber_placement)
    if robber_placement is None:
        return tr
    state: GameState | Outcome = GameState.make(spec, cop_placement, robber_placement)
    for ply, (side, to, phase) in enumerate(actions, start=1):
        if isinstance(state, Outcome):
            raise ValueError(f"action recorded after the game ended at ply {state.plies}")
        if Turn(side) is Turn.COPS:
            dest = tuple(Vertex(*v) for v in to)
            state = apply_cop_action(spec, state, dest, ply)
            move_to: Any = dest
        else:
            move_to = Vertex(*to)
            state = apply_robber_action(spec, state, move_to, ply)
        tr.moves.append(
            Move(ply, Turn(side), move_to, state if isinstance(state, GameState) else None, phase)
        )
    if isinstance(state, Outcome):
        tr.outcome = state
    return tr


def replay(transcript: Transcript) -> Transcript:
    """Re-run the recorded actions from the placements and return the fresh transcript."""
    actions = [(m.side.value, m.to, m.phase) for m in transcript.moves]
    out = replay_actions(
        transcript.spec, transcript.cop_placement, transcript.robber_placement, actions
    )
    out.seed = transcript.seed
    if out.outcome is None:
        out.outcome = transcript.outcome
    return out


def _phase(player: Any) -> str | None:
    phase = getattr(player, "phase", None)
    return None if phase is None else str(phase)


def simulate(
    spec: GameSpec,
    cop_strategy: Player,
    robber_strategy: Player,
    max_plies: int,
    seed: int = 0,
) -> Transcript:
    """Play one game: cops place, robber places, then cops move first.

    Illegal strategy output ends the game with a ``strategy_fault`` outcome.
    """
    cop_strategy.reset(spec, random.Random(f"{seed}:cops"))
    robber_strategy.reset(spec, random.Random(f"{seed}:robber"))

    try:
        placement = tuple(Vertex(*v) for v in cop_strategy.place(spec, None))
        canonical_cops(spec, placement)
        for v in placement:
            if not (0 <= v[0] < spec.n and 0 <= v[1] < spec.n):
                raise IllegalActionError(f"cop placed off board at {tuple(v)}")
    except Exception as exc:  # noqa: BLE001 - any strategy error is a fault
        tr = Transcript(spec, (), None, seed=seed)
        tr.outcome = Outcome.fault(0, f"cop placement: {exc}")
        return tr

    tr = Transcript(spec, placement, None, seed=seed)
    try:
        rob = Vertex(*robber_strategy.place(spec, canonical_cops(spec, placement)))
        state: GameState | Outcome = GameState.make(spec, placement, rob)
    except Exception as exc:  # noqa: BLE001
        tr.outcome = Outcome.fault(0, f"robber placement: {exc}")
        return tr
    tr.robber_placement = rob

    ply = 0
    while ply < max_plies:
        ply += 1
        player = cop_strategy if state.turn is Turn.COPS else robber_strategy
        side = state.turn
        try:
            action = player.act(spec, state)
            if side is Turn.COPS:
                action = tuple(Vertex(*v) for v in action)
                nxt = apply_cop_action(spec, state, action, ply)
            else:
                action = Vertex(*action)
                nxt = apply_robber_action(spec, state, action, ply)
        except Exception as exc:  # noqa: BLE001
            logger.debug("strategy %s faulted at ply %d: %s", player.name, ply, exc)
            tr.outcome = Outcome.fault(ply, f"{side.value} ({player.name}): {exc}")
            return tr
        tr.moves.append(
            Move(ply, side, action, nxt if isinstance(nxt, GameState) else None, _phase(player))
        )
        if isinstance(nxt, Outcome):
            tr.outcome = nxt
            return tr
        state = nxt
    tr.outcome = Outcome.robber_survives(max_plies)
    return tr
