"""Movement laws for the pieces and the sets they protect."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from .board import Offset, Vertex, check_size, translate

FOOT = "foot"
KNIGHT = "knight"
CHIEF = "chief"
SPEEDY = "speedy"

TAGS = (FOOT, KNIGHT, CHIEF, SPEEDY)


class RuleError(ValueError):
    """A move rule is malformed or does not fit the board it is used on."""


@dataclass(frozen=True, order=True)
class MoveRule:
    tag: str
    m: int | None = None

    def __post_init__(self) -> None:
        if self.tag not in TAGS:
            raise RuleError(f"unknown move rule {self.tag!r}")
        if self.tag == SPEEDY:
            if not isinstance(self.m, int) or self.m < 2:
                # a 1-speedy piece is exactly a piece on foot
                raise RuleError(f"speedy rule needs m >= 2 (use 'foot' for m=1), got {self.m!r}")
        elif self.m is not None:
            raise RuleError(f"rule {self.tag!r} takes no parameter")

    @classmethod
    def parse(cls, text: str) -> MoveRule:
        text = text.strip().lower()
        if text.startswith(SPEEDY):
            _, sep, param = text.partition(":")
            if not sep or not param.isdigit():
                raise RuleError(f"expected 'speedy:<m>', got {text!r}")
            return cls(SPEEDY, int(param))
        return cls(text)

    @property
    def name(self) -> str:
        return f"{SPEEDY}:{self.m}" if self.tag == SPEEDY else self.tag

    def __str__(self) -> str:
        return self.name

    def check_board(self, n: int) -> None:
        check_size(n)
        if self.tag == SPEEDY and 2 * self.m + 1 > n:
            raise RuleError(f"{self.name} needs 2m+1 <= n, board has n={n}")


FOOT_RULE = MoveRule(FOOT)
KNIGHT_RULE = MoveRule(KNIGHT)
CHIEF_RULE = MoveRule(CHIEF)


def speedy(m: int) -> MoveRule:
    return MoveRule(SPEEDY, m)


def robber_rule_for_speed(m: int) -> MoveRule:
    """Foot for ``m == 1``, otherwise the m-speedy rule."""
    return FOOT_RULE if m == 1 else speedy(m)


def _raw_offsets(n: int, rule: MoveRule) -> list[tuple[int, int]]:
    if rule.tag == FOOT:
        return [(-1, 0), (1, 0), (0, -1), (0, 1)]
    if rule.tag == KNIGHT:
        return [(a, b) for a in (-2, -1, 1, 2) for b in (-2, -1, 1, 2) if abs(a) != abs(b)]
    if rule.tag == CHIEF:
        out = []
        for t in range(1, n):
            out += [(0, t), (t, 0), (t, t), (t, -t)]
        return out
    return [(s * k, 0) for k in range(1, rule.m + 1) for s in (-1, 1)] + [
        (0, s * k) for k in range(1, rule.m + 1) for s in (-1, 1)
    ]


@lru_cache(maxsize=None)
def move_offsets(n: int, rule: MoveRule) -> tuple[Offset, ...]:
    """Distinct non-zero displacements (reduced mod ``n``), sorted."""
    rule.check_board(n)
    reduced = {Offset(a % n, b % n) for a, b in _raw_offsets(n, rule)}
    reduced.discard(Offset(0, 0))
    return tuple(sorted(reduced))


def destinations(n: int, rule: MoveRule, v: Vertex) -> frozenset[Vertex]:
    """Vertices reachable in one move, not counting ``v`` itself."""
    return frozenset(translate(n, v, o) for o in move_offsets(n, rule))


def allowable(n: int, rule: MoveRule, v: Vertex) -> frozenset[Vertex]:
    return destinations(n, rule, v) | {Vertex(*v)}


def protected_by(n: int, rule: MoveRule, v: Vertex) -> frozenset[Vertex]:
    # The piece's own square is excluded; occupancy is handled by the engine.
    return destinations(n, rule, v)


def chief_coverage_count(n: int, chief_pos: Vertex, robber_pos: Vertex, m: int) -> int:
    """How many of an m-speedy robber's ``4m+1`` options a chief protects."""
    if Vertex(*chief_pos) == Vertex(*robber_pos):
        raise ValueError("chief and robber must be on different vertices")
    options = allowable(n, robber_rule_for_speed(m), robber_pos)
    return len(protected_by(n, CHIEF_RULE, chief_pos) & options)
