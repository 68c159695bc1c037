"""Geometry of the n x n toroidal chess graph.

Coordinates are ``(row, col)`` with row 0 at the top of the planar picture.
"Up" decreases the row and "left" decreases the column; everything wraps
modulo ``n``.
"""

from __future__ import annotations

from collections.abc import Callable, Iterator
from functools import lru_cache
from typing import NamedTuple

MIN_SIZE = 3


class Vertex(NamedTuple):
    row: int
    col: int

    def __str__(self) -> str:
        return f"({self.row},{self.col})"


class Offset(NamedTuple):
    drow: int
    dcol: int

    def __neg__(self) -> Offset:
        return Offset(-self.drow, -self.dcol)


UP = Offset(-1, 0)
DOWN = Offset(1, 0)
LEFT = Offset(0, -1)
RIGHT = Offset(0, 1)


def check_size(n: int) -> int:
    if not isinstance(n, int) or isinstance(n, bool):
        raise TypeError(f"board size must be an int, got {type(n).__name__}")
    if n < MIN_SIZE:
        raise ValueError(f"board size must be >= {MIN_SIZE}, got {n}")
    return n


def wrap(n: int, row: int, col: int) -> Vertex:
    # Python's % is already the non-negative modulo for positive n.
    return Vertex(row % n, col % n)


def translate(n: int, v: Vertex, o: Offset) -> Vertex:
    return wrap(n, v[0] + o[0], v[1] + o[1])


def axis_distance(n: int, a: int, b: int) -> int:
    d = (a - b) % n
    return min(d, n - d)


def torus_distance(n: int, u: Vertex, v: Vertex) -> int:
    """Shortest-path length between ``u`` and ``v`` in the toroidal grid graph."""
    return axis_distance(n, u[0], v[0]) + axis_distance(n, u[1], v[1])


def vertices(n: int) -> Iterator[Vertex]:
    for r in range(n):
        for c in range(n):
            yield Vertex(r, c)


def vertex_index(n: int, v: Vertex) -> int:
    return v[0] * n + v[1]


def index_vertex(n: int, i: int) -> Vertex:
    return Vertex(*divmod(i, n))


def grid_neighbors(n: int, v: Vertex) -> list[Vertex]:
    return [translate(n, v, o) for o in (UP, DOWN, LEFT, RIGHT)]


def bfs_distances(n: int, source: Vertex) -> dict[Vertex, int]:
    """Breadth-first distances on the explicit toroidal grid graph.

    Independent of :func:`torus_distance`; used as its oracle.
    """
    dist = {source: 0}
    frontier = [source]
    while frontier:
        nxt = []
        for v in frontier:
            for w in grid_neighbors(n, v):
                if w not in dist:
                    dist[w] = dist[v] + 1
                    nxt.append(w)
        frontier = nxt
    return dist


VertexMap = Callable[[Vertex], Vertex]


def _make_symmetry(n: int, rot: int, flip: bool, shift: Offset) -> VertexMap:
    def apply(v: Vertex) -> Vertex:
        r, c = v
        if flip:
            c = -c
        for _ in range(rot):
            # 90 degree rotation: (r, c) -> (c, -r)
            r, c = c, -r
        return wrap(n, r + shift[0], c + shift[1])

    apply.__name__ = f"sym_rot{rot}_flip{int(flip)}_shift{shift[0]}_{shift[1]}"
    return apply


@lru_cache(maxsize=None)
def symmetry_group(n: int) -> tuple[VertexMap, ...]:
    """All ``8 n^2`` automorphisms built from translations, rotation and reflection.

    The first element is the identity.
    """
    check_size(n)
    maps = []
    for rot in range(4):
        for flip in (False, True):
            for dr in range(n):
                for dc in range(n):
                    maps.append(_make_symmetry(n, rot, flip, Offset(dr, dc)))
    return tuple(maps)

