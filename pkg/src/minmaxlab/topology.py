"""Decision graphs, their products, and stable enumeration of game levels.

Two decision graphs occur: the full binary tree (positions are words over
{1,2}, recording the exact move history of one player) and the quadrant
lattice (positions are pairs (i, j) counting how many 1-moves and 2-moves
that player has made).  A game is the interleaved product of one graph per
player: Alice owns the first coordinate, Bob the second, and the first
mover alternates with the other.  Truncating at depth 2n gives the n-round
game; the depth-2n vertices are the outcomes.

Vertices are plain tuples (a_part, b_part).  A tree part is a str over
"12" ("" at the root); a lattice part is a pair of non-negative ints.
Nothing here materializes the graph: children and levels are computed on
demand, and every enumeration order is a pure function of the spec so that
leaf indices are reproducible across runs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

TREE = "tree"
LATTICE = "lattice"

ALICE = "alice"
BOB = "bob"

#: Canonical family names.  A capital letter means that side plays on the
#: tree; lowercase means the lattice.  First letter = Alice, second = Bob.
FAMILIES = ("AB", "Ab", "aB", "ab")

#: Families accepted by name, including the primed (Bob moves first) ones.
SPEC_NAMES = ("AB", "Ab", "aB", "ab", "AB'", "Ab'", "aB'", "ab'")


@dataclass(frozen=True)
class GameSpec:
    """Which game: family (per-player decision graph), rounds, first mover."""

    family: str
    rounds: int
    first_mover: str = ALICE

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if self.rounds < 0:
            raise ValueError("rounds must be >= 0")
        if self.first_mover not in (ALICE, BOB):
            raise ValueError(f"unknown first mover {self.first_mover!r}")

    @property
    def name(self) -> str:
        return self.family + ("'" if self.first_mover == BOB else "")

    @property
    def depth(self) -> int:
        return 2 * self.rounds

    @property
    def a_kind(self) -> str:
        return TREE if self.family[0] == "A" else LATTICE

    @property
    def b_kind(self) -> str:
        return TREE if self.family[1] == "B" else LATTICE


def make_spec(name: str, rounds: int) -> GameSpec:
    """Build a GameSpec from a family name, primed variants included."""
    if name.endswith("'"):
        return GameSpec(name[:-1], rounds, BOB)
    return GameSpec(name, rounds, ALICE)


Vertex = tuple


def root(spec: GameSpec) -> Vertex:
    a = "" if spec.a_kind == TREE else (0, 0)
    b = "" if spec.b_kind == TREE else (0, 0)
    return (a, b)


def _part_depth(part) -> int:
    if isinstance(part, str):
        return len(part)
    return part[0] + part[1]


def vertex_depth(v: Vertex) -> int:
    return _part_depth(v[0]) + _part_depth(v[1])


def turn(spec: GameSpec, depth: int) -> str:
    """Whose move it is at a vertex of the given depth."""
    if depth % 2 == 0:
        return spec.first_mover
    return BOB if spec.first_mover == ALICE else ALICE


def moves_made(spec: GameSpec, depth: int, player: str) -> int:
    """How many moves the player has made once the game reaches `depth`."""
    if player == spec.first_mover:
        return (depth + 1) // 2
    return depth // 2


def _extend(part, kind: str, move: int):
    if kind == TREE:
        return part + str(move)
    i, j = part
    return (i + 1, j) if move == 1 else (i, j + 1)


def child(spec: GameSpec, v: Vertex, move: int) -> Vertex:
    """The vertex reached from v by the mover playing `move` (1 or 2)."""
    d = vertex_depth(v)
    if d >= spec.depth:
        raise ValueError(f"depth overflow: vertex {v!r} is an outcome of {spec.name}_{spec.rounds}")
    if move not in (1, 2):
        raise ValueError("move must be 1 or 2")
    if turn(spec, d) == ALICE:
        return (_extend(v[0], spec.a_kind, move), v[1])
    return (v[0], _extend(v[1], spec.b_kind, move))


def children(spec: GameSpec, v: Vertex) -> list[Vertex]:
    """Both children of an internal vertex, in move order [1, 2]."""
    return [child(spec, v, 1), child(spec, v, 2)]


def side_size(kind: str, moves: int) -> int:
    return (1 << moves) if kind == TREE else moves + 1


def level_shape(spec: GameSpec, depth: int) -> tuple[int, int]:
    """(a-side size, b-side size) of the level at `depth`."""
    ma = moves_made(spec, depth, ALICE)
    mb = moves_made(spec, depth, BOB)
    return side_size(spec.a_kind, ma), side_size(spec.b_kind, mb)


def part_ordinal(part) -> int:
    """Stable within-side ordinal: tree words as binary (1->0, 2->1, MSB
    first), lattice pairs by first coordinate."""
    if isinstance(part, str):
        o = 0
        for ch in part:
            o = (o << 1) | (ch == "2")
        return o
    return part[0]


def part_from_ordinal(kind: str, moves: int, ordinal: int):
    if kind == TREE:
        return "".join("2" if (ordinal >> (moves - 1 - k)) & 1 else "1" for k in range(moves))
    return (ordinal, moves - ordinal)


def vertex_index(spec: GameSpec, v: Vertex) -> int:
    """Within-level ordinal of v (a-major over the level's 2-d shape)."""
    _, nb = level_shape(spec, vertex_depth(v))
    return part_ordinal(v[0]) * nb + part_ordinal(v[1])


def level(spec: GameSpec, depth: int) -> list[Vertex]:
    """All vertices at `depth` in index order."""
    if not 0 <= depth <= spec.depth:
        raise ValueError(f"depth {depth} outside [0, {spec.depth}]")
    ma = moves_made(spec, depth, ALICE)
    mb = moves_made(spec, depth, BOB)
    na = side_size(spec.a_kind, ma)
    nb = side_size(spec.b_kind, mb)
    return [
        (part_from_ordinal(spec.a_kind, ma, ia), part_from_ordinal(spec.b_kind, mb, ib))
        for ia in range(na)
        for ib in range(nb)
    ]


def outcome_count(spec: GameSpec) -> int:
    na, nb = level_shape(spec, spec.depth)
    return na * nb


def outcomes(spec: GameSpec) -> list[Vertex]:
    return level(spec, spec.depth)


def outcome_index(spec: GameSpec, v: Vertex) -> int:
    if vertex_depth(v) != spec.depth:
        raise ValueError(f"{v!r} is not an outcome of {spec.name}_{spec.rounds}")
    return vertex_index(spec, v)


def iter_player_vertices(spec: GameSpec, player: str) -> Iterator[Vertex]:
    """All internal vertices where it is `player`'s turn."""
    for d in range(spec.depth):
        if turn(spec, d) == player:
            yield from level(spec, d)


# -- text forms ---------------------------------------------------------

def part_text(part) -> str:
    if isinstance(part, str):
        return part
    return f"{part[0]},{part[1]}"


def vertex_text(v: Vertex) -> str:
    """Serialized vertex: "a|b", tree word verbatim, lattice as "i,j"."""
    return f"{part_text(v[0])}|{part_text(v[1])}"


def _parse_part(text: str, kind: str):
    if kind == TREE:
        if any(ch not in "12" for ch in text):
            raise ValueError(f"bad tree word {text!r}")
        return text
    i, j = text.split(",")
    return (int(i), int(j))


def parse_vertex(spec: GameSpec, text: str) -> Vertex:
    a, b = text.split("|")
    return (_parse_part(a, spec.a_kind), _parse_part(b, spec.b_kind))
