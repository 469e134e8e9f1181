"""Labelled directed graphs with an ordered edge list as orientation datum.

Conventions used throughout:

* Vertices carry small integer ids.  Aerial ids are 1..n, ground ids are
  n+1..n+m; ground vertices are linearly ordered along the boundary line by
  their ids.
* The edge list order *is* the orientation.  Reordering the list by an odd
  permutation multiplies the class by (-1)**(d-1); for even d a graph with two
  parallel equally-directed edges is zero.
* ``arrow_mode`` selects the admissible edge directions at ground vertices:
  ``down`` means every edge incident to a ground vertex points toward it,
  ``up`` away from it, ``free`` no constraint.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

AERIAL = "aerial"
GROUND = "ground"
MODES = ("free", "down", "up")

Edge = tuple[int, int]


class GraphError(ValueError):
    pass


@dataclass(frozen=True)
class VertexSpec:
    id: int
    colour: str

    def __post_init__(self):
        if self.colour not in (AERIAL, GROUND):
            raise GraphError(f"unknown colour {self.colour!r}")
        if self.id < 1:
            raise GraphError("vertex ids start at 1")


@dataclass(frozen=True)
class FeynmanGraph:
    d: int
    vertices: tuple[VertexSpec, ...]
    edges: tuple[Edge, ...]
    arrow_mode: str = "free"

    def __post_init__(self):
        if self.d < 1:
            raise GraphError("d must be >= 1")
        if self.arrow_mode not in MODES:
            raise GraphError(f"unknown arrow_mode {self.arrow_mode!r}")
        ids = [v.id for v in self.vertices]
        if sorted(ids) != list(range(1, len(ids) + 1)):
            raise GraphError(f"vertex ids must be 1..{len(ids)}, got {ids}")
        n = self.n_aerial
        for v in self.vertices:
            expect = AERIAL if v.id <= n else GROUND
            if v.colour != expect:
                raise GraphError("aerial ids must precede ground ids")
        idset = set(ids)
        for s, t in self.edges:
            if s == t:
                raise GraphError(f"loop edge at vertex {s}")
            if s not in idset or t not in idset:
                raise GraphError(f"edge ({s},{t}) references unknown vertex")
        if self.arrow_mode != "free":
            for s, t in self.edges:
                if self.arrow_mode == "down" and self.colour_of(s) == GROUND:
                    raise GraphError(f"edge ({s},{t}) leaves a ground vertex in down mode")
                if self.arrow_mode == "up" and self.colour_of(t) == GROUND:
                    raise GraphError(f"edge ({s},{t}) enters a ground vertex in up mode")

    @property
    def n_aerial(self) -> int:
        return sum(1 for v in self.vertices if v.colour == AERIAL)

    @property
    def m_ground(self) -> int:
        return len(self.vertices) - self.n_aerial

    def colour_of(self, vid: int) -> str:
        return AERIAL if vid <= self.n_aerial else GROUND

    def key(self) -> tuple:
        """Hashable identity of the *oriented* graph (edge order included)."""
        return (self.d, self.arrow_mode, self.n_aerial, self.m_ground, self.edges)

    def __repr__(self):  # compact: d2[a2g1:down] 1>2 1>3
        tag = f"a{self.n_aerial}g{self.m_ground}"
        es = " ".join(f"{s}>{t}" for s, t in self.edges) or "-"
        return f"d{self.d}[{tag}:{self.arrow_mode}] {es}"


def make_graph(n_aerial: int, m_ground: int, edges: Iterable[Edge], d: int,
               arrow_mode: str = "free") -> FeynmanGraph:
    verts = tuple(VertexSpec(i, AERIAL) for i in range(1, n_aerial + 1)) + \
        tuple(VertexSpec(i, GROUND) for i in range(n_aerial + 1, n_aerial + m_ground + 1))
    return FeynmanGraph(d, verts, tuple((int(s), int(t)) for s, t in edges), arrow_mode)


def aerial_graph(n: int, edges: Iterable[Edge], d: int) -> FeynmanGraph:
    return make_graph(n, 0, edges, d)


def _sort_parity(edges: Sequence[Edge]) -> tuple[tuple[Edge, ...], int]:
    """Stable sort of the edge list; returns (sorted, parity of the permutation)."""
    order = sorted(range(len(edges)), key=lambda i: (edges[i], i))
    inv = 0
    seen: list[int] = []
    for pos in order:
        inv += sum(1 for q in seen if q > pos)
        seen.append(pos)
    return tuple(edges[i] for i in order), inv & 1


def normalize(g: FeynmanGraph) -> tuple[FeynmanGraph, int]:
    """Canonical edge order (lexicographic) and the orientation sign.

    sign = (parity of the sorting permutation)**(d-1); it is 0 exactly when d
    is even and the graph carries two parallel equally-directed edges.
    """
    if g.d % 2 == 0 and len(set(g.edges)) < len(g.edges):
        canon, _ = _sort_parity(g.edges)
        return FeynmanGraph(g.d, g.vertices, canon, g.arrow_mode), 0
    canon, parity = _sort_parity(g.edges)
    sign = -1 if (parity and (g.d - 1) % 2) else 1
    return FeynmanGraph(g.d, g.vertices, canon, g.arrow_mode), sign


class GraphSum:
    """Formal sum of canonical graphs with exact rational coefficients."""

    def __init__(self):
        self._terms: dict[tuple, tuple[FeynmanGraph, Fraction]] = {}

    def add(self, g: FeynmanGraph, coeff: Fraction | int = 1) -> "GraphSum":
        canon, sign = normalize(g)
        c = Fraction(coeff) * sign
        if c == 0:
            return self
        k = canon.key()
        if k in self._terms:
            c = self._terms[k][1] + c
            if c == 0:
                del self._terms[k]
            else:
                self._terms[k] = (canon, c)
        else:
            self._terms[k] = (canon, c)
        return self

    def __iter__(self) -> Iterator[tuple[FeynmanGraph, Fraction]]:
        return iter(sorted(self._terms.values(), key=lambda t: t[0].key()))

    def __len__(self) -> int:
        return len(self._terms)

    def coeff(self, g: FeynmanGraph) -> Fraction:
        canon, sign = normalize(g)
        if sign == 0:
            return Fraction(0)
        got = self._terms.get(canon.key())
        return got[1] * sign if got else Fraction(0)

    def is_zero(self) -> bool:
        return not self._terms

    def __eq__(self, other) -> bool:
        if not isinstance(other, GraphSum):
            return NotImplemented
        return {k: c for k, (_, c) in self._terms.items()} == \
            {k: c for k, (_, c) in other._terms.items()}

    def __repr__(self):
        if self.is_zero():
            return "GraphSum(0)"
        return "GraphSum(" + " + ".join(f"({c})*{g!r}" for g, c in self) + ")"


def _relabel_map(ids: Sequence[int], n_aerial_old: int) -> dict[int, int]:
    """Old ids -> 1..#ids keeping relative order within each colour class."""
    aer = sorted(i for i in ids if i <= n_aerial_old)
    grd = sorted(i for i in ids if i > n_aerial_old)
    out = {old: new for new, old in enumerate(aer, start=1)}
    out.update({old: new for new, old in enumerate(grd, start=len(aer) + 1)})
    return out


def subgraph(g: FeynmanGraph, A: Iterable[int]) -> FeynmanGraph:
    """Full subgraph on vertex set A, relabelled 1..#A per colour class.

    Edges keep their original relative order.
    """
    A = set(A)
    if not A:
        raise GraphError("empty vertex set")
    if not A <= {v.id for v in g.vertices}:
        raise GraphError("vertex set not contained in the graph")
    rel = _relabel_map(sorted(A), g.n_aerial)
    n_a = sum(1 for i in A if i <= g.n_aerial)
    edges = [(rel[s], rel[t]) for s, t in g.edges if s in A and t in A]
    return make_graph(n_a, len(A) - n_a, edges, g.d, g.arrow_mode)


def quotient(g: FeynmanGraph, A: Iterable[int], collapsed_colour: str | None = None
             ) -> FeynmanGraph:
    """Collapse the vertices of A to a single vertex, deleting A-internal edges.

    The collapsed vertex takes the slot of min(A) within its colour class;
    surviving edges keep their relative order.
    """
    A = set(A)
    if not A:
        raise GraphError("empty vertex set")
    colours = {g.colour_of(i) for i in A}
    if collapsed_colour is None:
        if len(colours) > 1:
            raise GraphError("mixed-colour collapse needs an explicit target colour")
        collapsed_colour = colours.pop()
    rep = min(A)
    keep = [v.id for v in g.vertices if v.id not in A]
    new_ids = sorted(keep + [rep])

    def colour(i: int) -> str:
        return collapsed_colour if i == rep else g.colour_of(i)
    aer = [i for i in new_ids if colour(i) == AERIAL]
    grd = [i for i in new_ids if colour(i) == GROUND]
    rel = {old: new for new, old in enumerate(aer, start=1)}
    rel.update({old: new for new, old in enumerate(grd, start=len(aer) + 1)})
    edges = []
    for s, t in g.edges:
        s2 = rep if s in A else s
        t2 = rep if t in A else t
        if s2 == t2:
            if s in A and t in A:
                continue  # A-internal edge, deleted
            raise GraphError("collapse created a loop")
        edges.append((rel[s2], rel[t2]))
    return make_graph(len(aer), len(grd), edges, g.d, g.arrow_mode)


def quotient_blocks(g: FeynmanGraph, blocks: Sequence[Iterable[int]],
                    colours: Sequence[str]) -> FeynmanGraph:
    """Collapse each block to a point; block k becomes vertex k of the result.

    Blocks must be listed aerial-first and, for ground blocks, in ground order,
    matching the labelling convention of the outer graph of a composition.
    """
    blocks = [set(b) for b in blocks]
    covered = set().union(*blocks) if blocks else set()
    if covered != {v.id for v in g.vertices}:
        raise GraphError("blocks must partition the vertex set")
    n_a = sum(1 for c in colours if c == AERIAL)
    owner = {}
    for k, b in enumerate(blocks):
        for i in b:
            owner[i] = k + 1
    edges = []
    for s, t in g.edges:
        bs, bt = owner[s], owner[t]
        if bs == bt:
            continue
        edges.append((bs, bt))
    return make_graph(n_a, len(blocks) - n_a, edges, g.d, g.arrow_mode)


def _block_vertex_map(part: FeynmanGraph, block: Sequence[int], n_aerial_final: int
                      ) -> dict[int, int]:
    """Part vertex id -> final id, order-preserving within each colour class."""
    aer = sorted(i for i in block if i <= n_aerial_final)
    grd = sorted(i for i in block if i > n_aerial_final)
    if len(aer) != part.n_aerial or len(grd) != part.m_ground:
        raise GraphError(f"block {tuple(block)} does not match part {part!r}")
    out = {j: aer[j - 1] for j in range(1, part.n_aerial + 1)}
    out.update({part.n_aerial + j: grd[j - 1] for j in range(1, part.m_ground + 1)})
    return out


def compose(g0: FeynmanGraph, parts: Sequence[FeynmanGraph],
            partition: Sequence[Sequence[int]]) -> GraphSum:
    """Operadic substitution of ``parts`` into the vertices of ``g0``.

    ``partition[k]`` lists the final vertex ids of the block replacing vertex
    k+1 of ``g0``; part vertices map to block ids order-preservingly within
    each colour class.  Every edge of ``g0`` is redistributed over all
    endpoint choices inside the two blocks, one term per assignment (parallel
    edges of ``g0`` reach the same graph through several assignments and
    count with that multiplicity), with the sign comparing the built edge
    order (quotient edges first, then part edges) against the canonical one.
    Substitution legality follows the coloured rules: aerial-only graphs go
    into aerial vertices, mixed graphs into ground vertices.
    """
    p = len(g0.vertices)
    if len(parts) != p or len(partition) != p:
        raise GraphError("need one part and one block per vertex of g0")
    if any(part.d != g0.d for part in parts):
        raise GraphError("mixed values of d")
    blocks = [tuple(sorted(b)) for b in partition]
    flat = sorted(i for b in blocks for i in b)
    n_final = sum(part.n_aerial for part in parts)
    m_final = sum(part.m_ground for part in parts)
    if flat != list(range(1, n_final + m_final + 1)):
        raise GraphError("blocks must partition 1..n+m")
    for k, (part, block) in enumerate(zip(parts, blocks), start=1):
        if g0.colour_of(k) == AERIAL:
            if part.m_ground:
                raise GraphError(f"mixed graph substituted into aerial vertex {k}")
            if any(i > n_final for i in block):
                raise GraphError(f"ground label in aerial block {k}")
        else:
            grd = [i for i in block if i > n_final]
            if len(grd) != part.m_ground:
                raise GraphError(f"block {k} ground labels do not match part")
            if grd and grd != list(range(min(grd), min(grd) + len(grd))):
                raise GraphError(f"ground labels of block {k} must be consecutive")
    # ground blocks must splice into the boundary line in g0's ground order
    ground_runs = [[i for i in blocks[k] if i > n_final]
                   for k in range(p) if g0.colour_of(k + 1) == GROUND]
    starts = [run[0] for run in ground_runs if run]
    if starts != sorted(starts):
        raise GraphError("ground blocks out of order")

    maps = [_block_vertex_map(part, block, n_final)
            for part, block in zip(parts, blocks)]
    part_edges: list[Edge] = []
    for part, vmap in zip(parts, maps):
        part_edges.extend((vmap[s], vmap[t]) for s, t in part.edges)
    choice_sets = []
    for s, t in g0.edges:
        choice_sets.append([(a, b) for a in blocks[s - 1] for b in blocks[t - 1]])
    out = GraphSum()
    for redistributed in itertools.product(*choice_sets):
        edges = tuple(redistributed) + tuple(part_edges)
        try:
            g = make_graph(n_final, m_final, edges, g0.d, g0.arrow_mode)
        except GraphError:
            continue  # choice incompatible with the arrow mode
        canon, sign = normalize(g)
        if sign:
            out.add(canon, sign)
    return out


def unit_graph(d: int, arrow_mode: str = "free") -> FeynmanGraph:
    return make_graph(1, 0, (), d, arrow_mode)


def _edge_universe(n_aerial: int, m_ground: int, arrow_mode: str) -> list[Edge]:
    total = n_aerial + m_ground
    out = []
    for s in range(1, total + 1):
        for t in range(1, total + 1):
            if s == t:
                continue
            sc = AERIAL if s <= n_aerial else GROUND
            tc = AERIAL if t <= n_aerial else GROUND
            if arrow_mode == "down" and sc == GROUND:
                continue
            if arrow_mode == "up" and tc == GROUND:
                continue
            out.append((s, t))
    return sorted(out)


def enumerate_graphs(n_aerial: int, m_ground: int, l_edges: int, d: int,
                     arrow_mode: str = "free") -> list[FeynmanGraph]:
    """One canonical representative per nonzero class, lexicographic order."""
    universe = _edge_universe(n_aerial, m_ground, arrow_mode)
    if d % 2 == 0:
        pick = itertools.combinations(universe, l_edges)
    else:
        pick = itertools.combinations_with_replacement(universe, l_edges)
    out = []
    for edges in pick:
        out.append(make_graph(n_aerial, m_ground, edges, d, arrow_mode))
    return out


def admissible_subsets(g: FeynmanGraph, d: int) -> list[frozenset[int]]:
    """Proper vertex subsets A whose full subgraph spans a top-degree form:
    (d-1) | d*#A - 2  and  #E(Gamma_A) = (d*#A-2)/(d-1) - 1."""
    if g.m_ground:
        raise GraphError("admissible subsets are defined for aerial-only graphs")
    ids = [v.id for v in g.vertices]
    out = []
    for size in range(2, len(ids)):
        if (d * size - 2) % (d - 1):
            continue
        want = (d * size - 2) // (d - 1) - 1
        for A in itertools.combinations(ids, size):
            Aset = set(A)
            n_edges = sum(1 for s, t in g.edges if s in Aset and t in Aset)
            if n_edges == want:
                out.append(frozenset(A))
    return out


# --- JSON round-trips ------------------------------------------------------

def graph_to_json(g: FeynmanGraph) -> dict:
    return {
        "d": g.d,
        "arrow_mode": g.arrow_mode,
        "vertices": [{"id": v.id, "colour": v.colour} for v in g.vertices],
        "edges": [[s, t] for s, t in g.edges],
    }


def graph_from_json(obj: dict | str) -> FeynmanGraph:
    if isinstance(obj, str):
        obj = json.loads(obj)
    verts = tuple(VertexSpec(v["id"], v["colour"])
                  for v in sorted(obj["vertices"], key=lambda v: v["id"]))
    return FeynmanGraph(obj["d"], verts,
                        tuple((s, t) for s, t in obj["edges"]),
                        obj.get("arrow_mode", "free"))


def graphsum_to_json(s: GraphSum) -> dict:
    return {"terms": [{"coeff": str(c), "graph": graph_to_json(g)} for g, c in s]}


def graphsum_from_json(obj: dict | str) -> GraphSum:
    if isinstance(obj, str):
        obj = json.loads(obj)
    out = GraphSum()
    for term in obj["terms"]:
        out.add(graph_from_json(term["graph"]), Fraction(term["coeff"]))
    return out
