"""Undirected graphs, chordality and junction trees.

Vertices are 0-based integers internally. The JSON representation and the
``from_labels``/``labels`` helpers use the 1-based labels of the usual
figures, so ``Graph.from_labels(3, [(1, 2), (2, 3)])`` is the path 1-2-3.
"""

from __future__ import annotations

import itertools
import json
from math import comb
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Sequence

import numpy as np

from .exceptions import (
    EdgeAbsentError,
    EdgePresentError,
    IllegalMoveError,
    ModelError,
    NotDecomposableError,
    NotNestedError,
    TooLargeError,
)

Edge = tuple[int, int]

MAX_ENUMERATE_P = 6
MAX_TRIANGULATE_P = 8
DEFAULT_TRIANGULATION_BUDGET = 2_000_000


def _edge(i: int, j: int) -> Edge:
    i, j = int(i), int(j)
    if i == j:
        raise ModelError(f"self-loop on vertex {i}")
    return (i, j) if i < j else (j, i)


@dataclass(frozen=True, init=False, repr=False)
class Graph:
    """Immutable undirected graph on vertices ``0..p-1``.

    Parameters
    ----------
    p : int
        Number of vertices.
    edges : iterable of pairs
        0-based vertex pairs; order within a pair is irrelevant.
    """

    p: int
    edges: frozenset = field(default_factory=frozenset)

    def __init__(self, p: int, edges: Iterable[Sequence[int]] = ()):
        p = int(p)
        if p < 0:
            raise ModelError("vertex count must be non-negative")
        es = frozenset(_edge(i, j) for i, j in edges)
        for i, j in es:
            if not (0 <= i < p and 0 <= j < p):
                raise ModelError(f"edge ({i}, {j}) has an endpoint outside 0..{p - 1}")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "edges", es)

    @classmethod
    def from_labels(cls, p: int, pairs: Iterable[Sequence[int]]) -> "Graph":
        """Build a graph from 1-based vertex labels."""
        return cls(p, [(i - 1, j - 1) for i, j in pairs])

    @classmethod
    def complete(cls, p: int) -> "Graph":
        return cls(p, itertools.combinations(range(p), 2))

    @classmethod
    def empty(cls, p: int) -> "Graph":
        return cls(p)

    @classmethod
    def from_adjacency(cls, adj) -> "Graph":
        p = len(adj)
        return cls(p, [(i, j) for i in range(p) for j in range(i + 1, p) if adj[i][j]])

    # -- derived structure -------------------------------------------------

    @cached_property
    def adjacency(self) -> tuple[frozenset, ...]:
        nbrs: list[set[int]] = [set() for _ in range(self.p)]
        for i, j in self.edges:
            nbrs[i].add(j)
            nbrs[j].add(i)
        return tuple(frozenset(s) for s in nbrs)

    def to_matrix(self):
        """0/1 adjacency matrix as a numpy array."""
        m = np.zeros((self.p, self.p), dtype=int)
        for i, j in self.edges:
            m[i, j] = m[j, i] = 1
        return m

    @cached_property
    def sorted_edges(self) -> tuple[Edge, ...]:
        return tuple(sorted(self.edges))

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def max_edges(self) -> int:
        return self.p * (self.p - 1) // 2

    def labels(self) -> list[list[int]]:
        """Edges as sorted 1-based pairs."""
        return [[i + 1, j + 1] for i, j in self.sorted_edges]

    def has_edge(self, i: int, j: int) -> bool:
        return _edge(i, j) in self.edges

    def non_edges(self) -> list[Edge]:
        return [e for e in itertools.combinations(range(self.p), 2) if e not in self.edges]

    def add(self, e: Sequence[int]) -> "Graph":
        e = _edge(*e)
        if e in self.edges:
            raise EdgePresentError(f"edge {_fmt(e)} already present")
        return Graph(self.p, self.edges | {e})

    def remove(self, e: Sequence[int]) -> "Graph":
        e = _edge(*e)
        if e not in self.edges:
            raise EdgeAbsentError(f"edge {_fmt(e)} not present")
        return Graph(self.p, self.edges - {e})

    def is_complete(self, vertices: Iterable[int]) -> bool:
        vs = list(vertices)
        adj = self.adjacency
        return all(b in adj[a] for a, b in itertools.combinations(vs, 2))

    def issubgraph(self, other: "Graph") -> bool:
        return self.p == other.p and self.edges <= other.edges

    def components(self) -> list[frozenset]:
        seen = [False] * self.p
        comps = []
        for s in range(self.p):
            if seen[s]:
                continue
            comp = {s}
            seen[s] = True
            queue = deque([s])
            while queue:
                v = queue.popleft()
                for w in self.adjacency[v]:
                    if not seen[w]:
                        seen[w] = True
                        comp.add(w)
                        queue.append(w)
            comps.append(frozenset(comp))
        return comps

    def key(self) -> tuple[Edge, ...]:
        """Sort key used for deterministic tie-breaking."""
        return self.sorted_edges

    def __repr__(self) -> str:
        body = ",".join(f"{i + 1}{j + 1}" if self.p < 10 else f"{i + 1}-{j + 1}" for i, j in self.sorted_edges)
        return f"Graph(p={self.p}, edges={{{body}}})"

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        return {"p": self.p, "edges": self.labels()}

    @classmethod
    def from_dict(cls, d: dict) -> "Graph":
        return cls.from_labels(int(d["p"]), [tuple(e) for e in d.get("edges", [])])

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "Graph":
        return cls.from_dict(json.loads(text))


def _fmt(e: Edge) -> str:
    return f"({e[0] + 1},{e[1] + 1})"


@dataclass(frozen=True)
class JunctionTree:
    """Perfectly ordered cliques of a decomposable graph.

    ``separators[i]`` and ``parent[i]`` refer to clique ``i``; both are
    ``None`` for the root clique ``0``. Separators may be empty when the graph
    is disconnected.
    """

    cliques: tuple[frozenset, ...]
    separators: tuple[frozenset | None, ...]
    parent: tuple[int | None, ...]

    @property
    def proper_separators(self) -> list[frozenset]:
        return [s for s in self.separators[1:]]

    def satisfies_running_intersection(self) -> bool:
        history: set[int] = set()
        for i, c in enumerate(self.cliques):
            if i > 0:
                s = c & history
                if s != self.separators[i] or not s <= self.cliques[self.parent[i]]:
                    return False
                if self.parent[i] >= i:
                    return False
            history |= c
        return True

    def cliques_containing(self, vertices: Iterable[int]) -> list[int]:
        a = frozenset(vertices)
        return [i for i, c in enumerate(self.cliques) if a <= c]


@dataclass(frozen=True)
class Triangulation:
    """A decomposable supergraph ``result`` of ``base`` with added ``fill_in`` edges."""

    base: Graph
    fill_in: frozenset
    minimal: bool = True

    @property
    def result(self) -> Graph:
        return Graph(self.base.p, self.base.edges | self.fill_in)

    def to_dict(self) -> dict:
        d = self.result.to_dict()
        d["fill_in"] = [[i + 1, j + 1] for i, j in sorted(self.fill_in)]
        return d


# ---------------------------------------------------------------------------
# chordality
# ---------------------------------------------------------------------------


def mcs_order(g: Graph, start: int | None = None) -> list[int]:
    """Maximum cardinality search visiting order.

    Ties are broken by the lowest vertex label; ``start`` optionally fixes
    the first vertex.
    """
    p = g.p
    adj = g.adjacency
    weight = [0] * p
    visited = [False] * p
    order = []
    for step in range(p):
        if step == 0 and start is not None:
            v = int(start)
        else:
            v = max((u for u in range(p) if not visited[u]), key=lambda u: (weight[u], -u))
        visited[v] = True
        order.append(v)
        for w in adj[v]:
            if not visited[w]:
                weight[w] += 1
    return order


def _zero_fill_in(g: Graph, order: Sequence[int]) -> bool:
    # Tarjan-Yannakakis check on an MCS visiting order.
    adj = g.adjacency
    pos = {v: k for k, v in enumerate(order)}
    for v in order:
        earlier = [w for w in adj[v] if pos[w] < pos[v]]
        if len(earlier) < 2:
            continue
        f = max(earlier, key=pos.__getitem__)
        rest = set(earlier)
        rest.discard(f)
        if not rest <= adj[f]:
            return False
    return True


def is_decomposable(g: Graph) -> bool:
    """True iff every cycle of length four or more in ``g`` has a chord."""
    if g.p <= 3:
        return True
    return _zero_fill_in(g, mcs_order(g))


def _mcs_cliques(g: Graph, order: Sequence[int]) -> list[frozenset]:
    adj = g.adjacency
    pos = {v: k for k, v in enumerate(order)}
    candidates = []
    for v in order:
        candidates.append(frozenset([v, *(w for w in adj[v] if pos[w] < pos[v])]))
    cliques: list[frozenset] = []
    for c in candidates:
        if any(c < d for d in candidates):
            continue
        if c not in cliques:
            cliques.append(c)
    return cliques


def _clique_key(c: frozenset) -> tuple[int, ...]:
    return tuple(sorted(c))


def junction_tree(g: Graph, start: int | None = None) -> JunctionTree:
    """Junction tree with cliques in a perfect ordering.

    Cliques come from maximum cardinality search; the tree is a maximum
    weight spanning tree of the clique graph weighted by intersection sizes
    (Kruskal, ties broken lexicographically on the sorted clique tuples). The
    ordering is a breadth-first traversal rooted at the clique holding the
    first vertex visited by the search.

    Raises
    ------
    NotDecomposableError
        If ``g`` is not chordal.
    """
    order = mcs_order(g, start)
    if not _zero_fill_in(g, order):
        raise NotDecomposableError("graph is not decomposable")
    if g.p == 0:
        return JunctionTree((), (), ())
    found = _mcs_cliques(g, order)
    root_clique = next(c for c in found if order[0] in c)
    cliques = sorted(found, key=_clique_key)
    k = len(cliques)

    candidates = []
    for a, b in itertools.combinations(range(k), 2):
        w = len(cliques[a] & cliques[b])
        candidates.append((-w, _clique_key(cliques[a]), _clique_key(cliques[b]), a, b))
    candidates.sort()
    root_of = list(range(k))

    def find(x: int) -> int:
        while root_of[x] != x:
            root_of[x] = root_of[root_of[x]]
            x = root_of[x]
        return x

    tree: list[list[int]] = [[] for _ in range(k)]
    for _, _, _, a, b in candidates:
        ra, rb = find(a), find(b)
        if ra != rb:
            root_of[ra] = rb
            tree[a].append(b)
            tree[b].append(a)

    root = cliques.index(root_clique)
    ordered = [root]
    parent_idx: dict[int, int | None] = {root: None}
    queue = deque([root])
    while queue:
        a = queue.popleft()
        for b in sorted(tree[a], key=lambda t: _clique_key(cliques[t])):
            if b not in parent_idx:
                parent_idx[b] = a
                ordered.append(b)
                queue.append(b)
    position = {c: i for i, c in enumerate(ordered)}
    out_cliques = tuple(cliques[c] for c in ordered)
    out_parent = tuple(None if parent_idx[c] is None else position[parent_idx[c]] for c in ordered)
    out_seps = tuple(
        None if par is None else out_cliques[i] & out_cliques[par] for i, par in enumerate(out_parent)
    )
    return JunctionTree(out_cliques, out_seps, out_parent)


def maximal_cliques(g: Graph) -> list[frozenset]:
    """Maximal cliques of a decomposable graph, sorted lexicographically."""
    if not is_decomposable(g):
        raise NotDecomposableError("graph is not decomposable")
    return sorted(_mcs_cliques(g, mcs_order(g)), key=_clique_key)


# ---------------------------------------------------------------------------
# single-edge moves
# ---------------------------------------------------------------------------


def legal_delete(g: Graph, e: Sequence[int]) -> bool:
    """Whether removing ``e`` keeps ``g`` decomposable.

    The endpoints must lie in exactly one maximal clique.
    """
    x, y = _edge(*e)
    if not g.has_edge(x, y):
        raise EdgeAbsentError(f"edge {_fmt((x, y))} not present")
    cliques = maximal_cliques(g)
    return sum(1 for c in cliques if x in c and y in c) == 1


def legal_add(g: Graph, e: Sequence[int]) -> bool:
    """Whether ``g + e`` is decomposable (add-and-test).

    Defined for any input graph, so it also tells whether a single edge
    triangulates a non-decomposable graph.
    """
    x, y = _edge(*e)
    if g.has_edge(x, y):
        raise EdgePresentError(f"edge {_fmt((x, y))} already present")
    return is_decomposable(g.add((x, y)))


def legal_add_structural(g: Graph, e: Sequence[int]) -> bool:
    """Structural test for a decomposability-preserving addition.

    ``x`` and ``y`` must either lie in different connected components or be
    separated by their common neighbourhood, which is then the intersection
    of two cliques adjacent in some junction tree.
    """
    x, y = _edge(*e)
    if g.has_edge(x, y):
        raise EdgePresentError(f"edge {_fmt((x, y))} already present")
    adj = g.adjacency
    common = adj[x] & adj[y]
    return not reachable(g, x, y, blocked=common)


def reachable(g: Graph, x: int, y: int, blocked: Iterable[int] = ()) -> bool:
    """Whether a path joins ``x`` and ``y`` avoiding the ``blocked`` vertices."""
    blocked = set(blocked)
    if x in blocked or y in blocked:
        return False
    seen = {x}
    queue = deque([x])
    adj = g.adjacency
    while queue:
        v = queue.popleft()
        if v == y:
            return True
        for w in adj[v]:
            if w not in seen and w not in blocked:
                seen.add(w)
                queue.append(w)
    return False


def separates(g: Graph, s: Iterable[int], x: int, y: int) -> bool:
    """Whether every path from ``x`` to ``y`` meets ``s``."""
    return not reachable(g, x, y, blocked=s)


def separator_for_move(g: Graph, e: Sequence[int], mode: str) -> frozenset:
    """Conditioning set of a legal single-edge move.

    For a deletion this is ``C - {x, y}`` with ``C`` the unique clique
    holding both endpoints; for an addition it is the intersection of the two
    adjacent cliques that the new edge joins, equivalently the unique clique
    of ``g + e`` containing the edge minus its endpoints.
    """
    x, y = _edge(*e)
    if mode == "delete":
        if not legal_delete(g, (x, y)):
            raise IllegalMoveError(f"deleting {_fmt((x, y))} breaks decomposability")
        full = g
    elif mode == "add":
        if not is_decomposable(g):
            raise NotDecomposableError("graph is not decomposable")
        if not legal_add(g, (x, y)):
            raise IllegalMoveError(f"adding {_fmt((x, y))} breaks decomposability")
        full = g.add((x, y))
    else:
        raise ValueError(f"mode must be 'add' or 'delete', got {mode!r}")
    (clique,) = [c for c in maximal_cliques(full) if x in c and y in c]
    return clique - {x, y}


def legal_moves(g: Graph) -> list[tuple[Edge, str]]:
    """All decomposability-preserving single-edge moves, sorted by edge."""
    cliques = maximal_cliques(g)
    moves = []
    for e in itertools.combinations(range(g.p), 2):
        if e in g.edges:
            if sum(1 for c in cliques if e[0] in c and e[1] in c) == 1:
                moves.append((e, "delete"))
        elif is_decomposable(g.add(e)):
            moves.append((e, "add"))
    return moves


def chain_path(g_from: Graph, g_to: Graph) -> list[Graph]:
    """Increasing chain of decomposable graphs joining two nested graphs.

    Each step adds the lexicographically smallest missing edge whose
    addition keeps the graph decomposable.
    """
    if g_from.p != g_to.p or not g_from.edges <= g_to.edges:
        raise NotNestedError("g_from must be a subgraph of g_to")
    if not (is_decomposable(g_from) and is_decomposable(g_to)):
        raise NotDecomposableError("graph is not decomposable")
    path = [g_from]
    cur = g_from
    missing = sorted(g_to.edges - g_from.edges)
    while missing:
        for e in missing:
            nxt = cur.add(e)
            if is_decomposable(nxt):
                break
        else:  # pragma: no cover - excluded by the chain rule for decomposable graphs
            raise NotDecomposableError("no decomposable single-edge extension found")
        missing.remove(e)
        cur = nxt
        path.append(cur)
    return path


# ---------------------------------------------------------------------------
# brute-force enumeration
# ---------------------------------------------------------------------------


def enumerate_graphs(p: int) -> Iterator[Graph]:
    """Every labelled graph on ``p`` vertices, ordered by edge bitmask."""
    pairs = list(itertools.combinations(range(p), 2))
    for mask in range(1 << len(pairs)):
        yield Graph(p, [pairs[k] for k in range(len(pairs)) if mask >> k & 1])


def enumerate_decomposable(p: int) -> Iterator[Graph]:
    """Every decomposable graph on ``p`` labelled vertices, each exactly once."""
    if p > MAX_ENUMERATE_P:
        raise TooLargeError(f"enumeration is limited to p <= {MAX_ENUMERATE_P}, got p={p}")
    for g in enumerate_graphs(p):
        if is_decomposable(g):
            yield g


def minimal_triangulations(
    g: Graph,
    max_fill: int | None = None,
    budget: int = DEFAULT_TRIANGULATION_BUDGET,
) -> list[Triangulation]:
    """All minimal triangulations of ``g`` with at most ``max_fill`` fill-in edges.

    Fill-in subsets are enumerated by increasing size; a subset is kept when
    ``E + F`` is decomposable and removing any single fill-in edge breaks
    decomposability.
    """
    if g.p > MAX_TRIANGULATE_P:
        raise TooLargeError(f"triangulation search is limited to p <= {MAX_TRIANGULATE_P}, got p={g.p}")
    candidates = g.non_edges()
    top = len(candidates) if max_fill is None else min(int(max_fill), len(candidates))
    n_subsets = sum(comb(len(candidates), k) for k in range(top + 1))
    if n_subsets > budget:
        raise TooLargeError(f"{n_subsets} fill-in subsets exceed the budget of {budget}")
    found = []
    for k in range(top + 1):
        for fill in itertools.combinations(candidates, k):
            h = Graph(g.p, g.edges | set(fill))
            if not is_decomposable(h):
                continue
            if all(not is_decomposable(h.remove(f)) for f in fill):
                found.append(Triangulation(g, frozenset(fill), minimal=True))
    return found
