"""Shared fixtures and independent oracles."""

from __future__ import annotations

import itertools

import numpy as np
import pytest

from hiwgraph.graph import Graph, legal_moves

# Acceptance results collected by tests/test_acceptance.py and echoed at the end of the run.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def has_chordless_cycle(g: Graph) -> bool:
    """Brute force: some vertex subset of size >= 4 induces a single cycle."""
    adj = g.adjacency
    for k in range(4, g.p + 1):
        for sub in itertools.combinations(range(g.p), k):
            s = set(sub)
            if any(len(adj[v] & s) != 2 for v in sub):
                continue
            # 2-regular induced subgraph: a single cycle iff connected
            seen, stack = {sub[0]}, [sub[0]]
            while stack:
                v = stack.pop()
                for w in adj[v] & s:
                    if w not in seen:
                        seen.add(w)
                        stack.append(w)
            if len(seen) == k:
                return True
    return False


def brute_chordal(g: Graph) -> bool:
    return not has_chordless_cycle(g)


def random_graph(p: int, rng: np.random.Generator, density: float | None = None) -> Graph:
    dens = rng.uniform(0.1, 0.9) if density is None else density
    return Graph(p, [e for e in itertools.combinations(range(p), 2) if rng.random() < dens])


def random_decomposable(p: int, rng: np.random.Generator, walk: int = 3) -> Graph:
    """Random chordal graph built along a perfect elimination ordering.

    Each new vertex joins a random subset of a complete set ``{w} + earlier
    neighbours of w``; labels are then permuted and a few legal moves applied.
    """
    earlier: list[frozenset] = []
    edges = []
    for v in range(p):
        nbrs: frozenset = frozenset()
        if v and rng.random() < 0.9:
            w = int(rng.integers(v))
            pool = sorted(earlier[w] | {w})
            keep = rng.random(len(pool)) < rng.uniform(0.3, 1.0)
            nbrs = frozenset(u for u, k in zip(pool, keep) if k)
        earlier.append(nbrs)
        edges += [(u, v) for u in nbrs]
    perm = rng.permutation(p)
    g = Graph(p, [(int(perm[a]), int(perm[b])) for a, b in edges])
    for _ in range(walk):
        moves = legal_moves(g)
        e, mode = moves[int(rng.integers(len(moves)))]
        g = g.add(e) if mode == "add" else g.remove(e)
    return g


G6 = Graph.from_labels(6, [(1, 2), (2, 3), (2, 4), (3, 4), (3, 5), (3, 6), (4, 5), (4, 6), (5, 6)])
G6_PRIME = Graph.from_labels(6, [(1, 2), (2, 3), (2, 4), (3, 4), (3, 6), (4, 5), (5, 6)])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
