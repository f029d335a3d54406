import itertools
from collections import Counter

import networkx as nx
import numpy as np
import pytest

from conftest import G6, G6_PRIME, brute_chordal, random_decomposable, random_graph
from hiwgraph.exceptions import (
    EdgeAbsentError,
    EdgePresentError,
    IllegalMoveError,
    ModelError,
    NotDecomposableError,
    NotNestedError,
    TooLargeError,
)
from hiwgraph.graph import (
    Graph,
    chain_path,
    enumerate_decomposable,
    enumerate_graphs,
    is_decomposable,
    junction_tree,
    legal_add,
    legal_add_structural,
    legal_delete,
    legal_moves,
    maximal_cliques,
    minimal_triangulations,
    separator_for_move,
)

L = Graph.from_labels


def fs(*labels):
    return frozenset(v - 1 for v in labels)


def cycle(p):
    return L(p, [(i, i % p + 1) for i in range(1, p + 1)])


def path(p):
    return L(p, [(i, i + 1) for i in range(1, p)])


class TestGraphType:
    def test_edges_are_normalized(self):
        assert Graph(3, [(2, 0), (0, 2), (1, 2)]).sorted_edges == ((0, 2), (1, 2))

    def test_rejects_out_of_range(self):
        with pytest.raises(ModelError):
            Graph(3, [(0, 3)])

    def test_self_loop_rejected(self):
        with pytest.raises(ModelError):
            Graph(3, [(1, 1)])

    def test_add_remove_errors(self):
        g = path(3)
        with pytest.raises(EdgePresentError):
            g.add((0, 1))
        with pytest.raises(EdgeAbsentError):
            g.remove((0, 2))

    def test_json_round_trip_uses_one_based_labels(self):
        g = L(4, [(1, 2), (3, 4)])
        assert g.to_dict() == {"p": 4, "edges": [[1, 2], [3, 4]]}
        assert Graph.from_json(g.to_json()) == g

    def test_hashable_and_equal(self):
        assert len({path(4), path(4), cycle(4)}) == 2

    def test_matrix(self):
        m = path(3).to_matrix()
        assert m.tolist() == [[0, 1, 0], [1, 0, 1], [0, 1, 0]]
        assert Graph.from_adjacency(m) == path(3)


class TestDecomposability:
    def test_figure_examples(self):
        assert is_decomposable(G6)
        assert not is_decomposable(G6_PRIME)

    def test_cycles_and_trees(self):
        for p in range(4, 9):
            assert not is_decomposable(cycle(p))
        assert is_decomposable(path(7))
        star = L(6, [(1, k) for k in range(2, 7)])
        assert is_decomposable(star)

    def test_small_graphs_are_always_decomposable(self):
        assert all(is_decomposable(g) for g in enumerate_graphs(3))

    def test_matches_brute_force_all_p5(self):
        mismatches = [g for g in enumerate_graphs(5) if is_decomposable(g) != brute_chordal(g)]
        assert mismatches == []

    def test_matches_networkx_random(self, rng):
        for _ in range(500):
            p = int(rng.integers(4, 13))
            g = random_graph(p, rng)
            h = nx.Graph()
            h.add_nodes_from(range(p))
            h.add_edges_from(g.edges)
            assert is_decomposable(g) == nx.is_chordal(h)

    def test_counts(self):
        assert sum(1 for _ in enumerate_decomposable(2)) == 2
        assert sum(1 for _ in enumerate_decomposable(3)) == 8
        assert sum(1 for _ in enumerate_decomposable(4)) == sum(brute_chordal(g) for g in enumerate_graphs(4)) == 61

    def test_enumeration_budget(self):
        with pytest.raises(TooLargeError):
            next(enumerate_decomposable(7))


class TestJunctionTree:
    def test_figure_one(self):
        jt = junction_tree(G6)
        assert list(jt.cliques) == [fs(1, 2), fs(2, 3, 4), fs(3, 4, 5, 6)]
        assert jt.proper_separators == [fs(2), fs(3, 4)]
        assert jt.satisfies_running_intersection()

    def test_complete_and_empty(self):
        jt = junction_tree(Graph.complete(5))
        assert jt.cliques == (frozenset(range(5)),) and jt.proper_separators == []
        jt = junction_tree(Graph.empty(4))
        assert sorted(map(sorted, jt.cliques)) == [[0], [1], [2], [3]]
        assert jt.proper_separators == [frozenset()] * 3

    def test_not_decomposable(self):
        with pytest.raises(NotDecomposableError, match="graph is not decomposable"):
            junction_tree(cycle(4))

    def test_deterministic(self):
        assert junction_tree(G6) == junction_tree(Graph(6, G6.edges))

    def test_cliques_match_networkx(self, rng):
        for _ in range(200):
            g = random_decomposable(int(rng.integers(2, 10)), rng)
            h = nx.Graph()
            h.add_nodes_from(range(g.p))
            h.add_edges_from(g.edges)
            ref = sorted(tuple(sorted(c)) for c in nx.find_cliques(h))
            assert sorted(tuple(sorted(c)) for c in junction_tree(g).cliques) == ref

    def test_orderings_give_same_multisets(self, rng):
        for _ in range(100):
            g = random_decomposable(int(rng.integers(2, 9)), rng)
            trees = [junction_tree(g, start=v) for v in range(g.p)]
            for jt in trees:
                assert jt.satisfies_running_intersection()
                for s in jt.proper_separators:
                    assert g.is_complete(s)
            cl = {tuple(sorted(Counter(jt.cliques).items(), key=lambda kv: sorted(kv[0]))) for jt in trees}
            sp = {tuple(sorted(Counter(jt.proper_separators).items(), key=lambda kv: sorted(kv[0]))) for jt in trees}
            assert len(cl) == 1 and len(sp) == 1

    def test_clique_minus_separator_count_invariant(self, rng):
        for _ in range(50):
            g = random_decomposable(6, rng)
            for a in itertools.chain.from_iterable(itertools.combinations(range(6), k) for k in range(1, 4)):
                a = frozenset(a)
                counts = {
                    sum(a <= c for c in jt.cliques) - sum(a <= s for s in jt.proper_separators)
                    for jt in (junction_tree(g, start=v) for v in range(6))
                }
                assert len(counts) == 1


class TestMoves:
    def test_delete_examples(self):
        assert legal_delete(G6, (0, 1))
        assert not legal_delete(G6, (2, 3))
        k = Graph.complete(5)
        assert all(legal_delete(k, e) for e in k.edges)
        with pytest.raises(EdgeAbsentError):
            legal_delete(G6, (0, 5))

    def test_add_examples(self):
        assert all(legal_add(Graph.empty(5), e) for e in itertools.combinations(range(5), 2))
        assert not legal_add(path(4), (0, 3))
        assert legal_add(G6_PRIME, (2, 4))
        with pytest.raises(EdgePresentError):
            legal_add(G6, (0, 1))

    def test_moves_preserve_decomposability_p5(self):
        for g in enumerate_decomposable(5):
            for e, mode in legal_moves(g):
                h = g.remove(e) if mode == "delete" else g.add(e)
                assert brute_chordal(h)
            # and every non-listed move breaks chordality
            listed = {e for e, _ in legal_moves(g)}
            for e in itertools.combinations(range(5), 2):
                if e not in listed:
                    h = g.remove(e) if g.has_edge(*e) else g.add(e)
                    assert not brute_chordal(h)

    def test_structural_fast_path_all_p5(self):
        for p in range(2, 6):
            for g in enumerate_decomposable(p):
                for e in g.non_edges():
                    assert legal_add_structural(g, e) == legal_add(g, e)

    def test_structural_fast_path_random(self, rng):
        checked = 0
        while checked < 10_000:
            g = random_decomposable(int(rng.integers(2, 13)), rng, walk=0)
            non = g.non_edges()
            if not non:
                continue
            e = non[int(rng.integers(len(non)))]
            assert legal_add_structural(g, e) == legal_add(g, e)
            checked += 1

    def test_separator_examples(self):
        assert separator_for_move(G6, (0, 1), "delete") == frozenset()
        k = Graph.complete(5)
        assert separator_for_move(k, (1, 3), "delete") == frozenset({0, 2, 4})
        assert separator_for_move(path(4), (0, 2), "add") == fs(2)
        assert separator_for_move(Graph.empty(3), (0, 2), "add") == frozenset()

    def test_separator_illegal(self):
        with pytest.raises(IllegalMoveError):
            separator_for_move(G6, (2, 3), "delete")
        with pytest.raises(IllegalMoveError):
            separator_for_move(path(4), (0, 3), "add")

    def test_add_separator_is_intersection_of_adjacent_cliques(self, rng):
        for _ in range(300):
            g = random_decomposable(int(rng.integers(3, 9)), rng)
            for e, mode in legal_moves(g):
                if mode != "add":
                    continue
                s = separator_for_move(g, e, "add")
                x, y = e
                assert s == g.adjacency[x] & g.adjacency[y]
                cl = maximal_cliques(g)
                assert any(x in a and y in b and a & b == s for a in cl for b in cl if a != b)


class TestChainPath:
    def test_trivial(self):
        assert chain_path(G6, G6) == [G6]

    def test_path_to_complete(self):
        chain = chain_path(path(3), Graph.complete(3))
        assert chain == [path(3), Graph.complete(3)]

    def test_all_nested_pairs_p4(self):
        graphs = list(enumerate_decomposable(4))
        for a in graphs:
            for b in graphs:
                if not a.issubgraph(b):
                    continue
                chain = chain_path(a, b)
                assert len(chain) == b.n_edges - a.n_edges + 1
                for u, v in zip(chain, chain[1:]):
                    assert u.issubgraph(v) and v.n_edges == u.n_edges + 1
                assert all(is_decomposable(h) for h in chain)

    def test_random_pairs_p6(self, rng):
        for _ in range(200):
            b = random_decomposable(6, rng)
            a = b
            for _ in range(int(rng.integers(0, b.n_edges + 1))):
                dels = [e for e, m in legal_moves(a) if m == "delete"]
                if not dels:
                    break
                a = a.remove(dels[int(rng.integers(len(dels)))])
            chain = chain_path(a, b)
            assert chain[0] == a and chain[-1] == b
            assert all(brute_chordal(h) for h in chain)

    def test_errors(self):
        with pytest.raises(NotNestedError):
            chain_path(Graph.complete(3), path(3))
        with pytest.raises(NotDecomposableError):
            chain_path(Graph.empty(4), cycle(4))


def brute_minimal_triangulations(g):
    """Fill-in sets F with E+F chordal and no chordal E+F' for F' a proper subset of F."""
    non = g.non_edges()
    chordal_fills = []
    for k in range(len(non) + 1):
        for fill in itertools.combinations(non, k):
            if brute_chordal(Graph(g.p, g.edges | set(fill))):
                chordal_fills.append(frozenset(fill))
    return {f for f in chordal_fills if not any(h < f for h in chordal_fills)}


class TestTriangulations:
    def test_decomposable_input(self):
        (t,) = minimal_triangulations(G6)
        assert t.fill_in == frozenset() and t.result == G6

    def test_four_cycle(self):
        tris = minimal_triangulations(cycle(4))
        assert {t.result for t in tris} == {cycle(4).add((0, 2)), cycle(4).add((1, 3))}

    def test_five_cycle(self):
        tris = minimal_triangulations(cycle(5))
        assert len(tris) == 5 and all(len(t.fill_in) == 2 for t in tris)

    def test_figure_two(self):
        tris = minimal_triangulations(G6_PRIME)
        assert {t.fill_in for t in tris} == {frozenset({(2, 4)}), frozenset({(3, 5)})}

    def test_invariants(self, rng):
        for _ in range(30):
            g = random_graph(6, rng)
            for t in minimal_triangulations(g):
                assert is_decomposable(t.result)
                assert not (t.fill_in & g.edges)
                assert all(not is_decomposable(t.result.remove(f)) for f in t.fill_in)

    def test_matches_brute_force_p5(self):
        for g in enumerate_graphs(5):
            if brute_chordal(g):
                continue
            assert {t.fill_in for t in minimal_triangulations(g)} == brute_minimal_triangulations(g)

    def test_every_chordal_supergraph_contains_a_minimal_one(self):
        for g in enumerate_graphs(5):
            if brute_chordal(g):
                continue
            tris = [t.result.edges for t in minimal_triangulations(g)]
            for h in enumerate_decomposable(5):
                if g.edges <= h.edges:
                    assert any(t <= h.edges for t in tris)

    def test_max_fill(self):
        assert minimal_triangulations(cycle(5), max_fill=1) == []

    def test_budget(self):
        with pytest.raises(TooLargeError):
            minimal_triangulations(cycle(9))
        with pytest.raises(TooLargeError):
            minimal_triangulations(Graph.empty(8), budget=1000)
