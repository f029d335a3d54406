"""Posterior exploration over decomposable graphs."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
from scipy.special import logsumexp

from .exceptions import NotDecomposableError, TooLargeError
from .graph import MAX_ENUMERATE_P, Graph, enumerate_decomposable, is_decomposable, legal_moves, minimal_triangulations
from .scoring import ModelParams, ScoreCache, local_log_bf, log_graph_prior, log_marginal_likelihood
from .stats import DataMatrix, RngSeed, as_generator


@dataclass
class PosteriorEntry:
    graph: Graph
    log_post: float
    prob: float


@dataclass
class PosteriorTable:
    """Normalized posterior over an enumerated graph space."""

    entries: list[PosteriorEntry]
    log_normalizer: float

    @property
    def mode(self) -> Graph:
        best = max(self.entries, key=lambda e: e.log_post)
        ties = [e.graph for e in self.entries if e.log_post == best.log_post]
        return min(ties, key=Graph.key)

    def prob_of(self, g: Graph) -> float:
        for e in self.entries:
            if e.graph == g:
                return e.prob
        return 0.0

    def mass_on(self, graphs: Iterable[Graph]) -> float:
        wanted = set(graphs)
        return float(sum(e.prob for e in self.entries if e.graph in wanted))

    def as_dict(self) -> dict[Graph, float]:
        return {e.graph: e.prob for e in self.entries}

    def to_dict(self) -> dict:
        return {
            "mode": self.mode.to_dict(),
            "entries": [
                {"graph": e.graph.to_dict(), "log_post": e.log_post, "prob": e.prob}
                for e in sorted(self.entries, key=lambda e: -e.log_post)
            ],
        }


def exhaustive_posterior(d: DataMatrix, params: ModelParams, p: int | None = None) -> PosteriorTable:
    """Score every decomposable graph on ``p`` vertices and normalize in log space."""
    p = d.p if p is None else int(p)
    if p > MAX_ENUMERATE_P:
        raise TooLargeError(f"exhaustive enumeration is limited to p <= {MAX_ENUMERATE_P}")
    cache = ScoreCache(d, params)
    graphs = list(enumerate_decomposable(p))
    log_posts = np.array([log_marginal_likelihood(d, g, params, cache=cache) + log_graph_prior(g, params)
                          for g in graphs])
    z = float(logsumexp(log_posts))
    probs = np.exp(log_posts - z)
    return PosteriorTable([PosteriorEntry(g, float(lp), float(pr)) for g, lp, pr in zip(graphs, log_posts, probs)], z)


def triangulation_mass(table: PosteriorTable, g_true: Graph, max_fill: int | None = None) -> float:
    """Posterior mass on the minimal triangulations of ``g_true``."""
    tris = minimal_triangulations(g_true, max_fill=max_fill)
    return table.mass_on(t.result for t in tris)


@dataclass
class ChainState:
    current: Graph
    log_post: float
    best_seen: tuple[Graph, float]
    iteration: int = 0
    acceptance_count: int = 0
    visits: Counter = field(default_factory=Counter)

    @property
    def acceptance_rate(self) -> float:
        return self.acceptance_count / self.iteration if self.iteration else 0.0

    def frequencies(self) -> dict[Graph, float]:
        total = sum(self.visits.values())
        return {g: c / total for g, c in self.visits.items()} if total else {}


def mh_log_acceptance(log_post_ratio: float, n_moves_from: int, n_moves_to: int) -> float:
    """Log acceptance probability of a uniformly proposed single-edge move."""
    return min(0.0, log_post_ratio + math.log(n_moves_from) - math.log(n_moves_to))


def mh_search(
    d: DataMatrix,
    params: ModelParams,
    iters: int,
    rng=None,
    start: Graph | None = None,
    burn_in: int = 0,
    check_states: bool = False,
) -> ChainState:
    """Metropolis-Hastings over decomposable graphs with single-edge moves.

    A move is drawn uniformly from the legal additions and deletions of the
    current graph and accepted with probability
    ``min(1, PR * |N(G)| / |N(G')|)``, where ``PR`` is the local posterior
    ratio and ``N`` the legal neighbourhood. Visits are counted after
    ``burn_in`` iterations; ``best_seen`` tracks the highest posterior graph
    ever visited. With ``check_states`` every state is re-verified as
    decomposable.
    """
    gen = as_generator(rng)
    p = d.p
    cur = Graph.empty(p) if start is None else start
    if not is_decomposable(cur):
        raise NotDecomposableError("start graph is not decomposable")
    cache = ScoreCache(d, params)
    lp = log_marginal_likelihood(d, cur, params, cache=cache) + log_graph_prior(cur, params)
    state = ChainState(cur, lp, (cur, lp))
    neighbourhoods: dict[Graph, list] = {}
    move_cache: dict = {}

    def moves_of(g: Graph) -> list:
        mv = neighbourhoods.get(g)
        if mv is None:
            mv = neighbourhoods[g] = legal_moves(g)
        return mv

    q = params.resolve_q(p)
    log_odds = math.log(q) - math.log1p(-q)
    for it in range(int(iters)):
        moves = moves_of(state.current)
        if moves:
            e, mode = moves[gen.integers(len(moves))]
            move = move_cache.get((state.current, e))
            if move is None:
                move = move_cache[(state.current, e)] = local_log_bf(d, state.current, e, mode, params)
            nxt = state.current.remove(e) if mode == "delete" else state.current.add(e)
            delta = move.log_bf + (log_odds if mode == "add" else -log_odds)
            log_alpha = mh_log_acceptance(delta, len(moves), len(moves_of(nxt)))
            if log_alpha == 0.0 or math.log(gen.random()) < log_alpha:
                state.current = nxt
                state.log_post += delta
                state.acceptance_count += 1
                if state.log_post > state.best_seen[1]:
                    state.best_seen = (nxt, state.log_post)
        if check_states and not is_decomposable(state.current):
            raise AssertionError(f"chain visited a non-decomposable graph {state.current!r}")
        state.iteration = it + 1
        if it >= burn_in:
            state.visits[state.current] += 1
    # re-score the incumbents exactly; accumulated deltas drift at rounding level
    state.log_post = log_marginal_likelihood(d, state.current, params, cache=cache) + log_graph_prior(state.current, params)
    bg = state.best_seen[0]
    state.best_seen = (bg, log_marginal_likelihood(d, bg, params, cache=cache) + log_graph_prior(bg, params))
    return state


def mh_search_chains(
    d: DataMatrix,
    params: ModelParams,
    iters: int,
    chains: int = 1,
    rng: RngSeed | int | None = None,
    **kwargs,
) -> list[ChainState]:
    """Run independent chains on separate RNG substreams, best chain first."""
    seed = rng if isinstance(rng, RngSeed) else RngSeed(0 if rng is None else int(rng))
    states = [mh_search(d, params, iters, seed.generator(k), **kwargs) for k in range(chains)]
    return sorted(states, key=lambda s: (-s.best_seen[1], s.best_seen[0].key()))
