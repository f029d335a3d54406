"""Marginal likelihoods and Bayes factors under the hyper-inverse Wishart g-prior.

Every quantity is returned on the natural-log scale. With data ``Y`` and a
decomposable graph ``G`` the marginal likelihood factorizes over a junction
tree as

    log f(Y | G) = -(n p / 2) log(2 pi) + sum_C log w(C) - sum_S log w(S),

where ``w`` depends only on the Gram block ``Y_C^T Y_C`` and the
hyperparameters ``(b, g)``.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.special import gammaln

from .exceptions import CliqueTooLargeError, IllegalMoveError, ModelError, NotDecomposableError
from .graph import Edge, Graph, JunctionTree, is_decomposable, junction_tree, legal_add, legal_delete, separator_for_move
from .stats import DataMatrix, log_det_gram, sample_partial_correlation

LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class ModelParams:
    """Hyperparameters of the HIW g-prior and the Bernoulli edge prior.

    Parameters
    ----------
    b : float, default=3
        HIW degrees of freedom, must exceed 2.
    g : float or None, default=None
        Scale of the g-prior ``D = g Y^T Y``; ``None`` means ``1/n``.
    q : float or None, default=None
        Prior edge inclusion probability; ``None`` means ``2/(p-1)``, falling
        back to ``1/2`` when that is not a valid probability (``p <= 3``).
    """

    b: float = 3.0
    g: float | None = None
    q: float | None = None

    def __post_init__(self):
        if not self.b > 2:
            raise ModelError(f"b must exceed 2, got {self.b}")
        if self.g is not None and not 0 < self.g < 1:
            raise ModelError(f"g must lie in (0, 1), got {self.g}")
        if self.q is not None and not 0 < self.q < 1:
            raise ModelError(f"q must lie in (0, 1), got {self.q}")

    def resolve_g(self, n: int) -> float:
        return 1.0 / n if self.g is None else float(self.g)

    def resolve_q(self, p: int) -> float:
        if self.q is not None:
            return float(self.q)
        q = 2.0 / (p - 1) if p > 1 else 0.5
        return q if 0 < q < 1 else 0.5

    def to_dict(self, p: int | None = None) -> dict:
        q = self.q if p is None else self.resolve_q(p)
        return {"b": self.b, "g": "1/n" if self.g is None else self.g, "q": q}


def q_schedule(n: int, c_q: float, gamma: float) -> float:
    """Complexity-prior edge probability ``exp(-c_q n^gamma)``, clamped into (0, 1)."""
    if not c_q > 0:
        raise ModelError("c_q must be positive")
    if not 0 < gamma < 1:
        raise ModelError("gamma must lie in (0, 1)")
    q = math.exp(-c_q * float(n) ** gamma)
    return min(max(q, 1e-300), 1.0 - 1e-16)


def log_multigamma(a: float, m: int) -> float:
    """``log Gamma_m(a) = m(m-1)/4 log(pi) + sum_{j=1..m} log Gamma(a + (1-j)/2)``."""
    if m == 0:
        return 0.0
    j = np.arange(1, m + 1)
    return float(m * (m - 1) / 4.0 * math.log(math.pi) + gammaln(a + (1.0 - j) / 2.0).sum())


def log_w(d: DataMatrix, c: Iterable[int], params: ModelParams) -> float:
    """Log of the clique factor ``w(C)``; zero for the empty set."""
    c = sorted(int(v) for v in c)
    m = len(c)
    if m == 0:
        return 0.0
    n = d.n
    if n <= m:
        raise CliqueTooLargeError(f"clique of size {m} needs more than n={n} samples")
    b = params.b
    logdet = log_det_gram(d, c)
    a = (b + m - 1) / 2.0
    gamma_part = log_multigamma(a + n / 2.0, m) - log_multigamma(a, m)
    if params.g is None:
        return (
            -m * (b + n + m - 1) / 2.0 * math.log(n + 1)
            - n / 2.0 * logdet
            + n * m / 2.0 * math.log(2.0 * n)
            + gamma_part
        )
    g = float(params.g)
    log_d = m * math.log(g) + logdet
    log_post = m * math.log1p(g) + logdet
    return a * log_d - (b + n + m - 1) / 2.0 * log_post + n * m / 2.0 * math.log(2.0) + gamma_part


class ScoreCache:
    """Thread-safe memo of ``log w`` values keyed by the sorted clique tuple.

    Valid only for one ``(DataMatrix, ModelParams)`` pair.
    """

    def __init__(self, d: DataMatrix, params: ModelParams):
        self.d = d
        self.params = params
        self._values: dict[tuple[int, ...], float] = {}
        self._lock = threading.Lock()

    def log_w(self, c: Iterable[int]) -> float:
        key = tuple(sorted(c))
        with self._lock:
            hit = self._values.get(key)
        if hit is not None:
            return hit
        val = log_w(self.d, key, self.params)
        with self._lock:
            self._values[key] = val
        return val

    def __len__(self) -> int:
        return len(self._values)


def log_marginal_likelihood(
    d: DataMatrix,
    g: Graph,
    params: ModelParams,
    jt: JunctionTree | None = None,
    cache: ScoreCache | None = None,
) -> float:
    """``log f(Y | G)`` for a decomposable graph.

    Raises
    ------
    NotDecomposableError
        If ``g`` is not chordal.
    CliqueTooLargeError
        If some clique has at least ``n`` vertices.
    """
    if g.p != d.p:
        raise ModelError(f"graph has p={g.p} but the data have p={d.p}")
    if jt is None:
        jt = junction_tree(g)
    if cache is not None and (cache.d is not d or cache.params != params):
        raise ValueError("score cache belongs to different data or parameters")
    lw = cache.log_w if cache is not None else (lambda c: log_w(d, c, params))
    total = -d.n * d.p / 2.0 * LOG_2PI
    for c in jt.cliques:
        total += lw(c)
    for s in jt.separators[1:]:
        if s:
            total -= lw(s)
    return total


def log_graph_prior(g: Graph, params: ModelParams) -> float:
    """Unnormalized log prior; ``-inf`` for non-decomposable graphs."""
    if not is_decomposable(g):
        return -math.inf
    q = params.resolve_q(g.p)
    k = g.n_edges
    return k * math.log(q) + (g.max_edges - k) * math.log1p(-q)


@dataclass(frozen=True)
class GraphScore:
    graph: Graph
    log_ml: float
    log_prior: float
    log_post: float

    def to_dict(self, params: ModelParams | None = None) -> dict:
        out = {"graph": self.graph.to_dict(), "log_ml": self.log_ml,
               "log_prior": self.log_prior, "log_post": self.log_post}
        if params is not None:
            out["params"] = params.to_dict(self.graph.p)
        return out


def score_graph(d: DataMatrix, g: Graph, params: ModelParams, cache: ScoreCache | None = None) -> GraphScore:
    if not is_decomposable(g):
        raise NotDecomposableError("graph is not decomposable")
    lml = log_marginal_likelihood(d, g, params, cache=cache)
    lp = log_graph_prior(g, params)
    return GraphScore(g, lml, lp, lml + lp)


def log_bayes_factor(d: DataMatrix, g_a: Graph, g_b: Graph, params: ModelParams) -> float:
    """``log BF(G_a; G_b) = log f(Y | G_a) - log f(Y | G_b)``."""
    if g_a == g_b:
        return 0.0
    return log_marginal_likelihood(d, g_a, params) - log_marginal_likelihood(d, g_b, params)


def log_posterior_ratio(d: DataMatrix, g_a: Graph, g_b: Graph, params: ModelParams) -> float:
    return log_bayes_factor(d, g_a, g_b, params) + log_graph_prior(g_a, params) - log_graph_prior(g_b, params)


@dataclass(frozen=True)
class LocalMove:
    """Exact Bayes factor of one legal edge addition or deletion.

    ``log_bf`` is ``log BF(G - e; G)`` for a deletion and ``log BF(G + e; G)``
    for an addition.
    """

    edge: Edge
    mode: str
    separator: frozenset
    rho_hat: float
    n: int
    g: float
    b: float
    log_bf: float = field(compare=False)

    @property
    def d_s(self) -> int:
        return len(self.separator)

    def log_bounds(self) -> tuple[float, float]:
        """Open interval that ``log_bf`` must fall in, from Watson's inequality."""
        b, n, ds, g = self.b, self.n, self.d_s, self.g
        corr = n / 2.0 * math.log1p(-self.rho_hat ** 2)
        base = math.log1p(1.0 / g) + corr
        lo = base + 0.5 * math.log((b + ds - 0.5) / (b + n + ds))
        hi = base + 0.5 * math.log((b + ds) / (b + n + ds - 0.5))
        if self.mode == "delete":
            return lo, hi
        return -hi, -lo

    def to_dict(self) -> dict:
        return {
            "edge": [self.edge[0] + 1, self.edge[1] + 1],
            "mode": self.mode,
            "separator": sorted(v + 1 for v in self.separator),
            "d_s": self.d_s,
            "rho_hat": self.rho_hat,
            "log_bf": self.log_bf,
        }


def delete_log_bf(rho_hat: float, d_s: int, n: int, b: float, g: float) -> float:
    """Closed form ``log BF`` of deleting an edge with conditioning set of size ``d_s``."""
    return (
        math.log1p(1.0 / g)
        + gammaln((b + d_s + 1) / 2.0)
        + gammaln((b + n + d_s) / 2.0)
        - gammaln((b + d_s) / 2.0)
        - gammaln((b + n + d_s + 1) / 2.0)
        + n / 2.0 * math.log1p(-rho_hat ** 2)
    )


def local_log_bf(d: DataMatrix, g: Graph, e: Sequence[int], mode: str, params: ModelParams) -> LocalMove:
    """Bayes factor of a single-edge move from the sample partial correlation.

    The conditioning set ``S`` is the unique clique holding the edge (after
    the move, for an addition) minus its endpoints. Deletion gives
    ``(1 + 1/g) Gamma-ratio (1 - rho^2)^(n/2)``; addition is its reciprocal.
    """
    x, y = sorted((int(e[0]), int(e[1])))
    if mode == "delete":
        if not g.has_edge(x, y):
            raise IllegalMoveError(f"edge ({x + 1},{y + 1}) is absent")
        if not legal_delete(g, (x, y)):
            raise IllegalMoveError(f"deleting ({x + 1},{y + 1}) breaks decomposability")
    elif mode == "add":
        if g.has_edge(x, y):
            raise IllegalMoveError(f"edge ({x + 1},{y + 1}) is already present")
        if not is_decomposable(g) or not legal_add(g, (x, y)):
            raise IllegalMoveError(f"adding ({x + 1},{y + 1}) breaks decomposability")
    else:
        raise ValueError(f"mode must be 'add' or 'delete', got {mode!r}")
    s = separator_for_move(g, (x, y), mode)
    n = d.n
    if n <= len(s) + 2:
        raise CliqueTooLargeError(f"n={n} is too small for a separator of size {len(s)}")
    rho = sample_partial_correlation(d, x, y, s)
    gg = params.resolve_g(n)
    lbf = delete_log_bf(rho, len(s), n, params.b, gg)
    if mode == "add":
        lbf = -lbf
    return LocalMove((x, y), mode, s, rho, n, gg, params.b, lbf)
