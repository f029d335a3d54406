"""scikit-learn style wrapper around graph scoring and search."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted, validate_data

from .graph import MAX_ENUMERATE_P
from .scoring import ModelParams, log_marginal_likelihood, q_schedule, score_graph
from .search import exhaustive_posterior, mh_search_chains
from .stats import DataMatrix, RngSeed


class HIWGraphSelector(BaseEstimator):
    """Select a decomposable Gaussian graphical model by posterior probability.

    Parameters
    ----------
    b : float, default=3.0
        HIW degrees of freedom (> 2).
    g : float or None, default=None
        g-prior scale; ``None`` uses ``1/n``.
    q : float or None, default=None
        Edge inclusion probability; ``None`` uses ``2/(p-1)`` (``1/2`` for
        ``p <= 3``). Ignored when ``q_schedule`` is set.
    q_schedule : tuple of (c_q, gamma) or None, default=None
        Use ``q = exp(-c_q n^gamma)`` instead of a fixed ``q``.
    method : {"auto", "exhaustive", "mh"}, default="auto"
        ``"auto"`` enumerates when ``p <= 6`` and runs MCMC otherwise.
    n_iter : int, default=20000
        MCMC iterations per chain.
    n_chains : int, default=4
    random_state : int, default=0
    center : bool, default=True
        Mean-center the columns before scoring.

    Attributes
    ----------
    graph_ : Graph
        Posterior mode (exhaustive) or best graph visited (MCMC).
    adjacency_ : ndarray of shape (n_features_in_, n_features_in_)
    log_marginal_likelihood_, log_posterior_ : float
    posterior_ : PosteriorTable or None
        Full posterior when the exhaustive method was used.
    chains_ : list of ChainState or None
    params_ : ModelParams
        The resolved hyperparameters.
    """

    def __init__(self, b=3.0, g=None, q=None, q_schedule=None, method="auto",
                 n_iter=20000, n_chains=4, random_state=0, center=True):
        self.b = b
        self.g = g
        self.q = q
        self.q_schedule = q_schedule
        self.method = method
        self.n_iter = n_iter
        self.n_chains = n_chains
        self.random_state = random_state
        self.center = center

    def _resolve_params(self, n: int) -> ModelParams:
        q = self.q
        if self.q_schedule is not None:
            c_q, gamma = self.q_schedule
            q = q_schedule(n, c_q, gamma)
        return ModelParams(b=self.b, g=self.g, q=q)

    def fit(self, X, y=None):
        X = validate_data(self, X, dtype=np.float64, ensure_min_samples=3, ensure_min_features=2)
        if self.method not in ("auto", "exhaustive", "mh"):
            raise ValueError(f"unknown method {self.method!r}")
        d = DataMatrix(X, center=self.center)
        params = self._resolve_params(d.n)
        exhaustive = self.method == "exhaustive" or (self.method == "auto" and d.p <= MAX_ENUMERATE_P)
        self.posterior_ = None
        self.chains_ = None
        if exhaustive:
            self.posterior_ = exhaustive_posterior(d, params)
            best = self.posterior_.mode
        else:
            self.chains_ = mh_search_chains(d, params, self.n_iter, self.n_chains, RngSeed(int(self.random_state)))
            best = self.chains_[0].best_seen[0]
        sc = score_graph(d, best, params)
        self.params_ = params
        self.graph_ = best
        self.adjacency_ = best.to_matrix()
        self.log_marginal_likelihood_ = sc.log_ml
        self.log_posterior_ = sc.log_post
        return self

    def score(self, X, y=None) -> float:
        """Log marginal likelihood of ``X`` under the selected graph."""
        check_is_fitted(self, "graph_")
        X = validate_data(self, X, dtype=np.float64, reset=False, ensure_min_samples=3)
        d = DataMatrix(X, center=self.center)
        return log_marginal_likelihood(d, self.graph_, self._resolve_params(d.n))

    def edges(self) -> list[tuple[int, int]]:
        """Selected edges as 1-based vertex pairs."""
        check_is_fitted(self, "graph_")
        return [(i + 1, j + 1) for i, j in self.graph_.sorted_edges]

    def __sklearn_tags__(self):
        tags = super().__sklearn_tags__()
        tags.target_tags.required = False
        return tags
