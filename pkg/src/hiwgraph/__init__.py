"""Bayesian structure learning for decomposable Gaussian graphical models.

Graphs are scored by their exact marginal likelihood under the
hyper-inverse Wishart g-prior, single-edge moves by a closed form in the
sample partial correlation, and the decomposable graph space is explored by
enumeration or Metropolis-Hastings.
"""

from .estimator import HIWGraphSelector
from .exceptions import (
    BudgetError,
    DataError,
    HIWGraphError,
    ModelError,
    NotDecomposableError,
    TooLargeError,
)
from .graph import (
    Graph,
    JunctionTree,
    Triangulation,
    chain_path,
    enumerate_decomposable,
    is_decomposable,
    junction_tree,
    legal_add,
    legal_delete,
    legal_moves,
    maximal_cliques,
    minimal_triangulations,
    separator_for_move,
)
from .scoring import (
    GraphScore,
    LocalMove,
    ModelParams,
    local_log_bf,
    log_bayes_factor,
    log_graph_prior,
    log_marginal_likelihood,
    log_posterior_ratio,
    q_schedule,
    score_graph,
)
from .search import PosteriorTable, exhaustive_posterior, mh_search, mh_search_chains
from .stats import (
    CovModel,
    DataMatrix,
    RngSeed,
    assumption_diagnostics,
    sample_gaussian,
    sample_partial_correlation,
)

__version__ = "0.1.0"

__all__ = [
    "BudgetError",
    "CovModel",
    "DataError",
    "DataMatrix",
    "Graph",
    "GraphScore",
    "HIWGraphError",
    "HIWGraphSelector",
    "JunctionTree",
    "LocalMove",
    "ModelError",
    "ModelParams",
    "NotDecomposableError",
    "PosteriorTable",
    "RngSeed",
    "TooLargeError",
    "Triangulation",
    "assumption_diagnostics",
    "chain_path",
    "enumerate_decomposable",
    "exhaustive_posterior",
    "is_decomposable",
    "junction_tree",
    "legal_add",
    "legal_delete",
    "legal_moves",
    "local_log_bf",
    "log_bayes_factor",
    "log_graph_prior",
    "log_marginal_likelihood",
    "log_posterior_ratio",
    "maximal_cliques",
    "mh_search",
    "mh_search_chains",
    "minimal_triangulations",
    "q_schedule",
    "sample_gaussian",
    "sample_partial_correlation",
    "score_graph",
    "separator_for_move",
]
