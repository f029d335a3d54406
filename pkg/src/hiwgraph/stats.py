"""Data matrices, Gaussian sampling and (partial) correlations."""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg as la

from .exceptions import (
    DataError,
    DegenerateColumnError,
    EmptyGraphError,
    NotPositiveDefiniteError,
    SingularConditioningSetError,
    SingularGramError,
)
from .graph import Graph

ZERO_PRECISION_RTOL = 1e-10
SINGULAR_PIVOT_RTOL = 1e-12


@dataclass(frozen=True)
class RngSeed:
    """Seed plus stream index for reproducible, order-independent substreams.

    ``generator(*keys)`` derives a :class:`numpy.random.Generator` from
    ``SeedSequence(seed, spawn_key=(stream, *keys))``, so replicate ``k`` draws
    the same numbers however the replicates are scheduled.
    """

    seed: int = 0
    stream: int = 0

    def generator(self, *keys: int) -> np.random.Generator:
        ss = np.random.SeedSequence(int(self.seed), spawn_key=(int(self.stream), *map(int, keys)))
        return np.random.default_rng(ss)

    def child(self, stream: int) -> "RngSeed":
        return RngSeed(self.seed, stream)


def as_generator(rng, *keys: int) -> np.random.Generator:
    if isinstance(rng, RngSeed):
        return rng.generator(*keys)
    if isinstance(rng, np.random.Generator):
        return rng
    return RngSeed(0 if rng is None else int(rng)).generator(*keys)


class DataMatrix:
    """An ``n x p`` observation matrix with its cached Gram matrix.

    Columns are mean-centered on construction unless ``center=False``. All
    correlation and determinant computations read the Gram matrix, so the
    centering state applies to every statistic derived from the object.
    """

    def __init__(self, values, center: bool = True):
        y = np.array(values, dtype=float)
        if y.ndim == 1:
            y = y[:, None]
        if y.ndim != 2:
            raise DataError("data must be a 2-d array")
        if not np.all(np.isfinite(y)):
            raise DataError("data contain non-finite values")
        if center:
            y = y - y.mean(axis=0)
        y.setflags(write=False)
        self._values = y
        self.centered = bool(center)
        gram = y.T @ y
        gram = (gram + gram.T) / 2
        gram.setflags(write=False)
        self._gram = gram

    @classmethod
    def from_csv(cls, path: str | Path, center: bool = True) -> "DataMatrix":
        return cls(read_csv(path), center=center)

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def gram(self) -> np.ndarray:
        return self._gram

    @property
    def n(self) -> int:
        return self._values.shape[0]

    @property
    def p(self) -> int:
        return self._values.shape[1]

    def __repr__(self) -> str:
        return f"DataMatrix(n={self.n}, p={self.p}, centered={self.centered})"


def read_csv(path: str | Path) -> np.ndarray:
    """Read a numeric CSV file with an optional header row."""
    with open(path) as fh:
        first = fh.readline()
    try:
        [float(t) for t in first.strip().split(",")]
        skip = 0
    except ValueError:
        skip = 1
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=skip, ndmin=2)
    except ValueError as exc:
        raise DataError(f"could not parse {path}: {exc}") from exc
    if data.size == 0:
        raise DataError(f"{path} contains no observations")
    return data


def write_csv(path: str | Path, values: np.ndarray, header: Sequence[str] | None = None) -> None:
    kw = {"header": ",".join(header), "comments": ""} if header else {}
    np.savetxt(path, values, delimiter=",", fmt="%.17g", **kw)


class CovModel:
    """Gaussian covariance model with its precision matrix and induced graph.

    Build one with :meth:`from_sigma` or :meth:`from_precision`; the true
    graph has an edge wherever the precision entry is non-zero relative to
    ``sqrt(omega_ii * omega_jj)``.
    """

    def __init__(self, sigma, omega, labels: Sequence[str] | None = None):
        sigma = np.array(sigma, dtype=float)
        omega = np.array(omega, dtype=float)
        p = sigma.shape[0]
        if sigma.shape != (p, p) or omega.shape != (p, p):
            raise DataError("sigma and omega must be square matrices of equal size")
        if not np.allclose(sigma @ omega, np.eye(p), atol=1e-10):
            raise DataError("sigma and omega are not mutually inverse")
        self.sigma = sigma
        self.omega = omega
        self.labels = list(labels) if labels is not None else [str(i + 1) for i in range(p)]

    @classmethod
    def from_sigma(cls, sigma, labels=None) -> "CovModel":
        sigma = np.asarray(sigma, dtype=float)
        _check_pd(sigma)
        if not np.allclose(sigma, sigma.T):
            raise NotPositiveDefiniteError("covariance matrix is not symmetric")
        return cls(sigma, la.inv(sigma), labels)

    @classmethod
    def from_precision(cls, omega, labels=None) -> "CovModel":
        omega = np.asarray(omega, dtype=float)
        _check_pd(omega)
        if not np.allclose(omega, omega.T):
            raise NotPositiveDefiniteError("precision matrix is not symmetric")
        sigma = la.inv(omega)
        return cls((sigma + sigma.T) / 2, omega, labels)

    @property
    def p(self) -> int:
        return self.sigma.shape[0]

    @cached_property
    def true_graph(self) -> Graph:
        d = np.sqrt(np.diag(self.omega))
        scaled = np.abs(self.omega) / np.outer(d, d)
        return Graph(self.p, [(i, j) for i in range(self.p) for j in range(i + 1, self.p)
                              if scaled[i, j] >= ZERO_PRECISION_RTOL])

    def to_dict(self) -> dict:
        return {"sigma": self.sigma.tolist(), "labels": self.labels}

    @classmethod
    def from_dict(cls, d: dict) -> "CovModel":
        if "sigma" in d:
            return cls.from_sigma(d["sigma"], d.get("labels"))
        return cls.from_precision(d["omega"], d.get("labels"))

    @classmethod
    def from_json(cls, path: str | Path) -> "CovModel":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def _check_pd(a: np.ndarray) -> np.ndarray:
    try:
        return la.cholesky(a, lower=True)
    except la.LinAlgError as exc:
        raise NotPositiveDefiniteError("matrix is not positive definite") from exc


def sample_gaussian(model: CovModel, n: int, rng=None, center: bool = True) -> DataMatrix:
    """Draw ``n`` i.i.d. rows from ``N_p(0, sigma)``.

    ``rng`` may be an :class:`RngSeed`, a numpy ``Generator`` or an integer
    seed.
    """
    if n < 1:
        raise DataError("n must be at least 1")
    chol = _check_pd(model.sigma)
    z = as_generator(rng).standard_normal((int(n), model.p))
    return DataMatrix(z @ chol.T, center=center)


def _index_list(s: Iterable[int]) -> list[int]:
    return sorted(int(v) for v in s)


def sample_correlation(d: DataMatrix, i: int, j: int) -> float:
    g = d.gram
    denom = g[i, i] * g[j, j]
    if g[i, i] <= 0 or g[j, j] <= 0:
        raise DegenerateColumnError(f"column {i if g[i, i] <= 0 else j} has zero variance")
    return float(np.clip(g[i, j] / np.sqrt(denom), -1.0, 1.0))


def _schur_pair(m: np.ndarray, i: int, j: int, s: list[int]) -> np.ndarray:
    block = m[np.ix_([i, j], [i, j])]
    if not s:
        return block
    mss = m[np.ix_(s, s)]
    try:
        factor = la.cho_factor(mss, lower=True)
    except la.LinAlgError as exc:
        raise SingularConditioningSetError("conditioning block is singular") from exc
    cross = m[np.ix_(s, [i, j])]
    return block - cross.T @ la.cho_solve(factor, cross)


def _pair_correlation(block: np.ndarray) -> float:
    if block[0, 0] <= 0 or block[1, 1] <= 0:
        raise SingularConditioningSetError("conditional variance is not positive")
    return float(np.clip(block[0, 1] / np.sqrt(block[0, 0] * block[1, 1]), -1.0, 1.0))


def sample_partial_correlation(d: DataMatrix, i: int, j: int, s: Iterable[int] = ()) -> float:
    """Sample partial correlation of columns ``i`` and ``j`` given the set ``s``.

    Computed from the Schur complement of the Gram matrix on ``s``.
    """
    s = _index_list(s)
    if i in s or j in s or i == j:
        raise ValueError("i and j must be distinct and outside the conditioning set")
    if not s:
        return sample_correlation(d, i, j)
    if d.n <= len(s) + 2:
        raise SingularConditioningSetError(f"n={d.n} is too small for a conditioning set of size {len(s)}")
    return _pair_correlation(_schur_pair(d.gram, i, j, s))


def population_correlation(model: CovModel, i: int, j: int) -> float:
    s = model.sigma
    return float(s[i, j] / np.sqrt(s[i, i] * s[j, j]))


def population_partial_correlation(model: CovModel, i: int, j: int, s: Iterable[int] = ()) -> float:
    s = _index_list(s)
    if i in s or j in s or i == j:
        raise ValueError("i and j must be distinct and outside the conditioning set")
    return _pair_correlation(_schur_pair(model.sigma, i, j, s))


def log_det_gram(d: DataMatrix, c: Iterable[int]) -> float:
    """``log |Y_C^T Y_C|`` via Cholesky; zero for the empty set."""
    c = _index_list(c)
    if not c:
        return 0.0
    if d.n <= len(c):
        raise SingularGramError(f"n={d.n} does not exceed the block size {len(c)}")
    return _logdet_pd(d.gram[np.ix_(c, c)])


def _logdet_pd(block: np.ndarray) -> float:
    try:
        chol = la.cholesky(block, lower=True)
    except la.LinAlgError as exc:
        raise SingularGramError("Gram block is not positive definite") from exc
    diag = np.diag(chol)
    # a pivot that is tiny relative to its column means an exact linear dependence
    if np.any(diag ** 2 <= SINGULAR_PIVOT_RTOL * np.diag(block)):
        raise SingularGramError("Gram block is numerically singular")
    return float(2.0 * np.sum(np.log(diag)))


@dataclass(frozen=True)
class AssumptionDiagnostics:
    rho_L: float
    rho_U: float
    n_edges: int


def full_partial_correlations(model: CovModel) -> np.ndarray:
    """Matrix of ``rho_{ij | V - {i, j}} = -omega_ij / sqrt(omega_ii omega_jj)``."""
    d = np.sqrt(np.diag(model.omega))
    r = -model.omega / np.outer(d, d)
    np.fill_diagonal(r, 1.0)
    return r


def assumption_diagnostics(model: CovModel) -> AssumptionDiagnostics:
    """Smallest and largest absolute full-conditional partial correlation on true edges."""
    g = model.true_graph
    if g.n_edges == 0:
        raise EmptyGraphError("the precision matrix induces no edges")
    r = full_partial_correlations(model)
    vals = np.array([abs(r[i, j]) for i, j in g.sorted_edges])
    return AssumptionDiagnostics(float(vals.min()), float(vals.max()), g.n_edges)
