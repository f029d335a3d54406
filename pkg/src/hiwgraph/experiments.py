"""Simulation studies: Bayes-factor decay rates and sample-correlation tails.

The two fixed models are the 3-node chain (precision ``OMEGA3``) and the
chordless 4-cycle (precision ``OMEGA4``). Precisions are taken as exact and
covariances recomputed as their inverses at full precision.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import stats as sps

from .exceptions import BudgetExceededError, InvalidEpsilonError
from .graph import Graph, junction_tree, minimal_triangulations
from .scoring import ModelParams, ScoreCache, log_marginal_likelihood
from .stats import CovModel, DataMatrix, RngSeed

OMEGA3 = np.array([[2.0, 1.0, 0.0], [1.0, 2.0, 0.8], [0.0, 0.8, 2.0]])
SIGMA3_PRINTED = np.array([[0.7119, -0.4237, 0.1695], [-0.4237, 0.8475, -0.3390], [0.1695, -0.3390, 0.6356]])
OMEGA4 = np.array([[2.0, 1.2, 0.0, 1.0], [1.2, 3.0, 1.2, 0.0], [0.0, 1.2, 3.0, 1.0], [1.0, 0.0, 1.0, 2.0]])
SIGMA4_PRINTED = np.array([
    [1.8364, -1.0909, 0.8909, -1.3636],
    [-1.0909, 1.0606, -0.7273, 0.9091],
    [0.8909, -0.7273, 0.9273, -0.9091],
    [-1.3636, 0.9091, -0.9091, 1.6364],
])


def model3() -> CovModel:
    return CovModel.from_precision(OMEGA3)


def model4() -> CovModel:
    return CovModel.from_precision(OMEGA4)


def _g(p, pairs):
    return Graph.from_labels(p, pairs)


SIM1_GRAPHS: dict[str, Graph] = {
    "G_0": _g(3, []),
    "G_12": _g(3, [(1, 2)]),
    "G_13": _g(3, [(1, 3)]),
    "G_23": _g(3, [(2, 3)]),
    "G_-23": _g(3, [(1, 2), (1, 3)]),
    "G_t": _g(3, [(1, 2), (2, 3)]),
    "G_-12": _g(3, [(1, 3), (2, 3)]),
    "G_c": Graph.complete(3),
}

_PATH4 = [(1, 2), (2, 3), (3, 4)]
SIM2_GRAPHS: dict[str, Graph] = {
    "G_U0": _g(4, _PATH4),
    "G_U13": _g(4, _PATH4 + [(1, 3)]),
    "G_U24": _g(4, _PATH4 + [(2, 4)]),
    "G_Uc": _g(4, _PATH4 + [(1, 3), (2, 4)]),
    "G_m1": _g(4, _PATH4 + [(1, 3), (1, 4)]),
    "G_m2": _g(4, _PATH4 + [(2, 4), (1, 4)]),
    "G_c": Graph.complete(4),
}
SIM2_TRUE_GRAPH = _g(4, _PATH4 + [(1, 4)])

# Table rows in display order with the printed leading terms and slopes.
TABLE1_ROWS = ["G_0", "G_13", "G_23", "G_-12", "G_12", "G_-23"]
TABLE1_LEADING = {"G_0": -0.2967, "G_13": -0.2639, "G_23": -0.1767, "G_-12": -0.1438,
                  "G_12": -0.1120, "G_-23": -0.0872}
TABLE1_SIMULATED = {"G_0": -0.2963, "G_13": -0.2637, "G_23": -0.1765, "G_-12": -0.1439,
                    "G_12": -0.1198, "G_-23": -0.0873, "G_c": -0.5106}

DEFAULT_N_GRID = tuple(range(100, 3001, 100))
DEFAULT_REPLICATES = 200
DEFAULT_MAX_ROWS = 100_000_000
MIN_GRID_POINTS = 10


def population_log_score(sigma: np.ndarray, g: Graph) -> float:
    """Per-sample limit of ``log f(Y | G)`` up to a graph-independent constant.

    Equals ``-1/2 (sum_C log|Sigma_C| - sum_S log|Sigma_S|)`` over a junction
    tree of ``g``.
    """
    jt = junction_tree(g)
    total = 0.0
    for c in jt.cliques:
        idx = sorted(c)
        total -= 0.5 * np.linalg.slogdet(sigma[np.ix_(idx, idx)])[1]
    for s in jt.separators[1:]:
        if s:
            idx = sorted(s)
            total += 0.5 * np.linalg.slogdet(sigma[np.ix_(idx, idx)])[1]
    return float(total)


def leading_term_slope(sigma: np.ndarray, g_a: Graph, g_b: Graph) -> float:
    """Coefficient of ``n`` in ``log BF(G_a; G_b)`` with sample moments replaced by population ones."""
    return population_log_score(sigma, g_a) - population_log_score(sigma, g_b)


def log_n_coefficient(g_a: Graph, g_b: Graph) -> float:
    """Coefficient of ``log n`` when both graphs contain the truth: ``-1/2`` per extra edge."""
    return -0.5 * (g_a.n_edges - g_b.n_edges)


@dataclass
class SlopeReport:
    pair: tuple[str, str]
    regressor: str
    fitted_slope: float
    theoretical_slope: float
    relative_error: float | None
    slope_stderr: float
    intercept: float
    n_grid: list[int]
    replicates: int

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pair"] = list(self.pair)
        return d


@dataclass
class SimulationResult:
    """Output of a Bayes-factor simulation.

    ``mean_log_bf`` maps a pair label ``"G_a;G_b"`` to the per-``n`` mean of
    ``log BF(G_a; G_b)`` over replicates.
    """

    name: str
    n_grid: list[int]
    replicates: int
    reports: list[SlopeReport]
    mean_log_bf: dict[str, np.ndarray]
    extras: dict = field(default_factory=dict)

    def report(self, a: str, b: str, regressor: str | None = None) -> SlopeReport:
        for r in self.reports:
            if r.pair == (a, b) and (regressor is None or r.regressor == regressor):
                return r
        raise KeyError((a, b))

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "n_grid": self.n_grid,
            "replicates": self.replicates,
            "reports": [r.to_dict() for r in self.reports],
            "mean_log_bf": {k: v.tolist() for k, v in self.mean_log_bf.items()},
            "extras": _jsonable(self.extras),
        }


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, Graph):
        return x.to_dict()
    return x


def ols_slope(x: Sequence[float], y: Sequence[float]) -> tuple[float, float, float]:
    """Least-squares slope, intercept and slope standard error."""
    fit = sps.linregress(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    return float(fit.slope), float(fit.intercept), float(fit.stderr)


def _slope_report(pair, regressor, n_grid, means, theoretical, replicates) -> SlopeReport:
    x = np.asarray(n_grid, dtype=float)
    if regressor == "log_n":
        x = np.log(x)
    slope, intercept, se = ols_slope(x, means)
    rel = abs(slope - theoretical) / abs(theoretical) if theoretical != 0 else None
    return SlopeReport(tuple(pair), regressor, slope, float(theoretical), rel, se, intercept,
                       [int(n) for n in n_grid], int(replicates))


def _check_design(n_grid: Sequence[int], replicates: int, max_rows: float) -> list[int]:
    grid = [int(n) for n in n_grid]
    if len(grid) < MIN_GRID_POINTS:
        raise ValueError(f"slope fits need at least {MIN_GRID_POINTS} grid points")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("n_grid must be strictly increasing")
    if grid[-1] < 500:
        raise ValueError("the largest sample size must be at least 500")
    if replicates < 50:
        raise ValueError("at least 50 replicates are required")
    rows = sum(grid) * replicates
    if rows > max_rows:
        raise BudgetExceededError(f"{rows} simulated rows exceed the cap of {int(max_rows)}")
    return grid


def simulate_log_ml(
    model: CovModel,
    graphs: dict[str, Graph],
    n_grid: Sequence[int],
    replicates: int,
    rng: RngSeed,
    params: ModelParams,
) -> np.ndarray:
    """Log marginal likelihoods, shape ``(len(n_grid), replicates, len(graphs))``.

    Replicate ``r`` at sample size ``n`` draws from the substream keyed
    ``(n, r)``.
    """
    labels = list(graphs)
    trees = {k: junction_tree(graphs[k]) for k in labels}
    chol = np.linalg.cholesky(model.sigma)
    out = np.empty((len(n_grid), replicates, len(labels)))
    for a, n in enumerate(n_grid):
        for r in range(replicates):
            z = rng.generator(n, r).standard_normal((n, model.p))
            d = DataMatrix(z @ chol.T)
            cache = ScoreCache(d, params)
            for k, lab in enumerate(labels):
                out[a, r, k] = log_marginal_likelihood(d, graphs[lab], params, jt=trees[lab], cache=cache)
    return out


def sim1_slopes(
    n_grid: Sequence[int] = DEFAULT_N_GRID,
    replicates: int = DEFAULT_REPLICATES,
    rng: RngSeed | int = 0,
    params: ModelParams | None = None,
    max_rows: float = DEFAULT_MAX_ROWS,
) -> SimulationResult:
    """Decay of ``log BF(G_a; G_t)`` for the eight 3-node graphs.

    Slopes against ``n`` are fitted for the six graphs missing a true edge and
    against ``log n`` for the complete graph.
    """
    rng = rng if isinstance(rng, RngSeed) else RngSeed(int(rng))
    params = params or ModelParams(b=3.0)
    grid = _check_design(n_grid, replicates, max_rows)
    model = model3()
    labels = list(SIM1_GRAPHS)
    lml = simulate_log_ml(model, SIM1_GRAPHS, grid, replicates, rng, params)
    t = labels.index("G_t")
    means, reports = {}, []
    for k, lab in enumerate(labels):
        if lab == "G_t":
            continue
        m = (lml[:, :, k] - lml[:, :, t]).mean(axis=1)
        means[f"{lab};G_t"] = m
        if lab == "G_c":
            theo = log_n_coefficient(SIM1_GRAPHS[lab], SIM1_GRAPHS["G_t"])
            reports.append(_slope_report((lab, "G_t"), "log_n", grid, m, theo, replicates))
        else:
            theo = leading_term_slope(model.sigma, SIM1_GRAPHS[lab], SIM1_GRAPHS["G_t"])
            reports.append(_slope_report((lab, "G_t"), "n", grid, m, theo, replicates))
    order = {lab: i for i, lab in enumerate(TABLE1_ROWS + ["G_c"])}
    reports.sort(key=lambda r: order[r.pair[0]])
    return SimulationResult("sim1", grid, replicates, reports, means,
                            {"printed_leading": TABLE1_LEADING, "printed_simulated": TABLE1_SIMULATED})


def sim2_misspecification(
    n_grid: Sequence[int] = DEFAULT_N_GRID,
    replicates: int = DEFAULT_REPLICATES,
    rng: RngSeed | int = 0,
    params: ModelParams | None = None,
    max_rows: float = DEFAULT_MAX_ROWS,
) -> SimulationResult:
    """Bayes factors around the two minimal triangulations of the 4-cycle."""
    rng = rng if isinstance(rng, RngSeed) else RngSeed(int(rng))
    params = params or ModelParams(b=3.0)
    grid = _check_design(n_grid, replicates, max_rows)
    model = model4()
    tris = minimal_triangulations(model.true_graph)
    labels = list(SIM2_GRAPHS)
    lml = simulate_log_ml(model, SIM2_GRAPHS, grid, replicates, rng, params)
    idx = {lab: k for k, lab in enumerate(labels)}

    def diff(a, b):
        return lml[:, :, idx[a]] - lml[:, :, idx[b]]

    means, reports = {}, []
    for ref in ("G_m1", "G_m2"):
        for alt in ("G_U0", "G_U13", "G_U24", "G_Uc"):
            m = diff(alt, ref).mean(axis=1)
            means[f"{alt};{ref}"] = m
            theo = leading_term_slope(model.sigma, SIM2_GRAPHS[alt], SIM2_GRAPHS[ref])
            reports.append(_slope_report((alt, ref), "n", grid, m, theo, replicates))
    between = diff("G_m2", "G_m1")
    m = between.mean(axis=1)
    means["G_m2;G_m1"] = m
    reports.append(_slope_report(("G_m2", "G_m1"), "n", grid, m, 0.0, replicates))
    for ref in ("G_m1", "G_m2"):
        mc = diff("G_c", ref).mean(axis=1)
        means[f"G_c;{ref}"] = mc
        theo = log_n_coefficient(SIM2_GRAPHS["G_c"], SIM2_GRAPHS[ref])
        reports.append(_slope_report(("G_c", ref), "log_n", grid, mc, theo, replicates))
    extras = {
        "minimal_triangulations": [t.result for t in tris],
        "between_band": [float(m.min()), float(m.max())],
        "between_band_width": float(m.max() - m.min()),
        "between_quantiles": np.quantile(between, [0.025, 0.5, 0.975], axis=1).T,
    }
    return SimulationResult("sim2", grid, replicates, reports, means, extras)


# ---------------------------------------------------------------------------
# sample correlation distribution checks
# ---------------------------------------------------------------------------


def bivariate_model(rho: float) -> CovModel:
    return CovModel.from_sigma([[1.0, rho], [rho, 1.0]])


def zero_partial_model(d_s: int, loading: float = 0.5) -> CovModel:
    """Variables ``(x, y, S_1..S_d)`` with ``x`` and ``y`` independent given ``S``
    but marginally correlated through it."""
    p = d_s + 2
    a = np.zeros((p, p))
    a[0, 2:] = loading
    a[1, 2:] = loading
    a[np.arange(p), np.arange(p)] = 1.0
    return CovModel.from_sigma(a @ a.T)


def simulate_partial_correlations(
    model: CovModel,
    n: int,
    i: int,
    j: int,
    s: Sequence[int],
    replicates: int,
    rng: RngSeed,
    chunk: int | None = None,
) -> np.ndarray:
    """Sample partial correlations of centered data over independent replicates.

    Replicates are generated in fixed-size chunks, chunk ``k`` drawing from
    the substream keyed ``(k,)``; results do not depend on evaluation order.
    """
    idx = [i, j, *sorted(s)]
    chol = np.linalg.cholesky(model.sigma)
    p = model.p
    if chunk is None:
        chunk = max(1, min(500, 2_000_000 // (n * p)))
    out = np.empty(replicates)
    for k, start in enumerate(range(0, replicates, chunk)):
        m = min(chunk, replicates - start)
        z = rng.generator(k).standard_normal((m, n, p)) @ chol.T
        z -= z.mean(axis=1, keepdims=True)
        sub = z[:, :, idx]
        gram = np.einsum("mni,mnj->mij", sub, sub)
        if len(idx) == 2:
            r = gram[:, 0, 1] / np.sqrt(gram[:, 0, 0] * gram[:, 1, 1])
        else:
            prec = np.linalg.inv(gram)
            r = -prec[:, 0, 1] / np.sqrt(prec[:, 0, 0] * prec[:, 1, 1])
        out[start:start + m] = r
    return np.clip(out, -1.0, 1.0)


def mc_margin(p_hat: float | np.ndarray, replicates: int) -> np.ndarray:
    """Three Monte Carlo standard errors of an estimated frequency."""
    p_hat = np.asarray(p_hat, dtype=float)
    return 3.0 * np.sqrt(p_hat * (1.0 - p_hat) / replicates)


def tail_bound(rho: float, n: int, eps: float | np.ndarray) -> np.ndarray:
    """``21 / (1 - |rho|)^2 * exp(-n eps^2 / 4) / (eps sqrt(n))``."""
    eps = np.asarray(eps, dtype=float)
    return 21.0 / (1.0 - abs(rho)) ** 2 * np.exp(-n * eps ** 2 / 4.0) / (eps * math.sqrt(n))


def default_eps_grid(rho: float, k: int = 5) -> list[float]:
    """``k`` evenly spaced values strictly inside ``(0, 1 - |rho|)``."""
    top = 1.0 - abs(rho)
    return [top * (i + 1) / (k + 1) for i in range(k)]


@dataclass
class TailCheckReport:
    rho: float
    n: int
    replicates: int
    epsilon_grid: list[float]
    empirical_tail: list[float]
    theoretical_bound: list[float]
    margin: list[float]
    violations: int

    def to_dict(self) -> dict:
        return asdict(self)


def tail_bound_check(
    rho: float,
    n: int,
    replicates: int,
    epsilon_grid: Sequence[float],
    rng: RngSeed | int = 0,
) -> TailCheckReport:
    """Compare ``P(|rho_hat - rho| > eps)`` with the exponential tail bound."""
    rng = rng if isinstance(rng, RngSeed) else RngSeed(int(rng))
    if not abs(rho) < 1:
        raise InvalidEpsilonError("|rho| must be below 1")
    if n <= 2:
        raise ValueError("n must exceed 2")
    eps = np.asarray(list(epsilon_grid), dtype=float)
    if np.any(eps <= 0) or np.any(eps >= 1 - abs(rho)):
        raise InvalidEpsilonError(f"every epsilon must lie in (0, {1 - abs(rho):g})")
    r = simulate_partial_correlations(bivariate_model(rho), n, 0, 1, (), replicates, rng)
    dev = np.abs(r - rho)
    emp = np.array([(dev > e).mean() for e in eps])
    bound = tail_bound(rho, n, eps)
    margin = mc_margin(emp, replicates)
    violations = int(np.sum(emp > bound + margin))
    return TailCheckReport(float(rho), int(n), int(replicates), eps.tolist(), emp.tolist(),
                           bound.tolist(), margin.tolist(), violations)


def rate_constants(epsilon: float) -> tuple[float, float]:
    """``M1 = (eps / (eps + 1))^2`` and ``M2 = 6 log(5 / eps)``."""
    return (epsilon / (epsilon + 1.0)) ** 2, 6.0 * math.log(5.0 / epsilon)


@dataclass
class RateCheckReport:
    n: int
    d_s: int
    replicates: int
    epsilon: float
    m1: float
    m2: float
    freq_below: float
    freq_above: float
    margin_below: float
    margin_above: float
    ks_statistic: float
    ks_pvalue: float

    @property
    def passed(self) -> bool:
        return (self.freq_below < self.epsilon + self.margin_below
                and self.freq_above < self.epsilon + self.margin_above)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d


def exact_rate_check(
    n: int,
    d_s: int,
    replicates: int,
    epsilon: float,
    rng: RngSeed | int = 0,
) -> RateCheckReport:
    """Frequencies of ``rho_hat^2`` below ``M1/(n-d_s)`` and above ``M2/(n-d_s)``
    when the population partial correlation is zero.

    Also reports the Kolmogorov-Smirnov distance of ``rho_hat^2`` from
    ``Beta(1/2, (n - d_s - 2)/2)``.
    """
    rng = rng if isinstance(rng, RngSeed) else RngSeed(int(rng))
    if not 0 < epsilon < 0.5:
        raise InvalidEpsilonError("epsilon must lie in (0, 1/2)")
    if n <= d_s + 3:
        raise ValueError("n must exceed d_s + 3")
    model = zero_partial_model(d_s)
    r = simulate_partial_correlations(model, n, 0, 1, range(2, d_s + 2), replicates, rng)
    r2 = r ** 2
    m1, m2 = rate_constants(epsilon)
    eff = n - d_s
    below = float((r2 < m1 / eff).mean())
    above = float((r2 > m2 / eff).mean())
    ks = sps.kstest(r2, sps.beta(0.5, (eff - 2) / 2.0).cdf)
    return RateCheckReport(int(n), int(d_s), int(replicates), float(epsilon), m1, m2, below, above,
                           float(mc_margin(below, replicates)), float(mc_margin(above, replicates)),
                           float(ks.statistic), float(ks.pvalue))


# ---------------------------------------------------------------------------
# output writers
# ---------------------------------------------------------------------------


def summary_table(result: SimulationResult) -> str:
    """Plain-text table: Bayes factor, leading term and fitted slope."""
    lines = [f"{'Bayes factor':<22}{'leading term':>16}{'simulation slope':>20}{'rel. error':>12}",
             "-" * 70]
    for r in result.reports:
        unit = "log n" if r.regressor == "log_n" else "n"
        rel = "" if r.relative_error is None else f"{r.relative_error:.2%}"
        lines.append(f"{'BF(' + r.pair[0] + ';' + r.pair[1] + ')':<22}"
                     f"{r.theoretical_slope:>10.4f}*{unit:<5}{r.fitted_slope:>20.4f}{rel:>12}")
    return "\n".join(lines)


def write_outputs(result: SimulationResult, out_dir: str | Path) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"{result.name}_mean_log_bf.csv"
    keys = list(result.mean_log_bf)
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", *keys])
        for a, n in enumerate(result.n_grid):
            w.writerow([n, *(repr(float(result.mean_log_bf[k][a])) for k in keys)])
    json_path = out / f"{result.name}_slopes.json"
    json_path.write_text(json.dumps(result.to_dict(), indent=2))
    txt_path = out / f"{result.name}_summary.txt"
    txt_path.write_text(summary_table(result) + "\n")
    return [csv_path, json_path, txt_path]
