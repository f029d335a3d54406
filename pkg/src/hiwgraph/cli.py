"""Command-line interface.

Every subcommand writes its result to a file and prints a short summary.
Exit codes: 0 success, 2 model or graph errors (including bad arguments),
3 data errors, 4 budget errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Sequence

from . import experiments as ex
from .exceptions import BudgetError, DataError, HIWGraphError, ModelError, TooLargeError
from .graph import MAX_ENUMERATE_P, Graph, enumerate_decomposable, is_decomposable, legal_add, legal_delete, minimal_triangulations
from .scoring import ModelParams, local_log_bf, log_bayes_factor, log_posterior_ratio, q_schedule, score_graph
from .search import exhaustive_posterior, mh_search_chains
from .stats import DataMatrix, RngSeed

COMMANDS = ("score", "bf", "search", "triangulate", "enumerate", "simulate")
SIMULATIONS = ("sim1", "sim2", "tailcheck", "ratecheck")
EXIT_OK, EXIT_MODEL, EXIT_DATA, EXIT_BUDGET = 0, 2, 3, 4


class ConfigError(ModelError):
    """Invalid or inconsistent command-line configuration."""


@dataclass
class RunConfig:
    """Fully resolved settings for one invocation; round-trips through JSON."""

    command: str
    simulation: str | None = None
    data_path: str | None = None
    graph_paths: list[str] = field(default_factory=list)
    b: float = 3.0
    g: float | None = None
    q: float | None = None
    q_schedule: list[float] | None = None
    center: bool = True
    seed: int = 0
    iters: int = 20000
    chains: int = 4
    exhaustive: bool = False
    max_fill: int | None = None
    p: int | None = None
    n_grid: list[int] = field(default_factory=lambda: list(ex.DEFAULT_N_GRID))
    replicates: int | None = None
    rho: list[float] = field(default_factory=lambda: [0.0, 0.3, -0.3, 0.7, -0.7])
    n: list[int] = field(default_factory=lambda: [50, 200, 1000])
    eps_grid: list[float] | None = None
    epsilon: float = 0.1
    d_s: int = 0
    max_rows: int = ex.DEFAULT_MAX_ROWS
    output_path: str | None = None

    def validate(self) -> "RunConfig":
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        need_data = self.command in ("score", "bf", "search")
        if need_data and not self.data_path:
            raise ConfigError(f"{self.command} requires --data")
        n_graphs = {"score": 1, "bf": 2, "triangulate": 1}.get(self.command, 0)
        if len(self.graph_paths) != n_graphs:
            raise ConfigError(f"{self.command} requires {n_graphs} graph file(s), got {len(self.graph_paths)}")
        if self.command == "simulate" and self.simulation not in SIMULATIONS:
            raise ConfigError(f"simulate requires one of {', '.join(SIMULATIONS)}")
        if self.command == "enumerate" and self.p is None:
            raise ConfigError("enumerate requires --p")
        if self.q is not None and self.q_schedule is not None:
            raise ConfigError("--q and --q-schedule are mutually exclusive")
        if self.q_schedule is not None and len(self.q_schedule) != 2:
            raise ConfigError("--q-schedule takes c_q,gamma")
        if self.iters < 1 or self.chains < 1:
            raise ConfigError("--iters and --chains must be positive")
        if self.replicates is not None and self.replicates < 1:
            raise ConfigError("--replicates must be positive")
        ModelParams(b=self.b, g=self.g, q=self.q)  # range checks
        return self

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        return cls(**d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        return cls.from_dict(json.loads(text))

    def params(self, n: int | None = None) -> ModelParams:
        q = self.q
        if self.q_schedule is not None:
            if n is None:
                raise ConfigError("a q schedule needs the sample size")
            q = q_schedule(n, *self.q_schedule)
        return ModelParams(b=self.b, g=self.g, q=q)


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t.strip()]


def _ints(text: str) -> list[int]:
    """Comma list or ``start:stop:step`` with inclusive stop."""
    if ":" in text:
        parts = [int(t) for t in text.split(":")]
        start, stop = parts[0], parts[1]
        step = parts[2] if len(parts) > 2 else 1
        return list(range(start, stop + 1, step))
    return [int(t) for t in text.split(",") if t.strip()]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", help="JSON file supplying any flag")
    common.add_argument("--out", dest="output_path", help="output file (directory for simulate)")
    common.add_argument("--seed", type=int)

    model = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    model.add_argument("--b", type=float, help="HIW degrees of freedom (> 2)")
    model.add_argument("--g", type=float, help="g-prior scale; default 1/n")
    qg = model.add_mutually_exclusive_group()
    qg.add_argument("--q", type=float, help="edge inclusion probability")
    qg.add_argument("--q-schedule", dest="q_schedule", type=_floats, help="c_q,gamma for q = exp(-c_q n^gamma)")
    model.add_argument("--no-center", dest="center", action="store_false", help="keep raw moments")

    data = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    data.add_argument("--data", dest="data_path", help="numeric CSV, one column per variable")

    parser = argparse.ArgumentParser(prog="hiwgraph", description="Decomposable GGM selection under the HIW g-prior.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("score", parents=[common, model, data], help="log marginal likelihood of one graph",
                       argument_default=argparse.SUPPRESS)
    p.add_argument("--graph", dest="graph_paths", action="append", help="graph JSON {p, edges}")

    p = sub.add_parser("bf", parents=[common, model, data], help="Bayes factor between two graphs",
                       argument_default=argparse.SUPPRESS)
    p.add_argument("--graph-a", dest="graph_a")
    p.add_argument("--graph-b", dest="graph_b")

    p = sub.add_parser("search", parents=[common, model, data], help="posterior mode search",
                       argument_default=argparse.SUPPRESS)
    p.add_argument("--iters", type=int)
    p.add_argument("--chains", type=int)
    p.add_argument("--exhaustive", action="store_true", help=f"enumerate all graphs (p <= {MAX_ENUMERATE_P})")

    p = sub.add_parser("triangulate", parents=[common], help="minimal triangulations of a graph",
                       argument_default=argparse.SUPPRESS)
    p.add_argument("--graph", dest="graph_paths", action="append")
    p.add_argument("--max-fill", dest="max_fill", type=int)

    p = sub.add_parser("enumerate", parents=[common], help="list decomposable graphs on p vertices",
                       argument_default=argparse.SUPPRESS)
    p.add_argument("--p", type=int)

    p = sub.add_parser("simulate", parents=[common, model], help="simulation studies",
                       argument_default=argparse.SUPPRESS)
    p.add_argument("simulation", choices=SIMULATIONS)
    p.add_argument("--n-grid", dest="n_grid", type=_ints, help="comma list or start:stop:step")
    p.add_argument("--replicates", type=int)
    p.add_argument("--max-rows", dest="max_rows", type=int, help="compute cap on sum(n_grid) x replicates")
    p.add_argument("--rho", type=_floats)
    p.add_argument("--n", type=_ints)
    p.add_argument("--eps-grid", dest="eps_grid", type=_floats)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--d-s", dest="d_s", type=int)
    return parser


def parse_config(argv: Sequence[str] | None = None) -> RunConfig:
    """Merge defaults, an optional ``--config`` file and explicit flags (in that order)."""
    ns = vars(build_parser().parse_args(argv))
    merged: dict = {}
    cfg_path = ns.pop("config", None)
    if cfg_path:
        try:
            merged.update(json.loads(Path(cfg_path).read_text()))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {cfg_path}: {exc}") from exc
    a, b = ns.pop("graph_a", None), ns.pop("graph_b", None)
    if a is not None or b is not None:
        ns["graph_paths"] = [a, b] if a and b else [x for x in (a, b) if x]
    merged.update(ns)
    return RunConfig.from_dict(merged).validate()


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def load_graph(path: str) -> Graph:
    try:
        return Graph.from_json(Path(path).read_text())
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ModelError(f"cannot read graph {path}: {exc}") from exc


def load_data(cfg: RunConfig) -> DataMatrix:
    try:
        return DataMatrix.from_csv(cfg.data_path, center=cfg.center)
    except OSError as exc:
        raise DataError(f"cannot read data {cfg.data_path}: {exc}") from exc


def _write_json(path: Path, obj) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(ex._jsonable(obj), indent=2) + "\n")
    return path


def _out(cfg: RunConfig, default: str) -> Path:
    return Path(cfg.output_path or default)


def cmd_score(cfg: RunConfig) -> tuple[dict, str]:
    d = load_data(cfg)
    g = load_graph(cfg.graph_paths[0])
    params = cfg.params(d.n)
    sc = score_graph(d, g, params)
    out = sc.to_dict(params)
    out.update(n=d.n, p=d.p)
    return out, f"log_ml={sc.log_ml:.6f} log_prior={sc.log_prior:.6f} log_post={sc.log_post:.6f}"


def _single_edge_move(g_a: Graph, g_b: Graph):
    """Return ``(edge, mode)`` taking ``g_b`` to ``g_a`` when they differ by one legal edge."""
    diff = g_a.edges ^ g_b.edges
    if g_a.p != g_b.p or len(diff) != 1:
        return None
    (e,) = diff
    if e in g_b.edges:
        return (e, "delete") if legal_delete(g_b, e) else None
    return (e, "add") if legal_add(g_b, e) else None


def cmd_bf(cfg: RunConfig) -> tuple[dict, str]:
    d = load_data(cfg)
    g_a, g_b = (load_graph(p) for p in cfg.graph_paths)
    for g in (g_a, g_b):
        if not is_decomposable(g):
            raise ModelError("graph is not decomposable") from None
    params = cfg.params(d.n)
    lbf = log_bayes_factor(d, g_a, g_b, params)
    out = {"graph_a": g_a.to_dict(), "graph_b": g_b.to_dict(), "log_bf": lbf,
           "log_pr": log_posterior_ratio(d, g_a, g_b, params), "params": params.to_dict(d.p), "local_move": None}
    move = _single_edge_move(g_a, g_b)
    if move is not None:
        out["local_move"] = local_log_bf(d, g_b, move[0], move[1], params).to_dict()
    return out, f"log BF(a;b)={lbf:.6f} log PR(a;b)={out['log_pr']:.6f}"


def cmd_search(cfg: RunConfig) -> tuple[dict, str]:
    d = load_data(cfg)
    params = cfg.params(d.n)
    if cfg.exhaustive:
        if d.p > MAX_ENUMERATE_P:
            raise TooLargeError(f"exhaustive search is limited to p <= {MAX_ENUMERATE_P}")
        table = exhaustive_posterior(d, params)
        out = table.to_dict()
        out["params"] = params.to_dict(d.p)
        mode = table.mode
        return out, f"mode {mode!r} with posterior probability {table.prob_of(mode):.4f}"
    chains = mh_search_chains(d, params, cfg.iters, cfg.chains, RngSeed(cfg.seed))
    best, lp = chains[0].best_seen
    out = {
        "best_graph": best.to_dict(),
        "log_post": lp,
        "params": params.to_dict(d.p),
        "chains": [{"best_graph": c.best_seen[0].to_dict(), "log_post": c.best_seen[1],
                    "acceptance_rate": c.acceptance_rate, "final_graph": c.current.to_dict()} for c in chains],
    }
    return out, f"best graph {best!r} log_post={lp:.6f}"


def cmd_triangulate(cfg: RunConfig) -> tuple[dict, str]:
    g = load_graph(cfg.graph_paths[0])
    tris = minimal_triangulations(g, max_fill=cfg.max_fill)
    out = {"graph": g.to_dict(), "triangulations": [t.to_dict() for t in tris]}
    return out, f"{len(tris)} minimal triangulation(s)"


def cmd_enumerate(cfg: RunConfig) -> tuple[dict, str]:
    graphs = list(enumerate_decomposable(cfg.p))
    return {"p": cfg.p, "count": len(graphs), "graphs": [g.to_dict() for g in graphs]}, \
        f"{len(graphs)} decomposable graphs on {cfg.p} vertices"


def cmd_simulate(cfg: RunConfig) -> tuple[list[Path], str]:
    out_dir = _out(cfg, "hiwgraph-out")
    seed = RngSeed(cfg.seed)
    params = ModelParams(b=cfg.b, g=cfg.g)
    if cfg.simulation in ("sim1", "sim2"):
        fn = ex.sim1_slopes if cfg.simulation == "sim1" else ex.sim2_misspecification
        res = fn(cfg.n_grid, cfg.replicates or ex.DEFAULT_REPLICATES, seed, params, cfg.max_rows)
        return ex.write_outputs(res, out_dir), ex.summary_table(res)
    reps = cfg.replicates or 10_000
    if cfg.simulation == "tailcheck":
        reports, lines = [], []
        for a, rho in enumerate(cfg.rho):
            for b, n in enumerate(cfg.n):
                eps = cfg.eps_grid or ex.default_eps_grid(rho)
                r = ex.tail_bound_check(rho, n, reps, eps, seed.child(1000 * a + b))
                reports.append(r.to_dict())
                lines.append(f"rho={rho:+.2f} n={n:<5d} violations={r.violations}")
        path = _write_json(out_dir / "tailcheck.json", reports)
        return [path], "\n".join(lines)
    reports, lines = [], []
    for b, n in enumerate(cfg.n):
        r = ex.exact_rate_check(n, cfg.d_s, reps, cfg.epsilon, seed.child(b))
        reports.append(r.to_dict())
        lines.append(f"n={n:<5d} below={r.freq_below:.4f} above={r.freq_above:.4f} "
                     f"KS={r.ks_statistic:.4f} passed={r.passed}")
    path = _write_json(out_dir / "ratecheck.json", reports)
    return [path], "\n".join(lines)


HANDLERS = {"score": cmd_score, "bf": cmd_bf, "search": cmd_search,
            "triangulate": cmd_triangulate, "enumerate": cmd_enumerate}


def run(cfg: RunConfig) -> list[Path]:
    if cfg.command == "simulate":
        paths, summary = cmd_simulate(cfg)
    else:
        result, summary = HANDLERS[cfg.command](cfg)
        paths = [_write_json(_out(cfg, f"hiwgraph-{cfg.command}.json"), result)]
    print(summary)
    for p in paths:
        print(f"wrote {p}")
    return paths


def exit_code(exc: BaseException) -> int:
    if isinstance(exc, BudgetError):
        return EXIT_BUDGET
    if isinstance(exc, DataError):
        return EXIT_DATA
    return EXIT_MODEL


def main(argv: Sequence[str] | None = None) -> int:
    try:
        cfg = parse_config(argv)
        run(cfg)
    except HIWGraphError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exit_code(exc)
    except (TypeError, ValueError) as exc:
        # malformed config values that slipped past argparse
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MODEL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
