"""Multi-chain experiments, trace summaries and parameter sweeps."""

from __future__ import annotations

import csv
import io
import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .glauber import RULES, MagnetizationTrace, run_chain
from .graph import BlockGraph, gen_graph
from .hamiltonian import ModelParams
from .meanfield import PhaseDiagnosis, classify_phase

CHAIN_INITS = ("all_plus", "all_minus", "random", "symmetric", "antisymmetric", "dispersed")
_QUADRANTS = ((1, 1), (1, -1), (-1, 1), (-1, -1))


def thread_cap() -> int:
    env = os.environ.get("BLOCKSPIN_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"BLOCKSPIN_THREADS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def chain_init(policy: str, index: int):
    """Initial condition of chain ``index`` under a multi-chain policy.

    ``symmetric`` alternates all-plus / all-minus, ``antisymmetric`` alternates
    block signs (+,-) / (-,+), ``dispersed`` cycles through all four block-sign
    quadrants.
    """
    if policy == "symmetric":
        return "all_plus" if index % 2 == 0 else "all_minus"
    if policy == "antisymmetric":
        return (1, -1) if index % 2 == 0 else (-1, 1)
    if policy == "dispersed":
        return _QUADRANTS[index % 4]
    if policy in ("all_plus", "all_minus", "random"):
        return policy
    raise ConfigError(f"unknown init policy {policy!r}; expected one of {CHAIN_INITS}")


@dataclass
class ExperimentConfig:
    n: int
    p: float
    q: float
    beta: float
    alpha: float
    a_override: float | None = None
    chains: int = 4
    sweeps: int = 2000
    burnin: int = 500
    thin: int = 1
    base_seed: int = 0
    graph_seed: int | None = None
    init: str = "symmetric"
    rule: str = "heat_bath"
    directed: bool = True
    graph_path: str | None = None
    out_dir: str | None = None

    def __post_init__(self):
        self.validate()

    def validate(self):
        try:
            if self.n < 2 or self.n % 2:
                raise ConfigError(f"n must be an even integer >= 2, got {self.n}")
            self.params()
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.chains < 1:
            raise ConfigError("chains must be >= 1")
        if not (self.sweeps >= self.burnin >= 0):
            raise ConfigError("need sweeps >= burnin >= 0")
        if self.thin < 1:
            raise ConfigError("thin must be >= 1")
        if self.rule not in RULES:
            raise ConfigError(f"rule must be one of {RULES}")
        if self.init not in CHAIN_INITS:
            raise ConfigError(f"init must be one of {CHAIN_INITS}")

    def params(self) -> ModelParams:
        return ModelParams(self.beta, self.alpha, self.p, self.q, self.a_override)

    def diagnosis(self) -> PhaseDiagnosis:
        return classify_phase(self.beta, self.params().lam)

    def chain_seed(self, i: int) -> int:
        return self.base_seed + i

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict, **overrides) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        merged = {**d, **{k: v for k, v in overrides.items() if v is not None}}
        unknown = set(merged) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        missing = {"n", "p", "q", "beta", "alpha"} - set(merged)
        if missing:
            raise ConfigError(f"missing config keys: {sorted(missing)}")
        try:
            return cls(**merged)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def from_json_file(cls, path, **overrides) -> "ExperimentConfig":
        with open(path) as fh:
            try:
                d = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: {exc}") from None
        return cls.from_dict(d, **overrides)


@dataclass
class ChainSummary:
    seed: int
    n_samples: int
    mean_abs_m1: float
    mean_abs_m2: float
    corr_sign: int
    fractions: list[float]


@dataclass
class TraceSummary:
    phase: str
    z_star: float
    limit_points: list[list[float]]
    chains: list[ChainSummary]
    n_samples: int
    fractions: list[float]
    mean_abs_m1: float
    mean_abs_m2: float
    positive_product_fraction: float
    negative_product_fraction: float
    mode_distance: list[float | None]
    insufficient_samples: bool = False
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def _assign(m1: np.ndarray, m2: np.ndarray, points: np.ndarray) -> np.ndarray:
    d2 = (m1[:, None] - points[None, :, 0]) ** 2 + (m2[:, None] - points[None, :, 1]) ** 2
    return np.argmin(d2, axis=1)


def summarize(traces: list[MagnetizationTrace], diagnosis: PhaseDiagnosis) -> TraceSummary:
    """Compare recorded magnetizations with the predicted limit points.

    Every sample is assigned to its nearest limit point (Euclidean distance in
    the ``(m1, m2)`` plane).
    """
    points = np.array(diagnosis.limit_points, dtype=float)
    k = len(points)
    per_chain = []
    all_m1, all_m2 = [], []
    for tr in traces:
        m1, m2 = tr.m1, tr.m2
        all_m1.append(m1)
        all_m2.append(m2)
        if len(m1) == 0:
            per_chain.append(ChainSummary(tr.seed, 0, float("nan"), float("nan"), 0, [0.0] * k))
            continue
        lab = _assign(m1, m2, points)
        per_chain.append(ChainSummary(
            seed=tr.seed,
            n_samples=len(m1),
            mean_abs_m1=float(np.abs(m1).mean()),
            mean_abs_m2=float(np.abs(m2).mean()),
            corr_sign=int(np.sign(np.mean(m1 * m2))),
            fractions=(np.bincount(lab, minlength=k) / len(m1)).tolist(),
        ))
    m1 = np.concatenate(all_m1) if all_m1 else np.empty(0)
    m2 = np.concatenate(all_m2) if all_m2 else np.empty(0)
    total = len(m1)
    insufficient = total == 0 or any(c.n_samples == 0 for c in per_chain)
    notes = ["insufficient samples"] if insufficient else []
    if total:
        lab = _assign(m1, m2, points)
        fractions = (np.bincount(lab, minlength=k) / total).tolist()
        dist = []
        for j in range(k):
            sel = lab == j
            if sel.any():
                centre = np.array([m1[sel].mean(), m2[sel].mean()])
                dist.append(float(np.hypot(*(centre - points[j]))))
            else:
                dist.append(None)
        prod = m1 * m2
        stats = (float(np.abs(m1).mean()), float(np.abs(m2).mean()),
                 float(np.mean(prod > 0)), float(np.mean(prod < 0)))
    else:
        fractions, dist = [0.0] * k, [None] * k
        stats = (float("nan"),) * 4
    return TraceSummary(
        phase=diagnosis.phase.value,
        z_star=diagnosis.z_star,
        limit_points=[list(pt) for pt in diagnosis.limit_points],
        chains=per_chain,
        n_samples=total,
        fractions=fractions,
        mean_abs_m1=stats[0],
        mean_abs_m2=stats[1],
        positive_product_fraction=stats[2],
        negative_product_fraction=stats[3],
        mode_distance=dist,
        insufficient_samples=insufficient,
        notes=notes,
    )


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    graph: BlockGraph
    traces: list[MagnetizationTrace]
    summary: TraceSummary


def _load_or_generate(config: ExperimentConfig) -> BlockGraph:
    if config.graph_path:
        g = BlockGraph.load(config.graph_path)
        if g.n != config.n or not np.isclose(g.p, config.p) or not np.isclose(g.q, config.q):
            raise ConfigError("graph file does not match n, p, q of the config")
        return g
    seed = config.base_seed if config.graph_seed is None else config.graph_seed
    return gen_graph(config.n, config.p, config.q, seed, directed=config.directed)


def run_chains(g: BlockGraph, config: ExperimentConfig) -> list[MagnetizationTrace]:
    params = config.params()

    def one(i):
        return run_chain(g, params, config.sweeps, config.burnin, config.thin,
                         seed=config.chain_seed(i), init=chain_init(config.init, i),
                         rule=config.rule)

    workers = min(config.chains, thread_cap())
    if workers == 1:
        return [one(i) for i in range(config.chains)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, range(config.chains)))


def run_experiment(config: ExperimentConfig, graph: BlockGraph | None = None) -> ExperimentResult:
    """Generate (or load) the graph, run all chains and summarize them.

    With ``config.out_dir`` set, writes ``config.json``, ``graph.json``,
    ``chain_XXX.csv`` + ``chain_XXX.json`` and ``summary.json`` there.
    """
    g = graph if graph is not None else _load_or_generate(config)
    traces = run_chains(g, config)
    summary = summarize(traces, config.diagnosis())
    result = ExperimentResult(config, g, traces, summary)
    if config.out_dir:
        write_artifacts(result, Path(config.out_dir))
    return result


def write_artifacts(result: ExperimentResult, out: Path):
    out.mkdir(parents=True, exist_ok=True)
    cfg = result.config
    (out / "config.json").write_text(json.dumps(cfg.to_dict(), indent=2, sort_keys=True))
    result.graph.save(out / "graph.json")
    for i, tr in enumerate(result.traces):
        (out / f"chain_{i:03d}.csv").write_text(tr.to_csv())
        meta = {
            "chain": i,
            "seed": tr.seed,
            "graph_seed": result.graph.seed,
            "params": asdict(cfg.params()),
            "schedule": {"sweeps": cfg.sweeps, "burnin": tr.burnin, "thin": tr.thin},
            "init": str(chain_init(cfg.init, i)),
            "rule": cfg.rule,
            "created": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        }
        (out / f"chain_{i:03d}.json").write_text(json.dumps(meta, indent=2, sort_keys=True))
    (out / "summary.json").write_text(json.dumps(result.summary.to_dict(), indent=2, sort_keys=True))


SWEEP_COLUMNS = ("beta", "alpha_a", "alpha", "phase", "z_star", "n_samples", "mean_abs_m1",
                 "mean_abs_m2", "positive_product_fraction", "negative_product_fraction",
                 "max_mode_distance")


def sweep(base: ExperimentConfig, betas, alpha_as, graph: BlockGraph | None = None) -> list[dict]:
    """One summary row per ``(beta, alpha a)`` grid cell on a shared quenched graph.

    Cell ``k`` (row-major over ``betas`` x ``alpha_as``) seeds its chains with
    ``base_seed + 1000 k + i``.
    """
    betas = list(betas)
    alpha_as = list(alpha_as)
    if not betas or not alpha_as:
        raise ConfigError("sweep grid is empty")
    g = graph if graph is not None else _load_or_generate(base)
    ratio = base.params().ratio
    if ratio == 0:
        raise ConfigError("alpha a grid needs a nonzero ratio q/p (or a_override)")
    rows = []
    for k, (b, aa) in enumerate((b, aa) for b in betas for aa in alpha_as):
        cfg = replace(base, beta=float(b), alpha=float(aa) / ratio,
                      base_seed=base.base_seed + 1000 * k, out_dir=None)
        s = summarize(run_chains(g, cfg), cfg.diagnosis())
        dists = [d for d in s.mode_distance if d is not None]
        rows.append({
            "beta": cfg.beta, "alpha_a": float(aa), "alpha": cfg.alpha, "phase": s.phase,
            "z_star": s.z_star, "n_samples": s.n_samples, "mean_abs_m1": s.mean_abs_m1,
            "mean_abs_m2": s.mean_abs_m2,
            "positive_product_fraction": s.positive_product_fraction,
            "negative_product_fraction": s.negative_product_fraction,
            "max_mode_distance": max(dists) if dists else float("nan"),
        })
    return rows


def rows_to_csv(rows: list[dict], columns=SWEEP_COLUMNS) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([repr(r[c]) if isinstance(r[c], float) else r[c] for c in columns])
    return buf.getvalue()
