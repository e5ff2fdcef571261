"""Monte-Carlo harness for the simulation studies.

Every replication is an independent task seeded by ``(base_seed, cell, rep)``,
so the report does not depend on execution order or on the number of worker
processes. Within a replication the streams are ``0`` for labels, ``1`` for
the adjacency draw and ``2`` for clustering.
"""
from __future__ import annotations

import csv
import io
import itertools
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from ._rng import derive_seed
from .estimators import (
    NULL_EXPONENT,
    StatisticCache,
    default_kmax,
    digof_search,
    full_trace,
    lex_sequence,
    rdigof_search,
)
from .model import ModelError, as_block_matrix, planted_block_matrix, planted_spec, sample_adjacency

EXPERIMENTS = ("null-convergence", "size-power", "accuracy", "threshold-sweep")
CSV_COLUMNS = ("experiment", "cell_id", "n", "ks", "kr", "rho", "estimator", "param", "metric", "value", "replications")

# block matrix of the threshold-robustness study, scaled by rho
SWEEP_BLOCK = ((0.1, 0.9, 0.4, 0.1), (0.7, 0.1, 0.6, 0.3))


class ConfigError(ValueError):
    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("invalid experiment config: " + "; ".join(self.problems))


@dataclass
class ExperimentConfig:
    n_values: list = field(default_factory=lambda: [1000])
    pairs: list = field(default_factory=lambda: [(2, 3)])
    rho_values: list = field(default_factory=lambda: [0.1])
    alpha: float = 0.7
    beta: float = 0.2
    b: list | None = None
    replications: int = 50
    epsilon: float = 0.2
    tau: float = 10.0
    kmax: int | None = None
    epsilons: list | None = None
    taus: list | None = None
    hypothesized: list | None = None
    estimators: list = field(default_factory=lambda: ["digof", "rdigof"])
    base_seed: int = 0
    jobs: int = 1

    def __post_init__(self):
        self.pairs = [tuple(int(x) for x in p) for p in self.pairs]
        if self.hypothesized is not None:
            self.hypothesized = [tuple(int(x) for x in p) for p in self.hypothesized]
        if self.b is not None:
            self.b = [list(map(float, row)) for row in self.b]
            if not self.b or len({len(row) for row in self.b}) != 1:
                raise ConfigError(["b: must be a non-empty rectangular matrix"])
            self.pairs = [(len(self.b), len(self.b[0]))]
        problems = self._problems()
        if problems:
            raise ConfigError(problems)

    def _problems(self):
        out = []
        if not self.n_values or any(not isinstance(n, int) or n < 3 for n in self.n_values):
            out.append("n_values: need a non-empty list of integers >= 3")
        if not self.rho_values or any(not (0.0 < float(r) <= 1.0) for r in self.rho_values):
            out.append("rho_values: every rho must lie in (0, 1]")
        if not self.pairs or any(len(p) != 2 or min(p) < 1 for p in self.pairs):
            out.append("pairs: need (ks, kr) pairs with entries >= 1")
        if not isinstance(self.replications, int) or self.replications < 1:
            out.append("replications: must be an integer >= 1")
        if self.epsilon <= 0:
            out.append("epsilon: must be > 0")
        if self.tau <= 0:
            out.append("tau: must be > 0")
        if self.kmax is not None and self.kmax < 1:
            out.append("kmax: must be >= 1")
        if self.epsilons is not None and any(e <= 0 for e in self.epsilons):
            out.append("epsilons: every epsilon must be > 0")
        if self.taus is not None and any(t <= 0 for t in self.taus):
            out.append("taus: every tau must be > 0")
        if any(e not in ("digof", "rdigof") for e in self.estimators):
            out.append("estimators: allowed values are 'digof' and 'rdigof'")
        if not isinstance(self.jobs, int) or self.jobs < 1:
            out.append("jobs: must be an integer >= 1")
        if not isinstance(self.base_seed, int) or self.base_seed < 0:
            out.append("base_seed: must be a non-negative integer")
        if not out:
            try:
                for rho in self.rho_values:
                    for pair in self.pairs:
                        self.block_for(pair, rho)
            except ModelError as exc:
                out.append(f"b/alpha/beta/rho: {exc}")
            if any(max(p) > n for p in self.pairs for n in self.n_values):
                out.append("pairs: community counts cannot exceed n")
        return out

    def block_for(self, pair, rho):
        if self.b is not None:
            return as_block_matrix(rho * np.asarray(self.b, dtype=np.float64))
        return planted_block_matrix(pair[0], pair[1], self.alpha, self.beta, rho)

    def cells(self):
        return list(itertools.product(self.pairs, self.n_values, self.rho_values))

    def to_dict(self):
        d = asdict(self)
        d["pairs"] = [list(p) for p in self.pairs]
        if self.hypothesized is not None:
            d["hypothesized"] = [list(p) for p in self.hypothesized]
        return d

    @classmethod
    def from_dict(cls, doc):
        if not isinstance(doc, dict):
            raise ConfigError(["config must be a JSON object"])
        known = set(cls.__dataclass_fields__)
        unknown = sorted(set(doc) - known)
        if unknown:
            raise ConfigError([f"{k}: unknown field" for k in unknown])
        try:
            return cls(**doc)
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError([str(exc)]) from exc


@dataclass
class Record:
    experiment: str
    cell_id: int
    n: int
    ks: int
    kr: int
    rho: float
    estimator: str
    param: str
    metric: str
    value: float
    replications: int
    elapsed: float = 0.0
    note: str = ""


@dataclass
class ExperimentReport:
    experiment: str
    config: ExperimentConfig
    records: list

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for r in self.records:
            writer.writerow([getattr(r, c) if c != "value" else repr(float(r.value)) for c in CSV_COLUMNS])
        return buf.getvalue()

    def sidecar(self):
        return json.dumps({"experiment": self.experiment, "config": self.config.to_dict()}, sort_keys=True, indent=2)

    def value(self, metric, **where):
        hits = [r for r in self.records if r.metric == metric and all(getattr(r, k) == v for k, v in where.items())]
        if len(hits) != 1:
            raise KeyError(f"{len(hits)} records match metric={metric} {where}")
        return hits[0].value


def _network(cfg, pair, n, rho, rep_seed):
    block = cfg.block_for(pair, rho)
    spec = planted_spec(n, block.shape[0], block.shape[1], 1.0, derive_seed(rep_seed, 0), block=block)
    return sample_adjacency(spec, derive_seed(rep_seed, 1))


def _kmax(cfg, n):
    return min(cfg.kmax if cfg.kmax is not None else default_kmax(n), n)


def _hypothesized(cfg, truth):
    if cfg.hypothesized is not None:
        return cfg.hypothesized
    return [(a, b) for a in range(1, truth[0] + 1) for b in range(1, truth[1] + 1)]


def _sweep_params(cfg):
    eps = cfg.epsilons if cfg.epsilons is not None else [cfg.epsilon]
    taus = cfg.taus if cfg.taus is not None else [cfg.tau]
    return eps, taus


def _replicate(experiment, cfg, cell_id, rep):
    """One replication of one grid cell; returns ``(outcome, elapsed)``."""
    start = time.perf_counter()
    pair, n, rho = cfg.cells()[cell_id]
    rep_seed = derive_seed(cfg.base_seed, cell_id, rep)
    a = _network(cfg, pair, n, rho, rep_seed)
    fit_seed = derive_seed(rep_seed, 2)
    if experiment == "null-convergence":
        outcome = StatisticCache(a, fit_seed)(*pair)
    elif experiment == "size-power":
        cache = StatisticCache(a, fit_seed)
        outcome = [cache(*h) for h in _hypothesized(cfg, pair)]
    else:
        cache = StatisticCache(a, fit_seed)
        pairs = lex_sequence(_kmax(cfg, n)).pairs
        if experiment == "accuracy":
            eps, taus = [cfg.epsilon], [cfg.tau]
        else:
            eps, taus = _sweep_params(cfg)
        outcome = {}
        if "digof" in cfg.estimators:
            for e in eps:
                outcome[("digof", e)] = digof_search(cache, pairs, n ** -e).accepted
        if "rdigof" in cfg.estimators:
            for t in taus:
                outcome[("rdigof", t)] = rdigof_search(cache, pairs, t, n ** -NULL_EXPONENT).accepted
    return outcome, time.perf_counter() - start


def _run_tasks(experiment, cfg):
    tasks = [(c, r) for c in range(len(cfg.cells())) for r in range(cfg.replications)]
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(
                pool.map(
                    _replicate,
                    [experiment] * len(tasks),
                    [cfg] * len(tasks),
                    [c for c, _ in tasks],
                    [r for _, r in tasks],
                    chunksize=max(1, len(tasks) // (4 * cfg.jobs)),
                )
            )
    else:
        results = [_replicate(experiment, cfg, c, r) for c, r in tasks]
    by_cell = {}
    for (c, _), res in zip(tasks, results):
        by_cell.setdefault(c, []).append(res)
    return by_cell


def _record(experiment, cfg, cell_id, estimator, param, metric, value, elapsed, note=""):
    (ks, kr), n, rho = cfg.cells()[cell_id]
    return Record(experiment, cell_id, n, ks, kr, rho, estimator, param, metric, value, cfg.replications, elapsed, note)


def run_null_convergence(cfg):
    """Mean statistic at the true community counts, per grid cell."""
    name = "null-convergence"
    records = []
    for cell_id, results in _run_tasks(name, cfg).items():
        values = np.array([v for v, _ in results])
        elapsed = sum(t for _, t in results)
        ok = values[~np.isnan(values)]
        mean = float(ok.mean()) if ok.size else math.nan
        records.append(_record(name, cfg, cell_id, "gof", "", "mean_t_hat", mean, elapsed))
        records.append(_record(name, cfg, cell_id, "gof", "", "anomalies", float(values.size - ok.size), elapsed))
    return ExperimentReport(name, cfg, records)


def underfitting_type(truth, hyp):
    s, r = hyp[0] < truth[0], hyp[1] < truth[1]
    if s and r:
        return "Sender & receiver"
    if s:
        return "Sender only"
    if r:
        return "Receiver only"
    return "--"


def run_size_power(cfg):
    """Fraction of replications with ``T >= n ** -epsilon`` for each hypothesized pair."""
    name = "size-power"
    records = []
    for cell_id, results in _run_tasks(name, cfg).items():
        truth, n, _ = cfg.cells()[cell_id]
        elapsed = sum(t for _, t in results)
        threshold = n ** -cfg.epsilon
        hyps = _hypothesized(cfg, truth)
        values = np.array([v for v, _ in results])
        for j, h in enumerate(hyps):
            # failed fits count as rejections
            rejected = np.mean(~(values[:, j] < threshold))
            records.append(
                _record(name, cfg, cell_id, "gof", f"{h[0]}x{h[1]}", "rejection_rate", float(rejected), elapsed,
                        underfitting_type(truth, h))
            )
    return ExperimentReport(name, cfg, records)


def _accuracy_records(name, cfg, by_cell):
    records = []
    for cell_id, results in by_cell.items():
        truth = cfg.cells()[cell_id][0]
        elapsed = sum(t for _, t in results)
        for key in results[0][0]:
            est, p = key
            hits = sum(tuple(out[key]) == truth for out, _ in results)
            label = f"epsilon={p:g}" if est == "digof" else f"tau={p:g}"
            records.append(_record(name, cfg, cell_id, est, label, "accuracy", hits / len(results), elapsed))
    return records


def run_accuracy(cfg):
    """Fraction of replications where each estimator returns the true pair."""
    name = "accuracy"
    return ExperimentReport(name, cfg, _accuracy_records(name, cfg, _run_tasks(name, cfg)))


def run_threshold_sweep(cfg):
    """Accuracy of DiGoF across ``epsilons`` and of RDiGoF across ``taus``.

    Without an explicit ``b`` the 2x4 robustness block matrix is used.
    """
    name = "threshold-sweep"
    if cfg.b is None:
        cfg = ExperimentConfig(**{**cfg.to_dict(), "b": [list(r) for r in SWEEP_BLOCK]})
    return ExperimentReport(name, cfg, _accuracy_records(name, cfg, _run_tasks(name, cfg)))


def run_trace(a_or_cfg, kmax=None, tau=10.0, seed=0, jobs=1):
    """Full statistic/ratio trace for one network.

    Given a config, the network is replication 0 of its first grid cell and
    ``kmax``/``tau``/``seed`` default to the config's values.
    """
    if isinstance(a_or_cfg, ExperimentConfig):
        cfg = a_or_cfg
        pair, n, rho = cfg.cells()[0]
        rep_seed = derive_seed(cfg.base_seed, 0, 0)
        a = _network(cfg, pair, n, rho, rep_seed)
        kmax = kmax if kmax is not None else cfg.kmax
        return full_trace(a, kmax=kmax, tau=cfg.tau, seed=derive_seed(rep_seed, 2), jobs=cfg.jobs)
    return full_trace(a_or_cfg, kmax=kmax, tau=tau, seed=seed, jobs=jobs)


RUNNERS = {
    "null-convergence": run_null_convergence,
    "size-power": run_size_power,
    "accuracy": run_accuracy,
    "threshold-sweep": run_threshold_sweep,
}
