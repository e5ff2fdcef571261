"""Sequential estimation of the sender and receiver community counts.

Both estimators walk candidate pairs in lexicographic order (smaller
``ks + kr`` first, then smaller ``ks``):

* :func:`digof` accepts the first pair whose statistic drops below ``n ** -epsilon``;
* :func:`rdigof` accepts the first pair where ``|T(m-1) / T(m)|`` exceeds ``tau``.

A candidate whose fit fails (empty estimated community, solver
non-convergence) is recorded with its error and treated as rejected.
"""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from .gof import test_statistic
from .model import check_adjacency
from .spectral import ConvergenceError

DEFAULT_EPSILON = 0.2
DEFAULT_TAU = 10.0
NULL_EXPONENT = 0.2

STOP_REASONS = ("threshold_hit", "ratio_peak", "exhausted", "first_candidate_null")


@dataclass(frozen=True)
class CandidateSequence:
    kmax: int
    pairs: tuple

    def __len__(self):
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    def pair(self, m):
        """The ``m``-th candidate, 1-based."""
        return self.pairs[m - 1]

    def index(self, pair):
        """1-based position of ``pair``."""
        return self.pairs.index(tuple(pair)) + 1


def lex_sequence(kmax):
    if kmax < 1:
        raise ValueError(f"kmax must be >= 1, got {kmax}")
    pairs = tuple(
        (ks, total - ks)
        for total in range(2, 2 * kmax + 1)
        for ks in range(max(1, total - kmax), min(kmax, total - 1) + 1)
    )
    return CandidateSequence(kmax, pairs)


def default_kmax(n):
    """``floor(sqrt(n / ln n))``, at least 1."""
    if n < 3:
        raise ValueError(f"n must be >= 3, got {n}")
    return max(1, math.floor(math.sqrt(n / math.log(n))))


@dataclass
class TraceRecord:
    m: int
    ks: int
    kr: int
    t_hat: float | None
    ratio: float | None = None
    error: str | None = None


@dataclass
class EstimationTrace:
    method: str
    visited: list = field(default_factory=list)
    accepted: tuple | None = None
    stop_reason: str | None = None
    peak: int | None = None
    params: dict = field(default_factory=dict)

    @property
    def m_star(self):
        if self.accepted is None:
            return None
        for rec in self.visited:
            if (rec.ks, rec.kr) == tuple(self.accepted):
                return rec.m
        return None

    def t_values(self):
        return [rec.t_hat for rec in self.visited]

    def to_dict(self):
        return {
            "method": self.method,
            "params": self.params,
            "accepted": list(self.accepted) if self.accepted is not None else None,
            "m_star": self.m_star,
            "stop_reason": self.stop_reason,
            "peak": self.peak,
            "visited": [
                {
                    "m": r.m,
                    "ks": r.ks,
                    "kr": r.kr,
                    "t_hat": _json_float(r.t_hat),
                    "ratio": _json_float(r.ratio),
                    "error": r.error,
                }
                for r in self.visited
            ],
        }

    def to_json(self):
        return json.dumps(self.to_dict())

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["m", "ks", "kr", "t_hat", "ratio"])
        for r in self.visited:
            writer.writerow([r.m, r.ks, r.kr, _csv_float(r.t_hat), _csv_float(r.ratio)])
        return buf.getvalue()


def _json_float(x):
    if x is None or math.isnan(x):
        return None
    if math.isinf(x):
        return "inf"
    return x


def _csv_float(x):
    if x is None or math.isnan(x):
        return ""
    return repr(float(x))


class StatisticCache:
    """Memoized statistic per candidate pair for one network and seed.

    Failed fits are cached as ``nan`` with their error message in :attr:`errors`.
    """

    def __init__(self, a, seed):
        self.a = check_adjacency(a)
        self.n = self.a.shape[0]
        self.seed = seed
        self.values = {}
        self.errors = {}

    def __call__(self, ks, kr):
        key = (ks, kr)
        if key not in self.values:
            self.values[key], err = _evaluate(self.a, ks, kr, self.seed)
            if err is not None:
                self.errors[key] = err
        return self.values[key]

    def prefill(self, pairs, jobs=1):
        """Evaluate ``pairs`` up front, optionally in worker processes."""
        todo = [p for p in pairs if p not in self.values]
        if jobs > 1 and len(todo) > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                results = list(pool.map(_evaluate, [self.a] * len(todo), *zip(*todo), [self.seed] * len(todo)))
        else:
            results = [_evaluate(self.a, ks, kr, self.seed) for ks, kr in todo]
        for pair, (value, err) in zip(todo, results):
            self.values[pair] = value
            if err is not None:
                self.errors[pair] = err


def _evaluate(a, ks, kr, seed):
    try:
        return test_statistic(a, ks, kr, seed).t_hat, None
    except (ValueError, ConvergenceError, ArithmeticError) as exc:
        return math.nan, f"{type(exc).__name__}: {exc}"


def ratio(prev, cur):
    """``|prev / cur|``; exact-zero denominators give ``inf``."""
    if math.isnan(prev) or math.isnan(cur):
        return math.nan
    if cur == 0.0:
        return math.inf
    return abs(prev / cur)


def ratio_sequence(t_values):
    """Ratios ``r_2 .. r_M`` for a statistic sequence ``T(1) .. T(M)``."""
    t = [float(x) for x in t_values]
    if len(t) < 2:
        raise ValueError("need at least two statistics")
    return [ratio(t[m - 1], t[m]) for m in range(1, len(t))]


def _resolve(a, kmax, seed, cache):
    if cache is None:
        cache = StatisticCache(a, seed)
    n = cache.n
    if kmax is None:
        kmax = default_kmax(n)
    if kmax < 1:
        raise ValueError(f"kmax must be >= 1, got {kmax}")
    return cache, lex_sequence(min(kmax, n))


def digof_search(t_of, pairs, threshold):
    """Core DiGoF loop over a callable ``t_of(ks, kr)``."""
    trace = EstimationTrace("digof", params={"threshold": threshold})
    for m, (ks, kr) in enumerate(pairs, start=1):
        t = t_of(ks, kr)
        trace.visited.append(TraceRecord(m, ks, kr, t))
        if t < threshold:
            trace.accepted, trace.stop_reason = (ks, kr), "threshold_hit"
            return trace
    trace.accepted, trace.stop_reason = tuple(pairs[-1]), "exhausted"
    return trace


def rdigof_search(t_of, pairs, tau, null_threshold):
    """Core RDiGoF loop over a callable ``t_of(ks, kr)``."""
    trace = EstimationTrace("rdigof", params={"tau": tau, "null_threshold": null_threshold})
    ks, kr = pairs[0]
    prev = t_of(ks, kr)
    trace.visited.append(TraceRecord(1, ks, kr, prev))
    if prev < null_threshold:
        trace.accepted, trace.stop_reason = (ks, kr), "first_candidate_null"
        return trace
    for m in range(2, len(pairs) + 1):
        ks, kr = pairs[m - 1]
        cur = t_of(ks, kr)
        r = ratio(prev, cur)
        trace.visited.append(TraceRecord(m, ks, kr, cur, r))
        if r > tau:
            trace.accepted, trace.stop_reason = (ks, kr), "ratio_peak"
            trace.peak = m
            return trace
        prev = cur
    trace.accepted, trace.stop_reason = tuple(pairs[-1]), "exhausted"
    return trace


def _attach_errors(trace, cache):
    for rec in trace.visited:
        rec.error = cache.errors.get((rec.ks, rec.kr))
    return trace


def digof(a, epsilon=DEFAULT_EPSILON, kmax=None, seed=0, cache=None):
    """Returns ``(ks_hat, kr_hat, trace)``."""
    if epsilon <= 0:
        raise ValueError(f"epsilon must be > 0, got {epsilon}")
    cache, seq = _resolve(a, kmax, seed, cache)
    trace = digof_search(cache, seq.pairs, cache.n ** -epsilon)
    trace.params.update(epsilon=epsilon, kmax=seq.kmax, seed=seed)
    _attach_errors(trace, cache)
    return trace.accepted[0], trace.accepted[1], trace


def rdigof(a, tau=DEFAULT_TAU, kmax=None, seed=0, cache=None):
    """Returns ``(ks_hat, kr_hat, trace)``."""
    if tau <= 0:
        raise ValueError(f"tau must be > 0, got {tau}")
    cache, seq = _resolve(a, kmax, seed, cache)
    trace = rdigof_search(cache, seq.pairs, tau, cache.n ** -NULL_EXPONENT)
    trace.params.update(kmax=seq.kmax, seed=seed)
    _attach_errors(trace, cache)
    return trace.accepted[0], trace.accepted[1], trace


def full_trace(a, kmax=None, tau=DEFAULT_TAU, seed=0, cache=None, jobs=1):
    """Statistic and ratio for every candidate pair.

    ``accepted`` is the RDiGoF decision on the full sequence; ``peak`` is the
    first ``m >= 2`` with ``r_m > tau`` regardless of the first-candidate check.
    """
    cache, seq = _resolve(a, kmax, seed, cache)
    cache.prefill(seq.pairs, jobs=jobs)
    decision = rdigof_search(cache, seq.pairs, tau, cache.n ** -NULL_EXPONENT)
    trace = EstimationTrace("trace", params={"tau": tau, "kmax": seq.kmax, "seed": seed})
    prev = None
    for m, (ks, kr) in enumerate(seq.pairs, start=1):
        t = cache(ks, kr)
        r = None if prev is None else ratio(prev, t)
        trace.visited.append(TraceRecord(m, ks, kr, t, r))
        if trace.peak is None and r is not None and r > tau:
            trace.peak = m
        prev = t
    trace.accepted, trace.stop_reason = decision.accepted, decision.stop_reason
    return _attach_errors(trace, cache)
