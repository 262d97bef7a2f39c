"""Experiment-level measurements over synthetic conflict suites.

Accuracy is exact match against each instance's gold answer (the context
answer). Conflict sensitivity compares every step's adjusted distribution
with the unadjusted contextual one by Spearman correlation over the full
vocabulary. All aggregations use :func:`math.fsum` in suite order, so
results do not depend on the number of worker threads.
"""
from __future__ import annotations

import itertools
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .dist import from_logits
from .engine import decode
from .errors import AnalysisError
from .providers import ConflictInstance, ToyProvider
from .strategies import (
    StrategyConfig,
    adacad_adjust,
    cad_adjust,
    cocoa_adjust,
    coiecd_adjust,
    confcd_adjust,
)


def rankdata(x) -> np.ndarray:
    """1-based ranks; tied values share the average of their ranks."""
    x = np.asarray(x, dtype=np.float64)
    order = np.argsort(x, kind="mergesort")
    xs = x[order]
    starts = np.flatnonzero(np.r_[True, xs[1:] != xs[:-1]])
    ends = np.r_[starts[1:], len(xs)]
    avg = (starts + ends + 1) / 2.0
    ranks = np.empty(len(x))
    ranks[order] = np.repeat(avg, ends - starts)
    return ranks


def spearman(x, y) -> float:
    """Spearman rank correlation with average ranks for ties."""
    if len(x) != len(y):
        raise AnalysisError(f"length mismatch: {len(x)} != {len(y)}")
    if len(x) < 2:
        raise AnalysisError("need at least two observations")
    rx, ry = rankdata(x), rankdata(y)
    rx -= rx.mean()
    ry -= ry.mean()
    vx, vy = float(rx @ rx), float(ry @ ry)
    if vx == 0 or vy == 0:
        raise AnalysisError("zero rank variance; correlation undefined")
    return max(-1.0, min(1.0, float(rx @ ry) / math.sqrt(vx * vy)))


def _map(fn, items, workers: int):
    if workers <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _mean(values) -> float | None:
    values = list(values)
    return math.fsum(values) / len(values) if values else None


def _require(suite):
    if not suite:
        raise AnalysisError("empty suite")


# ---------------------------------------------------------------- accuracy


@dataclass(frozen=True)
class AccuracyReport:
    strategy: str
    conflict: float | None
    agree: float | None
    overall: float
    n_conflict: int
    n_agree: int

    def to_dict(self) -> dict:
        return asdict(self)


def exact_match(instance: ConflictInstance, strategy_name: str, cfg: StrategyConfig) -> bool:
    gold = instance.gold
    result = decode(ToyProvider(instance), strategy_name, cfg, max_len=len(gold))
    return result.tokens == gold


def exact_match_eval(suite, strategy_name: str, cfg: StrategyConfig | None = None, workers: int = 1) -> AccuracyReport:
    _require(suite)
    cfg = cfg or StrategyConfig()
    hits = _map(lambda inst: exact_match(inst, strategy_name, cfg), suite, workers)
    conf = [h for h, inst in zip(hits, suite) if inst.conflict]
    agree = [h for h, inst in zip(hits, suite) if not inst.conflict]
    return AccuracyReport(
        strategy_name,
        _mean(map(float, conf)),
        _mean(map(float, agree)),
        _mean(map(float, hits)),
        len(conf),
        len(agree),
    )


# ------------------------------------------------------------- sensitivity


@dataclass(frozen=True)
class SensitivityReport:
    strategy: str
    rho_conflict: float
    rho_agree: float
    delta_rho_abs: float
    n_steps_conflict: int
    n_steps_agree: int

    def to_dict(self) -> dict:
        return asdict(self)


def step_correlations(instance: ConflictInstance, strategy_name: str, cfg: StrategyConfig) -> list[float]:
    """Spearman(ctx, adjusted) at each step of the strategy's own decode."""
    rhos: list[float] = []

    def record(_i, dual, out, _diag):
        rhos.append(spearman(dual.ctx.probs, out.probs))

    decode(ToyProvider(instance), strategy_name, cfg, max_len=len(instance.gold), on_step=record)
    return rhos


def conflict_sensitivity(suite, strategy_name: str, cfg: StrategyConfig | None = None, workers: int = 1) -> SensitivityReport:
    """Mean per-step correlation to the unadjusted contextual distribution, per regime."""
    _require(suite)
    cfg = cfg or StrategyConfig()
    per_inst = _map(lambda inst: step_correlations(inst, strategy_name, cfg), suite, workers)
    conf = [r for rs, inst in zip(per_inst, suite) if inst.conflict for r in rs]
    agree = [r for rs, inst in zip(per_inst, suite) if not inst.conflict for r in rs]
    if not conf or not agree:
        raise AnalysisError("suite needs both conflict and no-conflict instances")
    rc, ra = _mean(conf), _mean(agree)
    return SensitivityReport(strategy_name, rc, ra, abs(ra - rc), len(conf), len(agree))


# ---------------------------------------------------------------- ablation

ABLATIONS = {
    "cocoa": {},
    "kl_instead_of_renyi": {"use_kl_instead": True},
    "no_renyi": {"use_renyi": False},
    "no_entropy_gap": {"use_entropy_gap": False},
    "no_peakedness": {"use_peakedness": False},
    "fixed_lambda": {"adaptive_gating": False, "fixed_lambda": 0.5},
    "nothing_adaptive": {
        "use_renyi": False,
        "use_entropy_gap": False,
        "use_peakedness": False,
        "adaptive_gating": False,
        "fixed_lambda": 0.5,
    },
}


def run_ablation(suite, cfg: StrategyConfig | None = None, workers: int = 1) -> list[AccuracyReport]:
    """One accuracy row per CoCoA variant, plus greedy."""
    _require(suite)
    cfg = cfg or StrategyConfig()
    rows = []
    for name, changes in ABLATIONS.items():
        rep = exact_match_eval(suite, "cocoa", cfg.replace(**changes), workers)
        rows.append(AccuracyReport(name, rep.conflict, rep.agree, rep.overall, rep.n_conflict, rep.n_agree))
    rows.append(exact_match_eval(suite, "greedy", cfg, workers))
    return rows


# ------------------------------------------------------------------- sweep

SWEEP_AXES = ("renyi_order", "z", "gamma")


def sweep(suite, grid: dict, cfg: StrategyConfig | None = None, strategy_name: str = "cocoa", workers: int = 1) -> list[dict]:
    """Accuracy for every cell of the cross product of ``grid``."""
    _require(suite)
    cfg = cfg or StrategyConfig()
    bad = set(grid) - set(SWEEP_AXES)
    if bad:
        raise ValueError(f"unknown sweep axes {sorted(bad)}; expected {SWEEP_AXES}")
    if not grid or any(len(v) == 0 for v in grid.values()):
        raise ValueError("sweep grid axes must be nonempty")
    axes = [a for a in SWEEP_AXES if a in grid]
    rows = []
    for values in itertools.product(*(grid[a] for a in axes)):
        cell = dict(zip(axes, (float(v) for v in values)))
        rep = exact_match_eval(suite, strategy_name, cfg.replace(**cell), workers)
        rows.append({**cell, **rep.to_dict()})
    return rows


# ----------------------------------------------------------------- latency

_TIMED = {
    "greedy": lambda p, c, cfg: c,
    "cad": lambda p, c, cfg: cad_adjust(p, c, cfg.cad_alpha),
    "adacad": lambda p, c, cfg: adacad_adjust(p, c),
    "coiecd": lambda p, c, cfg: coiecd_adjust(p, c, cfg),
    "confcd": lambda p, c, cfg: confcd_adjust(p, c),
    "cocoa": lambda p, c, cfg: cocoa_adjust(p, c, cfg),
}


@dataclass(frozen=True)
class LatencyRow:
    strategy: str
    mean_us: float
    p99_us: float
    n_steps: int
    vocab_size: int

    def to_dict(self) -> dict:
        return asdict(self)


def bench_latency(
    vocab_size: int,
    n_steps: int,
    strategies=("cad", "adacad", "cocoa"),
    cfg: StrategyConfig | None = None,
    seed: int = 0,
    pool_size: int = 32,
    warmup: int = 20,
) -> list[LatencyRow]:
    """Time only the per-step adjustment on random distribution pairs.

    Pairs are drawn once and cycled, so input construction is excluded.
    Runs on the calling thread.
    """
    if vocab_size < 2 or n_steps < 1:
        raise ValueError("need vocab_size >= 2 and n_steps >= 1")
    cfg = cfg or StrategyConfig()
    rng = np.random.default_rng(seed)
    pool = [
        (from_logits(rng.normal(0, 3, vocab_size)), from_logits(rng.normal(0, 3, vocab_size)))
        for _ in range(min(pool_size, n_steps))
    ]
    rows = []
    for name in strategies:
        fn = _TIMED[name]
        for i in range(min(warmup, n_steps)):
            fn(*pool[i % len(pool)], cfg)
        times = np.empty(n_steps)
        clock = time.perf_counter_ns
        for i in range(n_steps):
            p, c = pool[i % len(pool)]
            t0 = clock()
            fn(p, c, cfg)
            times[i] = clock() - t0
        times /= 1e3
        mean = float(times.mean())
        p99 = mean if n_steps == 1 else float(np.percentile(times, 99))
        rows.append(LatencyRow(name, mean, p99, n_steps, vocab_size))
    return rows


# ----------------------------------------------------------------- reports


def _plain(v):
    if isinstance(v, float):
        return v
    if hasattr(v, "to_dict"):
        return v.to_dict()
    return v


def dumps_report(kind: str, header: dict, rows) -> str:
    """Line-delimited JSON: a header (always carrying the seed) then one line per row."""
    if "seed" not in header:
        raise ValueError("report headers must record the seed")
    lines = [json.dumps({"type": "header", "kind": kind, **header})]
    lines += [json.dumps({"type": "row", **_plain(r)}) for r in rows]
    return "\n".join(lines) + "\n"


def _fmt(v) -> str:
    if v is None:
        return "-"
    if isinstance(v, bool):
        return str(v)
    if isinstance(v, float):
        return f"{v:.4f}"
    return str(v)


def format_table(rows, columns: list[str] | None = None) -> str:
    dicts = [_plain(r) for r in rows]
    if not dicts:
        return ""
    columns = columns or list(dicts[0])
    cells = [[_fmt(d.get(c)) for c in columns] for d in dicts]
    widths = [max(len(c), *(len(r[i]) for r in cells)) for i, c in enumerate(columns)]
    out = ["  ".join(c.ljust(w) for c, w in zip(columns, widths))]
    out.append("  ".join("-" * w for w in widths))
    for r in cells:
        out.append("  ".join(v.rjust(w) if i else v.ljust(w) for i, (v, w) in enumerate(zip(r, widths))))
    return "\n".join(out) + "\n"
