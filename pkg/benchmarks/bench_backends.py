"""Compare the compiled and numpy kernel backends.

    python benchmarks/bench_backends.py [--vocab 64 1000 32000] [--reps 2000]

For each backend and vocabulary size, times the raw kernels (normalize,
blend, gate_signals) and the full ``cocoa_adjust`` step, then prints the
per-call median in microseconds and the numpy/compiled speedup.
"""
from __future__ import annotations

import argparse
import statistics
import time

import numpy as np

from cocoa_decoding import _backend, dist, signals, strategies


def _time(fn, reps: int) -> float:
    for _ in range(min(50, reps)):
        fn()
    samples = []
    clock = time.perf_counter_ns
    for _ in range(reps):
        t0 = clock()
        fn()
        samples.append(clock() - t0)
    return statistics.median(samples) / 1e3


def bench(backend: str, vocab: int, reps: int) -> dict[str, float]:
    k = _backend.load(backend)
    for mod in (dist, signals, strategies):
        mod.kernels = k
    rng = np.random.default_rng(0)
    a, b = rng.normal(0, 3, vocab), rng.normal(0, 3, vocab)
    p, q = dist.from_logits(a), dist.from_logits(b)
    cfg = strategies.StrategyConfig()
    cases = {
        "normalize": lambda: k.normalize(a),
        "blend": lambda: k.blend(p.log_probs, q.log_probs, 0.3, 0.7),
        "gate_signals": lambda: k.gate_signals(p.probs, p.log_probs, q.probs, q.log_probs, 0.5),
        "cocoa_adjust": lambda: strategies.cocoa_adjust(p, q, cfg),
    }
    return {name: _time(fn, reps) for name, fn in cases.items()}


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--vocab", type=int, nargs="+", default=[64, 1000, 32000])
    ap.add_argument("--reps", type=int, default=2000)
    args = ap.parse_args()
    backends = _backend.available()
    original = _backend.kernels
    try:
        print(f"backends: {', '.join(backends)}; median us per call")
        print(f"{'vocab':>6}  {'kernel':<13}" + "".join(f"{b:>11}" for b in backends) + ("   speedup" if len(backends) == 2 else ""))
        for vocab in args.vocab:
            res = {b: bench(b, vocab, args.reps) for b in backends}
            for name in res[backends[0]]:
                row = f"{vocab:>6}  {name:<13}" + "".join(f"{res[b][name]:>11.2f}" for b in backends)
                if len(backends) == 2:
                    row += f"{res['python'][name] / res['compiled'][name]:>9.2f}x"
                print(row)
    finally:
        for mod in (dist, signals, strategies):
            mod.kernels = original


if __name__ == "__main__":
    main()
