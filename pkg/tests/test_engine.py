import json
import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from cocoa_decoding.dist import from_logits
from cocoa_decoding.engine import decode, dumps_trace, emit_trace
from cocoa_decoding.errors import DecodeError, TraceFormatError
from cocoa_decoding.providers import ConflictInstance, DualStep, ReplayProvider, ToyProvider, generate_suite, write_trace
from cocoa_decoding.strategies import STRATEGY_NAMES, StrategyConfig


def conflict_instance(ctx_sharp, prior_sharp, dmass=0.1):
    return ConflictInstance("h", (1,), (2, 3, 4), (5, 6, 0), (3, 4, 0), True, ctx_sharp, dmass, 16, prior_sharpness=prior_sharp)


class ListProvider:
    def __init__(self, duals, fail_at=None):
        self.duals, self.fail_at = list(duals), fail_at
        self.vocab_size = duals[0].vocab_size if duals else 2

    def step(self, emitted):
        i = len(emitted)
        if i == self.fail_at:
            raise TraceFormatError("bad record", 7)
        return self.duals[i] if i < len(self.duals) else None


def alternating_trace(n=12, vocab=32):
    """Per-step conflict flags alternate; peak heights vary per step."""
    duals, flags = [], []
    for t in range(n):
        conflict = t % 2 == 0
        height = 4.0 + t * 0.5
        ctx = np.zeros(vocab)
        ctx[1 + t % 5] = height
        prior = ctx.copy()
        if conflict:
            prior = np.zeros(vocab)
            prior[20 + t % 7] = height
        duals.append(DualStep(from_logits(prior), from_logits(ctx)))
        flags.append(conflict)
    return duals, flags


@pytest.mark.parametrize("strategy", STRATEGY_NAMES)
def test_no_conflict_every_strategy_emits_answer(strategy):
    for inst in generate_suite(0, 30, 32, 9, "matched"):
        assert decode(ToyProvider(inst), strategy).tokens == inst.gold


def test_max_len_one():
    inst = conflict_instance(3.0, 3.0)
    r = decode(ToyProvider(inst), "cocoa", max_len=1)
    assert len(r.tokens) == 1 and len(r.steps) == 1


def test_stops_at_end_token():
    inst = conflict_instance(5.0, 5.0)
    r = decode(ToyProvider(inst), "greedy", max_len=50)
    assert r.tokens == (3, 4, 0)


def test_sharp_ctx_followed_by_cocoa_and_greedy():
    inst = conflict_instance(50.0, 2.0)
    assert decode(ToyProvider(inst), "greedy").tokens == inst.context_answer
    assert decode(ToyProvider(inst), "cocoa").tokens == inst.context_answer


def test_inverted_sharpness_keeps_lambda_low():
    # prior ten times sharper than a flat context
    inst = conflict_instance(1.0, 10.0, dmass=0.3)
    r = decode(ToyProvider(inst), "cocoa")
    assert r.steps[0].lam < 0.5
    assert decode(ToyProvider(inst), "greedy").tokens == inst.context_answer


def test_bad_arguments():
    prov = ToyProvider(conflict_instance(2.0, 2.0))
    with pytest.raises(ValueError, match="unknown strategy"):
        decode(prov, "beam")
    with pytest.raises(ValueError):
        decode(prov, "cocoa", max_len=0)


def test_provider_error_carries_step():
    duals, _ = alternating_trace(4)
    with pytest.raises(DecodeError) as err:
        decode(ListProvider(duals, fail_at=2), "cocoa", max_len=10)
    assert err.value.step == 2
    assert "line 7" in str(err.value)


def test_diagnostics_complete_and_lambda_bounded():
    for inst in generate_suite(20, 20, 32, 4, "contrast"):
        for name in STRATEGY_NAMES:
            r = decode(ToyProvider(inst), name)
            assert len(r.tokens) == len(r.steps)
            for d in r.steps:
                vals = [d.d_alpha, d.jsd_value, d.entropy_gap, d.margin, d.conflict_score, d.lam]
                assert all(math.isfinite(v) for v in vals)
                assert 0.0 <= d.lam <= 1.0


def test_lambda_trace_tracks_conflict():
    duals, flags = alternating_trace()
    r = decode(ListProvider(duals), "cocoa", max_len=len(duals))
    lam = r.lambdas
    assert len(set(lam)) > 1
    for t in range(1, len(lam)):
        if flags[t] != flags[t - 1]:
            assert (lam[t] > lam[t - 1]) == flags[t]


def test_approximate_flag_propagates(tmp_path):
    from cocoa_decoding.providers import TraceRecord, pad_topk

    dense = pad_topk([0, 1], [3.0, 1.0], 8)
    path = tmp_path / "t.jsonl"
    write_trace(path, [TraceRecord(0, tuple(dense), tuple(dense), approximate=True)], 8)
    r = decode(ReplayProvider(path), "cocoa")
    assert r.steps[0].approximate
    assert json.loads(dumps_trace(r).splitlines()[1])["approximate"] is True


def test_emit_trace_layout_and_determinism(tmp_path):
    inst = conflict_instance(3.0, 3.0)
    r = decode(ToyProvider(inst), "cocoa")
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    emit_trace(r, a, {"seed": 1})
    emit_trace(r, b, {"seed": 1})
    assert a.read_bytes() == b.read_bytes()
    lines = a.read_text().splitlines()
    assert len(lines) == len(r.steps) + 1
    head = json.loads(lines[0])
    assert head["type"] == "header" and head["seed"] == 1 and head["tokens"] == list(r.tokens)
    keys = list(json.loads(lines[1]))
    assert keys == [
        "type", "step", "d_alpha", "jsd", "entropy_gap", "margin",
        "conflict_score", "lambda", "contrast", "chosen", "approximate",
    ]


def test_emit_five_steps(tmp_path):
    duals, _ = alternating_trace(5)
    r = decode(ListProvider(duals), "adacad", max_len=5)
    assert len(r.steps) == 5
    p = tmp_path / "five.jsonl"
    emit_trace(r, p)
    assert len(p.read_text().splitlines()) == 6


def test_empty_result_guarded():
    r = decode(ListProvider([]), "cocoa")
    assert r.tokens == ()
    with pytest.raises(ValueError):
        dumps_trace(r)


def test_decode_identical_across_threads():
    suite = generate_suite(15, 15, 32, 21, "contrast")
    cfg = StrategyConfig()

    def run(inst):
        return dumps_trace(decode(ToyProvider(inst), "cocoa", cfg))

    serial = [run(i) for i in suite]
    with ThreadPoolExecutor(4) as pool:
        threaded = list(pool.map(run, suite))
    assert serial == threaded
