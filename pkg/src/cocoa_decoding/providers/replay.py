"""Line-delimited JSON logit traces.

Layout::

    {"type": "header", "vocab_size": V, "note": "..."}
    {"type": "step", "step": 0, "prior_logits": [...], "ctx_logits": [...], "chosen": null}
    ...

Logits are dense; captures that only kept the top-k entries must be
padded with :func:`pad_topk` first and carry ``"approximate": true``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..dist import from_logits
from ..errors import DistributionError, TraceFormatError
from . import DualStep

TOPK_FLOOR_LOGIT = -30.0


@dataclass(frozen=True)
class TraceRecord:
    step: int
    prior_logits: tuple[float, ...]
    ctx_logits: tuple[float, ...]
    chosen: int | None = None
    approximate: bool = False

    def to_dict(self) -> dict:
        d = {
            "type": "step",
            "step": self.step,
            "prior_logits": list(self.prior_logits),
            "ctx_logits": list(self.ctx_logits),
            "chosen": self.chosen,
        }
        if self.approximate:
            d["approximate"] = True
        return d

    @classmethod
    def from_dual(cls, step: int, dual: DualStep, chosen: int | None = None) -> TraceRecord:
        return cls(step, tuple(dual.prior.log_probs.tolist()), tuple(dual.ctx.log_probs.tolist()), chosen, dual.approximate)


def pad_topk(indices, values, vocab_size: int, floor: float = TOPK_FLOOR_LOGIT) -> list[float]:
    """Dense logit vector from a top-k capture; missing entries get ``floor``."""
    dense = np.full(vocab_size, floor, dtype=np.float64)
    dense[np.asarray(indices, dtype=np.int64)] = np.asarray(values, dtype=np.float64)
    return dense.tolist()


def write_trace(path, records, vocab_size: int, note: str = "") -> None:
    """Write a trace from :class:`TraceRecord` or :class:`DualStep` items."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({"type": "header", "vocab_size": vocab_size, "note": note}) + "\n")
        for i, rec in enumerate(records):
            if isinstance(rec, DualStep):
                rec = TraceRecord.from_dual(i, rec)
            fh.write(json.dumps(rec.to_dict()) + "\n")


def _logits(obj: dict, key: str, vocab: int, line: int) -> list[float]:
    v = obj.get(key)
    if not isinstance(v, list) or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v):
        raise TraceFormatError(f"{key!r} must be a list of numbers", line)
    if len(v) != vocab:
        raise TraceFormatError(f"{key!r} has {len(v)} entries, header declares vocab_size {vocab}", line)
    if not all(math.isfinite(x) for x in v):
        raise TraceFormatError(f"{key!r} contains a non-finite value", line)
    return v


class TraceReader:
    """Single-consumer iterator of :class:`DualStep` over a trace file."""

    def __init__(self, path):
        self.path = Path(path)
        self._fh = open(self.path, encoding="utf-8")
        self._line = 0
        first = self._fh.readline()
        self._line = 1
        if not first:
            self._fh.close()
            raise TraceFormatError("empty file, expected a header line", 1)
        header = self._parse(first)
        if header.get("type") != "header":
            raise TraceFormatError("first line must be a header object", 1)
        vocab = header.get("vocab_size")
        if not isinstance(vocab, int) or isinstance(vocab, bool) or vocab < 2:
            raise TraceFormatError("header vocab_size must be an integer >= 2", 1)
        self.vocab_size = vocab
        self.note = header.get("note", "")
        self.records: list[TraceRecord] = []

    def _parse(self, raw: str) -> dict:
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as exc:
            if not raw.endswith("\n"):
                raise TraceFormatError("truncated record at end of file", self._line) from exc
            raise TraceFormatError(f"malformed JSON: {exc.msg}", self._line) from exc
        if not isinstance(obj, dict):
            raise TraceFormatError("each line must be a JSON object", self._line)
        return obj

    def next_record(self) -> TraceRecord | None:
        while True:
            raw = self._fh.readline()
            if not raw:
                self._fh.close()
                return None
            self._line += 1
            if raw.strip():
                break
        obj = self._parse(raw)
        if obj.get("type", "step") != "step":
            raise TraceFormatError(f"unexpected record type {obj.get('type')!r}", self._line)
        prior = _logits(obj, "prior_logits", self.vocab_size, self._line)
        ctx = _logits(obj, "ctx_logits", self.vocab_size, self._line)
        chosen = obj.get("chosen")
        if chosen is not None and not (isinstance(chosen, int) and 0 <= chosen < self.vocab_size):
            raise TraceFormatError(f"chosen must be null or a token id < {self.vocab_size}", self._line)
        rec = TraceRecord(
            int(obj.get("step", len(self.records))), tuple(prior), tuple(ctx), chosen, bool(obj.get("approximate", False))
        )
        self.records.append(rec)
        return rec

    def next(self) -> DualStep | None:
        rec = self.next_record()
        if rec is None:
            return None
        try:
            return DualStep(from_logits(rec.prior_logits), from_logits(rec.ctx_logits), approximate=rec.approximate)
        except DistributionError as exc:
            raise TraceFormatError(str(exc), self._line) from exc

    def __iter__(self):
        while (step := self.next()) is not None:
            yield step

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def replay_open(path) -> TraceReader:
    return TraceReader(path)


def replay_next(handle: TraceReader) -> DualStep | None:
    """Next step in file order, or ``None`` at a clean end of trace."""
    return handle.next()


class ReplayProvider:
    """Feeds recorded pairs to the engine regardless of what it emits."""

    def __init__(self, path):
        self.reader = TraceReader(path)
        self.vocab_size = self.reader.vocab_size

    def step(self, emitted) -> DualStep | None:
        return self.reader.next()
