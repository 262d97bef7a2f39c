"""Sources of per-step (prior, contextual) distribution pairs.

A provider is any object with a ``vocab_size`` attribute and a
``step(emitted) -> DualStep | None`` method; ``None`` means the source is
exhausted. Providers may also expose ``max_steps`` to cap decoding.
"""
from __future__ import annotations

from dataclasses import dataclass

from ..dist import TokenDistribution
from ..errors import VocabMismatchError


@dataclass(frozen=True)
class DualStep:
    prior: TokenDistribution
    ctx: TokenDistribution
    is_terminal_hint: bool = False
    approximate: bool = False

    def __post_init__(self):
        if self.prior.vocab_size != self.ctx.vocab_size:
            raise VocabMismatchError(
                f"prior has {self.prior.vocab_size} entries, context has {self.ctx.vocab_size}"
            )

    @property
    def vocab_size(self) -> int:
        return self.prior.vocab_size


from .remote import RemoteProvider, remote_fetch  # noqa: E402
from .replay import ReplayProvider, TraceReader, TraceRecord, pad_topk, replay_next, replay_open, write_trace  # noqa: E402
from .toy import (  # noqa: E402
    END_TOKEN,
    PROFILES,
    ConflictInstance,
    SuiteProfile,
    ToyProvider,
    generate_suite,
    read_suite,
    toy_lm_step,
    write_suite,
)

__all__ = [
    "DualStep",
    "END_TOKEN",
    "PROFILES",
    "ConflictInstance",
    "RemoteProvider",
    "ReplayProvider",
    "SuiteProfile",
    "ToyProvider",
    "TraceReader",
    "TraceRecord",
    "generate_suite",
    "pad_topk",
    "read_suite",
    "remote_fetch",
    "replay_next",
    "replay_open",
    "toy_lm_step",
    "write_suite",
    "write_trace",
]
