"""Autoregressive greedy decode loop over a provider."""
from __future__ import annotations

import json
from dataclasses import dataclass, replace

from .errors import CocoaError, DecodeError
from .providers import END_TOKEN
from .strategies import STRATEGY_NAMES, StepDiagnostics, StrategyConfig, apply_strategy


@dataclass(frozen=True)
class DecodeResult:
    tokens: tuple[int, ...]
    steps: tuple[StepDiagnostics, ...]
    strategy_name: str
    config_digest: str

    @property
    def lambdas(self) -> list[float]:
        return [s.lam for s in self.steps]


def decode(provider, strategy_name: str, cfg: StrategyConfig | None = None, max_len: int = 64, on_step=None) -> DecodeResult:
    """Decode until the end token, ``max_len`` tokens, or the provider runs out.

    ``on_step(index, dual, adjusted, diagnostics)`` is called after every
    step when given.
    """
    if strategy_name not in STRATEGY_NAMES:
        raise ValueError(f"unknown strategy {strategy_name!r}; expected one of {', '.join(STRATEGY_NAMES)}")
    if max_len < 1:
        raise ValueError(f"max_len must be >= 1, got {max_len}")
    cfg = cfg or StrategyConfig()
    cap = min(max_len, getattr(provider, "max_steps", None) or max_len)
    tokens: list[int] = []
    steps: list[StepDiagnostics] = []
    for i in range(cap):
        try:
            dual = provider.step(tuple(tokens))
        except (CocoaError, ValueError, OSError) as exc:
            raise DecodeError(i, exc) from exc
        if dual is None:
            break
        out, diag = apply_strategy(strategy_name, dual.prior, dual.ctx, cfg)
        if dual.approximate:
            diag = replace(diag, approximate=True)
        tokens.append(diag.chosen)
        steps.append(diag)
        if on_step is not None:
            on_step(i, dual, out, diag)
        if diag.chosen == END_TOKEN:
            break
    return DecodeResult(tuple(tokens), tuple(steps), strategy_name, cfg.digest())


def dumps_trace(result: DecodeResult, header: dict | None = None) -> str:
    """Serialise a result: a header line, then one diagnostics object per step."""
    if not result.steps:
        raise ValueError("cannot emit an empty decode result")
    head = {
        "type": "header",
        "kind": "decode",
        "strategy": result.strategy_name,
        "config_digest": result.config_digest,
        "n_steps": len(result.steps),
        "tokens": list(result.tokens),
    }
    head.update(header or {})
    lines = [json.dumps(head)]
    for i, diag in enumerate(result.steps):
        lines.append(json.dumps({"type": "step", "step": i, **diag.to_dict()}))
    return "\n".join(lines) + "\n"


def emit_trace(result: DecodeResult, path, header: dict | None = None) -> None:
    text = dumps_trace(result, header)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
