"""Client for a live logits server.

Protocol: ``POST <endpoint>/logits`` with a JSON body
``{"query_tokens": [...], "context_tokens": [...] | null, "emitted": [...]}``,
answered by ``{"logits": [...]}``. A null ``context_tokens`` requests the
prior (context-free) pass, so each decoding step costs two requests.
"""
from __future__ import annotations

import json
import math
import socket
import urllib.error
import urllib.request

from ..dist import from_logits
from ..errors import SchemaError, SessionVocabError, TransportError
from . import DualStep


def _post(url: str, body: dict, timeout: float) -> list[float]:
    req = urllib.request.Request(
        url, data=json.dumps(body).encode(), headers={"Content-Type": "application/json"}, method="POST"
    )
    try:
        with urllib.request.urlopen(req, timeout=timeout) as resp:
            raw = resp.read()
    except urllib.error.HTTPError as exc:
        raise TransportError(f"{url}: HTTP {exc.code}") from exc
    except (urllib.error.URLError, socket.timeout, ConnectionError, OSError) as exc:
        raise TransportError(f"{url}: {exc}") from exc
    try:
        obj = json.loads(raw)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise SchemaError(f"{url}: response is not JSON") from exc
    logits = obj.get("logits") if isinstance(obj, dict) else None
    if not isinstance(logits, list) or len(logits) < 2:
        raise SchemaError(f"{url}: response lacks a 'logits' list of length >= 2")
    if not all(isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x) for x in logits):
        raise SchemaError(f"{url}: 'logits' must hold finite numbers")
    return logits


class RemoteProvider:
    """One decoding session against a logits server.

    The vocabulary size is fixed by the first response (or by
    ``vocab_size`` when given); later responses must match it.
    """

    def __init__(self, endpoint: str, query_tokens, context_tokens, vocab_size: int | None = None, timeout: float = 30.0):
        self.url = endpoint.rstrip("/") + "/logits"
        self.query_tokens = [int(t) for t in query_tokens]
        self.context_tokens = [int(t) for t in context_tokens]
        self.vocab_size = vocab_size
        self.timeout = timeout

    def _fetch(self, context, emitted) -> list[float]:
        body = {"query_tokens": self.query_tokens, "context_tokens": context, "emitted": [int(t) for t in emitted]}
        logits = _post(self.url, body, self.timeout)
        if self.vocab_size is None:
            self.vocab_size = len(logits)
        elif len(logits) != self.vocab_size:
            raise SessionVocabError(f"server returned {len(logits)} logits, session vocab_size is {self.vocab_size}")
        return logits

    def step(self, emitted) -> DualStep:
        ctx = self._fetch(self.context_tokens, emitted)
        prior = self._fetch(None, emitted)
        return DualStep(from_logits(prior), from_logits(ctx))


def remote_fetch(endpoint: str, query_tokens, context_tokens, emitted, timeout: float = 30.0) -> DualStep:
    """Single-shot fetch of one (prior, contextual) pair."""
    return RemoteProvider(endpoint, query_tokens, context_tokens, timeout=timeout).step(emitted)
