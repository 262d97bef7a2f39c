"""Conflict signals between a prior and a contextual distribution.

All quantities are in nats. Divergences take the prior as the first
argument. Negative round-off is clamped to zero.
"""
from __future__ import annotations

from ._backend import kernels
from .dist import TokenDistribution, entropy
from .errors import VocabMismatchError


def check_pair(p: TokenDistribution, q: TokenDistribution) -> None:
    if p.vocab_size != q.vocab_size:
        raise VocabMismatchError(f"vocab sizes differ: {p.vocab_size} != {q.vocab_size}")


def kl_divergence(p: TokenDistribution, q: TokenDistribution) -> float:
    check_pair(p, q)
    return kernels.kl(p.probs, p.log_probs, q.log_probs)


def renyi_divergence(p: TokenDistribution, q: TokenDistribution, order: float = 0.5) -> float:
    """Rényi divergence ``D_order(p || q)``.

    Evaluated as a log-sum-exp over ``order*log p + (1-order)*log q``, so it
    does not underflow on large vocabularies. ``order == 1`` is exactly KL.
    """
    if not order > 0:
        raise ValueError(f"Rényi order must be positive, got {order}")
    check_pair(p, q)
    if order == 1.0:
        return kernels.kl(p.probs, p.log_probs, q.log_probs)
    return kernels.renyi(p.log_probs, q.log_probs, float(order))


def jsd(p: TokenDistribution, q: TokenDistribution) -> float:
    """Jensen-Shannon divergence, symmetric and bounded by ln 2."""
    check_pair(p, q)
    return kernels.jsd(p.probs, p.log_probs, q.probs, q.log_probs)


def entropy_gap(prior: TokenDistribution, ctx: TokenDistribution) -> float:
    """``H(prior) - H(ctx)``; positive when the context sharpens the prediction."""
    check_pair(prior, ctx)
    return entropy(prior) - entropy(ctx)
