"""Token distributions over a fixed vocabulary.

A :class:`TokenDistribution` stores both natural-log probabilities and
probabilities. Every probability is floored at :data:`EPS` and the vector
renormalised once, so logs stay finite even for one-hot inputs.
"""
from __future__ import annotations

import math

import numpy as np

from ._backend import kernels
from .errors import DistributionError

EPS = 1e-12
LOG_EPS = math.log(EPS)
# Floor applied to the top-two margin before taking its log.
M_FLOOR = 1e-6


class TokenDistribution:
    """Immutable normalised distribution; build with :func:`from_logits` or :func:`from_probs`."""

    __slots__ = ("log_probs", "probs")

    def __init__(self, log_probs: np.ndarray, probs: np.ndarray):
        log_probs.setflags(write=False)
        probs.setflags(write=False)
        self.log_probs = log_probs
        self.probs = probs

    @property
    def vocab_size(self) -> int:
        return self.probs.shape[0]

    def argmax(self) -> int:
        return int(np.argmax(self.probs))

    def __len__(self) -> int:
        return self.vocab_size

    def __repr__(self) -> str:
        head = np.array2string(self.probs[:8], precision=4)
        more = "..." if self.vocab_size > 8 else ""
        return f"TokenDistribution(vocab_size={self.vocab_size}, probs={head}{more})"


def _as_vector(values) -> np.ndarray:
    x = np.ascontiguousarray(values, dtype=np.float64)
    if x.ndim != 1:
        raise DistributionError(f"expected a 1-d vector, got shape {x.shape}")
    if x.shape[0] < 2:
        raise DistributionError(f"vocabulary must have at least 2 entries, got {x.shape[0]}")
    if not np.isfinite(x).all():
        raise DistributionError("non-finite entry in input vector")
    return x


def from_logits(logits) -> TokenDistribution:
    """Softmax ``logits`` (max-subtracted, log-normalised) and apply the floor."""
    lp, p = kernels.normalize(_as_vector(logits))
    return TokenDistribution(lp, p)


def from_probs(probs) -> TokenDistribution:
    """Build from nonnegative weights; they are normalised, zeros are floored."""
    w = _as_vector(probs)
    if (w < 0).any() or w.sum() <= 0:
        raise DistributionError("weights must be nonnegative with positive sum")
    return from_logits(np.log(np.maximum(w, 1e-300)))


def _from_kernel(pair) -> TokenDistribution:
    return TokenDistribution(*pair)


def entropy(d: TokenDistribution) -> float:
    """Shannon entropy in nats."""
    return kernels.entropy(d.probs, d.log_probs)


def top2(d: TokenDistribution) -> tuple[int, int]:
    """Indices of the two most probable tokens; ties go to the lower index."""
    return kernels.top2(d.probs)


def margin(d: TokenDistribution) -> float:
    """``p(top1) - p(top2)``. Not floored; callers clamp to :data:`M_FLOOR` before a log."""
    i1, i2 = kernels.top2(d.probs)
    return float(d.probs[i1] - d.probs[i2])
