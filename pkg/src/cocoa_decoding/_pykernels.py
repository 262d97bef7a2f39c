"""Vectorised numpy kernels.

Reference backend, and the fallback used when the compiled ``_ckernels``
extension is not built. Every function here has an identically named,
identically behaving twin in ``_ckernels.pyx``.

All inputs are contiguous float64 arrays. ``lp``/``lq`` are natural-log
probabilities and ``p``/``q`` the matching probabilities.
"""
from __future__ import annotations

import math

import numpy as np

EPS = 1e-12
LOG_EPS = math.log(EPS)


def normalize(x):
    """Log-softmax of ``x`` with the probability floor applied.

    Returns ``(log_probs, probs)``.
    """
    mx = x.max()
    e = np.exp(x - mx)
    s = e.sum()
    probs = np.maximum(e / s, EPS)
    s2 = probs.sum()
    probs /= s2
    lp = np.maximum(x - (mx + math.log(s)), LOG_EPS)
    lp -= math.log(s2)
    return lp, probs


def blend(lp_a, lp_b, wa, wb):
    return normalize(wa * lp_a + wb * lp_b)


def renyi(lp, lq, alpha):
    t = alpha * lp + (1.0 - alpha) * lq
    mx = t.max()
    lse = mx + math.log(np.exp(t - mx).sum())
    return max(lse / (alpha - 1.0), 0.0)


def kl(p, lp, lq):
    return max(float(np.dot(p, lp - lq)), 0.0)


def jsd(p, lp, q, lq):
    lm = np.log(0.5 * (p + q))
    v = 0.5 * float(np.dot(p, lp - lm)) + 0.5 * float(np.dot(q, lq - lm))
    return max(v, 0.0)


def entropy(p, lp):
    return max(-float(np.dot(p, lp)), 0.0)


def top2(p):
    i1 = int(np.argmax(p))
    rest = p.copy()
    rest[i1] = -np.inf
    return i1, int(np.argmax(rest))


def gate_signals(p, lp, q, lq, order):
    """Everything the confidence gate reads, in one call.

    Returns ``(divergence, jsd, entropy_p, entropy_q, top1_q, top2_q)``;
    ``order == 1`` selects KL for the divergence.
    """
    d = kl(p, lp, lq) if order == 1.0 else renyi(lp, lq, order)
    i1, i2 = top2(q)
    return d, jsd(p, lp, q, lq), entropy(p, lp), entropy(q, lq), i1, i2
