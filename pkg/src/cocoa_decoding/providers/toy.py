"""Deterministic toy language model with controllable knowledge conflict.

Each :class:`ConflictInstance` carries two answers, the one the "model"
believes (parametric) and the one its context asserts. Both are token
sequences of equal length terminated by :data:`END_TOKEN`. At step ``t``
each side's distribution is built from a base profile::

    own token at t        (1 - distractor_mass) * 0.75
    rival token           (1 - distractor_mass) * 0.25
    each other token      distractor_mass / (vocab_size - 2)

raised to the power ``sharpness`` and renormalised (sharpness 1 is the
profile itself; large sharpness tends to one-hot on the own token). The
rival is the other side's token when the two disagree, otherwise
``END_TOKEN`` (a premature stop), or the previous answer token at the
terminal step.

The prior uses ``prior_sharpness``/``prior_distractor_mass`` and the
contextual distribution ``sharpness``/``distractor_mass``. With matched
parameters and no conflict the two are identical.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ..dist import TokenDistribution, from_logits
from . import DualStep

END_TOKEN = 0
PEAK_SHARE = 0.75
# Sharpness used for "one-hot" contexts: every non-peak token underflows to the floor.
ONE_HOT_SHARPNESS = 1e4
MAX_ANSWER_LEN = 3


@dataclass(frozen=True)
class ConflictInstance:
    instance_id: str
    query_tokens: tuple[int, ...]
    context_tokens: tuple[int, ...]
    parametric_answer: tuple[int, ...]
    context_answer: tuple[int, ...]
    conflict: bool
    sharpness: float
    distractor_mass: float
    vocab_size: int
    prior_sharpness: float | None = None
    prior_distractor_mass: float | None = None

    def __post_init__(self):
        if self.conflict == (self.parametric_answer == self.context_answer):
            raise ValueError(f"{self.instance_id}: conflict flag disagrees with the answers")
        if len(self.parametric_answer) != len(self.context_answer):
            raise ValueError(f"{self.instance_id}: answers must have equal length")
        if self.parametric_answer[-1] != END_TOKEN or self.context_answer[-1] != END_TOKEN:
            raise ValueError(f"{self.instance_id}: answers must end with the end token")
        if not 0 <= self.distractor_mass < 0.5 or self.sharpness <= 0:
            raise ValueError(f"{self.instance_id}: bad sharpness/distractor_mass")
        if self.prior_sharpness is None:
            object.__setattr__(self, "prior_sharpness", self.sharpness)
        if self.prior_distractor_mass is None:
            object.__setattr__(self, "prior_distractor_mass", self.distractor_mass)

    @property
    def gold(self) -> tuple[int, ...]:
        """Expected output: the context answer (substituted gold on conflict instances)."""
        return self.context_answer

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> ConflictInstance:
        d = dict(d)
        for k in ("query_tokens", "context_tokens", "parametric_answer", "context_answer"):
            d[k] = tuple(d[k])
        return cls(**d)


def _side(vocab: int, own: int, rival: int, sharpness: float, distractor_mass: float) -> TokenDistribution:
    base = np.full(vocab, distractor_mass / (vocab - 2))
    base[own] = (1.0 - distractor_mass) * PEAK_SHARE
    base[rival] = (1.0 - distractor_mass) * (1.0 - PEAK_SHARE)
    return from_logits(sharpness * np.log(np.maximum(base, 1e-300)))


def _rival(own: tuple[int, ...], other: tuple[int, ...], t: int) -> int:
    if other[t] != own[t]:
        return other[t]
    if own[t] != END_TOKEN:
        return END_TOKEN
    return own[t - 1]


def toy_lm_step(instance: ConflictInstance, emitted) -> DualStep:
    """Distributions for the next token after ``emitted``; deterministic."""
    t = len(emitted)
    p_ans, c_ans = instance.parametric_answer, instance.context_answer
    if t >= len(c_ans):
        raise ValueError(f"{instance.instance_id}: {t} tokens emitted, answer has only {len(c_ans)}")
    v = instance.vocab_size
    ctx = _side(v, c_ans[t], _rival(c_ans, p_ans, t), instance.sharpness, instance.distractor_mass)
    if (
        p_ans[t] == c_ans[t]
        and instance.prior_sharpness == instance.sharpness
        and instance.prior_distractor_mass == instance.distractor_mass
        and _rival(p_ans, c_ans, t) == _rival(c_ans, p_ans, t)
    ):
        prior = ctx
    else:
        prior = _side(v, p_ans[t], _rival(p_ans, c_ans, t), instance.prior_sharpness, instance.prior_distractor_mass)
    return DualStep(prior, ctx, is_terminal_hint=c_ans[t] == END_TOKEN)


class ToyProvider:
    """Provider wrapper around one instance."""

    def __init__(self, instance: ConflictInstance):
        self.instance = instance
        self.vocab_size = instance.vocab_size
        self.max_steps = len(instance.context_answer)

    def step(self, emitted) -> DualStep | None:
        if len(emitted) >= self.max_steps:
            return None
        return toy_lm_step(self.instance, emitted)


@dataclass(frozen=True)
class SuiteProfile:
    """How instance parameters are drawn.

    ``conflict_ctx_sharpness`` pins the context sharpness of conflict
    instances; ``independent_prior`` draws the prior's sharpness and
    distractor mass separately from the context's (so priors differ in
    shape even when the answers agree); ``prior_sharpness_ratio`` sets
    prior sharpness to that multiple of the context sharpness.
    """

    name: str
    sharpness_range: tuple[float, float] = (1.0, 10.0)
    distractor_range: tuple[float, float] = (0.0, 0.3)
    conflict_ctx_sharpness: float | None = None
    independent_prior: bool = False
    prior_sharpness_ratio: float | None = None
    description: str = field(default="", compare=False)


PROFILES = {
    p.name: p
    for p in (
        SuiteProfile("matched", description="prior and context share sharpness and distractor mass"),
        SuiteProfile(
            "contrast",
            conflict_ctx_sharpness=ONE_HOT_SHARPNESS,
            independent_prior=True,
            description="one-hot contexts on conflict items; priors of independent, mixed sharpness",
        ),
        SuiteProfile(
            "sharp_prior",
            sharpness_range=(1.0, 5.0),
            prior_sharpness_ratio=10.0,
            description="prior ten times sharper than a comparatively flat context",
        ),
    )
}


def _draw_answer(rng, vocab: int, length: int) -> list[int]:
    return [int(t) for t in rng.choice(np.arange(1, vocab), size=length, replace=False)]


def generate_suite(
    n_conflict: int, n_agree: int, vocab_size: int, seed: int, profile: str | SuiteProfile = "matched"
) -> list[ConflictInstance]:
    """Seeded synthetic QA suite: ``n_conflict`` conflicting items, then ``n_agree`` agreeing ones."""
    if n_conflict < 0 or n_agree < 0:
        raise ValueError("instance counts must be nonnegative")
    if vocab_size < 4:
        raise ValueError(f"vocab_size {vocab_size} too small to draw distinct answers (need >= 4)")
    prof = PROFILES[profile] if isinstance(profile, str) else profile
    rng = np.random.default_rng(seed)
    max_len = min(MAX_ANSWER_LEN, (vocab_size - 1) // 2)
    lo_s, hi_s = prof.sharpness_range
    lo_d, hi_d = prof.distractor_range
    out = []
    for i in range(n_conflict + n_agree):
        conflict = i < n_conflict
        length = int(rng.integers(1, max_len + 1))
        tokens = _draw_answer(rng, vocab_size, 2 * length)
        ctx_content = tokens[:length]
        par_content = tokens[length:] if conflict else ctx_content
        sharp = float(rng.uniform(lo_s, hi_s))
        dmass = float(rng.uniform(lo_d, hi_d))
        p_sharp, p_dmass = float(rng.uniform(lo_s, hi_s)), float(rng.uniform(lo_d, hi_d))
        if conflict and prof.conflict_ctx_sharpness is not None:
            sharp = prof.conflict_ctx_sharpness
        if prof.prior_sharpness_ratio is not None:
            p_sharp, p_dmass = prof.prior_sharpness_ratio * sharp, dmass
        elif not prof.independent_prior:
            p_sharp, p_dmass = sharp, dmass
        query = [int(t) for t in rng.integers(1, vocab_size, size=int(rng.integers(4, 9)))]
        filler = [int(t) for t in rng.integers(1, vocab_size, size=int(rng.integers(4, 9)))]
        cut = int(rng.integers(0, len(filler) + 1))
        out.append(
            ConflictInstance(
                instance_id=f"{'c' if conflict else 'a'}{i:05d}",
                query_tokens=tuple(query),
                context_tokens=tuple(filler[:cut] + ctx_content + filler[cut:]),
                parametric_answer=tuple(par_content + [END_TOKEN]),
                context_answer=tuple(ctx_content + [END_TOKEN]),
                conflict=conflict,
                sharpness=sharp,
                distractor_mass=dmass,
                vocab_size=vocab_size,
                prior_sharpness=p_sharp,
                prior_distractor_mass=p_dmass,
            )
        )
    return out


def suite_header(seed: int, vocab_size: int, profile: str, n_conflict: int, n_agree: int) -> dict:
    return {
        "type": "header",
        "kind": "suite",
        "seed": seed,
        "vocab_size": vocab_size,
        "profile": profile,
        "n_conflict": n_conflict,
        "n_agree": n_agree,
    }


def dumps_suite(suite: list[ConflictInstance], header: dict) -> str:
    lines = [json.dumps(header)]
    lines += [json.dumps(inst.to_dict()) for inst in suite]
    return "\n".join(lines) + "\n"


def write_suite(path, suite: list[ConflictInstance], header: dict) -> None:
    Path(path).write_text(dumps_suite(suite, header), encoding="utf-8")


def read_suite(path) -> tuple[dict, list[ConflictInstance]]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise ValueError(f"{path}: empty suite file")
    suite = []
    for n, ln in enumerate(lines, 1):
        if not ln.strip():
            continue
        try:
            obj = json.loads(ln)
            if n == 1:
                header = obj
            else:
                suite.append(ConflictInstance.from_dict(obj))
        except (json.JSONDecodeError, TypeError, KeyError) as exc:
            raise ValueError(f"{path}:{n}: bad suite line: {exc}") from exc
    if not isinstance(header, dict) or header.get("type") != "header":
        raise ValueError(f"{path}: first line must be a suite header")
    return header, suite

