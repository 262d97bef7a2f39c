"""Per-step distribution adjustment strategies.

Every strategy maps a (prior, contextual) pair of next-token distributions
to a single distribution that is then decoded greedily:

* ``greedy``  - the contextual distribution, unchanged.
* ``cad``     - contrastive decoding with a fixed strength.
* ``adacad``  - contrastive decoding with strength JSD(ctx, prior).
* ``coiecd``  - contrast only when JSD crosses a threshold.
* ``confcd``  - contrast strength from the two top-1 confidences.
* ``cocoa``   - geometric interpolation gated by Rényi divergence,
  entropy gap and contextual peakedness.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, fields, replace

from ._backend import kernels
from .dist import M_FLOOR, TokenDistribution, _from_kernel
from .signals import check_pair

STRATEGY_NAMES = ("greedy", "cad", "coiecd", "confcd", "adacad", "cocoa")
GATE_ORIENTATIONS = ("prose", "literal")

QA_CAD_ALPHA = 1.0
SUMMARIZATION_CAD_ALPHA = 0.5
S_CLAMP = 1e-12


@dataclass(frozen=True)
class StrategyConfig:
    """Decoding hyperparameters. Defaults are the published CoCoA settings.

    ``gate_orientation`` picks the sign of the conflict term in the gate:
    ``"prose"`` makes high conflict raise the context weight, ``"literal"``
    uses the opposite sign. The ``use_*``/``adaptive_gating`` switches
    exist for ablations.
    """

    renyi_order: float = 0.5
    gamma: float = 1.0
    delta: float = 1e-8
    z: float = 5.0
    cad_alpha: float = QA_CAD_ALPHA
    coiecd_threshold: float = 0.25
    gate_orientation: str = "prose"
    use_renyi: bool = True
    use_kl_instead: bool = False
    use_entropy_gap: bool = True
    use_peakedness: bool = True
    adaptive_gating: bool = True
    fixed_lambda: float = 0.5

    def __post_init__(self):
        if not self.renyi_order > 0:
            raise ValueError(f"renyi_order must be positive, got {self.renyi_order}")
        if self.gamma < 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")
        if self.cad_alpha < 0:
            raise ValueError(f"cad_alpha must be >= 0, got {self.cad_alpha}")
        if not 0 < self.coiecd_threshold < 1:
            raise ValueError(f"coiecd_threshold must lie in (0, 1), got {self.coiecd_threshold}")
        if self.gate_orientation not in GATE_ORIENTATIONS:
            raise ValueError(
                f"gate_orientation must be one of {GATE_ORIENTATIONS}, got {self.gate_orientation!r}"
            )
        if not 0 <= self.fixed_lambda <= 1:
            raise ValueError(f"fixed_lambda must lie in [0, 1], got {self.fixed_lambda}")
        for f in ("delta", "z"):
            if not math.isfinite(getattr(self, f)):
                raise ValueError(f"{f} must be finite")

    def replace(self, **changes) -> StrategyConfig:
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return asdict(self)

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]


@dataclass(frozen=True)
class StepDiagnostics:
    """What happened at one decoding step.

    The signal fields and the gate (``conflict_score``, ``lam``) are
    measured for every strategy so traces are comparable; only ``cocoa``
    blends with ``lam``. ``contrast`` is the contrastive strength applied by
    the CAD family (0 for ``greedy`` and ``cocoa``).
    """

    d_alpha: float
    jsd_value: float
    entropy_gap: float
    margin: float
    conflict_score: float
    lam: float
    chosen: int
    contrast: float = 0.0
    approximate: bool = False

    def to_dict(self) -> dict:
        return {
            "d_alpha": self.d_alpha,
            "jsd": self.jsd_value,
            "entropy_gap": self.entropy_gap,
            "margin": self.margin,
            "conflict_score": self.conflict_score,
            "lambda": self.lam,
            "contrast": self.contrast,
            "chosen": self.chosen,
            "approximate": self.approximate,
        }


def sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def conflict_score(d_alpha: float, gap: float, cfg: StrategyConfig) -> float:
    x = cfg.delta
    if cfg.use_renyi:
        x += d_alpha
    if cfg.use_entropy_gap:
        x += cfg.gamma * gap
    return min(max(sigmoid(x), S_CLAMP), 1.0 - S_CLAMP)


def blend_weight(m: float, s: float, cfg: StrategyConfig) -> float:
    """Context weight from the top-two margin ``m`` and conflict score ``s``."""
    if not cfg.adaptive_gating:
        return cfg.fixed_lambda
    m = min(max(m, M_FLOOR), 1.0)
    s = min(max(s, S_CLAMP), 1.0 - S_CLAMP)
    if cfg.gate_orientation == "prose":
        x = math.log(s / (1.0 - s))
    else:
        x = math.log((1.0 - s) / s)
    if cfg.use_peakedness:
        x += cfg.z * math.log(m)
    return sigmoid(x)


def power_blend(prior: TokenDistribution, ctx: TokenDistribution, lam: float) -> TokenDistribution:
    """``q ∝ ctx**lam * prior**(1 - lam)``, renormalised in log space."""
    check_pair(prior, ctx)
    return _from_kernel(kernels.blend(ctx.log_probs, prior.log_probs, lam, 1.0 - lam))


def greedy_select(d: TokenDistribution) -> int:
    return d.argmax()


def gate(prior: TokenDistribution, ctx: TokenDistribution, cfg: StrategyConfig) -> tuple:
    """Measure all signals and evaluate the gate.

    Returns ``(d_alpha, jsd, entropy_gap, margin, conflict_score, lam)``.
    """
    check_pair(prior, ctx)
    order = 1.0 if cfg.use_kl_instead else float(cfg.renyi_order)
    d, js, hp, hq, i1, i2 = kernels.gate_signals(
        prior.probs, prior.log_probs, ctx.probs, ctx.log_probs, order
    )
    gap = hp - hq
    m = float(ctx.probs[i1] - ctx.probs[i2])
    s = conflict_score(d, gap, cfg)
    return d, js, gap, m, s, blend_weight(m, s, cfg)


def cocoa_adjust(
    prior: TokenDistribution, ctx: TokenDistribution, cfg: StrategyConfig
) -> tuple[TokenDistribution, StepDiagnostics]:
    d, js, gap, m, s, lam = gate(prior, ctx, cfg)
    out = power_blend(prior, ctx, lam)
    return out, StepDiagnostics(d, js, gap, m, s, lam, greedy_select(out))


def cad_adjust(prior: TokenDistribution, ctx: TokenDistribution, alpha: float) -> TokenDistribution:
    """``q ∝ ctx * (ctx / prior)**alpha``."""
    check_pair(prior, ctx)
    if alpha < 0:
        raise ValueError(f"contrast strength must be >= 0, got {alpha}")
    return _from_kernel(kernels.blend(ctx.log_probs, prior.log_probs, 1.0 + alpha, -alpha))


def adacad_adjust(prior: TokenDistribution, ctx: TokenDistribution) -> tuple[TokenDistribution, float]:
    """CAD with strength ``JSD(ctx, prior)``; returns the distribution and that strength."""
    check_pair(prior, ctx)
    alpha = kernels.jsd(ctx.probs, ctx.log_probs, prior.probs, prior.log_probs)
    return cad_adjust(prior, ctx, alpha), alpha


def coiecd_adjust(prior: TokenDistribution, ctx: TokenDistribution, cfg: StrategyConfig) -> TokenDistribution:
    # JSD stands in for COIECD's own conflict statistic.
    check_pair(prior, ctx)
    js = kernels.jsd(ctx.probs, ctx.log_probs, prior.probs, prior.log_probs)
    if js >= cfg.coiecd_threshold:
        return cad_adjust(prior, ctx, cfg.cad_alpha)
    return ctx


def confcd_alpha(prior: TokenDistribution, ctx: TokenDistribution) -> float:
    top_ctx = float(ctx.probs.max())
    top_prior = float(prior.probs.max())
    return top_ctx if top_ctx > top_prior else 1.0 - top_prior


def confcd_adjust(prior: TokenDistribution, ctx: TokenDistribution) -> TokenDistribution:
    check_pair(prior, ctx)
    return cad_adjust(prior, ctx, confcd_alpha(prior, ctx))


def apply_strategy(
    name: str, prior: TokenDistribution, ctx: TokenDistribution, cfg: StrategyConfig
) -> tuple[TokenDistribution, StepDiagnostics]:
    """Run strategy ``name`` and return its distribution with full diagnostics."""
    if name == "cocoa":
        return cocoa_adjust(prior, ctx, cfg)
    if name == "greedy":
        out, contrast = ctx, 0.0
    elif name == "cad":
        out, contrast = cad_adjust(prior, ctx, cfg.cad_alpha), cfg.cad_alpha
    elif name == "adacad":
        out, contrast = adacad_adjust(prior, ctx)
    elif name == "coiecd":
        out = coiecd_adjust(prior, ctx, cfg)
        contrast = 0.0 if out is ctx else cfg.cad_alpha
    elif name == "confcd":
        contrast = confcd_alpha(prior, ctx)
        out = cad_adjust(prior, ctx, contrast)
    else:
        raise ValueError(f"unknown strategy {name!r}; expected one of {', '.join(STRATEGY_NAMES)}")
    d, js, gap, m, s, lam = gate(prior, ctx, cfg)
    return out, StepDiagnostics(d, js, gap, m, s, lam, greedy_select(out), contrast)
