"""Conflict-aware contrastive decoding: CoCoA and the baselines it is compared against."""
from ._backend import BACKEND
from .dist import EPS, M_FLOOR, TokenDistribution, entropy, from_logits, from_probs, margin, top2
from .signals import entropy_gap, jsd, kl_divergence, renyi_divergence
from .strategies import (
    STRATEGY_NAMES,
    StepDiagnostics,
    StrategyConfig,
    adacad_adjust,
    blend_weight,
    cad_adjust,
    cocoa_adjust,
    coiecd_adjust,
    confcd_adjust,
    conflict_score,
    greedy_select,
    power_blend,
)

from .engine import DecodeResult, decode, dumps_trace, emit_trace
from .providers import ConflictInstance, DualStep, generate_suite, toy_lm_step
from .analysis import (
    bench_latency,
    conflict_sensitivity,
    exact_match_eval,
    run_ablation,
    spearman,
    sweep,
)

__version__ = "0.1.0"
