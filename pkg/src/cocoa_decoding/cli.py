"""Command-line entry point: ``cocoa-decode {decode,analyze,suite}``.

Settings resolve as built-in defaults, then a ``key = value`` config file
(``--config``), then explicit flags. Exit codes: 0 success, 1 runtime
error (one JSON line on stderr), 2 usage error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import analysis
from ._backend import BACKEND
from .engine import decode, dumps_trace
from .errors import CocoaError
from .providers import PROFILES, RemoteProvider, ReplayProvider, ToyProvider, generate_suite, read_suite
from .providers.toy import dumps_suite, suite_header
from .strategies import GATE_ORIENTATIONS, STRATEGY_NAMES, StrategyConfig

_CFG = StrategyConfig()

# name -> (default, type); shared by flags and config files
HYPER = {
    "renyi_order": (_CFG.renyi_order, float),
    "gamma": (_CFG.gamma, float),
    "delta": (_CFG.delta, float),
    "z": (_CFG.z, float),
    "cad_alpha": (_CFG.cad_alpha, float),
    "coiecd_threshold": (_CFG.coiecd_threshold, float),
    "gate_orientation": (_CFG.gate_orientation, str),
    "fixed_lambda": (_CFG.fixed_lambda, float),
    "use_renyi": (_CFG.use_renyi, bool),
    "use_kl_instead": (_CFG.use_kl_instead, bool),
    "use_entropy_gap": (_CFG.use_entropy_gap, bool),
    "use_peakedness": (_CFG.use_peakedness, bool),
    "adaptive_gating": (_CFG.adaptive_gating, bool),
}

RUN = {
    "seed": (42, int),
    "strategy": ("cocoa", str),
    "provider": ("toy", str),
    "max_len": (64, int),
    "instance": (0, int),
    "profile": ("contrast", str),
    "vocab": (64, int),
    "n_conflict": (500, int),
    "n_agree": (500, int),
    "suite": (None, str),
    "trace": (None, str),
    "endpoint": (None, str),
    "query": ("", str),
    "context": ("", str),
    "timeout": (30.0, float),
    "workers": (1, int),
    "format": ("jsonl", str),
    "out": ("-", str),
    "strategies": ("greedy,cad,adacad,cocoa", str),
    "bench_strategies": ("cad,adacad,cocoa", str),
    "steps": (10000, int),
    "bench_vocab": (32000, int),
    "renyi_orders": ("0.3,0.5,0.7", str),
    "zs": ("1,3,5,7", str),
    "gammas": ("0.1,1.0,5.0", str),
}

DEFAULTS = {**{k: v for k, (v, _) in HYPER.items()}, **{k: v for k, (v, _) in RUN.items()}}
TYPES = {**{k: t for k, (_, t) in HYPER.items()}, **{k: t for k, (_, t) in RUN.items()}}


CHOICES = {
    "strategy": STRATEGY_NAMES,
    "provider": ("toy", "replay", "remote"),
    "gate_orientation": GATE_ORIENTATIONS,
    "format": ("jsonl", "table"),
    "profile": tuple(sorted(PROFILES)),
}


class UsageError(Exception):
    pass


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def load_config(path) -> dict:
    """Read ``key = value`` lines; ``#`` starts a comment. Keys may use dashes."""
    out = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from exc
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in TYPES:
            raise UsageError(f"{path}:{n}: unknown key {key!r}")
        typ = TYPES[key]
        try:
            out[key] = _parse_bool(value) if typ is bool else typ(value)
        except ValueError as exc:
            raise UsageError(f"{path}:{n}: bad value for {key}: {exc}") from exc
    return out


def _d(key) -> str:
    return f"(default: {DEFAULTS[key]})"


def _add_hyper(p):
    g = p.add_argument_group("decoding hyperparameters")
    g.add_argument("--renyi-order", type=float, help=f"Rényi divergence order {_d('renyi_order')}")
    g.add_argument("--gamma", type=float, help=f"entropy-gap weight {_d('gamma')}")
    g.add_argument("--delta", type=float, help=f"conflict-score bias {_d('delta')}")
    g.add_argument("--z", type=float, help=f"peakedness exponent {_d('z')}")
    g.add_argument("--cad-alpha", type=float, help=f"CAD contrast strength {_d('cad_alpha')}")
    g.add_argument("--coiecd-threshold", type=float, help=f"COIECD JSD threshold {_d('coiecd_threshold')}")
    g.add_argument("--gate-orientation", choices=GATE_ORIENTATIONS, help=f"gate sign convention {_d('gate_orientation')}")
    g.add_argument("--fixed-lambda", type=float, help=f"weight used when adaptive gating is off {_d('fixed_lambda')}")
    g.add_argument("--no-renyi", dest="use_renyi", action="store_false", help="drop the divergence term (default: on)")
    g.add_argument("--kl-instead", dest="use_kl_instead", action="store_true", help="use KL instead of Rényi (default: off)")
    g.add_argument("--no-entropy-gap", dest="use_entropy_gap", action="store_false", help="drop the entropy gap (default: on)")
    g.add_argument("--no-peakedness", dest="use_peakedness", action="store_false", help="drop the margin term (default: on)")
    g.add_argument(
        "--no-adaptive-gating", dest="adaptive_gating", action="store_false", help="use --fixed-lambda every step (default: on)"
    )


def _add_suite(p):
    g = p.add_argument_group("synthetic suite")
    g.add_argument("--seed", type=int, help=f"suite seed {_d('seed')}")
    g.add_argument("--profile", choices=sorted(PROFILES), help=f"suite profile {_d('profile')}")
    g.add_argument("--vocab", type=int, help=f"toy vocabulary size {_d('vocab')}")
    g.add_argument("--n-conflict", type=int, help=f"conflict instances {_d('n_conflict')}")
    g.add_argument("--n-agree", type=int, help=f"no-conflict instances {_d('n_agree')}")
    g.add_argument("--suite", help="read instances from a suite file instead of generating them")


def _add_common(p):
    p.add_argument("--config", help="key = value file; flags take precedence")
    p.add_argument("--out", help=f"output path, '-' for stdout {_d('out')}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cocoa-decode", description="Conflict-aware decoding and its experiment harness.")
    parser.add_argument("--version", action="version", version=f"%(prog)s 0.1.0 ({BACKEND} kernels)")
    sub = parser.add_subparsers(dest="command", required=True)

    dec = sub.add_parser("decode", help="decode one instance and write its diagnostics trace", argument_default=argparse.SUPPRESS)
    _add_common(dec)
    dec.add_argument("--provider", choices=("toy", "replay", "remote"), help=f"distribution source {_d('provider')}")
    dec.add_argument("--strategy", choices=STRATEGY_NAMES, help=f"decoding strategy {_d('strategy')}")
    dec.add_argument("--max-len", type=int, help=f"token cap {_d('max_len')}")
    dec.add_argument("--instance", type=int, help=f"suite index decoded by the toy provider {_d('instance')}")
    dec.add_argument("--trace", help="trace file for the replay provider")
    dec.add_argument("--endpoint", help="base URL for the remote provider")
    dec.add_argument("--query", help="comma-separated query token ids (remote)")
    dec.add_argument("--context", help="comma-separated context token ids (remote)")
    dec.add_argument("--timeout", type=float, help=f"remote request timeout in seconds {_d('timeout')}")
    _add_suite(dec)
    _add_hyper(dec)

    ana = sub.add_parser("analyze", help="suite-level measurements")
    asub = ana.add_subparsers(dest="analysis", required=True)
    specs = {
        "em": "exact-match accuracy per regime",
        "sensitivity": "Spearman conflict sensitivity per strategy",
        "ablate": "accuracy of CoCoA variants",
        "sweep": "accuracy over a hyperparameter grid",
        "bench": "per-step strategy overhead",
    }
    for name, text in specs.items():
        p = asub.add_parser(name, help=text, argument_default=argparse.SUPPRESS)
        _add_common(p)
        p.add_argument("--format", choices=("jsonl", "table"), help=f"report format {_d('format')}")
        if name == "bench":
            p.add_argument("--seed", type=int, help=f"seed for the random pairs {_d('seed')}")
            p.add_argument("--vocab", dest="bench_vocab", type=int, help=f"vocabulary size {_d('bench_vocab')}")
            p.add_argument("--steps", type=int, help=f"timed steps per strategy {_d('steps')}")
            p.add_argument("--strategies", dest="bench_strategies", help=f"comma-separated strategies {_d('bench_strategies')}")
        else:
            p.add_argument("--workers", type=int, help=f"evaluation threads {_d('workers')}")
            _add_suite(p)
            if name in ("em", "sensitivity"):
                p.add_argument("--strategies", help=f"comma-separated strategies {_d('strategies')}")
            if name == "sweep":
                p.add_argument("--strategy", choices=STRATEGY_NAMES, help=f"strategy to sweep {_d('strategy')}")
                p.add_argument("--renyi-orders", help=f"grid values {_d('renyi_orders')}")
                p.add_argument("--zs", help=f"grid values {_d('zs')}")
                p.add_argument("--gammas", help=f"grid values {_d('gammas')}")
        _add_hyper(p)

    su = sub.add_parser("suite", help="write a synthetic suite file", argument_default=argparse.SUPPRESS)
    _add_common(su)
    _add_suite(su)
    return parser


def resolve(ns: argparse.Namespace) -> dict:
    """Defaults, overridden by the config file, overridden by flags."""
    flags = {k: v for k, v in vars(ns).items() if k not in ("config", "command", "analysis")}
    cfg_file = load_config(ns.config) if getattr(ns, "config", None) else {}
    s = {**DEFAULTS, **cfg_file, **flags}
    for key, valid in CHOICES.items():
        if s[key] not in valid:
            raise UsageError(f"invalid {key} {s[key]!r}; valid: {', '.join(valid)}")
    return s


def strategy_config(s: dict) -> StrategyConfig:
    try:
        return StrategyConfig(**{k: s[k] for k in HYPER})
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _ints(text: str) -> list[int]:
    return [int(t) for t in text.split(",") if t.strip()]


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _names(text: str) -> list[str]:
    names = [t.strip() for t in text.split(",") if t.strip()]
    bad = [n for n in names if n not in STRATEGY_NAMES]
    if bad or not names:
        raise UsageError(f"unknown strategies {bad}; valid: {', '.join(STRATEGY_NAMES)}")
    return names


def load_suite(s: dict):
    if s["suite"]:
        header, suite = read_suite(s["suite"])
        return {k: header.get(k) for k in ("seed", "vocab_size", "profile", "n_conflict", "n_agree")}, suite
    suite = generate_suite(s["n_conflict"], s["n_agree"], s["vocab"], s["seed"], s["profile"])
    head = suite_header(s["seed"], s["vocab"], s["profile"], s["n_conflict"], s["n_agree"])
    return {k: head[k] for k in ("seed", "vocab_size", "profile", "n_conflict", "n_agree")}, suite


def _write(s: dict, text: str) -> None:
    if s["out"] in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(s["out"]).write_text(text, encoding="utf-8")


def cmd_decode(s: dict) -> int:
    cfg = strategy_config(s)
    if s["max_len"] < 1:
        raise UsageError("--max-len must be >= 1")
    header = {"provider": s["provider"], "seed": s["seed"], "config": cfg.to_dict()}
    if s["provider"] == "toy":
        suite_info, suite = load_suite(s)
        if not 0 <= s["instance"] < len(suite):
            raise UsageError(f"--instance must lie in [0, {len(suite)})")
        inst = suite[s["instance"]]
        provider = ToyProvider(inst)
        header.update(suite_info, instance_id=inst.instance_id, gold=list(inst.gold))
    elif s["provider"] == "replay":
        if not s["trace"]:
            raise UsageError("--provider replay requires --trace")
        provider = ReplayProvider(s["trace"])
        header["trace"] = str(s["trace"])
    else:
        if not s["endpoint"]:
            raise UsageError("--provider remote requires --endpoint")
        try:
            query, context = _ints(s["query"]), _ints(s["context"])
        except ValueError as exc:
            raise UsageError(f"token lists must be comma-separated integers: {exc}") from exc
        provider = RemoteProvider(s["endpoint"], query, context, timeout=s["timeout"])
        header["endpoint"] = s["endpoint"]
    result = decode(provider, s["strategy"], cfg, max_len=s["max_len"])
    if not result.steps:
        raise CocoaError("provider produced no steps")
    _write(s, dumps_trace(result, header))
    return 0


def _report(s: dict, kind: str, header: dict, rows) -> None:
    if s["format"] == "table":
        head = " ".join(f"{k}={v}" for k, v in header.items() if k != "config")
        _write(s, f"# {kind} {head}\n" + analysis.format_table(rows))
    else:
        _write(s, analysis.dumps_report(kind, header, rows))


def cmd_analyze(kind: str, s: dict) -> int:
    cfg = strategy_config(s)
    if kind == "bench":
        names = _names(s["bench_strategies"])
        if s["bench_vocab"] < 2 or s["steps"] < 1:
            raise UsageError("--vocab must be >= 2 and --steps >= 1")
        rows = analysis.bench_latency(s["bench_vocab"], s["steps"], names, cfg, seed=s["seed"])
        _report(s, kind, {"seed": s["seed"], "backend": BACKEND, "vocab_size": s["bench_vocab"], "n_steps": s["steps"]}, rows)
        return 0
    if s["workers"] < 1:
        raise UsageError("--workers must be >= 1")
    info, suite = load_suite(s)
    header = {**info, "backend": BACKEND, "config_digest": cfg.digest(), "config": cfg.to_dict()}
    w = s["workers"]
    if kind == "em":
        rows = [analysis.exact_match_eval(suite, n, cfg, w) for n in _names(s["strategies"])]
    elif kind == "sensitivity":
        rows = [analysis.conflict_sensitivity(suite, n, cfg, w) for n in _names(s["strategies"])]
    elif kind == "ablate":
        rows = analysis.run_ablation(suite, cfg, w)
    else:
        grid = {"renyi_order": _floats(s["renyi_orders"]), "z": _floats(s["zs"]), "gamma": _floats(s["gammas"])}
        try:
            rows = analysis.sweep(suite, grid, cfg, s["strategy"], w)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        header["strategy"] = s["strategy"]
    _report(s, kind, header, rows)
    return 0


def cmd_suite(s: dict) -> int:
    suite = generate_suite(s["n_conflict"], s["n_agree"], s["vocab"], s["seed"], s["profile"])
    _write(s, dumps_suite(suite, suite_header(s["seed"], s["vocab"], s["profile"], s["n_conflict"], s["n_agree"])))
    return 0


def _fail(code: int, kind: str, message: str) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")
    return code


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        s = resolve(ns)
        if ns.command == "decode":
            return cmd_decode(s)
        if ns.command == "suite":
            return cmd_suite(s)
        return cmd_analyze(ns.analysis, s)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        return _fail(2, "usage", str(exc))
    except (CocoaError, ValueError, OSError) as exc:
        return _fail(1, type(exc).__name__, str(exc))


if __name__ == "__main__":
    sys.exit(main())
