"""Command-line front-end.

Subcommands: ``eval`` (apply an operator to a signal, write CSV),
``verify`` (run the identity suite, write a JSON report), ``taylor``
(evaluate an operator through one of its series representations),
``laplace`` (transform evaluation and transform-rule checks), ``solve``
(the tempered relaxation-equation stepper), and ``repro`` (emit the
reference experiment datasets).

Exit codes: 0 success (and, for ``verify``, every identity passed),
1 verification failures, 2 configuration errors, 3 numeric errors.
Output files are written atomically; identical configurations and seeds
produce byte-identical outputs.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from .errors import NablaError
from .laplace import (
    check_transform_rule_diff,
    check_transform_rule_gl,
    fde_solve,
    nlt,
)
from .operators import (
    OperatorKind,
    OperatorSpec,
    apply_operator,
    caputo_tempered,
    gl_tempered,
    rl_tempered,
)
from .presets import UnknownPreset, preset_signal, preset_weight
from .signals import (
    Grid,
    Signal,
    Weight,
    _atomic_write_text,
    read_signal_csv,
    read_weight_csv,
    write_signal_csv,
)
from .suite import run_suite, reports_to_json_dict
from .taylor import (
    tempered_op_taylor_current,
    tempered_op_taylor_future,
    tempered_op_taylor_initial,
)

KINDS = {
    "gl": OperatorKind.GL,
    "rl": OperatorKind.RL,
    "caputo": OperatorKind.CAPUTO,
    "nabla": OperatorKind.INTEGER_NABLA,
}

EXIT_OK = 0
EXIT_SUITE_FAILED = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    """Validated invocation parameters for one subcommand."""

    command: str
    kind: OperatorKind | None = None
    order: float = 0.0
    signal: str = ""
    weight: str = "one"
    a: float = 0.0
    horizon: int = 100
    history: int | None = None
    out: str | None = None
    seed: int = 0
    extra: dict = field(default_factory=dict)

    def resolved_history(self) -> int:
        if self.history is not None:
            return self.history
        if self.kind in (OperatorKind.RL, OperatorKind.CAPUTO):
            return int(math.ceil(self.order))
        if self.kind is OperatorKind.INTEGER_NABLA:
            return int(self.order)
        return 0


def _load_signal(cfg: RunConfig) -> Signal:
    if os.path.exists(cfg.signal) or cfg.signal.endswith(".csv"):
        return read_signal_csv(cfg.signal, history=cfg.resolved_history())
    grid = Grid(a=cfg.a, history=cfg.resolved_history(), horizon=cfg.horizon)
    return preset_signal(cfg.signal, grid)


def _load_weight(cfg: RunConfig, grid: Grid) -> Weight:
    if os.path.exists(cfg.weight) or cfg.weight.endswith(".csv"):
        w = read_weight_csv(cfg.weight, history=grid.history)
        if not w.grid.covers(grid):
            raise ConfigError(
                f"weight file {cfg.weight} does not cover the signal grid"
            )
        return w
    return preset_weight(cfg.weight, grid)


def _validate_order(cfg: RunConfig) -> None:
    if cfg.kind in (OperatorKind.RL, OperatorKind.CAPUTO):
        if cfg.order <= 0 or cfg.order == math.floor(cfg.order):
            raise ConfigError(
                f"--kind {cfg.kind.value} needs a positive non-integer --order, "
                f"got {cfg.order}"
            )
    if cfg.kind is OperatorKind.INTEGER_NABLA:
        if cfg.order < 1 or cfg.order != math.floor(cfg.order):
            raise ConfigError(
                f"--kind nabla needs a positive integer --order, got {cfg.order}"
            )


def cmd_eval(cfg: RunConfig) -> int:
    _validate_order(cfg)
    x = _load_signal(cfg)
    w = _load_weight(cfg, x.grid)
    spec = OperatorSpec(cfg.kind, cfg.order, w)
    y = apply_operator(x, spec)
    write_signal_csv(cfg.out, y)
    return EXIT_OK


def cmd_taylor(cfg: RunConfig) -> int:
    _validate_order(cfg)
    x = _load_signal(cfg)
    w = _load_weight(cfg, x.grid)
    spec = OperatorSpec(cfg.kind, cfg.order, w)
    rep = cfg.extra["rep"]
    if rep == "current":
        y = tempered_op_taylor_current(x, spec)
    elif rep == "initial":
        y = tempered_op_taylor_initial(x, spec, cfg.extra["degree"])
    else:
        y = tempered_op_taylor_future(x, spec, cfg.extra["degree"])
    write_signal_csv(cfg.out, y)
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    reports = run_suite(
        seed=cfg.seed,
        only=cfg.extra.get("only"),
        perturb=cfg.extra.get("perturb"),
    )
    if not reports:
        raise ConfigError(f"--only {cfg.extra.get('only')!r} matched no identity group")
    scale = float(os.environ.get("NT_TOLERANCE_SCALE", "1.0"))
    payload = reports_to_json_dict(reports, cfg.seed, scale, cfg.extra.get("perturb"))
    text = json.dumps(payload, indent=2, sort_keys=True)
    if cfg.out:
        _atomic_write_text(cfg.out, text + "\n")
    else:
        print(text)
    failures = payload["failures"]
    print(
        f"verify: {payload['total']} checks, {failures} failures (seed {cfg.seed})",
        file=sys.stderr,
    )
    return EXIT_OK if payload["all_pass"] else EXIT_SUITE_FAILED


def cmd_solve(cfg: RunConfig) -> int:
    alpha = cfg.extra["alpha"]
    mu = cfg.extra["mu"]
    if not (0.0 < alpha < 1.0):
        raise ConfigError(f"--alpha must lie in (0, 1), got {alpha}")
    grid = Grid(a=cfg.a, history=0, horizon=cfg.horizon)
    w = _load_weight(cfg, grid)
    x = fde_solve(alpha, mu, w, cfg.extra["x0"], cfg.horizon)
    write_signal_csv(cfg.out, x, include_history=True)
    return EXIT_OK


def cmd_laplace(cfg: RunConfig) -> int:
    s = complex(cfg.extra["s_re"], cfg.extra["s_im"])
    rule = cfg.extra.get("rule")
    lam = cfg.extra.get("lam") or 0.0
    if rule == "int" and cfg.order != math.floor(cfg.order):
        raise ConfigError(f"--rule int needs an integer --order, got {cfg.order}")
    if rule in ("rl", "caputo") and (
        cfg.order <= 0 or cfg.order == math.floor(cfg.order)
    ):
        raise ConfigError(
            f"--rule {rule} needs a positive non-integer --order, got {cfg.order}"
        )
    if rule is not None and cfg.history is None:
        # rules with initial-condition terms need history at the base
        cfg.history = max(int(math.ceil(cfg.order)), 0)
    x = _load_signal(cfg)
    if rule is None:
        ev = nlt(x, s)
        payload = {
            "s": [ev.s.real, ev.s.imag],
            "value": [ev.value.real, ev.value.imag],
            "terms_used": ev.terms_used,
            "last_term_mag": ev.last_term_mag,
            "converged": ev.converged,
        }
    else:
        if rule == "gl":
            rep = check_transform_rule_gl(x, cfg.order, lam, s)
        else:
            order = cfg.order if rule != "int" else int(cfg.order)
            rep = check_transform_rule_diff(x, rule, order, lam, s)
        payload = rep.to_dict()
    print(json.dumps(payload, indent=2, sort_keys=True))
    return EXIT_OK


# ---------------------------------------------------------------------------
# reference experiment datasets
# ---------------------------------------------------------------------------

REPRO_A = 0.0
REPRO_N = 100
REPRO_ALPHAS = (0.5, -0.5)
REPRO_CASES = ("case1", "case2", "case3", "case4")


def _repro_signal(history: int) -> Signal:
    grid = Grid(a=REPRO_A, history=history, horizon=REPRO_N)
    return preset_signal("sin10k", grid)


def _alpha_label(alpha: float) -> str:
    return f"alpha{alpha:+.1f}".replace("+", "p").replace("-", "m").replace(".", "_")


def cmd_repro(cfg: RunConfig) -> int:
    target = cfg.extra["target"]
    outdir = cfg.extra["outdir"]
    os.makedirs(outdir, exist_ok=True)
    x0 = _repro_signal(0)
    x1 = _repro_signal(1)

    def emit(name: str, sig: Signal) -> None:
        write_signal_csv(os.path.join(outdir, name), sig)

    if target == "fig1":
        for wname, label in (("halfgeom", "vanishing"), ("halfgeom+eps", "shifted")):
            w = preset_weight(wname, x0.grid)
            for alpha in REPRO_ALPHAS:
                emit(
                    f"fig1_{label}_{_alpha_label(alpha)}.csv",
                    gl_tempered(x0, alpha, w),
                )
    elif target == "fig2":
        for case in REPRO_CASES:
            w = preset_weight(case, x0.grid)
            for alpha in REPRO_ALPHAS:
                emit(f"fig2_{case}_{_alpha_label(alpha)}.csv", gl_tempered(x0, alpha, w))
    elif target == "fig3":
        for alpha in REPRO_ALPHAS:
            base = gl_tempered(x0, alpha, preset_weight("case1", x0.grid)).body
            for case in REPRO_CASES:
                y = gl_tempered(x0, alpha, preset_weight(case, x0.grid))
                delta = Signal(y.grid, np.concatenate([[0.0], y.body - base]))
                emit(f"fig3_{case}_minus_case1_{_alpha_label(alpha)}.csv", delta)
    elif target == "fig4":
        for case in REPRO_CASES:
            w = preset_weight(case, x1.grid)
            emit(f"fig4_{case}_gl.csv", gl_tempered(x1, 0.5, w))
            emit(f"fig4_{case}_rl.csv", rl_tempered(x1, 0.5, w))
            emit(f"fig4_{case}_caputo.csv", caputo_tempered(x1, 0.5, w))
    elif target == "error-table":
        lines = ["case,min_gl_minus_rl,max_gl_minus_rl"]
        for case in REPRO_CASES:
            w = preset_weight(case, x1.grid)
            diff = gl_tempered(x1, 0.5, w).body - rl_tempered(x1, 0.5, w).body
            lines.append(f"{case},{float(np.min(diff))!r},{float(np.max(diff))!r}")
        _atomic_write_text(os.path.join(outdir, "error_table.csv"), "\n".join(lines) + "\n")
    else:
        raise ConfigError(f"unknown repro target {target!r}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _add_grid_args(p: argparse.ArgumentParser, default_n: int = 100) -> None:
    p.add_argument("--signal", required=True, help="built-in name or CSV path")
    p.add_argument("--weight", default="one", help="built-in name or CSV path")
    p.add_argument("--a", type=float, default=0.0, help="base point")
    p.add_argument("--N", type=int, default=default_n, help="horizon length")
    p.add_argument(
        "--history",
        type=int,
        default=None,
        help="stored points below the base (default: what the operator needs)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nt", description="nabla tempered fractional calculus toolkit"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", help="apply an operator to a signal, write CSV")
    p.add_argument("--kind", choices=sorted(KINDS), required=True)
    p.add_argument("--order", type=float, required=True)
    _add_grid_args(p)
    p.add_argument("--out", required=True)

    p = sub.add_parser("taylor", help="evaluate an operator via a series representation")
    p.add_argument("--kind", choices=sorted(KINDS), required=True)
    p.add_argument("--order", type=float, required=True)
    _add_grid_args(p, default_n=16)
    p.add_argument("--rep", choices=("initial", "current", "future"), default="current")
    p.add_argument("--degree", type=int, default=5, help="expansion degree K")
    p.add_argument("--out", required=True)

    p = sub.add_parser("verify", help="run the identity suite, write a JSON report")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--only", default=None, help="run only matching identity groups")
    p.add_argument(
        "--perturb",
        type=float,
        default=None,
        help="inject an additive fault into the single-sum operator",
    )
    p.add_argument("--out", default=None)

    p = sub.add_parser("solve", help="step the tempered relaxation equation")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--weight", default="one")
    p.add_argument("--x0", type=float, required=True)
    p.add_argument("--a", type=float, default=0.0)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("laplace", help="transform evaluation / rule checks")
    _add_grid_args(p, default_n=2000)
    p.add_argument("--s-re", type=float, required=True)
    p.add_argument("--s-im", type=float, default=0.0)
    p.add_argument("--rule", choices=("gl", "rl", "caputo", "int"), default=None)
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--order", type=float, default=0.5)

    p = sub.add_parser("repro", help="emit the reference experiment datasets")
    p.add_argument("target", choices=("fig1", "fig2", "fig3", "fig4", "error-table"))
    p.add_argument("--outdir", required=True)

    return parser


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig(command=args.command)
    if hasattr(args, "kind") and args.kind is not None:
        cfg.kind = KINDS[args.kind]
    for name, attr in (
        ("order", "order"),
        ("signal", "signal"),
        ("weight", "weight"),
        ("a", "a"),
        ("N", "horizon"),
        ("history", "history"),
        ("out", "out"),
        ("seed", "seed"),
    ):
        if hasattr(args, name) and getattr(args, name) is not None:
            setattr(cfg, attr, getattr(args, name))
    for name in ("only", "perturb", "rep", "degree", "alpha", "mu", "x0", "rule", "lam", "target", "outdir"):
        if hasattr(args, name):
            cfg.extra[name] = getattr(args, name)
    if hasattr(args, "s_re"):
        cfg.extra["s_re"] = args.s_re
        cfg.extra["s_im"] = args.s_im
    if cfg.command == "laplace" and args.rule is not None and args.lam is None:
        raise ConfigError("--rule needs --lambda")
    if getattr(args, "N", 1) is not None and getattr(args, "N", 1) < 1:
        raise ConfigError("--N must be >= 1")
    return cfg


COMMANDS = {
    "eval": cmd_eval,
    "taylor": cmd_taylor,
    "verify": cmd_verify,
    "solve": cmd_solve,
    "laplace": cmd_laplace,
    "repro": cmd_repro,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _config_from_args(args)
    except ConfigError as exc:
        print(f"nt: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return COMMANDS[cfg.command](cfg)
    except (ConfigError, UnknownPreset) as exc:
        print(f"nt: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NablaError as exc:
        print(f"nt: numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
