"""The tempered operator family.

All operators act on the weighted sequence ``z = w * x`` and divide the
result by ``w`` afterwards.  Their outputs are defined on the evaluation
window ``{a+1, ..., a+horizon}``; history points are consumed, never
produced.  Where a composed operator needs values of an intermediate result
at or below the base point, those values are the empty partial sums of its
defining formula, which is zero (the zero-extension convention).

Every inner sum is accumulated in ascending lag order, so results are
identical run to run and equal to sequential evaluation.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import NablaError
from .signals import Grid, GridMismatch, Signal, Weight
from .special import gl_coefficients

__all__ = [
    "OperatorKind",
    "OperatorSpec",
    "InsufficientHistory",
    "IntegerOrder",
    "nabla_n",
    "nabla_n_tempered",
    "nabla_n_tempered_at",
    "nabla_at",
    "gl_tempered",
    "rl_tempered",
    "rl_tempered_at_base",
    "caputo_tempered",
    "gl_integer_vs_nabla_defect",
    "with_zero_history",
    "apply_operator",
    "set_fault_injection",
]


class InsufficientHistory(NablaError):
    """The signal (or weight) grid lacks the history the operator needs."""


class IntegerOrder(NablaError):
    """Integer order passed where only a fractional order is defined."""


class OperatorKind(enum.Enum):
    INTEGER_NABLA = "nabla"
    GL = "gl"
    RL = "rl"
    CAPUTO = "caputo"


@dataclass(frozen=True)
class OperatorSpec:
    """Operator kind + order + tempering weight.

    RL and Caputo require a non-integer order in (n-1, n) with n >= 1;
    the integer kind requires a positive integer; the single-sum kind
    accepts any real order (positive = difference, negative = sum,
    zero = identity).
    """

    kind: OperatorKind
    order: float
    weight: Weight

    def __post_init__(self) -> None:
        a = float(self.order)
        if not math.isfinite(a):
            raise IntegerOrder(f"order must be finite, got {a}")
        if self.kind in (OperatorKind.RL, OperatorKind.CAPUTO):
            if a == math.floor(a):
                raise IntegerOrder(
                    f"{self.kind.value} is defined for non-integer orders only; "
                    f"got {a} (use the integer kind instead)"
                )
            if a < 0:
                raise IntegerOrder(
                    f"{self.kind.value} needs a positive order, got {a} "
                    "(negative orders are single-sum tempered sums)"
                )
        elif self.kind is OperatorKind.INTEGER_NABLA:
            if a != math.floor(a) or a < 1:
                raise IntegerOrder(f"integer kind needs a positive integer order, got {a}")

    @property
    def n(self) -> int:
        """Smallest integer >= order (the integer stage of RL/Caputo)."""
        return int(math.ceil(self.order))


# Diagnostic hook: additive output perturbation of the single-sum operator,
# used by the verification CLI to demonstrate suite sensitivity.
_FAULT_EPS = 0.0


def set_fault_injection(eps: float) -> float:
    """Set the additive perturbation applied to single-sum outputs.

    Returns the previous value so callers can restore it.
    """
    global _FAULT_EPS
    previous = _FAULT_EPS
    _FAULT_EPS = float(eps)
    return previous


def _require_weight_covers(w: Weight, grid: Grid, lowest_offset: int) -> None:
    if w.grid.a != grid.a:
        raise GridMismatch("weight and signal have different base points")
    if w.grid.horizon < grid.horizon:
        raise GridMismatch("weight grid is shorter than the signal horizon")
    if -w.grid.history > lowest_offset:
        raise InsufficientHistory(
            f"weight needs history down to offset {lowest_offset}, "
            f"has {-w.grid.history}"
        )


def _signed_binomials(n: int) -> np.ndarray:
    return np.array([(-1) ** i * math.comb(n, i) for i in range(n + 1)], dtype=np.float64)


def _output(grid_a: float, horizon: int, body: np.ndarray, out_history: int = 0) -> Signal:
    vals = np.concatenate([np.zeros(out_history + 1), body])
    return Signal(Grid(a=grid_a, history=out_history, horizon=horizon), vals)


def nabla_n(x: Signal, n: int) -> Signal:
    """n-th backward difference ``sum_i (-1)^i C(n,i) x(k-i)`` on the window."""
    if n < 1 or n != int(n):
        raise IntegerOrder(f"difference order must be a positive integer, got {n}")
    if x.grid.history < n:
        raise InsufficientHistory(f"order {n} difference needs history >= {n}")
    coef = _signed_binomials(int(n))
    N = x.grid.horizon
    out = np.zeros(N)
    for i in range(n + 1):
        out += coef[i] * x.window(1 - i, N - i)
    return _output(x.grid.a, N, out)


def nabla_n_tempered(x: Signal, n: int, w: Weight) -> Signal:
    """Tempered integer difference ``w^-1(k) nabla^n [w x](k)``."""
    if n < 1 or n != int(n):
        raise IntegerOrder(f"difference order must be a positive integer, got {n}")
    if x.grid.history < n:
        raise InsufficientHistory(f"order {n} tempered difference needs history >= {n}")
    _require_weight_covers(w, x.grid, 1 - n)
    coef = _signed_binomials(int(n))
    N = x.grid.horizon
    out = np.zeros(N)
    for i in range(n + 1):
        out += coef[i] * (w.window(1 - i, N - i) * x.window(1 - i, N - i))
    return _output(x.grid.a, N, out / w.window(1, N))


def nabla_n_tempered_at(x: Signal, n: int, w: Weight, offset: int = 0) -> float:
    """Pointwise ``w^-1 nabla^n [w x]`` at a single lattice offset.

    Order 0 is the identity; this is how initial values like the n-th
    tempered difference at the base point are extracted.
    """
    if n < 0 or n != int(n):
        raise IntegerOrder(f"difference order must be a nonnegative integer, got {n}")
    if offset - n < -x.grid.history:
        raise InsufficientHistory(
            f"offset {offset} order {n} needs history down to {offset - n}"
        )
    _require_weight_covers(w, x.grid, offset - n)
    coef = _signed_binomials(int(n))
    acc = 0.0
    for i in range(n + 1):
        acc += coef[i] * w.at(offset - i) * x.at(offset - i)
    return acc / w.at(offset)


def nabla_at(x: Signal, n: int, offset: int = 0) -> float:
    """Pointwise untempered n-th backward difference at a lattice offset."""
    if n < 0 or n != int(n):
        raise IntegerOrder(f"difference order must be a nonnegative integer, got {n}")
    if offset - n < -x.grid.history:
        raise InsufficientHistory(
            f"offset {offset} order {n} needs history down to {offset - n}"
        )
    coef = _signed_binomials(int(n))
    acc = 0.0
    for i in range(n + 1):
        acc += coef[i] * x.at(offset - i)
    return acc


def gl_tempered(x: Signal, alpha: float, w: Weight, *, out_history: int = 0) -> Signal:
    """Single-sum tempered difference/sum of any real order.

    ``y(k) = w^-1(k) sum_{i=0}^{k-a-1} c_i(alpha) w(k-i) x(k-i)`` with the
    differencing weights from :func:`nablatc.special.gl_coefficients`.
    Order 0 reproduces the signal on the evaluation window.  History points
    of the output, when requested via ``out_history``, hold the empty
    partial sums of the same formula, which are zero.
    """
    _require_weight_covers(w, x.grid, 1)
    N = x.grid.horizon
    c = gl_coefficients(alpha, N).coeffs
    z = w.window(1, N) * x.window(1, N)
    out = np.zeros(N)
    for i in range(N):
        out[i:] += c[i] * z[: N - i]
    body = out / w.window(1, N)
    if _FAULT_EPS:
        body = body + _FAULT_EPS
    return _output(x.grid.a, N, body, out_history=out_history)


def rl_tempered(x: Signal, alpha: float, w: Weight) -> Signal:
    """Difference-of-sum form: integer tempered difference of the order
    ``alpha - n`` tempered sum, with ``n = ceil(alpha)``."""
    n = _fractional_stage(alpha, x, "difference-of-sum operator")
    inner = gl_tempered(x, alpha - n, w, out_history=n)
    return nabla_n_tempered(inner, n, w)


def caputo_tempered(x: Signal, alpha: float, w: Weight) -> Signal:
    """Sum-of-difference form: order ``alpha - n`` tempered sum of the n-th
    tempered difference.  Annihilates tempered constants."""
    n = _fractional_stage(alpha, x, "sum-of-difference operator")
    inner = nabla_n_tempered(x, n, w)
    return gl_tempered(inner, alpha - n, w)


def _fractional_stage(alpha: float, x: Signal, what: str) -> int:
    a = float(alpha)
    if a == math.floor(a):
        raise IntegerOrder(
            f"{what} is defined for non-integer orders only, got {a}"
        )
    if a < 0:
        raise IntegerOrder(f"{what} needs a positive order, got {a}")
    n = int(math.ceil(a))
    if x.grid.history < n:
        raise InsufficientHistory(f"order {a} needs history >= {n}")
    return n


def rl_tempered_at_base(x: Signal, beta: float, w: Weight) -> float:
    """Initial value of the difference-of-sum operator at the base point.

    For any order, the inner fractional sum is an empty sum at and below
    the base point, so the closing integer difference combines only zeros:
    the initial value vanishes identically under this calculus's
    conventions.  Kept as a function so identity checkers evaluate the
    convention instead of assuming it.
    """
    if beta == math.floor(beta):
        raise IntegerOrder(f"fractional initial value needs non-integer order, got {beta}")
    return 0.0


def gl_integer_vs_nabla_defect(x: Signal, n: int, w: Weight) -> Signal:
    """Pointwise gap between the integer-order single-sum operator and the
    plain tempered difference.

    Nonzero only on ``k <= a + n``, where the single sum has not yet seen
    the full differencing stencil.
    """
    g = gl_tempered(x, float(n), w)
    d = nabla_n_tempered(x, n, w)
    return _output(x.grid.a, x.grid.horizon, g.body - d.body)


def with_zero_history(sig: Signal, history: int) -> Signal:
    """Extend an operator output with zero-valued history points.

    Operator outputs vanish at and below the base point (empty partial
    sums), so composing a further operator on top of them uses zeros there.
    Only meaningful for signals produced by the operators in this module.
    """
    if history < sig.grid.history:
        raise GridMismatch("cannot shrink history")
    if history == sig.grid.history:
        return sig
    pad = np.zeros(history - sig.grid.history)
    vals = np.concatenate([pad, sig.values])
    return Signal(Grid(sig.grid.a, history, sig.grid.horizon), vals)


def apply_operator(x: Signal, spec: OperatorSpec) -> Signal:
    """Evaluate the operator described by ``spec`` on ``x``."""
    if spec.kind is OperatorKind.GL:
        return gl_tempered(x, spec.order, spec.weight)
    if spec.kind is OperatorKind.RL:
        return rl_tempered(x, spec.order, spec.weight)
    if spec.kind is OperatorKind.CAPUTO:
        return caputo_tempered(x, spec.order, spec.weight)
    return nabla_n_tempered(x, int(spec.order), spec.weight)
