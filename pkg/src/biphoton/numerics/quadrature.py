"""Adaptive Gauss-Kronrod (G10/K21) quadrature over finite intervals.

The integrand is called with a 1-D array of abscissae and must return an
array whose leading axis matches it; trailing axes are integrated
component-wise (vector-valued and complex integrands are supported).
Refinement is global: at every pass the intervals carrying the largest share
of the error estimate are bisected together, so each pass costs a single
vectorised call of the integrand.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np

from biphoton.errors import QuadratureError

# QUADPACK qk21 abscissae (non-negative half) and weights.
_XGK = np.array([
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077600525709866,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
])
_WG = np.array([
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
])

# Full 21-point rule on [-1, 1]; Gauss nodes are the odd entries of _XGK.
NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
KRONROD_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
GAUSS_WEIGHTS = np.zeros(21)
GAUSS_WEIGHTS[[1, 3, 5, 7, 9]] = _WG
GAUSS_WEIGHTS[[11, 13, 15, 17, 19]] = _WG[::-1]

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class QuadratureSettings:
    """Tolerances and limits for :func:`integrate`.

    ``truncation_bound`` is the number of filter half-widths Z kept on
    either side of a Gaussian filter's centre when an infinite domain is cut
    to a finite one.
    """

    rel_tol: float = 1e-9
    abs_tol: float = 0.0
    max_subdivisions: int = 20000
    truncation_bound: float = 8.0

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ValueError(f"rel_tol must be > 0, got {self.rel_tol}")
        if self.abs_tol < 0:
            raise ValueError(f"abs_tol must be >= 0, got {self.abs_tol}")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")
        if not self.truncation_bound > 0:
            raise ValueError("truncation_bound must be > 0")


DEFAULT_SETTINGS = QuadratureSettings()


class QuadratureResult(NamedTuple):
    value: np.ndarray | float | complex
    error: float
    intervals: int


def _rule(f, lo, hi):
    center = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    x = (center[:, None] + half[:, None] * NODES[None, :]).ravel()
    fx = np.asarray(f(x))
    if fx.shape[0] != x.shape[0]:
        raise ValueError("integrand must return an array with leading axis len(x)")
    fx = fx.reshape((lo.size, NODES.size) + fx.shape[1:])
    extra = (None,) * (fx.ndim - 2)
    hk = half[(slice(None),) + extra]
    wk = KRONROD_WEIGHTS[(None, slice(None)) + extra]
    wg = GAUSS_WEIGHTS[(None, slice(None)) + extra]
    kron = hk * np.sum(wk * fx, axis=1)
    gauss = hk * np.sum(wg * fx, axis=1)
    diff = np.abs(kron - gauss)
    resabs = np.abs(hk) * np.sum(wk * np.abs(fx), axis=1)
    if diff.ndim > 1:
        diff = diff.reshape(lo.size, -1).max(axis=1)
        resabs = resabs.reshape(lo.size, -1).max(axis=1)
    return kron, diff, resabs


def _norm(value) -> float:
    return float(np.max(np.abs(value))) if np.ndim(value) else float(abs(value))


def integrate(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    settings: QuadratureSettings = DEFAULT_SETTINGS,
    *,
    breakpoints: Sequence[float] = (),
    max_width: float | None = None,
) -> QuadratureResult:
    """Integrate ``f`` over ``[a, b]``.

    ``breakpoints`` inside the interval are used as initial edges, and
    ``max_width`` caps the width of the initial pieces (useful for
    oscillatory integrands whose period is known). Returns the value, the
    summed error estimate and the number of intervals used. Raises
    :class:`QuadratureError` when the interval budget is exhausted before
    the error estimate drops below ``max(rel_tol*|value|, abs_tol)``.
    """
    a = float(a)
    b = float(b)
    if not (np.isfinite(a) and np.isfinite(b)):
        raise ValueError("integration limits must be finite")
    if a == b:
        zero = np.asarray(f(np.array([a])))[0] * 0.0
        return QuadratureResult(zero if np.ndim(zero) else zero.item(), 0.0, 0)
    sign = 1.0
    if b < a:
        a, b, sign = b, a, -1.0

    edges = [a] + sorted(p for p in breakpoints if a < p < b) + [b]
    if max_width is not None and max_width > 0:
        refined = [edges[0]]
        for left, right in zip(edges[:-1], edges[1:]):
            n = max(1, int(np.ceil((right - left) / max_width)))
            refined.extend(np.linspace(left, right, n + 1)[1:])
        edges = refined
    edges = np.asarray(edges, dtype=float)
    if edges.size - 1 > settings.max_subdivisions:
        raise QuadratureError(
            f"initial partition ({edges.size - 1} pieces) exceeds max_subdivisions",
            intervals=edges.size - 1,
        )

    lo, hi = edges[:-1], edges[1:]
    vals, errs, absv = _rule(f, lo, hi)
    while True:
        total = vals.sum(axis=0)
        err = float(errs.sum())
        target = max(settings.rel_tol * _norm(total), settings.abs_tol)
        # below this the estimate is dominated by rounding, not truncation
        target = max(target, 50.0 * _EPS * float(absv.sum()))
        if err <= target:
            value = sign * total
            return QuadratureResult(value if np.ndim(value) else value.item(), err, lo.size)
        room = settings.max_subdivisions - lo.size
        if room <= 0:
            raise QuadratureError(
                f"no convergence after {lo.size} subintervals: "
                f"error estimate {err:.3e} > target {target:.3e}",
                value=sign * total,
                error=err,
                intervals=lo.size,
            )
        order = np.argsort(-errs, kind="stable")
        cum = np.cumsum(errs[order])
        k = int(np.searchsorted(cum, err - 0.5 * target)) + 1
        k = max(1, min(k, room, lo.size))
        split = np.zeros(lo.size, dtype=bool)
        split[order[:k]] = True

        mid = 0.5 * (lo[split] + hi[split])
        new_lo = np.concatenate([lo[split], mid])
        new_hi = np.concatenate([mid, hi[split]])
        nv, ne, na = _rule(f, new_lo, new_hi)
        keep = ~split
        lo = np.concatenate([lo[keep], new_lo])
        hi = np.concatenate([hi[keep], new_hi])
        vals = np.concatenate([vals[keep], nv])
        errs = np.concatenate([errs[keep], ne])
        absv = np.concatenate([absv[keep], na])
        # keep a canonical order so sums are reproducible
        idx = np.argsort(lo, kind="stable")
        lo, hi, vals, errs, absv = lo[idx], hi[idx], vals[idx], errs[idx], absv[idx]


def gauss_legendre_panels(a: float, b: float, panels: int, order: int = 16):
    """Nodes and weights of a composite Gauss-Legendre rule on ``[a, b]``."""
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    center = 0.5 * (edges[:-1] + edges[1:])
    nodes = (center[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights
