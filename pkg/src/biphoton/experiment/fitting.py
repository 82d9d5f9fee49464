"""Least-squares fit of the temperature slope a (and optionally T_opt) to E(T) data."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.ndimage import minimum_filter
from scipy.optimize import minimize, minimize_scalar

from biphoton.errors import AmbiguityError
from biphoton.experiment.config import CrystalConfig, MeasuredPoint, resolve_filter
from biphoton.model import FilterSpec, OperatingPoint, sinc_half
from biphoton.physics import pair_integrals, pair_integrals_batch

DEFAULT_A_RANGE = (1e10, 1e14)
# grid spacing keeps the detuning change at the farthest data point below this
GRID_DM = 0.25
TABLE_STEP = 0.1
MIN_POINTS = 5
MIN_CURVATURE = 1e-3
TIE_FRACTION = 1e-3
T_OPT_WINDOW = 2.0
T_OPT_STEP = 0.1

_tables: dict = {}


@dataclass(frozen=True)
class FitResult:
    slope_a: float
    T_opt: float
    residual: float
    n_points: int
    fitted_T_opt: bool = False
    candidates: tuple = ()


def correlation_table(spec: FilterSpec, d: float, m_max: float) -> CubicSpline:
    """Cubic spline of the diagonal correlation E(m) on [0, m_max], cached per filter."""
    top = TABLE_STEP * 2 ** math.ceil(math.log2(max(m_max, 1.0) / TABLE_STEP + 1))
    key = (spec, d)
    cached = _tables.get(key)
    if cached is not None and cached[0] >= top:
        return cached[1]
    m = np.arange(0.0, top + TABLE_STEP / 2, TABLE_STEP)
    if spec.kind == "none" and d == -1.0:
        # a flat spectrum gives I2 / I1 = sinc_half(m) exactly
        E = -sinc_half(m)
    else:
        i1, i2 = pair_integrals_batch(m, spec, d)
        E = -i2 / i1
    spline = CubicSpline(m, E, bc_type=((1, 0.0), "not-a-knot"))
    _tables[key] = (top, spline)
    return spline


def _slope_grid(a_lo: float, a_hi: float, span: float, delay: float) -> np.ndarray:
    values = [a_lo]
    a = a_lo
    while a < a_hi:
        a *= 1.0 + min(GRID_DM / (a * span * delay), 0.05)
        values.append(min(a, a_hi))
    return np.array(values)


class _Objective:
    def __init__(self, data, config, spec, m_max):
        self.T = np.array([p.T for p in data])
        self.E = np.array([p.E for p in data])
        self.w = np.array([1.0 / p.sigma**2 if p.sigma else 1.0 for p in data])
        self.delay = config.delay_DL
        self.d = config.d
        self.spec = spec
        self.table = correlation_table(spec, config.d, m_max)

    def many(self, a, T_opt):
        a = np.asarray(a, dtype=float)
        out = np.empty(a.size)
        offsets = (self.T - T_opt) * self.delay
        step = max(1, 400_000 // self.T.size)
        for start in range(0, a.size, step):
            m = np.abs(a[start:start + step, None] * offsets[None, :])
            out[start:start + step] = ((self.table(m) - self.E) ** 2) @ self.w
        return out

    def __call__(self, a, T_opt):
        return float(self.many([a], T_opt)[0])

    def exact(self, a, T_opt):
        total = 0.0
        for T, E, w in zip(self.T, self.E, self.w):
            pi = pair_integrals(OperatingPoint(a * (T - T_opt) * self.delay, self.d), self.spec)
            total += w * (pi.diagonal_correlation - E) ** 2
        return total


def _distinct(a1, t1, a2, t2):
    return abs(math.log(a1 / a2)) > 0.01 or abs(t1 - t2) > 0.3


def fit_slope(
    data,
    config: CrystalConfig,
    filt,
    fit_T_opt: bool = False,
    a_range=DEFAULT_A_RANGE,
) -> FitResult:
    """Fit a (and T_opt if requested) by weighted least squares on E(T).

    Weights are 1/sigma^2 for points carrying sigma, 1 otherwise. A coarse
    grid over a in ``a_range`` (spaced so the detuning at the farthest data
    point moves by at most 0.25 between nodes) locates the basin; a
    golden-section search in log a polishes it. With ``fit_T_opt`` the grid
    is two-dimensional over T_opt +- 2 degC and the polish is a simplex
    search in (log a, T_opt).

    Raises :class:`AmbiguityError` for fewer than 5 points, a flat residual
    at the optimum, or a competing distinct minimum whose residual is within
    1e-3 of the total weight of the best one.
    """
    data = [p if isinstance(p, MeasuredPoint) else MeasuredPoint(*p) for p in data]
    if len(data) < MIN_POINTS:
        raise AmbiguityError(f"{len(data)} data points cannot identify the slope; need >= {MIN_POINTS}")
    spec = resolve_filter(config, filt)
    a_lo, a_hi = a_range
    if not 0 < a_lo < a_hi:
        raise ValueError("a_range must satisfy 0 < a_lo < a_hi")

    temps = np.array([p.T for p in data])
    window = T_OPT_WINDOW if fit_T_opt else 0.0
    span = float(np.max(np.abs(temps - config.T_opt))) + window
    if span == 0:
        raise AmbiguityError("all data sit at T_opt; the slope does not enter the model")
    m_max = a_hi * span * config.delay_DL
    obj = _Objective(data, config, spec, m_max)
    grid_a = _slope_grid(a_lo, a_hi, span, config.delay_DL)
    total_weight = float(obj.w.sum())
    tie = TIE_FRACTION * total_weight

    if not fit_T_opt:
        R = obj.many(grid_a, config.T_opt)
        interior = np.flatnonzero((R[1:-1] <= R[:-2]) & (R[1:-1] <= R[2:])) + 1
        minima = sorted({int(i) for i in interior} | {int(np.argmin(R))}, key=lambda i: R[i])
        best = minima[0]
        lo_i, hi_i = max(best - 1, 0), min(best + 1, grid_a.size - 1)

        def along(log_a):
            return obj(math.exp(log_a), config.T_opt)

        if 0 < best < grid_a.size - 1:
            res = minimize_scalar(
                along,
                bracket=(math.log(grid_a[lo_i]), math.log(grid_a[best]), math.log(grid_a[hi_i])),
                method="golden",
                tol=1e-12,
            )
            a_best = math.exp(res.x)
        else:
            a_best = float(grid_a[best])
        T_best = config.T_opt
        grid_minima = [(float(grid_a[i]), config.T_opt, float(R[i])) for i in minima]
    else:
        t_grid = config.T_opt + np.arange(-window, window + T_OPT_STEP / 2, T_OPT_STEP)
        R = np.array([obj.many(grid_a, t) for t in t_grid])
        is_min = R <= minimum_filter(R, size=3, mode="nearest")
        idx = np.argwhere(is_min)
        order = np.argsort(R[is_min], kind="stable")
        grid_minima = [
            (float(grid_a[j]), float(t_grid[i]), float(R[i, j])) for i, j in idx[order]
        ]
        a0, t0, _ = grid_minima[0]

        def both(x):
            return obj(math.exp(x[0]), x[1])

        res = minimize(
            both,
            x0=[math.log(a0), t0],
            method="Nelder-Mead",
            options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 4000,
                     "initial_simplex": [[math.log(a0), t0],
                                         [math.log(a0) + 1e-3, t0],
                                         [math.log(a0), t0 + 0.05]]},
        )
        a_best, T_best = math.exp(res.x[0]), float(res.x[1])

    best_R = obj(a_best, T_best)
    rivals = [
        c for c in grid_minima[1:]
        if c[2] - best_R <= tie and _distinct(c[0], c[1], a_best, T_best)
    ]
    candidates = tuple([(a_best, T_best, best_R)] + rivals)
    if rivals:
        raise AmbiguityError(
            f"{len(rivals) + 1} distinct minima with residuals within {tie:.3g}", candidates
        )

    curvature = _relative_curvature(obj, a_best, T_best, fit_T_opt, span, total_weight)
    if curvature < MIN_CURVATURE:
        raise AmbiguityError(
            f"residual is flat at the optimum (relative curvature {curvature:.2e})", candidates
        )
    return FitResult(
        slope_a=a_best,
        T_opt=T_best,
        residual=obj.exact(a_best, T_best),
        n_points=len(data),
        fitted_T_opt=fit_T_opt,
        candidates=candidates,
    )


def _relative_curvature(obj, a, T, two_d, span, total_weight):
    """Smallest curvature of the residual in (log a, T_opt / span) per unit weight."""
    h = 1e-4
    x0 = np.array([math.log(a), T / span])

    def f(x):
        return obj(math.exp(x[0]), x[1] * span)

    dims = 2 if two_d else 1
    H = np.zeros((dims, dims))
    f0 = f(x0)
    for i in range(dims):
        for j in range(i, dims):
            e_i = np.eye(2)[i] * h
            e_j = np.eye(2)[j] * h
            if i == j:
                H[i, i] = (f(x0 + e_i) - 2 * f0 + f(x0 - e_i)) / h**2
            else:
                H[i, j] = H[j, i] = (
                    f(x0 + e_i + e_j) - f(x0 + e_i - e_j) - f(x0 - e_i + e_j) + f(x0 - e_i - e_j)
                ) / (4 * h**2)
    return float(np.linalg.eigvalsh(H).min()) / total_weight


def synthetic_data(config: CrystalConfig, filt, temperatures, noise: float = 0.0, rng=None):
    """Model E(T) at the given temperatures, optionally with Gaussian noise clipped to [-1, 1]."""
    spec = resolve_filter(config, filt)
    rng = rng if rng is not None else np.random.default_rng(0)
    out = []
    for T in temperatures:
        m = config.slope_a * (T - config.T_opt) * config.delay_DL
        E = pair_integrals(OperatingPoint(m, config.d), spec).diagonal_correlation
        if noise:
            E = float(np.clip(E + rng.normal(0.0, noise), -1.0, 1.0))
        out.append(MeasuredPoint(float(T), E, noise or None))
    return out


def apply_fit(config: CrystalConfig, result: FitResult) -> CrystalConfig:
    return replace(config, slope_a=result.slope_a, T_opt=result.T_opt)
