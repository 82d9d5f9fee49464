"""Temperature sweeps and placement of the slope a from a peak temperature."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from biphoton.errors import BiphotonError
from biphoton.experiment.config import CrystalConfig, SweepRow, m_of_temperature, resolve_filter
from biphoton.model import FilterSpec, HwpAngles, OperatingPoint
from biphoton.numerics.quadrature import QuadratureSettings
from biphoton.physics import correlation_from_rates, pair_integrals, rates_from_integrals

MEASURED_PEAK_TEMPERATURES = (28.6, 25.0, 21.8)


def temperature_grid(t_min: float, t_max: float, step: float) -> np.ndarray:
    """t_min, t_min + step, ... up to t_max inclusive (within rounding)."""
    if not step > 0:
        raise ValueError("step must be > 0")
    if t_max < t_min:
        raise ValueError("t_max must be >= t_min")
    count = int(math.floor((t_max - t_min) / step + 1e-9)) + 1
    return np.round(t_min + step * np.arange(count), 10)


def temperature_sweep(
    config: CrystalConfig,
    filt,
    T_range,
    step: float,
    angles: HwpAngles | None = None,
    settings: QuadratureSettings | None = None,
) -> list[SweepRow]:
    """Correlation and rates over a temperature grid, one row per temperature.

    ``filt`` may be a FilterSpec or a PhysicalFilter. ``relative_rate`` is
    I1 normalised to its value at T_opt. A row whose quadrature fails keeps
    its T and m, carries NaN elsewhere and records the message in ``error``.
    """
    spec = resolve_filter(config, filt)
    angles = angles or HwpAngles.diagonal()
    temps = temperature_grid(T_range[0], T_range[1], step)
    peak = pair_integrals(OperatingPoint(0.0, config.d), spec, settings=settings).i1
    rows = []
    for T in temps:
        m = float(m_of_temperature(config, T))
        try:
            pi = pair_integrals(OperatingPoint(m, config.d), spec, settings=settings)
            rates = rates_from_integrals(angles, pi)
            E = correlation_from_rates(rates)
            rows.append(SweepRow(float(T), m, E, pi.i1, pi.i2, rates.rpp, rates.rpm, pi.i1 / peak))
        except BiphotonError as exc:
            nan = float("nan")
            rows.append(SweepRow(float(T), m, nan, nan, nan, nan, nan, nan, error=str(exc)))
    return rows


def correlation_peak(spec: FilterSpec, order: int, d: float = -1.0, half_width: float = 3.0):
    """(m, E) of the correlation maximum nearest m = 4 pi * order."""
    centre = 4.0 * math.pi * order

    def negative_E(m):
        pi = pair_integrals(OperatingPoint(m, d), spec)
        return pi.i2 / pi.i1

    res = minimize_scalar(
        negative_E,
        bounds=(centre - half_width, centre + half_width),
        method="bounded",
        options={"xatol": 1e-8},
    )
    return float(res.x), float(-res.fun)


@dataclass(frozen=True)
class SlopeCalibration:
    slope_a: float
    order: int
    peak_m: float
    predicted_peaks: tuple
    mismatch: float


def calibrate_slope(
    config: CrystalConfig,
    filt,
    peak_temperatures=MEASURED_PEAK_TEMPERATURES,
    orders=range(1, 7),
) -> SlopeCalibration:
    """Place a correlation maximum at ``peak_temperatures[0]``.

    For each candidate order n the slope is set so that the maximum near
    m = 4 pi n lands on the first temperature; the order whose next maxima
    best reproduce the remaining temperatures (least squares) is kept.
    """
    spec = resolve_filter(config, filt)
    temps = list(peak_temperatures)
    if not temps:
        raise ValueError("need at least one peak temperature")
    offsets = [config.T_opt - t for t in temps]
    if any(o <= 0 for o in offsets):
        raise ValueError("peak temperatures must lie below T_opt")
    best = None
    for n in orders:
        peaks = [correlation_peak(spec, n + k, config.d)[0] for k in range(len(temps))]
        a = peaks[0] / (offsets[0] * config.delay_DL)
        predicted = tuple(config.T_opt - p / (a * config.delay_DL) for p in peaks)
        mismatch = math.sqrt(sum((p - t) ** 2 for p, t in zip(predicted, temps)) / len(temps))
        if best is None or mismatch < best.mismatch:
            best = SlopeCalibration(a, n, peaks[0], predicted, mismatch)
    return best
