"""Brute-force coincidence rates from the two-photon amplitude in time.

Independent of the closed forms in :mod:`biphoton.physics`: the amplitude
for each analyser outcome is assembled on a grid of the time difference
s = tau_- / (DL) by direct frequency quadrature of the filtered spectral
amplitude, squared, and integrated over s. Nothing here uses sinc_half,
the (I1, I2) reduction or the general-angle coefficient algebra beyond the
half-wave-plate projection itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from biphoton.errors import OracleResolutionError
from biphoton.model import FilterSpec, HwpAngles, OperatingPoint
from biphoton.numerics.quadrature import gauss_legendre_panels

# band [-2, 1] in s is where the grid density is specified
_REFERENCE_SPAN = 3.0
_MIN_GRID = 200


@dataclass(frozen=True)
class OracleResult:
    """Oracle rates in units of R0 plus a two-grid error estimate."""

    rpp: float
    rpm: float
    rmp: float
    rmm: float
    grid_resolution: int
    estimated_error: float

    @property
    def total(self) -> float:
        return self.rpp + self.rpm + self.rmp + self.rmm

    def as_tuple(self):
        return (self.rpp, self.rpm, self.rmp, self.rmm)


def spectral_amplitude(zeta):
    """(1 - e^{-i zeta}) / (i zeta), the crystal's phase-matching amplitude."""
    zeta = np.asarray(zeta, dtype=float)
    small = np.abs(zeta) < 1e-6
    safe = np.where(small, 1.0, zeta)
    direct = -np.expm1(-1j * safe) / (1j * safe)
    series = 1.0 - 0.5j * zeta - zeta * zeta / 6.0
    return np.where(small, series, direct)


def _frequency_cutoff(filt: FilterSpec, step: float) -> float:
    if filt.kind == "gaussian":
        return 6.0 * filt.Z  # G^2 = exp(-72) beyond
    if filt.kind == "rectangular":
        return filt.Z
    return 0.5 * math.pi / step


def _time_margin(filt: FilterSpec) -> float:
    if filt.kind == "gaussian":
        return 12.5 / filt.Z + 0.5
    if filt.kind == "rectangular":
        return min(max(4.0, 60.0 / filt.Z), 400.0)
    # truncated flat spectrum: ringing beyond the band falls off like 1/(U s)^2
    return 1.0


def _default_grid(filt: FilterSpec) -> int:
    if filt.kind == "none":
        return 1200
    cutoff = _frequency_cutoff(filt, 1.0)
    # keep the coarse (grid/2) pass alias-free: 2 h U <= 0.8 pi
    need = int(math.ceil(_REFERENCE_SPAN * 2.5 * cutoff / math.pi))
    grid = max(400, need)
    return grid + grid % 2


@lru_cache(maxsize=64)
def _envelopes(m: float, d: float, filt: FilterSpec, grid: int):
    """Time grid, trapezoid weights and the two emission-order amplitudes."""
    step = _REFERENCE_SPAN / grid
    cutoff = _frequency_cutoff(filt, step)
    margin = _time_margin(filt)
    lo = min(-1.0, d) - margin
    hi = max(0.0, d + 1.0) + margin
    s = lo + step * np.arange(int(math.ceil((hi - lo) / step)) + 1)
    wt = np.full(s.size, step)
    wt[0] = wt[-1] = 0.5 * step

    c = 0.5 * m
    fastest = float(np.max(np.abs(s))) + abs(d) + 1.0
    panel = min(1.0, math.pi / fastest)
    u, w = gauss_legendre_panels(-cutoff, cutoff, max(2, int(math.ceil(2 * cutoff / panel))))
    zeta = u - c
    # photon 1 at +u, photon 2 at -u from the filter centre
    weight = w * spectral_amplitude(zeta) * filt.amplitude(u) * filt.amplitude(-u)

    first = np.empty(s.size, dtype=complex)
    second = np.empty(s.size, dtype=complex)
    block = max(1, 4_000_000 // u.size)
    for start in range(0, s.size, block):
        sb = s[start:start + block]
        first[start:start + block] = np.exp(-1j * np.outer(sb, u)) @ weight
        second[start:start + block] = np.exp(1j * np.outer(sb - d, u)) @ weight
    return s, wt, first, second


def _outcome_rates(angles: HwpAngles, s, wt, first, second):
    c1, c2, d1, d2 = angles.coefficients()
    # amplitude of each outcome after both half-wave plates and polarisers
    channels = (
        c1 * first - c2 * second,  # ++
        d1 * first + d2 * second,  # +-
        d2 * first + d1 * second,  # -+
        c2 * first - c1 * second,  # --
    )
    rates = []
    tails = 0.0
    edge = max(2, s.size // 20)
    for psi in channels:
        dens = np.abs(psi) ** 2
        rates.append(float(wt @ dens) / math.pi)
        # sharp spectra leave |psi|^2 ~ 1/s^2 beyond the grid; the weight
        # past an end at distance r is then about r * |psi(end)|^2
        outside = sum(
            float(piece.mean()) * abs(end + 0.5)
            for piece, end in ((dens[:edge], s[0]), (dens[-edge:], s[-1]))
        )
        tails = max(tails, 2.0 * outside / math.pi)
    return rates, tails


def oracle_rate_bruteforce(
    angles: HwpAngles,
    point: OperatingPoint,
    filt: FilterSpec,
    grid: int | None = None,
    tol: float | None = 1e-7,
) -> OracleResult:
    """Rates for one analyser setting by literal time-domain integration.

    ``grid`` is the number of s-steps across [-2, 1] (default chosen from
    the filter so the frequency cutoff is resolved). ``estimated_error`` is
    the largest change of a rate between ``grid`` and ``grid // 2`` or the
    estimated weight beyond the finite time window, whichever is larger.
    Without a filter the frequency cutoff is tied to the grid: passes at
    ``grid`` and ``grid // 2`` are combined by Richardson extrapolation and
    the error is the change of that extrapolation from one grid level down.
    This reaches about 1e-6 of the total rate at the default grid, so
    unfiltered checks need ``tol`` of that order.
    When ``tol`` is given and the estimate exceeds ``tol`` times the total
    rate, :class:`OracleResolutionError` is raised.
    """
    if grid is None:
        grid = _default_grid(filt)
    if grid < _MIN_GRID:
        raise OracleResolutionError(f"grid must be >= {_MIN_GRID} points across [-2, 1], got {grid}")
    step = _REFERENCE_SPAN / grid
    cutoff = _frequency_cutoff(filt, step)
    # unfiltered: the cutoff follows the grid, so both passes are alias-free
    if filt.kind != "none" and 2.0 * step * cutoff >= math.pi:
        raise OracleResolutionError(
            f"grid {grid} cannot resolve frequencies up to {cutoff:g}; "
            f"use grid >= {int(math.ceil(2 * _REFERENCE_SPAN * cutoff / math.pi)) + 1}"
        )
    fine, tail = _outcome_rates(angles, *_envelopes(point.m, point.d, filt, grid))
    coarse, _ = _outcome_rates(angles, *_envelopes(point.m, point.d, filt, grid // 2))
    if filt.kind == "none":
        # the frequency cutoff grows with the grid and the missing spectrum
        # shrinks like 1/grid: first-order Richardson extrapolation, judged
        # against the same extrapolation one grid level down
        coarsest, _ = _outcome_rates(angles, *_envelopes(point.m, point.d, filt, grid // 4))
        previous = [2.0 * b - c for b, c in zip(coarse, coarsest)]
        fine = [2.0 * a - b for a, b in zip(fine, coarse)]
        err = max(max(abs(a - b) for a, b in zip(fine, previous)), tail)
        fine = [max(a, 0.0) for a in fine]
    else:
        err = max(max(abs(a - b) for a, b in zip(fine, coarse)), tail)
    result = OracleResult(*fine, grid_resolution=grid, estimated_error=float(err))
    if tol is not None and err > tol * max(result.total, 1e-300):
        raise OracleResolutionError(
            f"oracle error estimate {err:.3e} exceeds {tol:g} x total rate {result.total:.3e}; "
            "increase grid"
        )
    return result
