"""Quantities derived from the correlation model: CHSH, fringe visibility, amplitude maps."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from biphoton.amplitude import DEFAULT_CARRIER, band_envelopes
from biphoton.model import AmplitudeSample, FilterSpec, HwpAngles, OperatingPoint
from biphoton.numerics.quadrature import QuadratureSettings
from biphoton.physics import correlation_from_rates, pair_integrals, rates_from_integrals

# (a, a', b, b') maximising |S| for E = -cos 4(alpha - beta)
OPTIMAL_CHSH = (0.0, math.pi / 8, math.pi / 16, 3 * math.pi / 16)


def chsh(point: OperatingPoint, filt: FilterSpec, settings=OPTIMAL_CHSH) -> float:
    """S = |E(a, b) - E(a, b')| + |E(a', b) + E(a', b')|."""
    a, a2, b, b2 = settings
    integrals = pair_integrals(point, filt)

    def E(alpha, beta):
        return correlation_from_rates(rates_from_integrals(HwpAngles(alpha, beta), integrals))

    return abs(E(a, b) - E(a, b2)) + abs(E(a2, b) + E(a2, b2))


def fringe_visibility(values) -> float:
    """(max - min) / (max + min) of a non-negative fringe."""
    values = np.asarray(values, dtype=float)
    top, bottom = float(values.max()), float(values.min())
    if top + bottom <= 0:
        return 0.0
    return (top - bottom) / (top + bottom)


def visibility_scan(alpha: float, betas, point: OperatingPoint, filt: FilterSpec) -> float:
    """Visibility of R++ while Bob's plate runs over ``betas`` (must span >= pi/2)."""
    betas = np.asarray(betas, dtype=float)
    if betas.size < 3 or betas.max() - betas.min() < math.pi / 2 - 1e-12:
        raise ValueError("beta scan must span at least pi/2 with >= 3 settings")
    integrals = pair_integrals(point, filt)
    rpp = [rates_from_integrals(HwpAngles(alpha, b), integrals).rpp for b in betas]
    return fringe_visibility(rpp)


@dataclass(frozen=True)
class GridSpec:
    """Rectangle in (tau_a, tau_b) / DL and its sampling."""

    tau_a_min: float = -2.0
    tau_a_max: float = 1.0
    tau_b_min: float = -2.0
    tau_b_max: float = 1.0
    n_a: int = 121
    n_b: int = 121

    def __post_init__(self):
        if self.n_a < 2 or self.n_b < 2:
            raise ValueError("grid needs at least 2 samples per axis")
        if not (self.tau_a_max > self.tau_a_min and self.tau_b_max > self.tau_b_min):
            raise ValueError("grid bounds must be increasing")

    def axes(self):
        return (
            np.linspace(self.tau_a_min, self.tau_a_max, self.n_a),
            np.linspace(self.tau_b_min, self.tau_b_max, self.n_b),
        )


@dataclass
class AmplitudeMap:
    """Sampled amplitudes; arrays are indexed [i_b, i_a] (rows follow tau_b)."""

    tau_a: np.ndarray
    tau_b: np.ndarray
    first: np.ndarray
    second: np.ndarray

    @property
    def total(self) -> np.ndarray:
        return self.first + self.second

    def term(self, which: str) -> np.ndarray:
        return {"first": self.first, "second": self.second, "both": self.total}[which]

    def samples(self, term: str = "both"):
        values = self.term(term)
        return [
            AmplitudeSample(float(ta), float(tb), complex(values[i, j]), term)
            for i, tb in enumerate(self.tau_b)
            for j, ta in enumerate(self.tau_a)
        ]

    def rows(self):
        """Row-major (tau_b outer, tau_a inner) records for CSV export."""
        total = self.total
        for i, tb in enumerate(self.tau_b):
            for j, ta in enumerate(self.tau_a):
                f, s, t = self.first[i, j], self.second[i, j], total[i, j]
                yield (ta, tb, f.real, f.imag, s.real, s.imag, t.real, t.imag)


def amplitude_map_export(
    point: OperatingPoint,
    filt: FilterSpec,
    carrier: float = DEFAULT_CARRIER,
    grid_spec: GridSpec | None = None,
    settings: QuadratureSettings | None = None,
) -> AmplitudeMap:
    """Both amplitude terms on a (tau_a, tau_b) grid.

    The envelopes depend only on tau_a - tau_b, so they are computed once
    per distinct difference and combined with the carrier phase.
    """
    if carrier < 0:
        raise ValueError("carrier must be >= 0")
    grid_spec = grid_spec or GridSpec()
    ta, tb = grid_spec.axes()
    A, B = np.meshgrid(ta, tb)
    diff = np.round((A - B).ravel(), 12)
    unique, inverse = np.unique(diff, return_inverse=True)
    a1, a2 = band_envelopes(unique, point, filt, settings)
    phase = np.exp(-1j * carrier * (A + B))
    first = phase * a1[inverse].reshape(A.shape)
    second = phase * a2[inverse].reshape(A.shape)
    return AmplitudeMap(ta, tb, first, second)
