"""Domain types for the biphoton model in dimensionless units.

Frequencies are measured in units of 1/(DL) and times in units of DL, where
D = 1/c2 - 1/c1 is the group-delay mismatch per unit length and L the
crystal length.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

FilterKind = Literal["none", "gaussian", "rectangular"]


def sinc_half(zeta):
    """2 sin(zeta/2) / zeta, equal to 1 at zeta = 0.

    Works on scalars and arrays. ``np.sinc`` is evaluated through its own
    small-argument branch, so there is no loss of precision near zero.
    """
    return np.sinc(np.asarray(zeta, dtype=float) / (2.0 * np.pi))


@dataclass(frozen=True)
class OperatingPoint:
    """Dimensionless centre-frequency detuning ``m`` and compensator shift ``d``.

    ``d = -1`` is a compensating crystal half as long as the SPDC crystal.
    """

    m: float = 0.0
    d: float = -1.0

    def __post_init__(self):
        if not (math.isfinite(self.m) and math.isfinite(self.d)):
            raise ValueError(f"operating point must be finite, got m={self.m}, d={self.d}")


@dataclass(frozen=True)
class HwpAngles:
    """Half-wave-plate orientations (radians) for Alice and Bob."""

    alpha: float
    beta: float

    @classmethod
    def diagonal(cls) -> "HwpAngles":
        return cls(math.pi / 8, math.pi / 8)

    def coefficients(self):
        """(c1, c2, d1, d2) weighting the two emission orders.

        c's weight the ++/-- amplitudes, d's the +-/-+ amplitudes.
        """
        ca, sa = math.cos(2 * self.alpha), math.sin(2 * self.alpha)
        cb, sb = math.cos(2 * self.beta), math.sin(2 * self.beta)
        return ca * sb, sa * cb, ca * cb, sa * sb


@dataclass(frozen=True)
class FilterSpec:
    """Interference-filter amplitude profile G in dimensionless frequency.

    ``kind`` is ``"none"`` (G = 1), ``"gaussian"`` (exp(-(zeta/Z)^2)) or
    ``"rectangular"`` (1 for |zeta| < Z, else 0).
    """

    kind: FilterKind = "none"
    Z: float | None = None

    def __post_init__(self):
        if self.kind not in ("none", "gaussian", "rectangular"):
            raise ValueError(f"unknown filter kind {self.kind!r}")
        if self.kind == "none":
            if self.Z is not None:
                raise ValueError("filter 'none' takes no width")
        elif self.Z is None or not (self.Z > 0 and math.isfinite(self.Z)):
            raise ValueError(f"{self.kind} filter needs a finite width Z > 0, got {self.Z}")

    @classmethod
    def none(cls) -> "FilterSpec":
        return cls("none")

    @classmethod
    def gaussian(cls, Z: float) -> "FilterSpec":
        return cls("gaussian", float(Z))

    @classmethod
    def rectangular(cls, Z: float) -> "FilterSpec":
        return cls("rectangular", float(Z))

    @classmethod
    def parse(cls, text: str) -> "FilterSpec":
        """Parse ``none``, ``gaussian:7.8`` or ``rectangular:2`` (alias ``rect``)."""
        kind, _, width = text.strip().lower().partition(":")
        kind = {"rect": "rectangular", "gauss": "gaussian"}.get(kind, kind)
        if kind == "none":
            if width:
                raise ValueError("filter 'none' takes no width")
            return cls.none()
        if not width:
            raise ValueError(f"filter {text!r} needs a width, e.g. gaussian:7.8")
        return cls(kind, float(width))

    def label(self) -> str:
        return "none" if self.kind == "none" else f"{self.kind}:{self.Z:g}"

    def amplitude(self, zeta):
        """G(zeta), vectorised."""
        zeta = np.asarray(zeta, dtype=float)
        if self.kind == "none":
            return np.ones_like(zeta)
        if self.kind == "gaussian":
            return np.exp(-((zeta / self.Z) ** 2))
        return (np.abs(zeta) < self.Z).astype(float)

    def support(self, bound: float = 8.0) -> float:
        """Half-width outside which G is treated as zero (inf for no filter)."""
        if self.kind == "none":
            return math.inf
        if self.kind == "gaussian":
            return bound * self.Z
        return self.Z


def filter_amplitude(filt: FilterSpec, zeta):
    """Transmission amplitude G(zeta) of ``filt``."""
    value = filt.amplitude(zeta)
    return float(value) if np.ndim(value) == 0 else value


@dataclass(frozen=True)
class PairIntegrals:
    """The pair (I1, I2) in units where the rate prefactor R0 is dropped."""

    i1: float
    i2: float
    error: float = 0.0

    @property
    def diagonal_correlation(self) -> float:
        return -self.i2 / self.i1


@dataclass(frozen=True)
class CoincidenceRates:
    """Coincidence rates R^{++}, R^{+-}, R^{-+}, R^{--} in units of R0."""

    rpp: float
    rpm: float
    rmp: float
    rmm: float

    @property
    def total(self) -> float:
        return self.rpp + self.rpm + self.rmp + self.rmm

    def as_tuple(self):
        return (self.rpp, self.rpm, self.rmp, self.rmm)


@dataclass(frozen=True)
class AmplitudeSample:
    """Two-photon amplitude at one (tau_a, tau_b) point, times in units of DL."""

    tau_a: float
    tau_b: float
    value: complex
    term: str = "both"
