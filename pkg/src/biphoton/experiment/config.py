"""Lab-unit configuration and the conversions to dimensionless variables."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from biphoton.errors import RegimeError
from biphoton.model import FilterSpec, OperatingPoint

SPEED_OF_LIGHT = 299_792_458.0  # m/s


@dataclass(frozen=True)
class CrystalConfig:
    """ppKTP crystal and compensator as used in the experiment (SI units, T in degC).

    ``slope_a`` (rad s^-1 K^-1) is the fitted proportionality between
    temperature offset and detuning; it is left unset until calibrated or
    fitted. ``compensator_length`` defaults to half the crystal length.
    """

    length: float = 10e-3
    n1: float = 1.75
    n2: float = 1.84
    lambda0: float = 810e-9
    lambda_pump: float = 405e-9
    compensator_length: float | None = None
    T_opt: float = 35.1
    slope_a: float | None = None

    def __post_init__(self):
        if not self.length > 0:
            raise ValueError("crystal length must be > 0")
        if not (self.n2 > self.n1 > 1):
            raise ValueError(f"need n2 > n1 > 1, got n1={self.n1}, n2={self.n2}")
        if not (self.lambda0 > 0 and self.lambda_pump > 0):
            raise ValueError("wavelengths must be > 0")
        if self.compensator_length is not None and self.compensator_length < 0:
            raise ValueError("compensator length must be >= 0")
        if self.slope_a is not None and not (self.slope_a > 0 and math.isfinite(self.slope_a)):
            raise ValueError(f"slope_a must be a finite positive number, got {self.slope_a}")

    @property
    def delay_DL(self) -> float:
        """Group-delay difference (n2 - n1) L / c across the crystal, seconds."""
        return (self.n2 - self.n1) * self.length / SPEED_OF_LIGHT

    @property
    def Lc(self) -> float:
        return 0.5 * self.length if self.compensator_length is None else self.compensator_length

    @property
    def compensator_delay(self) -> float:
        """tau_c = L_c D in seconds."""
        return self.Lc * (self.n2 - self.n1) / SPEED_OF_LIGHT

    @property
    def d(self) -> float:
        """Dimensionless compensator shift -2 L_c / L."""
        return -2.0 * self.Lc / self.length

    def with_slope(self, slope_a: float) -> "CrystalConfig":
        return replace(self, slope_a=float(slope_a))


@dataclass(frozen=True)
class PhysicalFilter:
    """Interference filter with intensity profile exp(-((lambda - lambda0)/W)^2)."""

    center_wavelength: float = 810e-9
    gaussian_width_W: float = 0.64e-9

    def __post_init__(self):
        if not self.gaussian_width_W > 0:
            raise ValueError("gaussian_width_W must be > 0")
        if not self.center_wavelength > 0:
            raise ValueError("center_wavelength must be > 0")


@dataclass(frozen=True)
class MeasuredPoint:
    T: float
    E: float
    sigma: float | None = None

    def __post_init__(self):
        if not (math.isfinite(self.T) and math.isfinite(self.E)):
            raise ValueError("T and E must be finite")
        if abs(self.E) > 1:
            raise ValueError(f"|E| must be <= 1, got {self.E}")
        if self.sigma is not None and not self.sigma > 0:
            raise ValueError(f"sigma must be > 0 when given, got {self.sigma}")


@dataclass(frozen=True)
class SweepRow:
    """One temperature of a sweep; ``error`` is set (and numbers are NaN) if it failed."""

    T: float
    m: float
    E: float
    i1: float
    i2: float
    rpp: float
    rpm: float
    relative_rate: float
    error: str | None = None


def dimensionless_filter_width(config: CrystalConfig, filt: PhysicalFilter) -> float:
    """Amplitude half-width Z = 2 sqrt(2) pi (n2 - n1) L W / lambda0^2.

    The sqrt(2) converts the fitted intensity width W into the width of the
    amplitude profile G. The linearisation behind it needs W << lambda0.
    """
    W = filt.gaussian_width_W
    if W >= config.lambda0 / 10:
        raise RegimeError(
            f"filter width {W:g} m is not small against lambda0 = {config.lambda0:g} m"
        )
    return 2.0 * math.sqrt(2.0) * math.pi * (config.n2 - config.n1) * config.length * W / config.lambda0**2


def resolve_filter(config: CrystalConfig, filt) -> FilterSpec:
    """Accept a FilterSpec as is, or convert a PhysicalFilter to a Gaussian FilterSpec."""
    if isinstance(filt, FilterSpec):
        return filt
    if isinstance(filt, PhysicalFilter):
        return FilterSpec.gaussian(dimensionless_filter_width(config, filt))
    if filt is None:
        return FilterSpec.none()
    raise TypeError(f"expected FilterSpec or PhysicalFilter, got {type(filt).__name__}")


def _require_slope(config: CrystalConfig) -> float:
    if config.slope_a is None:
        raise ValueError("slope_a is not set; fit it or use calibrate_slope()")
    return config.slope_a


def m_of_temperature(config: CrystalConfig, T):
    """Dimensionless detuning m = a (T - T_opt) (n2 - n1) L / c. Vectorises over T."""
    return _require_slope(config) * (T - config.T_opt) * config.delay_DL


def operating_point(config: CrystalConfig, T: float) -> OperatingPoint:
    return OperatingPoint(float(m_of_temperature(config, T)), config.d)
