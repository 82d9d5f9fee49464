"""Coincidence rates and correlations of the filtered type-II biphoton.

All rates are in units of the overall prefactor R0 (pump power, detector
solid angle and state normalisation are not modelled). The working variable
of every integral is ``u = zeta + m/2``, the frequency offset measured from
the filter centre; in it the filter weight is centred and the two sinc
factors sit at ``u = +-m/2``.
"""

from __future__ import annotations

import math

import numpy as np

from biphoton.errors import DegenerateInputError, NumericalConsistencyError
from biphoton.model import (
    CoincidenceRates,
    FilterSpec,
    HwpAngles,
    OperatingPoint,
    PairIntegrals,
    sinc_half,
)
from biphoton.numerics import tails
from biphoton.numerics.quadrature import (
    DEFAULT_SETTINGS,
    QuadratureSettings,
    gauss_legendre_panels,
    integrate,
)

TWO_PI = 2.0 * math.pi


def _settings(tol, settings):
    if settings is None:
        settings = DEFAULT_SETTINGS
    if tol is not None:
        settings = QuadratureSettings(
            rel_tol=tol,
            abs_tol=settings.abs_tol,
            max_subdivisions=settings.max_subdivisions,
            truncation_bound=settings.truncation_bound,
        )
    return settings


def _no_filter_cutoff(c: float) -> float:
    # finite part of the unfiltered integrals; everything beyond is analytic
    return 64.0 * math.pi + 4.0 * abs(c)


def _overlap_tail(c: float, b: float, cutoff: float) -> float:
    """int_{|u|>cutoff} sinc_half(u-c) sinc_half(u+c) cos(b u) du."""
    r = lambda k: tails.cos_over_quadratic(k, cutoff, c)  # noqa: E731
    return 2.0 * (2.0 * math.cos(c) * r(b) - r(b - 1.0) - r(b + 1.0))


def pair_integrals(
    point: OperatingPoint,
    filt: FilterSpec,
    tol: float | None = None,
    settings: QuadratureSettings | None = None,
) -> PairIntegrals:
    """Evaluate (I1, I2) by adaptive quadrature.

    I1 = int G^4(u) sinc_half(u - m/2)^2 du and
    I2 = int G^4(u) sinc_half(u - m/2) sinc_half(u + m/2) cos((1 + d) u) du.
    For the experiment's compensator (d = -1) the cosine is 1 and I2 is the
    usual overlap integral; other d give the compensator-dependent overlap
    that enters the general-delta rate. Both removable singularities of the
    textbook form are absorbed into ``sinc_half``.
    """
    settings = _settings(tol, settings)
    c = 0.5 * point.m
    b = 1.0 + point.d

    def integrand(u):
        w = filt.amplitude(u) ** 4 if filt.kind == "gaussian" else 1.0
        left = sinc_half(u - c)
        right = sinc_half(u + c)
        out = np.empty(u.shape + (2,))
        out[:, 0] = w * left * left
        out[:, 1] = w * left * right * (np.cos(b * u) if b else 1.0)
        return out

    half = filt.support(settings.truncation_bound)
    if filt.kind == "none":
        half = _no_filter_cutoff(c)
    width = TWO_PI / (1.0 + abs(b))
    # sinc peaks at +-c are natural edges for the initial partition
    result = integrate(integrand, -half, half, settings, breakpoints=(-c, c), max_width=width)
    i1, i2 = (float(v) for v in result.value)
    if filt.kind == "none":
        i1 += tails.sinc_squared_tail(half - c) + tails.sinc_squared_tail(half + c)
        i2 += _overlap_tail(c, b, half)
    return PairIntegrals(i1, i2, result.error)


def pair_integrals_batch(m_values, filt: FilterSpec, d: float = -1.0, bound: float = 4.0):
    """(I1, I2) for many detunings with one fixed composite Gauss-Legendre rule.

    Intended for tabulation (fit grid searches). Gaussian filters are cut at
    ``bound`` half-widths (G^4 = exp(-64) there at the default); filters
    without finite support fall back to :func:`pair_integrals` per point.
    """
    m_values = np.atleast_1d(np.asarray(m_values, dtype=float))
    if filt.kind == "none":
        pairs = [pair_integrals(OperatingPoint(m, d), filt) for m in m_values]
        return np.array([p.i1 for p in pairs]), np.array([p.i2 for p in pairs])
    half = bound * filt.Z if filt.kind == "gaussian" else filt.Z
    b = 1.0 + d
    # the fastest factor is cos(u) or cos(b u); 16 nodes per 2 radians is ample
    panels = max(4, int(math.ceil(half * (1.0 + abs(b)))))
    u, w = gauss_legendre_panels(-half, half, panels)
    if filt.kind == "gaussian":
        w = w * filt.amplitude(u) ** 4
    osc = np.cos(b * u)
    i1 = np.empty(m_values.size)
    i2 = np.empty(m_values.size)
    step = max(1, 2_000_000 // u.size)
    for start in range(0, m_values.size, step):
        c = 0.5 * m_values[start:start + step, None]
        left = sinc_half(u[None, :] - c)
        right = sinc_half(u[None, :] + c)
        i1[start:start + step] = (left * left) @ w
        i2[start:start + step] = (left * right) @ (w * osc)
    return i1, i2


def diagonal_rates(
    point: OperatingPoint,
    filt: FilterSpec,
    tol: float | None = None,
    settings: QuadratureSettings | None = None,
) -> CoincidenceRates:
    """Rates at alpha = beta = pi/8: R++ = R-- = I1 - I2, R+- = R-+ = I1 + I2."""
    pi = pair_integrals(point, filt, tol, settings)
    same = max(pi.i1 - pi.i2, 0.0)
    diff = max(pi.i1 + pi.i2, 0.0)
    return CoincidenceRates(same, diff, diff, same)


def rates_from_integrals(angles: HwpAngles, integrals: PairIntegrals) -> CoincidenceRates:
    """General-angle rates from precomputed integrals."""
    c1, c2, d1, d2 = angles.coefficients()
    i1, i2 = integrals.i1, integrals.i2
    # tiny negatives from rounding are clipped; analytically both are >= 0
    same = max(2.0 * ((c1 * c1 + c2 * c2) * i1 - 2.0 * c1 * c2 * i2), 0.0)
    diff = max(2.0 * ((d1 * d1 + d2 * d2) * i1 + 2.0 * d1 * d2 * i2), 0.0)
    return CoincidenceRates(same, diff, diff, same)


def general_rates(
    angles: HwpAngles,
    point: OperatingPoint,
    filt: FilterSpec,
    tol: float | None = None,
    settings: QuadratureSettings | None = None,
) -> CoincidenceRates:
    """Coincidence rates for arbitrary half-wave-plate angles.

    With c1 = cos2a sin2b, c2 = sin2a cos2b, d1 = cos2a cos2b, d2 = sin2a sin2b:
    R++ = R-- = 2[(c1^2 + c2^2) I1 - 2 c1 c2 I2] and
    R+- = R-+ = 2[(d1^2 + d2^2) I1 + 2 d1 d2 I2].
    At a = b = pi/8 this is exactly :func:`diagonal_rates`; the sum of the
    four rates is 4 I1 for every angle pair.
    """
    return rates_from_integrals(angles, pair_integrals(point, filt, tol, settings))


def correlation_from_rates(rates: CoincidenceRates) -> float:
    total = rates.total
    if not total > 0:
        raise DegenerateInputError("total coincidence rate is zero; correlation undefined")
    return (rates.rpp - rates.rpm - rates.rmp + rates.rmm) / total


def correlation(
    angles: HwpAngles,
    point: OperatingPoint,
    filt: FilterSpec,
    tol: float | None = None,
    settings: QuadratureSettings | None = None,
) -> float:
    """Polarisation correlation E(alpha, beta) at the given operating point."""
    return correlation_from_rates(general_rates(angles, point, filt, tol, settings))


def rate_general_delta(
    point: OperatingPoint,
    filt: FilterSpec,
    tol: float | None = None,
    settings: QuadratureSettings | None = None,
    imag_tol: float = 1e-7,
) -> float:
    """R++ at alpha = beta = pi/8 for an arbitrary compensator shift d.

    Integrates the complex rate integrand before the compensator phase is
    simplified:

        F(z)^2 |1 - e^{iz}|^2 / z^2
        + F(z) F(-m-z) (1 - e^{-i(z+m)})(1 - e^{-iz}) e^{-i m d/2 - i z d} / (z (z+m))

    with F(z) = G(z + m/2) G(-z - m/2). The imaginary part cancels only
    between mirror-image frequencies; a residual above ``imag_tol`` relative
    to the rate scale raises :class:`NumericalConsistencyError`.
    """
    settings = _settings(tol, settings)
    m, d = point.m, point.d
    c = 0.5 * m

    def integrand(z):
        f_pos = filt.amplitude(z + c) * filt.amplitude(-z - c)
        f_neg = filt.amplitude(-z - c) * filt.amplitude(z + c)  # F(-m-z)
        s0 = sinc_half(z)
        sm = sinc_half(z + m)
        direct = f_pos * f_pos * s0 * s0
        # (1 - e^{-ix})/x = i e^{-ix/2} sinc_half(x)
        cross = -(f_pos * f_neg) * sm * s0 * np.exp(-1j * ((z + c) + c * d + z * d))
        return direct + cross

    half = filt.support(settings.truncation_bound)
    if filt.kind == "none":
        half = _no_filter_cutoff(c)
    width = TWO_PI / (2.0 + abs(d))
    result = integrate(
        integrand, -c - half, -c + half, settings, breakpoints=(0.0, -m), max_width=width
    )
    value = complex(result.value)
    if filt.kind == "none":
        # both tails are real: the odd sine parts cancel between u and -u
        value += tails.sinc_squared_tail(half - c) + tails.sinc_squared_tail(half + c)
        value -= _overlap_tail(c, 1.0 + d, half)
    if abs(value.imag) > imag_tol * abs(value) + 10.0 * result.error:
        raise NumericalConsistencyError(
            f"imaginary part {value.imag:.3e} of the rate integral does not vanish "
            f"(real part {value.real:.3e})"
        )
    return max(value.real, 0.0)


def single_mode_rates(angles: HwpAngles) -> CoincidenceRates:
    """Singlet-state rates of the single-frequency-mode description.

    R++ = R-- = sin^2(2(a - b))/2, R+- = R-+ = cos^2(2(a - b))/2,
    independent of temperature.
    """
    x = 2.0 * (angles.alpha - angles.beta)
    same = 0.5 * math.sin(x) ** 2
    diff = 0.5 * math.cos(x) ** 2
    return CoincidenceRates(same, diff, diff, same)


def asymptotic_integrals(delta_m: float, Z: float, order: int = 1) -> PairIntegrals:
    """Narrow rectangular-filter limit of (I1, I2) near m = 4*pi*order.

    I1,2 = 8Z / (3 m^2) * (12 sin^2(delta_m / 4) +- Z^2), m = 4*pi*order + delta_m.
    Valid for small Z and delta_m; the caller owns that regime.
    """
    if order == 0:
        raise ValueError("the expansion holds around m = 4*pi*n with n != 0")
    if not Z > 0:
        raise ValueError("Z must be > 0")
    m = 4.0 * math.pi * order + delta_m
    prefactor = 8.0 * Z / (3.0 * m * m)
    core = 12.0 * math.sin(0.25 * delta_m) ** 2
    return PairIntegrals(prefactor * (core + Z * Z), prefactor * (core - Z * Z))


def asymptotic_correlation(delta_m: float, Z: float) -> float:
    core = 12.0 * math.sin(0.25 * delta_m) ** 2
    return -(core - Z * Z) / (core + Z * Z)
